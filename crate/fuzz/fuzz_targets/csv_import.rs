#![no_main]

use cirauth::channel::import_csv_from_reader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = import_csv_from_reader(data);
});
