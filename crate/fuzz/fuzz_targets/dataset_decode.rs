#![no_main]

use cirauth::channel::{decode_dataset, encode_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = decode_dataset(data) {
        let bytes = encode_dataset(&d);
        let again = decode_dataset(&bytes).expect("re-encoded bytes decode");
        assert_eq!(encode_dataset(&again), bytes);
    }
});
