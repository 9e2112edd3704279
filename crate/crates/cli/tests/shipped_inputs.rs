//! Checked-in inputs must stay valid: fuzz seeds are accepted by their
//! target's entry point and the example configs parse and validate.

use std::fs;
use std::path::PathBuf;

use cirauth::channel::{decode_dataset, encode_dataset, import_csv_from_reader};
use cirauth::checkpoint::{decode_checkpoint, encode_checkpoint};
use cirauth_cli::ExperimentConfig;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("seed_")
        })
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn dataset_seeds_decode() {
    for (p, bytes) in seeds("dataset_decode") {
        let d = decode_dataset(&bytes).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(encode_dataset(&d), bytes, "{}", p.display());
    }
}

#[test]
fn checkpoint_seeds_decode() {
    for (p, bytes) in seeds("checkpoint_decode") {
        let c = decode_checkpoint(&bytes).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(encode_checkpoint(&c), bytes, "{}", p.display());
    }
}

#[test]
fn csv_seeds_import() {
    for (p, bytes) in seeds("csv_import") {
        import_csv_from_reader(bytes.as_slice()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn config_seeds_parse() {
    for (p, bytes) in seeds("config_parse") {
        let text = String::from_utf8(bytes).unwrap();
        let cfg =
            ExperimentConfig::from_text(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        let cfg =
            ExperimentConfig::from_text(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        for (_, c) in cfg.expand().unwrap() {
            c.validate()
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
        n += 1;
    }
    assert!(n >= 4);
}
