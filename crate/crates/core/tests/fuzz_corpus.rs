//! Replays the checked-in fuzz corpus through the same oracles the fuzz
//! targets assert, so the parsing invariants stay covered in plain CI runs
//! (running the fuzzers themselves needs `cargo +nightly fuzz`).

use std::fs;
use std::path::PathBuf;

use stickydiff::config::{apply_override, config_from_value, load_config};
use stickydiff::graph::CoefficientSpec;
use stickydiff::io::{export_path_csv, import_path_csv};

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut entries: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus dir {dir:?}: {e}"))
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    assert!(!entries.is_empty(), "empty corpus for {target}");
    entries.into_iter().map(|p| fs::read(p).unwrap()).collect()
}

#[test]
fn config_json_corpus_round_trips() {
    for data in corpus("config_json") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        let Ok(config) = load_config(text, &[]) else { continue };
        if config.build_graph().is_ok() && config.numerics.validate().is_ok() {
            let emitted = config.resolved_json();
            let again = load_config(&emitted, &[]).expect("resolved config reparses");
            assert_eq!(config, again);
        }
    }
}

#[test]
fn config_overrides_corpus_is_total() {
    for data in corpus("config_overrides") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        let mut lines = text.lines();
        let Some(head) = lines.next() else { continue };
        let Ok(mut value) = serde_json::from_str::<serde_json::Value>(head) else { continue };
        for assignment in lines.take(16) {
            let _ = apply_override(&mut value, assignment);
        }
        let _ = config_from_value(value);
    }
}

#[test]
fn path_csv_corpus_round_trips() {
    let mut accepted = 0;
    for data in corpus("path_csv") {
        let Ok(path) = import_path_csv(&data[..]) else { continue };
        accepted += 1;
        path.check_invariants().unwrap();
        let mut buf = Vec::new();
        export_path_csv(&path, &mut buf).unwrap();
        let again = import_path_csv(&buf[..]).unwrap();
        assert_eq!(again.times, path.times);
        assert_eq!(again.xs, path.xs);
    }
    assert!(accepted > 0, "corpus should contain at least one valid path");
}

#[test]
fn coefficient_corpus_evaluates_finite() {
    for data in corpus("coefficient_eval") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        let Ok(spec) = serde_json::from_str::<CoefficientSpec>(text) else { continue };
        if spec.validate().is_err() {
            continue;
        }
        let affine = matches!(spec, CoefficientSpec::Affine { .. });
        for x in [0.0, 1e-12, 0.5, 1.0, 1e3, 1e12] {
            let v = spec.eval(x);
            assert!(!v.is_nan());
            if !affine {
                assert!(v.is_finite());
            }
        }
    }
}
