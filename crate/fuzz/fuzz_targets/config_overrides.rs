//! Dotted-path overrides over arbitrary JSON values must never panic.
//!
//! The input splits at the first newline: the head is the base JSON, every
//! following line is one `key.path=value` assignment.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut lines = text.lines();
    let Some(head) = lines.next() else { return };
    let Ok(mut value) = serde_json::from_str::<serde_json::Value>(head) else { return };
    for assignment in lines.take(16) {
        let _ = stickydiff::config::apply_override(&mut value, assignment);
    }
    let _ = stickydiff::config::config_from_value(value);
});
