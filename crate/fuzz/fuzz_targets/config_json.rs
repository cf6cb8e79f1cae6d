//! Run-config parsing must never panic, and accepted configs must survive
//! the emit-and-reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = stickydiff::config::load_config(text, &[]) else { return };
    let graph_ok = config.build_graph().is_ok();
    let numerics_ok = config.numerics.validate().is_ok();
    if graph_ok && numerics_ok {
        let emitted = config.resolved_json();
        let again = stickydiff::config::load_config(&emitted, &[])
            .expect("resolved config must reparse");
        assert_eq!(config, again, "resolved config must round-trip");
    }
});
