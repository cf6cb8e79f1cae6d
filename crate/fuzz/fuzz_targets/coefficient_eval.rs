//! Coefficient specs parsed from JSON must validate totally, and validated
//! specs must evaluate to finite values at arbitrary nonnegative points.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stickydiff::graph::CoefficientSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = serde_json::from_str::<CoefficientSpec>(text) else { return };
    if spec.validate().is_err() {
        return;
    }
    let affine = matches!(spec, CoefficientSpec::Affine { .. });
    for x in [0.0, 1e-12, 0.5, 1.0, 1e3, 1e12] {
        let v = spec.eval(x);
        // Affine specs may overflow to infinity far out; nothing may
        // produce NaN, and bounded kinds must stay finite.
        assert!(!v.is_nan(), "validated spec produced NaN at x = {x}");
        if !affine {
            assert!(v.is_finite(), "validated spec produced {v} at x = {x}");
        }
    }
});
