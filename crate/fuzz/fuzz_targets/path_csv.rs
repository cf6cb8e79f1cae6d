//! Path CSV import must never panic, and whatever it accepts must satisfy
//! the path invariants and survive an export-import round trip bit for bit.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(path) = stickydiff::io::import_path_csv(data) else { return };
    path.check_invariants().expect("imported paths satisfy the invariants");
    let mut buf = Vec::new();
    stickydiff::io::export_path_csv(&path, &mut buf).expect("export succeeds");
    let again = stickydiff::io::import_path_csv(&buf[..]).expect("re-import succeeds");
    assert_eq!(again.times, path.times);
    assert_eq!(again.edges, path.edges);
    assert_eq!(again.xs, path.xs);
    assert_eq!(again.ell, path.ell);
});
