#![no_main]

use hesslab::io::Snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(snap) = Snapshot::parse(text) {
        // a valid snapshot must survive a write/read cycle unchanged
        let again = Snapshot::parse(&snap.to_json().unwrap()).unwrap();
        assert_eq!(snap, again);
        let _ = snap.solution();
    }
});
