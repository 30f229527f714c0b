#![no_main]

use hesslab::io::from_json;
use hesslab::symm::{hermitian_eigen, HermitianMatrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(m) = from_json::<HermitianMatrix>(text) else { return };
    if m.dim() <= 16 {
        let _ = hermitian_eigen(&m);
    }
});
