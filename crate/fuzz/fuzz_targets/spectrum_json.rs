#![no_main]

use hesslab::io::from_json;
use hesslab::symm::Spectrum;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(s) = from_json::<Spectrum>(text) else { return };
    if s.len() > 64 {
        return;
    }
    for k in 0..=s.len() {
        let _ = s.sigma(k);
        let _ = s.sigma_grad(k);
        let _ = s.gamma_membership(k);
    }
    if s.len() >= 2 {
        let _ = s.sigma_excl2(1, 0, 1);
        let _ = s.sigma_hess_offdiag(s.len(), 0, 1);
    }
});
