#![no_main]

use hesslab::io::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::parse(text) {
        let _ = config.grid();
        let _ = config.cone.constraints();
        let _ = config.manufactured_params();
        if let Ok(round) = config.to_toml() {
            RunConfig::parse(&round).expect("serialized config parses");
        }
    }
});
