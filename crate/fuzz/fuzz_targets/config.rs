#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = impostor::io::config::ConfigFile::parse(data) {
        let _ = cfg.to_args(&[]);
    }
});
