#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(specs) = impostor::editing::parse_compose(data) {
        for instance in specs {
            assert!(instance.to_world.inverse().is_ok());
        }
    }
});
