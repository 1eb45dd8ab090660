#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = impostor::io::checkpoint::decode_checkpoint(data);
});
