#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cams) = impostor::io::parse_cameras(data) {
        for cam in cams.iter().filter(|c| c.width.checked_mul(c.height).is_some_and(|n| n <= 1 << 16)) {
            let _ = cam.ray(cam.width / 2, cam.height / 2);
        }
    }
});
