#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok((vertices, tets)) = impostor::io::parse_tetmesh(data) {
        let _ = impostor::TetMesh::build(vertices, tets);
    }
});
