#![no_main]

use libfuzzer_sys::fuzz_target;
use rtcore::scene_io::parse_obj;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = parse_obj(text) {
        // An accepted mesh only references vertices it defines.
        let n = mesh.vertices.len();
        assert!(mesh.triangles.iter().all(|t| t.indices.iter().all(|&i| (i as usize) < n)));
        assert!(mesh.vertices.iter().all(|v| v.is_finite()));
    }
});
