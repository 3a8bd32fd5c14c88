#![no_main]

use libfuzzer_sys::fuzz_target;
use rtcore::scene_io::{parse_scene, MemoryResolver};

const QUAD: &str = "v -1 0 -1\nv 1 0 -1\nv 1 0 1\nv -1 0 1\nf 1 4 3 2\n";

fn resolver() -> MemoryResolver {
    MemoryResolver::new().with("quad.obj", QUAD).with("tri.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(desc) = parse_scene(text, &mut resolver()) {
        // The canonical printout of an accepted scene parses to the same printout.
        let printed = desc.to_string();
        let again = parse_scene(&printed, &mut resolver()).expect("canonical output parses");
        assert_eq!(again.to_string(), printed);
    }
});
