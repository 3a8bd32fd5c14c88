//! Scene files, OBJ meshes, accumulation buffers and PPM output.

mod build;
mod image;
mod obj;
mod scene;

pub use build::{build_scene, load_scene_file, sphere_registry, LoadError, SPHERE_GEOM_TYPE};
pub use image::{encode_channel, resolve, write_ppm, AccumBuffer, Image, ResolveError, DISPLAY_GAMMA};
pub use obj::{parse_obj, ObjError, ObjErrorKind};
pub use scene::{
    parse_scene, FsResolver, InstanceSpec, MaterialEntry, MemoryResolver, MeshEntry, MeshResolver, Placement,
    SceneDescription, SceneError, SceneErrorKind, SphereSpec,
};
