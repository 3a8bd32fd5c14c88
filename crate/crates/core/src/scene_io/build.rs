//! Turns a parsed description into acceleration structures.

use super::scene::{parse_scene, FsResolver, SceneDescription, SceneError};
use crate::accel::{intersect_sphere_list, Blas, BuildError, BuildParams, Instance, IntersectorRegistry, SrtFrame, Tlas};
use crate::geometry::{SpherePrim, Vec3};
use crate::integrators::{Material, RenderError, RenderScene, RAY_RADIANCE, RAY_SHADOW};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

/// Geometry type of the built-in sphere primitive.
pub const SPHERE_GEOM_TYPE: u32 = 0;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: SceneError },
    #[error("mesh `{mesh}`: {source}")]
    Mesh { mesh: String, source: BuildError },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Registry answering both ray types for [`SPHERE_GEOM_TYPE`] with one
/// unit sphere at the origin.
pub fn sphere_registry() -> IntersectorRegistry {
    let data: Arc<Vec<SpherePrim>> = Arc::new(vec![SpherePrim::new(Vec3::ZERO, 1.0)]);
    let mut registry = IntersectorRegistry::new();
    for ray_type in [RAY_RADIANCE, RAY_SHADOW] {
        registry.register(SPHERE_GEOM_TYPE, ray_type, intersect_sphere_list, data.clone());
    }
    registry
}

/// Frame placing the shared unit sphere where `center`/`radius` under
/// `frame` would put the described sphere.
fn sphere_frame(frame: &SrtFrame, center: Vec3, radius: f64) -> SrtFrame {
    let rotation = SrtFrame {
        scale: Vec3::ONE,
        translation: Vec3::ZERO,
        ..*frame
    };
    SrtFrame {
        scale: frame.scale * radius,
        translation: frame.translation + rotation.matrix().transform_vector(frame.scale * center),
        ..*frame
    }
}

/// One BLAS per mesh, one shared unit-sphere BLAS for all spheres, and a
/// TLAS with mesh instances first and spheres after, in file order.
pub fn build_scene(desc: &SceneDescription, params: &BuildParams) -> Result<RenderScene, LoadError> {
    let mut blases = Vec::with_capacity(desc.meshes.len() + 1);
    for entry in &desc.meshes {
        let blas = Blas::from_mesh(entry.mesh.clone(), params).map_err(|source| LoadError::Mesh {
            mesh: entry.name.clone(),
            source,
        })?;
        blases.push(Arc::new(blas));
    }
    let mut instances = Vec::with_capacity(desc.instances.len() + desc.spheres.len());
    let mut instance_materials = Vec::with_capacity(instances.capacity());
    for spec in &desc.instances {
        instances.push(Instance::new(spec.mesh, spec.placement.frame()).with_mask(spec.placement.mask));
        instance_materials.push(spec.material);
    }
    let mut registry = IntersectorRegistry::new();
    if !desc.spheres.is_empty() {
        let unit = SpherePrim::new(Vec3::ZERO, 1.0);
        let sphere_blas = blases.len();
        blases.push(Arc::new(Blas::from_aabbs(vec![unit.bounds()], SPHERE_GEOM_TYPE, params)?));
        registry = sphere_registry();
        for s in &desc.spheres {
            let frame = sphere_frame(&s.placement.frame(), s.center, s.radius);
            instances.push(Instance::new(sphere_blas, frame).with_mask(s.placement.mask));
            instance_materials.push(s.material);
        }
    }
    let tlas = Tlas::build(instances, blases, params)?;
    let materials: Vec<Material> = desc.materials.iter().map(|m| m.material).collect();
    let scene = RenderScene::new(tlas, registry, desc.camera, materials, instance_materials)?
        .with_sky(desc.sky)
        .with_background(desc.background);
    Ok(scene)
}

/// Reads and parses a scene file, resolving meshes next to it.
pub fn load_scene_file(path: &Path) -> Result<SceneDescription, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scene(&text, &mut FsResolver::new(base)).map_err(|source| LoadError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ray;
    use crate::scene_io::MemoryResolver;

    #[test]
    fn sphere_directive_matches_analytic_sphere() {
        let text = "camera origin 0 0 10 right 1 0 0 up 0 1 0\n\
                    material m color 0.5 0.5 0.5\n\
                    sphere m center 1 0 0 radius 0.5 scale 2 2 2 rotate 0 1 0 90 translate 3 0 0\n";
        let desc = parse_scene(text, &mut MemoryResolver::new()).unwrap();
        let scene = build_scene(&desc, &BuildParams::default()).unwrap();
        // Center (1,0,0) scaled to (2,0,0), rotated to (0,0,-2), moved to (3,0,-2); radius 1.
        let ray = Ray::new(Vec3::new(3.0, 0.0, 10.0), Vec3::new(0.0, 0.0, -1.0));
        let hit = scene.tlas.closest_hit(&ray, u32::MAX, RAY_RADIANCE, &scene.registry).unwrap().unwrap();
        assert!((hit.t - 11.0).abs() < 1e-9, "{}", hit.t);
        assert!((hit.normal - Vec3::new(0.0, 0.0, 1.0)).length() < 1e-9);
    }
}
