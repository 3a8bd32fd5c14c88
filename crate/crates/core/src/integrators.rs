//! Flat, ambient-occlusion and path-tracing renderers.

use crate::accel::{IntersectorRegistry, TraceError, Tlas};
use crate::camera::{pixel_to_uv, Camera, CameraError};
use crate::geometry::{Hit, Ray, Vec3};
use crate::sampling::{
    make_tangent_basis, sample_cosine_hemisphere, sample_light, to_world, LightTriangle, RandomStream,
};
use crate::scene_io::AccumBuffer;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

/// Ray type for camera and bounce rays.
pub const RAY_RADIANCE: u32 = 0;
/// Ray type for occlusion and shadow queries.
pub const RAY_SHADOW: u32 = 1;

/// Lambertian albedo plus emitted radiance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub color: Vec3,
    pub emissive: Vec3,
}

impl Material {
    pub fn diffuse(color: Vec3) -> Self {
        Material {
            color,
            emissive: Vec3::ZERO,
        }
    }

    pub fn emitter(color: Vec3, emissive: Vec3) -> Self {
        Material { color, emissive }
    }

    pub fn has_emission(&self) -> bool {
        self.emissive.x > 0.0 || self.emissive.y > 0.0 || self.emissive.z > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub max_depth: u32,
    pub sky: Vec3,
    /// Miss color of the flat renderer.
    pub background: Vec3,
    pub ao_ray_count: u32,
    pub ao_max_length: f64,
    /// Distance secondary-ray origins are pushed along the surface normal.
    pub normal_offset: f64,
}

pub const DEFAULT_MAX_DEPTH: u32 = 8;
pub const DEFAULT_AO_RAYS: u32 = 1024;
pub const DEFAULT_BACKGROUND: Vec3 = Vec3::splat(32.0 / 255.0);

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            max_depth: DEFAULT_MAX_DEPTH,
            sky: Vec3::ZERO,
            background: DEFAULT_BACKGROUND,
            ao_ray_count: DEFAULT_AO_RAYS,
            ao_max_length: 1.0,
            normal_offset: 1e-4,
        }
    }
}

impl IntegratorConfig {
    /// Defaults with the scene's sky and background and an offset of
    /// 1e-4 of the scene's bounding diagonal.
    pub fn for_scene(scene: &RenderScene) -> Self {
        IntegratorConfig {
            sky: scene.sky,
            background: scene.background,
            normal_offset: default_normal_offset(scene),
            ..Default::default()
        }
    }
}

pub fn default_normal_offset(scene: &RenderScene) -> f64 {
    let diagonal = scene.tlas.bounds().extent().length();
    if diagonal > 0.0 && diagonal.is_finite() {
        1e-4 * diagonal
    } else {
        1e-4
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Everything the integrators read while rendering. Immutable once built.
#[derive(Debug, Clone)]
pub struct RenderScene {
    pub tlas: Tlas,
    pub registry: IntersectorRegistry,
    pub camera: Camera,
    pub materials: Vec<Material>,
    /// Material index per instance.
    pub instance_materials: Vec<usize>,
    pub sky: Vec3,
    pub background: Vec3,
    lights: Vec<LightTriangle>,
    /// Whether an instance's triangles are in `lights`.
    sampled_light: Vec<bool>,
}

impl RenderScene {
    /// Collects every non-degenerate triangle of emissive triangle-mesh
    /// instances, in world space, as the light list.
    pub fn new(
        tlas: Tlas,
        registry: IntersectorRegistry,
        camera: Camera,
        materials: Vec<Material>,
        instance_materials: Vec<usize>,
    ) -> Result<Self, RenderError> {
        if instance_materials.len() != tlas.instances().len() {
            return Err(RenderError::Config(format!(
                "{} instance materials for {} instances",
                instance_materials.len(),
                tlas.instances().len()
            )));
        }
        if let Some(&m) = instance_materials.iter().find(|&&m| m >= materials.len()) {
            return Err(RenderError::Config(format!("material index {m} out of range")));
        }
        let mut lights = Vec::new();
        let mut sampled_light = vec![false; instance_materials.len()];
        for (inst, &mat) in instance_materials.iter().enumerate() {
            let material = materials[mat];
            let Some(mesh) = tlas.blas_of(inst).mesh() else {
                continue;
            };
            if !material.has_emission() {
                continue;
            }
            let m = tlas.object_to_world(inst);
            for prim in 0..mesh.len() {
                let light = LightTriangle::new(mesh.triangle_vertices(prim).map(|v| m.transform_point(v)), material.emissive);
                if light.area > 0.0 {
                    lights.push(light);
                }
            }
            sampled_light[inst] = true;
        }
        Ok(RenderScene {
            tlas,
            registry,
            camera,
            materials,
            instance_materials,
            sky: Vec3::ZERO,
            background: DEFAULT_BACKGROUND,
            lights,
            sampled_light,
        })
    }

    pub fn with_sky(mut self, sky: Vec3) -> Self {
        self.sky = sky;
        self
    }

    pub fn with_background(mut self, background: Vec3) -> Self {
        self.background = background;
        self
    }

    pub fn lights(&self) -> &[LightTriangle] {
        &self.lights
    }

    pub fn material_of(&self, instance: usize) -> &Material {
        &self.materials[self.instance_materials[instance]]
    }

    /// Checks that every custom geometry type can answer both ray types.
    pub fn validate(&self) -> Result<(), RenderError> {
        Ok(self.tlas.check_registry(&self.registry, &[RAY_RADIANCE, RAY_SHADOW])?)
    }
}

/// Random source of one pixel sample plus a count of traced rays.
pub struct Sampler {
    pub rng: RandomStream,
    pub rays: u64,
}

impl Sampler {
    pub fn new(rng: RandomStream) -> Self {
        Sampler { rng, rays: 0 }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.uniform()
    }

    fn closest(&mut self, scene: &RenderScene, ray: &Ray) -> Result<Option<Hit>, TraceError> {
        self.rays += 1;
        scene.tlas.closest_hit(ray, u32::MAX, RAY_RADIANCE, &scene.registry)
    }

    fn occluded(&mut self, scene: &RenderScene, ray: &Ray) -> Result<bool, TraceError> {
        self.rays += 1;
        scene.tlas.any_hit(ray, u32::MAX, RAY_SHADOW, &scene.registry)
    }
}

/// Shading data at a hit. `n` faces against the incoming ray.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceInfo<'a> {
    pub p: Vec3,
    pub n: Vec3,
    pub material: &'a Material,
    pub instance: usize,
}

pub fn make_surface_info<'a>(scene: &'a RenderScene, ray: &Ray, hit: &Hit) -> SurfaceInfo<'a> {
    let instance = hit.instance_index.expect("scene hits carry an instance");
    let n = if hit.normal.dot(ray.direction) > 0.0 {
        -hit.normal
    } else {
        hit.normal
    };
    SurfaceInfo {
        p: ray.at(hit.t),
        n,
        material: scene.material_of(instance),
        instance,
    }
}

#[inline]
pub fn offset_ray_origin(p: Vec3, n: Vec3, offset: f64) -> Vec3 {
    p + n * offset
}

/// Cosine-cosine over squared distance between two oriented points.
/// Zero for coincident points or back-facing configurations.
pub fn geometry_term(p: Vec3, np: Vec3, q: Vec3, nq: Vec3) -> f64 {
    let d = q - p;
    let dist2 = d.length_squared();
    if !(dist2 > 0.0) {
        return 0.0;
    }
    let w = d / dist2.sqrt();
    np.dot(w).max(0.0) * (-nq.dot(w)).max(0.0) / dist2
}

/// Cosine-distributed direction around `n`.
fn sample_bounce(n: Vec3, sampler: &mut Sampler) -> Vec3 {
    let (x0, x1) = (sampler.uniform(), sampler.uniform());
    let basis = make_tangent_basis(n).expect("surface normals are unit length");
    to_world(&basis, sample_cosine_hemisphere(x0, x1))
}

/// Material color of the first hit, or the configured background.
pub fn render_eye(scene: &RenderScene, ray: &Ray, cfg: &IntegratorConfig, sampler: &mut Sampler) -> Result<Vec3, RenderError> {
    Ok(match sampler.closest(scene, ray)? {
        Some(hit) => scene.material_of(hit.instance_index.expect("scene hit")).color,
        None => cfg.background,
    })
}

/// Unoccluded fraction of the cosine-weighted hemisphere seen from the
/// first hit, within `cfg.ao_max_length`. Misses are fully open.
pub fn render_ao(scene: &RenderScene, ray: &Ray, cfg: &IntegratorConfig, sampler: &mut Sampler) -> Result<f64, RenderError> {
    let Some(hit) = sampler.closest(scene, ray)? else {
        return Ok(1.0);
    };
    let surf = make_surface_info(scene, ray, &hit);
    render_ao_at(scene, surf.p, surf.n, cfg, sampler)
}

/// Ambient occlusion at an arbitrary surface point with unit normal `n`.
pub fn render_ao_at(
    scene: &RenderScene,
    p: Vec3,
    n: Vec3,
    cfg: &IntegratorConfig,
    sampler: &mut Sampler,
) -> Result<f64, RenderError> {
    if cfg.ao_ray_count == 0 {
        return Err(RenderError::Config("ao ray count must be at least 1".into()));
    }
    if !(cfg.ao_max_length > 0.0) {
        return Err(RenderError::Config("ao ray length must be positive".into()));
    }
    let origin = offset_ray_origin(p, n, cfg.normal_offset);
    let mut occluded = 0u32;
    for _ in 0..cfg.ao_ray_count {
        let dir = sample_bounce(n, sampler);
        let ray = Ray::segment(origin, dir, 0.0, cfg.ao_max_length);
        if sampler.occluded(scene, &ray)? {
            occluded += 1;
        }
    }
    Ok(1.0 - occluded as f64 / cfg.ao_ray_count as f64)
}

/// Unidirectional path tracing. With cosine-weighted bounces the
/// estimator weight reduces to the albedo product.
pub fn render_pt(scene: &RenderScene, ray: &Ray, cfg: &IntegratorConfig, sampler: &mut Sampler) -> Result<Vec3, RenderError> {
    let mut radiance = Vec3::ZERO;
    let mut throughput = Vec3::ONE;
    let mut ray = *ray;
    for _ in 0..cfg.max_depth {
        let Some(hit) = sampler.closest(scene, &ray)? else {
            radiance += throughput * cfg.sky;
            break;
        };
        let surf = make_surface_info(scene, &ray, &hit);
        if surf.material.has_emission() {
            radiance += throughput * surf.material.emissive;
            break;
        }
        let dir = sample_bounce(surf.n, sampler);
        throughput *= surf.material.color;
        ray = Ray::new(offset_ray_origin(surf.p, surf.n, cfg.normal_offset), dir);
    }
    Ok(radiance)
}

/// Path tracing with one light sample per diffuse vertex.
///
/// Sampled emitters contribute through shadow rays, or when seen directly
/// by the camera. Vertices on the last bounce take no light sample, so the
/// set of path lengths equals that of [`render_pt`]. Emitters are two-sided
/// and emitters outside the light list are gathered by bounce rays as in
/// [`render_pt`]. Without lights this is exactly [`render_pt`].
pub fn render_pt_nee(
    scene: &RenderScene,
    ray: &Ray,
    cfg: &IntegratorConfig,
    sampler: &mut Sampler,
) -> Result<Vec3, RenderError> {
    if scene.lights.is_empty() {
        return render_pt(scene, ray, cfg, sampler);
    }
    let mut radiance = Vec3::ZERO;
    let mut throughput = Vec3::ONE;
    let mut ray = *ray;
    for depth in 0..cfg.max_depth {
        let Some(hit) = sampler.closest(scene, &ray)? else {
            radiance += throughput * cfg.sky;
            break;
        };
        let surf = make_surface_info(scene, &ray, &hit);
        if surf.material.has_emission() {
            if depth == 0 || !scene.sampled_light[surf.instance] {
                radiance += throughput * surf.material.emissive;
            }
            break;
        }
        let origin = offset_ray_origin(surf.p, surf.n, cfg.normal_offset);
        let (x0, x1, x2) = (sampler.uniform(), sampler.uniform(), sampler.uniform());
        if depth + 1 < cfg.max_depth {
            let ls = sample_light(&scene.lights, x0, x1, x2).expect("light list is non-empty");
            let nq = if ls.n.dot(surf.p - ls.p) < 0.0 { -ls.n } else { ls.n };
            let g = geometry_term(surf.p, surf.n, ls.p, nq);
            if g > 0.0 {
                let target = offset_ray_origin(ls.p, nq, cfg.normal_offset);
                let gap = target - origin;
                let dist = gap.length();
                if dist > 0.0 {
                    let shadow = Ray::segment(origin, gap / dist, 0.0, dist * (1.0 - 1e-3));
                    if !sampler.occluded(scene, &shadow)? {
                        let brdf = surf.material.color * (1.0 / PI);
                        radiance += throughput * brdf * ls.emissive * (g / ls.pdf_area);
                    }
                }
            }
        }
        let dir = sample_bounce(surf.n, sampler);
        throughput *= surf.material.color;
        ray = Ray::new(origin, dir);
    }
    Ok(radiance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Eye,
    Ao,
    Pt,
    PtNee,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Eye => "eye",
            Integrator::Ao => "ao",
            Integrator::Pt => "pt",
            Integrator::PtNee => "pt-nee",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOptions {
    pub width: u32,
    pub height: u32,
    pub spp: u32,
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    /// Sample the pixel corner instead of a jittered position.
    pub pixel_centers: bool,
}

impl FrameOptions {
    pub fn new(width: u32, height: u32, spp: u32, seed: u64) -> Self {
        FrameOptions {
            width,
            height,
            spp,
            seed,
            workers: 0,
            pixel_centers: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub rays: u64,
}

/// Camera ray for one sample of pixel `(x, y)`; draws the jitter first.
pub fn camera_ray(
    scene: &RenderScene,
    x: u32,
    y: u32,
    opts: &FrameOptions,
    sampler: &mut Sampler,
) -> Result<Ray, CameraError> {
    let (ju, jv) = if opts.pixel_centers {
        (0.0, 0.0)
    } else {
        (sampler.uniform(), sampler.uniform())
    };
    let (u, v) = pixel_to_uv(x, y, opts.width, opts.height, ju, jv);
    scene.camera.primary_ray(u, v)
}

/// Radiance of one pixel sample.
pub fn render_sample(
    scene: &RenderScene,
    cfg: &IntegratorConfig,
    integrator: Integrator,
    x: u32,
    y: u32,
    opts: &FrameOptions,
    sampler: &mut Sampler,
) -> Result<Vec3, RenderError> {
    let ray = camera_ray(scene, x, y, opts, sampler)?;
    match integrator {
        Integrator::Eye => render_eye(scene, &ray, cfg, sampler),
        Integrator::Ao => render_ao(scene, &ray, cfg, sampler).map(Vec3::splat),
        Integrator::Pt => render_pt(scene, &ray, cfg, sampler),
        Integrator::PtNee => render_pt_nee(scene, &ray, cfg, sampler),
    }
}

/// Renders every pixel and sample into a fresh accumulation buffer.
///
/// Sample `s` of pixel `i` always draws from stream `(seed, i, s)` and each
/// pixel sums its samples in order, so the buffer is bit-identical for any
/// worker count.
pub fn render_frame(
    scene: &RenderScene,
    cfg: &IntegratorConfig,
    integrator: Integrator,
    opts: &FrameOptions,
) -> Result<(AccumBuffer, FrameStats), RenderError> {
    if opts.width == 0 || opts.height == 0 || opts.spp == 0 {
        return Err(RenderError::Config("width, height and spp must be at least 1".into()));
    }
    if matches!(integrator, Integrator::Pt | Integrator::PtNee) && cfg.max_depth == 0 {
        return Err(RenderError::Config("max depth must be at least 1".into()));
    }
    if integrator == Integrator::PtNee && scene.lights.is_empty() {
        log::warn!("scene has no emissive triangles; next event estimation falls back to plain path tracing");
    }
    scene.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| RenderError::Config(format!("cannot start worker pool: {e}")))?;
    let width = opts.width as usize;
    let mut acc = AccumBuffer::new(opts.width, opts.height);
    let rays = pool.install(|| {
        acc.data_mut()
            .par_chunks_mut(width)
            .enumerate()
            .map(|(y, row)| {
                let mut rays = 0;
                for (x, px) in row.iter_mut().enumerate() {
                    let pixel = (y * width + x) as u64;
                    let mut sum = Vec3::ZERO;
                    for s in 0..opts.spp {
                        let mut sampler = Sampler::new(RandomStream::for_sample(opts.seed, pixel, s as u64));
                        sum += render_sample(scene, cfg, integrator, x as u32, y as u32, opts, &mut sampler)?;
                        rays += sampler.rays;
                    }
                    *px = [sum.x, sum.y, sum.z, opts.spp as f64];
                }
                Ok::<u64, RenderError>(rays)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    Ok((acc, FrameStats { rays }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_examples() {
        let p = offset_ray_origin(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 1e-4);
        assert_eq!(p, Vec3::new(0.0, 1e-4, 0.0));
        let q = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(offset_ray_origin(q, Vec3::new(0.0, 1.0, 0.0), 0.0), q);
    }

    #[test]
    fn geometry_term_examples() {
        let w = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(geometry_term(Vec3::ZERO, w, w, -w), 1.0);
        assert_eq!(geometry_term(Vec3::ZERO, -w, w, -w), 0.0);
        let near = geometry_term(Vec3::ZERO, w, w, -w);
        let far = geometry_term(Vec3::ZERO, w, w * 2.0, -w);
        assert!((near / far - 4.0).abs() < 1e-12);
        assert_eq!(geometry_term(w, w, w, -w), 0.0);
    }

    #[test]
    fn emission_flag() {
        assert!(!Material::diffuse(Vec3::ONE).has_emission());
        assert!(Material::emitter(Vec3::ZERO, Vec3::new(0.0, 0.1, 0.0)).has_emission());
    }
}
