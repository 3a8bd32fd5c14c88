//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rtcore::accel::{Blas, BuildParams, Instance, IntersectorRegistry, SrtFrame, Tlas, TIE_EPSILON};
use rtcore::camera::Camera;
use rtcore::geometry::{Ray, Triangle, TriangleMesh, Vec3};
use rtcore::integrators::{Material, RenderScene};
use rtcore::sampling::RandomStream;
use rtcore::scene_io::{build_scene, load_scene_file, SceneDescription};
use std::path::PathBuf;
use std::sync::Arc;

pub struct TestRng(RandomStream);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(RandomStream::new(seed, 0x7e57))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.uniform()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn vec_in(&mut self, lo: f64, hi: f64) -> Vec3 {
        Vec3::new(self.range(lo, hi), self.range(lo, hi), self.range(lo, hi))
    }

    /// Uniform on the unit sphere by rejection from the cube.
    pub fn unit_vector(&mut self) -> Vec3 {
        loop {
            let v = self.vec_in(-1.0, 1.0);
            let l2 = v.length_squared();
            if l2 > 1e-6 && l2 <= 1.0 {
                return v / l2.sqrt();
            }
        }
    }
}

/// Möller–Trumbore, two-sided. Returns `(t, u, v)` with the hit point at
/// `(1-u-v)·v0 + u·v1 + v·v2`.
pub fn moller_trumbore(o: Vec3, d: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<(f64, f64, f64)> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    t.is_finite().then_some((t, u, v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHit {
    pub t: f64,
    pub instance: usize,
    pub prim: usize,
}

/// Every triangle hit of `ray` in `[t_min, t_max]`, by testing each
/// transformed triangle of every unmasked instance.
pub fn linear_scan(tlas: &Tlas, ray: &Ray, mask: u32) -> Vec<OracleHit> {
    let mut hits = Vec::new();
    for (i, inst) in tlas.instances().iter().enumerate() {
        if inst.mask & mask == 0 {
            continue;
        }
        let Some(mesh) = tlas.blas_of(i).mesh() else { continue };
        let m = tlas.object_to_world(i);
        for prim in 0..mesh.len() {
            let [a, b, c] = mesh.triangle_vertices(prim).map(|v| m.transform_point(v));
            if let Some((t, _, _)) = moller_trumbore(ray.origin, ray.direction, a, b, c) {
                if t >= ray.t_min && t <= ray.t_max {
                    hits.push(OracleHit { t, instance: i, prim });
                }
            }
        }
    }
    hits
}

/// Nearest oracle hit; distances within the tie tolerance go to the
/// lowest instance, then primitive.
pub fn oracle_closest(hits: &[OracleHit]) -> Option<OracleHit> {
    let t_min = hits.iter().map(|h| h.t).fold(f64::INFINITY, f64::min);
    hits.iter()
        .filter(|h| h.t <= t_min + TIE_EPSILON * t_min.abs())
        .min_by_key(|h| (h.instance, h.prim))
        .copied()
}

/// Independent binary PPM reader: `(width, height, rgb bytes)`.
pub fn read_ppm(bytes: &[u8]) -> Option<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
    }
    if fields[0] != "P6" || fields[3] != "255" {
        return None;
    }
    let w: usize = fields[1].parse().ok()?;
    let h: usize = fields[2].parse().ok()?;
    let payload = &bytes[pos + 1..];
    (payload.len() == w * h * 3).then(|| (w, h, payload.to_vec()))
}

pub fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

pub fn cornell_path() -> PathBuf {
    scenes_dir().join("cornell.scn")
}

pub fn cornell_desc() -> SceneDescription {
    load_scene_file(&cornell_path()).expect("cornell scene parses")
}

pub fn cornell() -> RenderScene {
    build_scene(&cornell_desc(), &BuildParams::default()).expect("cornell scene builds")
}

/// Square in the plane `y = 0` spanning `[-h, h]` in x and z.
pub fn quad(h: f64) -> TriangleMesh {
    TriangleMesh::new(
        vec![
            Vec3::new(-h, 0.0, -h),
            Vec3::new(h, 0.0, -h),
            Vec3::new(h, 0.0, h),
            Vec3::new(-h, 0.0, h),
        ],
        vec![Triangle::new(0, 1, 2), Triangle::new(0, 2, 3)],
    )
}

/// Closed cube `[-h, h]^3`.
pub fn cube(h: f64) -> TriangleMesh {
    let mut vertices = Vec::new();
    for i in 0..8 {
        let pick = |bit: usize| if i & bit != 0 { h } else { -h };
        vertices.push(Vec3::new(pick(1), pick(2), pick(4)));
    }
    let faces = [[0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1], [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3]];
    let mut triangles = Vec::new();
    for [a, b, c, d] in faces {
        triangles.push(Triangle::new(a, b, c));
        triangles.push(Triangle::new(a, c, d));
    }
    TriangleMesh::new(vertices, triangles)
}

/// Random triangle soup inside `[-1, 1]^3`.
pub fn soup(n: usize, seed: u64) -> TriangleMesh {
    let mut rng = TestRng::new(seed);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..n as u32 {
        let c = rng.vec_in(-1.0, 1.0);
        for _ in 0..3 {
            vertices.push(c + rng.vec_in(-0.15, 0.15));
        }
        triangles.push(Triangle::new(3 * i, 3 * i + 1, 3 * i + 2));
    }
    TriangleMesh::new(vertices, triangles)
}

/// One mesh per object, each its own BLAS and instance.
pub fn scene_of(objects: Vec<(TriangleMesh, Material, SrtFrame)>, camera: Camera) -> RenderScene {
    let params = BuildParams::default();
    let mut blases = Vec::new();
    let mut instances = Vec::new();
    let mut materials = Vec::new();
    for (i, (mesh, material, frame)) in objects.into_iter().enumerate() {
        blases.push(Arc::new(Blas::from_mesh(mesh, &params).unwrap()));
        instances.push(Instance::new(i, frame));
        materials.push(material);
    }
    let tlas = Tlas::build(instances, blases, &params).unwrap();
    let n = materials.len();
    RenderScene::new(tlas, IntersectorRegistry::new(), camera, materials, (0..n).collect()).unwrap()
}

/// Random ray from a sphere of radius `r` aimed near the origin.
pub fn ray_from_sphere(rng: &mut TestRng, r: f64, spread: f64) -> Ray {
    let origin = rng.unit_vector() * r;
    let target = rng.vec_in(-spread, spread);
    Ray::new(origin, (target - origin).normalize())
}

pub fn mean_abs_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
