//! Random streams and the sampling routines used by the integrators.

use crate::geometry::{triangle_area, Vec3};
use rand_core::Rng;
use rand_pcg::Pcg32;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("cannot build a tangent frame around a zero or non-finite normal")]
    ZeroNormal,
    #[error("cannot sample a degenerate triangle")]
    DegenerateTriangle,
    #[error("NEE requested in a scene with no lights")]
    NoLights,
}

/// Reproducible stream of uniform numbers in `[0, 1)`.
///
/// Backed by PCG-XSH-RR with 64-bit state; the stream id selects one of
/// 2^63 independent sequences.
#[derive(Clone)]
pub struct RandomStream {
    rng: Pcg32,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream {
            rng: Pcg32::new(seed, stream_id),
        }
    }

    /// Stream owned by one sample of one pixel. The id only depends on its
    /// arguments, never on which worker renders the pixel.
    pub fn for_sample(seed: u64, pixel_index: u64, sample_index: u64) -> Self {
        let stream = mix64(mix64(pixel_index ^ mix64(seed)) ^ sample_index.rotate_left(32));
        RandomStream::new(mix64(seed ^ 0x853c_49e6_748f_ea9b), stream)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.next_u32() as f64 * (1.0 / 4_294_967_296.0)
    }
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Cosine-weighted direction around +Y: a uniform point on the unit disk
/// lifted onto the hemisphere. Density is `cos θ / π`.
#[inline]
pub fn sample_cosine_hemisphere(x0: f64, x1: f64) -> Vec3 {
    let phi = 2.0 * PI * x0;
    let r = x1.sqrt();
    let (sin_phi, cos_phi) = phi.sin_cos();
    Vec3::new(r * cos_phi, (1.0 - r * r).max(0.0).sqrt(), r * sin_phi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    pub tangent: Vec3,
    pub bitangent: Vec3,
    pub normal: Vec3,
}

impl TangentBasis {
    /// Frame whose tangent is `edge` projected onto the plane of `normal`,
    /// e.g. a triangle edge.
    pub fn from_normal_and_edge(normal: Vec3, edge: Vec3) -> Result<Self, SamplingError> {
        if !(normal.length_squared() > 0.0) || !normal.is_finite() {
            return Err(SamplingError::ZeroNormal);
        }
        let t = edge - normal * edge.dot(normal);
        if !(t.length_squared() > 0.0) || !t.is_finite() {
            return make_tangent_basis(normal);
        }
        let tangent = t.normalize();
        Ok(TangentBasis {
            tangent,
            bitangent: normal.cross(tangent),
            normal,
        })
    }
}

/// Orthonormal frame from a unit normal alone (Duff et al. 2017, branchless
/// except for the sign).
pub fn make_tangent_basis(n: Vec3) -> Result<TangentBasis, SamplingError> {
    if !(n.length_squared() > 0.0) || !n.is_finite() {
        return Err(SamplingError::ZeroNormal);
    }
    let sign = 1.0f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let b1 = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let b2 = Vec3::new(b, sign + n.y * n.y * a, -n.y);
    Ok(TangentBasis {
        tangent: b1,
        bitangent: b2,
        normal: n,
    })
}

/// Maps a +Y-up local direction into the frame (`x → tangent`,
/// `y → normal`, `z → bitangent`).
#[inline]
pub fn to_world(basis: &TangentBasis, local: Vec3) -> Vec3 {
    basis.tangent * local.x + basis.normal * local.y + basis.bitangent * local.z
}

/// Uniform point on a triangle and its unit geometric normal.
pub fn sample_uniform_triangle(
    x0: f64,
    x1: f64,
    v0: Vec3,
    v1: Vec3,
    v2: Vec3,
) -> Result<(Vec3, Vec3), SamplingError> {
    let n = (v1 - v0).cross(v2 - v0);
    if !(n.length_squared() > 0.0) {
        return Err(SamplingError::DegenerateTriangle);
    }
    let s = x0.sqrt();
    let p = v0 * (1.0 - s) + v1 * (s * (1.0 - x1)) + v2 * (s * x1);
    Ok((p, n.normalize()))
}

/// World-space emissive triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightTriangle {
    pub vertices: [Vec3; 3],
    pub emissive: Vec3,
    pub area: f64,
}

impl LightTriangle {
    pub fn new(vertices: [Vec3; 3], emissive: Vec3) -> Self {
        let [a, b, c] = vertices;
        LightTriangle {
            vertices,
            emissive,
            area: triangle_area(a, b, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    pub p: Vec3,
    pub n: Vec3,
    pub emissive: Vec3,
    /// Area density including the probability of picking this light.
    pub pdf_area: f64,
    pub light_index: usize,
}

/// Picks one light uniformly, then a uniform point on it.
pub fn sample_light(
    lights: &[LightTriangle],
    x0: f64,
    x1: f64,
    x2: f64,
) -> Result<LightSample, SamplingError> {
    if lights.is_empty() {
        return Err(SamplingError::NoLights);
    }
    let count = lights.len();
    let index = ((x0 * count as f64) as usize).min(count - 1);
    let light = &lights[index];
    let [a, b, c] = light.vertices;
    let (p, n) = sample_uniform_triangle(x1, x2, a, b, c)?;
    Ok(LightSample {
        p,
        n,
        emissive: light.emissive,
        pdf_area: 1.0 / count as f64 * 1.0 / light.area,
        light_index: index,
    })
}
