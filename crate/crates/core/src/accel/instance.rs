//! Instance transforms.

use crate::geometry::{Aabb, Ray, Vec3};

/// Affine map `x ↦ L·x + t` with `L` stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub linear: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        translation: Vec3::ZERO,
    };

    #[inline]
    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        let m = &self.linear;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    #[inline]
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.transform_vector(p) + self.translation
    }

    /// Multiplies by the transposed linear part. Applied to the inverse
    /// matrix this maps object-space normals to world space.
    #[inline]
    pub fn transform_transposed(&self, v: Vec3) -> Vec3 {
        let m = &self.linear;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `None` when `|det| <= 1e-12` or the inverse is not finite.
    pub fn inverse(&self) -> Option<Affine> {
        let det = self.determinant();
        if !(det.abs() > 1e-12) {
            return None;
        }
        let m = &self.linear;
        let inv_det = 1.0 / det;
        let cof = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let linear = [
            [cof(1, 1, 2, 2) * inv_det, -cof(0, 1, 2, 2) * inv_det, cof(0, 1, 1, 2) * inv_det],
            [-cof(1, 0, 2, 2) * inv_det, cof(0, 0, 2, 2) * inv_det, -cof(0, 0, 1, 2) * inv_det],
            [cof(1, 0, 2, 1) * inv_det, -cof(0, 0, 2, 1) * inv_det, cof(0, 0, 1, 1) * inv_det],
        ];
        let mut inv = Affine {
            linear,
            translation: Vec3::ZERO,
        };
        inv.translation = -inv.transform_vector(self.translation);
        let finite = inv.translation.is_finite() && inv.linear.iter().flatten().all(|x| x.is_finite());
        finite.then_some(inv)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Affine) -> Affine {
        let (a, b) = (&self.linear, &other.linear);
        let mut linear = [[0.0; 3]; 3];
        for (r, row) in linear.iter_mut().enumerate() {
            for (c, out) in row.iter_mut().enumerate() {
                *out = (0..3).map(|k| a[r][k] * b[k][c]).sum();
            }
        }
        Affine {
            linear,
            translation: self.transform_point(other.translation),
        }
    }

    /// Tight box around the eight transformed corners.
    pub fn transform_aabb(&self, b: &Aabb) -> Aabb {
        b.corners().iter().fold(Aabb::EMPTY, |mut acc, &c| {
            acc.grow(self.transform_point(c));
            acc
        })
    }
}

/// Scale, rotation and translation components of an instance transform,
/// composed as `M = T·R·S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrtFrame {
    pub scale: Vec3,
    /// Unit rotation axis; ignored when the angle is zero.
    pub rotation_axis: Vec3,
    /// Radians, counter-clockwise about the axis.
    pub rotation_angle: f64,
    pub translation: Vec3,
}

impl Default for SrtFrame {
    fn default() -> Self {
        SrtFrame::IDENTITY
    }
}

impl SrtFrame {
    pub const IDENTITY: SrtFrame = SrtFrame {
        scale: Vec3::ONE,
        rotation_axis: Vec3::new(0.0, 1.0, 0.0),
        rotation_angle: 0.0,
        translation: Vec3::ZERO,
    };

    pub fn translation(t: Vec3) -> Self {
        SrtFrame {
            translation: t,
            ..Self::IDENTITY
        }
    }

    pub fn matrix(&self) -> Affine {
        let r = rotation(self.rotation_axis, self.rotation_angle);
        let s = self.scale;
        let mut linear = r;
        for row in linear.iter_mut() {
            row[0] *= s.x;
            row[1] *= s.y;
            row[2] *= s.z;
        }
        Affine {
            linear,
            translation: self.translation,
        }
    }
}

/// Rodrigues rotation matrix.
fn rotation(axis: Vec3, angle: f64) -> [[f64; 3]; 3] {
    if angle == 0.0 {
        return Affine::IDENTITY.linear;
    }
    let a = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
        [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
        [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
    ]
}

/// One placement of a bottom-level structure in the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub blas_id: usize,
    pub frame: SrtFrame,
    pub mask: u32,
}

impl Instance {
    pub fn new(blas_id: usize, frame: SrtFrame) -> Self {
        Instance {
            blas_id,
            frame,
            mask: u32::MAX,
        }
    }

    pub fn with_mask(mut self, mask: u32) -> Self {
        self.mask = mask;
        self
    }
}

/// Maps a world ray into object space. The direction is not renormalized,
/// so parametric distances are identical in both spaces.
#[inline]
pub fn transform_ray_to_local(ray: &Ray, world_to_object: &Affine) -> Ray {
    Ray {
        origin: world_to_object.transform_point(ray.origin),
        direction: world_to_object.transform_vector(ray.direction),
        t_min: ray.t_min,
        t_max: ray.t_max,
    }
}
