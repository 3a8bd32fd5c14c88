//! Pinhole camera with optional radial lens distortion.

use crate::geometry::{Ray, Vec3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("camera film is degenerate: right and up vectors are parallel or zero")]
    DegenerateFilm,
    #[error("camera vectors must be finite")]
    NonFinite,
    #[error("lens distortion {distortion} folds the film at ({u}, {v}): 1 + c = {denom}")]
    InvalidDistortion {
        distortion: f64,
        u: f64,
        v: f64,
        denom: f64,
    },
}

/// Lens at `origin`, film at distance 1 along `normalize(up × right)`,
/// spanning `±right` horizontally and `±up` vertically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub distortion: f64,
    forward: Vec3,
}

impl Camera {
    pub fn new(origin: Vec3, right: Vec3, up: Vec3) -> Result<Self, CameraError> {
        Self::with_distortion(origin, right, up, 0.0)
    }

    pub fn with_distortion(
        origin: Vec3,
        right: Vec3,
        up: Vec3,
        distortion: f64,
    ) -> Result<Self, CameraError> {
        if !(origin.is_finite() && right.is_finite() && up.is_finite() && distortion.is_finite()) {
            return Err(CameraError::NonFinite);
        }
        let axis = up.cross(right);
        if axis.length_squared() == 0.0 {
            return Err(CameraError::DegenerateFilm);
        }
        Ok(Camera {
            origin,
            right,
            up,
            distortion,
            forward: axis.normalize(),
        })
    }

    pub fn forward(&self) -> Vec3 {
        self.forward
    }

    /// Ray through normalized film coordinates; `u` grows rightward and
    /// `v` downward, so `v = 0` is the top image row.
    pub fn primary_ray(&self, u: f64, v: f64) -> Result<Ray, CameraError> {
        let x = Vec3::lerp(-self.right, self.right, u);
        let y = Vec3::lerp(self.up, -self.up, v);
        let p = x + y;
        let c = self.distortion * p.dot(p);
        let denom = 1.0 + c;
        if !(denom > 0.0) {
            return Err(CameraError::InvalidDistortion {
                distortion: self.distortion,
                u,
                v,
                denom,
            });
        }
        Ok(Ray::new(self.origin, (self.forward + p / denom).normalize()))
    }
}

/// Normalized film coordinates of a sample inside pixel `(xi, yi)`.
#[inline]
pub fn pixel_to_uv(xi: u32, yi: u32, width: u32, height: u32, jitter_u: f64, jitter_v: f64) -> (f64, f64) {
    (
        (xi as f64 + jitter_u) / width as f64,
        (yi as f64 + jitter_v) / height as f64,
    )
}
