//! CPU ray tracer with two-level BVH instancing and Monte Carlo integrators.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod camera;
pub mod cli;
pub mod geometry;
pub mod integrators;
pub mod sampling;
pub mod scene_io;
