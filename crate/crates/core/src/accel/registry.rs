//! Function table for custom primitives, keyed by geometry type and ray type.

use crate::geometry::{intersect_ray_sphere, Ray, SpherePrim, Vec3};
use std::any::Any;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Result of a custom intersection in object space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomHit {
    pub t: f64,
    pub normal: Vec3,
}

/// Intersects primitive `prim_index` with an object-space ray. `data` is
/// the value registered alongside the function. Implementations must only
/// report `t` inside `[ray.t_min, ray.t_max]`.
pub type IntersectFn = fn(ray: &Ray, prim_index: usize, data: &(dyn Any + Send + Sync)) -> Option<CustomHit>;

#[derive(Clone)]
pub(crate) struct Entry {
    pub(crate) func: IntersectFn,
    pub(crate) data: Arc<dyn Any + Send + Sync>,
}

impl Entry {
    #[inline]
    pub(crate) fn intersect(&self, ray: &Ray, prim_index: usize) -> Option<CustomHit> {
        (self.func)(ray, prim_index, self.data.as_ref())
    }
}

#[derive(Clone, Default)]
pub struct IntersectorRegistry {
    table: HashMap<(u32, u32), Entry>,
}

impl fmt::Debug for IntersectorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<_> = self.table.keys().collect();
        keys.sort();
        f.debug_struct("IntersectorRegistry").field("entries", &keys).finish()
    }
}

impl IntersectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `func` for one (geometry type, ray type) cell, replacing
    /// any previous entry.
    pub fn register(
        &mut self,
        geom_type: u32,
        ray_type: u32,
        func: IntersectFn,
        data: Arc<dyn Any + Send + Sync>,
    ) -> &mut Self {
        self.table.insert((geom_type, ray_type), Entry { func, data });
        self
    }

    pub(crate) fn get(&self, geom_type: u32, ray_type: u32) -> Option<&Entry> {
        self.table.get(&(geom_type, ray_type))
    }

    pub fn contains(&self, geom_type: u32, ray_type: u32) -> bool {
        self.table.contains_key(&(geom_type, ray_type))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Intersector for custom primitives whose data is a `Vec<SpherePrim>`
/// indexed by primitive.
pub fn intersect_sphere_list(ray: &Ray, prim_index: usize, data: &(dyn Any + Send + Sync)) -> Option<CustomHit> {
    let spheres = data.downcast_ref::<Vec<SpherePrim>>()?;
    let (t, normal) = intersect_ray_sphere(ray, spheres.get(prim_index)?)?;
    Some(CustomHit { t, normal })
}
