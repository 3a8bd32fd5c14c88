//! Stack-based traversal of the two-level hierarchy.

use super::bvh::{Bvh, NodeKind, MAX_DEPTH};
use super::registry::Entry;
use super::{transform_ray_to_local, Blas, BlasGeometry, IntersectorRegistry, TraceError, Tlas};
use crate::geometry::{intersect_ray_triangle, slab_entry, Hit, Ray, Vec3};
use arrayvec::ArrayVec;
use std::ops::Range;

type NodeStack = ArrayVec<u32, MAX_DEPTH>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraversalState {
    InProgress,
    Finished,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    /// Nodes popped and box-tested, both levels.
    pub nodes_visited: u64,
    pub prim_tests: u64,
    pub instances_entered: u64,
}

impl std::ops::AddAssign for TraversalStats {
    fn add_assign(&mut self, o: Self) {
        self.nodes_visited += o.nodes_visited;
        self.prim_tests += o.prim_tests;
        self.instances_entered += o.instances_entered;
    }
}

/// Resumable traversal. Each call to [`next_hit`](Self::next_hit) returns
/// one more intersection inside the current ray interval, in no particular
/// order, until the hierarchy is exhausted.
pub struct TraversalCursor<'a> {
    tlas: &'a Tlas,
    registry: &'a IntersectorRegistry,
    ray: Ray,
    inv_dir: Vec3,
    mask: u32,
    ray_type: u32,
    stack: NodeStack,
    leaf: Range<usize>,
    walk: Option<InstanceWalk<'a>>,
    finished: bool,
    stats: TraversalStats,
}

/// Traversal state inside one instance's bottom-level tree.
struct InstanceWalk<'a> {
    instance: usize,
    blas: &'a Blas,
    custom: Option<&'a Entry>,
    ray: Ray,
    inv_dir: Vec3,
    stack: NodeStack,
    leaf: Range<usize>,
}

#[inline]
fn push_children(
    bvh: &Bvh,
    node: u32,
    ray: &Ray,
    inv_dir: Vec3,
    stack: &mut NodeStack,
    leaf: &mut Range<usize>,
    stats: &mut TraversalStats,
) -> Result<(), TraceError> {
    stats.nodes_visited += 1;
    let node = &bvh.nodes()[node as usize];
    if slab_entry(ray, &node.bounds, inv_dir).is_none() {
        return Ok(());
    }
    match node.kind {
        NodeKind::Leaf { first, count } => {
            *leaf = first as usize..(first + count) as usize;
        }
        NodeKind::Internal { left, right, axis } => {
            // Near child on top.
            let (near, far) = if ray.direction[axis as usize] >= 0.0 {
                (left, right)
            } else {
                (right, left)
            };
            stack.try_push(far).map_err(|_| TraceError::StackOverflow)?;
            stack.try_push(near).map_err(|_| TraceError::StackOverflow)?;
        }
    }
    Ok(())
}

impl<'a> InstanceWalk<'a> {
    fn advance(&mut self, stats: &mut TraversalStats) -> Result<Option<Hit>, TraceError> {
        let bvh = self.blas.bvh();
        loop {
            while let Some(slot) = self.leaf.next() {
                let prim = bvh.prim_order()[slot] as usize;
                stats.prim_tests += 1;
                if let Some(hit) = self.intersect(prim) {
                    return Ok(Some(hit));
                }
            }
            let Some(node) = self.stack.pop() else {
                return Ok(None);
            };
            push_children(bvh, node, &self.ray, self.inv_dir, &mut self.stack, &mut self.leaf, stats)?;
        }
    }

    /// Object-space hit; the caller maps the normal to world space.
    #[inline]
    fn intersect(&self, prim: usize) -> Option<Hit> {
        match self.blas.geometry() {
            BlasGeometry::Triangles(mesh) => {
                let [a, b, c] = mesh.triangle_vertices(prim);
                let h = intersect_ray_triangle(&self.ray, a, b, c)?;
                Some(Hit {
                    t: h.t,
                    prim_index: prim,
                    instance_index: Some(self.instance),
                    normal: h.normal,
                    bary_u: h.bary_u,
                    bary_v: h.bary_v,
                })
            }
            BlasGeometry::Custom { .. } => {
                let entry = self.custom?;
                let h = entry.intersect(&self.ray, prim)?;
                if !(h.t.is_finite() && self.ray.contains(h.t) && h.normal.is_finite()) {
                    return None;
                }
                Some(Hit {
                    t: h.t,
                    prim_index: prim,
                    instance_index: Some(self.instance),
                    normal: h.normal,
                    bary_u: 0.0,
                    bary_v: 0.0,
                })
            }
        }
    }
}

impl<'a> TraversalCursor<'a> {
    pub fn new(
        tlas: &'a Tlas,
        ray: Ray,
        ray_mask: u32,
        ray_type: u32,
        registry: &'a IntersectorRegistry,
    ) -> Self {
        let mut stack = NodeStack::new();
        stack.push(0);
        TraversalCursor {
            tlas,
            registry,
            inv_dir: ray.direction.recip(),
            ray,
            mask: ray_mask,
            ray_type,
            stack,
            leaf: 0..0,
            walk: None,
            finished: ray_mask == 0,
            stats: TraversalStats::default(),
        }
    }

    pub fn state(&self) -> TraversalState {
        if self.finished {
            TraversalState::Finished
        } else {
            TraversalState::InProgress
        }
    }

    pub fn stats(&self) -> TraversalStats {
        self.stats
    }

    pub fn ray(&self) -> &Ray {
        &self.ray
    }

    /// Narrows the interval for the remaining traversal; hits beyond `t`
    /// are no longer reported.
    pub fn shrink_t_max(&mut self, t: f64) {
        if t < self.ray.t_max {
            self.ray.t_max = t;
            if let Some(walk) = &mut self.walk {
                walk.ray.t_max = t;
            }
        }
    }

    pub fn next_hit(&mut self) -> Result<Option<Hit>, TraceError> {
        if self.finished {
            return Ok(None);
        }
        let tlas = self.tlas;
        loop {
            if let Some(walk) = &mut self.walk {
                if let Some(mut hit) = walk.advance(&mut self.stats)? {
                    let inv = tlas.world_to_object(walk.instance);
                    hit.normal = inv.transform_transposed(hit.normal).normalize();
                    return Ok(Some(hit));
                }
                self.walk = None;
                continue;
            }
            if let Some(slot) = self.leaf.next() {
                let instance = tlas.bvh().prim_order()[slot] as usize;
                if tlas.instances()[instance].mask & self.mask != 0 {
                    self.walk = Some(self.enter(instance)?);
                }
                continue;
            }
            let Some(node) = self.stack.pop() else {
                self.finished = true;
                return Ok(None);
            };
            push_children(
                tlas.bvh(),
                node,
                &self.ray,
                self.inv_dir,
                &mut self.stack,
                &mut self.leaf,
                &mut self.stats,
            )?;
        }
    }

    fn enter(&mut self, instance: usize) -> Result<InstanceWalk<'a>, TraceError> {
        let tlas = self.tlas;
        let blas = tlas.blas_of(instance);
        let custom = match blas.geom_type() {
            Some(geom_type) => Some(self.registry.get(geom_type, self.ray_type).ok_or(
                TraceError::MissingIntersector {
                    geom_type,
                    ray_type: self.ray_type,
                },
            )?),
            None => None,
        };
        self.stats.instances_entered += 1;
        let ray = transform_ray_to_local(&self.ray, tlas.world_to_object(instance));
        let mut stack = NodeStack::new();
        stack.push(0);
        Ok(InstanceWalk {
            instance,
            blas,
            custom,
            inv_dir: ray.direction.recip(),
            ray,
            stack,
            leaf: 0..0,
        })
    }
}

/// Relative distance below which two hits count as tied.
pub const TIE_EPSILON: f64 = 1e-9;

#[inline]
fn tie_tolerance(t: f64) -> f64 {
    TIE_EPSILON * t.abs()
}

/// Tied distances resolve to the lowest instance, then the lowest primitive.
#[inline]
fn closer(a: &Hit, b: &Hit) -> bool {
    let tol = tie_tolerance(b.t);
    if a.t < b.t - tol {
        true
    } else if a.t <= b.t + tol {
        (a.instance_index, a.prim_index) < (b.instance_index, b.prim_index)
    } else {
        false
    }
}

impl Tlas {
    pub fn cursor<'a>(
        &'a self,
        ray: Ray,
        ray_mask: u32,
        ray_type: u32,
        registry: &'a IntersectorRegistry,
    ) -> TraversalCursor<'a> {
        TraversalCursor::new(self, ray, ray_mask, ray_type, registry)
    }

    pub fn closest_hit(
        &self,
        ray: &Ray,
        ray_mask: u32,
        ray_type: u32,
        registry: &IntersectorRegistry,
    ) -> Result<Option<Hit>, TraceError> {
        let mut stats = TraversalStats::default();
        self.closest_hit_with_stats(ray, ray_mask, ray_type, registry, &mut stats)
    }

    /// Nearest hit; see [`TIE_EPSILON`] for how near-equal distances are
    /// ordered.
    pub fn closest_hit_with_stats(
        &self,
        ray: &Ray,
        ray_mask: u32,
        ray_type: u32,
        registry: &IntersectorRegistry,
        stats: &mut TraversalStats,
    ) -> Result<Option<Hit>, TraceError> {
        let mut cursor = self.cursor(*ray, ray_mask, ray_type, registry);
        let mut best: Option<Hit> = None;
        while let Some(hit) = cursor.next_hit()? {
            if best.as_ref().is_none_or(|b| closer(&hit, b)) {
                cursor.shrink_t_max(hit.t + tie_tolerance(hit.t));
                best = Some(hit);
            }
        }
        *stats += cursor.stats();
        Ok(best)
    }

    /// Stops at the first accepted intersection.
    pub fn any_hit(
        &self,
        ray: &Ray,
        ray_mask: u32,
        ray_type: u32,
        registry: &IntersectorRegistry,
    ) -> Result<bool, TraceError> {
        Ok(self.cursor(*ray, ray_mask, ray_type, registry).next_hit()?.is_some())
    }
}
