//! Binary BVH over a list of primitive bounding boxes.

use super::BuildError;
use crate::geometry::{Aabb, Vec3};

/// Maximum number of levels from the root to any leaf, inclusive. Traversal
/// stacks hold this many entries.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BuildQuality {
    /// Median split on the longest axis.
    Fast,
    /// Binned surface area heuristic with a median fallback.
    #[default]
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    pub quality: BuildQuality,
    pub traversal_cost: f64,
    pub intersection_cost: f64,
    pub max_leaf_size: usize,
    pub bin_count: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            quality: BuildQuality::Balanced,
            traversal_cost: 1.0,
            intersection_cost: 1.0,
            max_leaf_size: 4,
            bin_count: 16,
        }
    }
}

impl BuildParams {
    pub fn with_quality(quality: BuildQuality) -> Self {
        BuildParams {
            quality,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// `left` holds the primitives with the smaller centroids along `axis`.
    Internal { left: u32, right: u32, axis: u8 },
    /// Range `first..first + count` of [`Bvh::prim_order`].
    Leaf { first: u32, count: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Nodes are stored in depth-first preorder, so every child index is
/// larger than its parent's.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    prim_order: Vec<u32>,
    depth: usize,
}

#[derive(Clone, Copy)]
struct PrimRef {
    index: u32,
    bounds: Aabb,
    centroid: Vec3,
}

#[derive(Clone, Copy)]
struct Bin {
    bounds: Aabb,
    count: usize,
}

impl Default for Bin {
    fn default() -> Self {
        Bin {
            bounds: Aabb::EMPTY,
            count: 0,
        }
    }
}

impl Bvh {
    pub fn build(boxes: &[Aabb], params: &BuildParams) -> Result<Bvh, BuildError> {
        if boxes.is_empty() {
            return Err(BuildError::NoPrimitives);
        }
        if boxes.len() > u32::MAX as usize {
            return Err(BuildError::TooManyPrimitives(boxes.len()));
        }
        if let Some(index) = boxes.iter().position(|b| !b.is_finite()) {
            return Err(BuildError::NonFiniteBounds { index });
        }
        let mut refs: Vec<PrimRef> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| PrimRef {
                index: i as u32,
                bounds: *b,
                centroid: b.centroid(),
            })
            .collect();
        let mut builder = Builder {
            params: *params,
            nodes: Vec::with_capacity(2 * boxes.len()),
            depth: 0,
        };
        builder.build_node(&mut refs, 0, 1);
        debug_assert!(builder.depth <= MAX_DEPTH);
        Ok(Bvh {
            nodes: builder.nodes,
            prim_order: refs.iter().map(|r| r.index).collect(),
            depth: builder.depth,
        })
    }

    /// Recomputes every box bottom-up from `boxes` without changing topology.
    pub fn refit(&mut self, boxes: &[Aabb]) -> Result<(), BuildError> {
        if boxes.len() != self.prim_order.len() {
            return Err(BuildError::PrimitiveCountMismatch {
                expected: self.prim_order.len(),
                actual: boxes.len(),
            });
        }
        if let Some(index) = boxes.iter().position(|b| !b.is_finite()) {
            return Err(BuildError::NonFiniteBounds { index });
        }
        for i in (0..self.nodes.len()).rev() {
            let bounds = match self.nodes[i].kind {
                NodeKind::Leaf { first, count } => self.prim_order
                    [first as usize..(first + count) as usize]
                    .iter()
                    .fold(Aabb::EMPTY, |acc, &p| acc.union(&boxes[p as usize])),
                NodeKind::Internal { left, right, .. } => self.nodes[left as usize]
                    .bounds
                    .union(&self.nodes[right as usize].bounds),
            };
            self.nodes[i].bounds = bounds;
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn prim_order(&self) -> &[u32] {
        &self.prim_order
    }

    pub fn prim_count(&self) -> usize {
        self.prim_order.len()
    }

    /// Levels on the longest root-to-leaf path (a single leaf has depth 1).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Sum over leaves of surface area times primitive count.
    pub fn leaf_cost(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { count, .. } => Some(n.bounds.surface_area() * count as f64),
                NodeKind::Internal { .. } => None,
            })
            .sum()
    }
}

struct Builder {
    params: BuildParams,
    nodes: Vec<BvhNode>,
    depth: usize,
}

impl Builder {
    /// Levels a median-split subtree over `count` primitives needs.
    fn median_levels(&self, mut count: usize) -> usize {
        let mut levels = 1;
        while count > self.params.max_leaf_size.max(1) {
            count = count.div_ceil(2);
            levels += 1;
        }
        levels
    }

    fn build_node(&mut self, refs: &mut [PrimRef], first: usize, level: usize) -> u32 {
        let index = self.nodes.len();
        let bounds = refs.iter().fold(Aabb::EMPTY, |acc, r| acc.union(&r.bounds));
        self.nodes.push(BvhNode {
            bounds,
            kind: NodeKind::Leaf {
                first: first as u32,
                count: refs.len() as u32,
            },
        });
        self.depth = self.depth.max(level);

        let count = refs.len();
        if count == 1 {
            return index as u32;
        }
        let over_full = count > self.params.max_leaf_size;
        let force_median = level + self.median_levels(count) >= MAX_DEPTH;
        let centroid_bounds = refs
            .iter()
            .fold(Aabb::EMPTY, |mut acc, r| {
                acc.grow(r.centroid);
                acc
            });

        let split = match self.params.quality {
            BuildQuality::Balanced if !force_median => {
                match self.sah_split(refs, &bounds, &centroid_bounds) {
                    Some(split) => Some(split),
                    None if over_full => Some(median_split(refs, &centroid_bounds, &bounds)),
                    None => None,
                }
            }
            _ if over_full => Some(median_split(refs, &centroid_bounds, &bounds)),
            _ => None,
        };
        let Some((mid, axis)) = split else {
            return index as u32;
        };

        let (left_refs, right_refs) = refs.split_at_mut(mid);
        let left = self.build_node(left_refs, first, level + 1);
        let right = self.build_node(right_refs, first + mid, level + 1);
        self.nodes[index].kind = NodeKind::Internal {
            left,
            right,
            axis: axis as u8,
        };
        index as u32
    }

    /// Binned SAH over the longest centroid axis. Returns the partition
    /// point when splitting beats making a leaf.
    fn sah_split(
        &self,
        refs: &mut [PrimRef],
        bounds: &Aabb,
        centroid_bounds: &Aabb,
    ) -> Option<(usize, usize)> {
        let axis = centroid_bounds.extent().max_axis();
        let lo = centroid_bounds.lo[axis];
        let extent = centroid_bounds.hi[axis] - lo;
        if !(extent > 0.0) {
            return None;
        }
        let bin_count = self.params.bin_count.max(2);
        let scale = bin_count as f64 / extent;
        let bin_of = |c: f64| (((c - lo) * scale) as usize).min(bin_count - 1);

        let mut bins = vec![Bin::default(); bin_count];
        for r in refs.iter() {
            let b = &mut bins[bin_of(r.centroid[axis])];
            b.count += 1;
            b.bounds = b.bounds.union(&r.bounds);
        }

        // right_area[i], right_count[i] describe bins i..bin_count.
        let mut right_area = vec![0.0; bin_count];
        let mut right_count = vec![0usize; bin_count];
        let mut acc = Bin::default();
        for i in (1..bin_count).rev() {
            acc.bounds = acc.bounds.union(&bins[i].bounds);
            acc.count += bins[i].count;
            right_area[i] = acc.bounds.surface_area();
            right_count[i] = acc.count;
        }

        let parent_area = bounds.surface_area();
        let p = &self.params;
        let mut best: Option<(f64, usize)> = None;
        let mut left = Bin::default();
        for i in 0..bin_count - 1 {
            left.bounds = left.bounds.union(&bins[i].bounds);
            left.count += bins[i].count;
            let right_n = right_count[i + 1];
            if left.count == 0 || right_n == 0 {
                continue;
            }
            // Costs are scaled by the parent area to stay finite for flat boxes.
            let cost = p.traversal_cost * parent_area
                + p.intersection_cost
                    * (left.bounds.surface_area() * left.count as f64
                        + right_area[i + 1] * right_n as f64);
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, i));
            }
        }
        let (cost, split_bin) = best?;
        let leaf_cost = p.intersection_cost * refs.len() as f64 * parent_area;
        if !(cost < leaf_cost) {
            return None;
        }
        let mid = partition(refs, |r| bin_of(r.centroid[axis]) <= split_bin);
        debug_assert!(mid > 0 && mid < refs.len());
        Some((mid, axis))
    }
}

fn median_split(refs: &mut [PrimRef], centroid_bounds: &Aabb, bounds: &Aabb) -> (usize, usize) {
    let extent = centroid_bounds.extent();
    let axis = if extent.max_component() > 0.0 {
        extent.max_axis()
    } else {
        bounds.extent().max_axis()
    };
    let mid = refs.len() / 2;
    refs.select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis]
            .total_cmp(&b.centroid[axis])
            .then(a.index.cmp(&b.index))
    });
    (mid, axis)
}

/// In-place partition; returns the number of elements satisfying `pred`.
fn partition<T>(items: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..items.len() {
        if pred(&items[i]) {
            items.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::aabb_of_triangle;

    fn unit_box(at: Vec3) -> Aabb {
        Aabb::new(at, at + Vec3::ONE)
    }

    fn check_invariants(bvh: &Bvh, boxes: &[Aabb]) {
        let mut seen = vec![0usize; boxes.len()];
        for node in bvh.nodes() {
            match node.kind {
                NodeKind::Internal { left, right, .. } => {
                    assert!(left as usize > 0 && right as usize > 0);
                    for c in [left, right] {
                        assert!(node.bounds.contains_box(&bvh.nodes()[c as usize].bounds, 1e-6));
                    }
                }
                NodeKind::Leaf { first, count } => {
                    assert!(count >= 1);
                    for &p in &bvh.prim_order()[first as usize..(first + count) as usize] {
                        seen[p as usize] += 1;
                        assert!(node.bounds.contains_box(&boxes[p as usize], 0.0));
                    }
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(bvh.depth() <= MAX_DEPTH);
    }

    #[test]
    fn single_primitive_is_one_leaf() {
        let b = aabb_of_triangle(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let bvh = Bvh::build(&[b], &BuildParams::default()).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert_eq!(bvh.root_bounds(), b);
        assert_eq!(bvh.nodes()[0].kind, NodeKind::Leaf { first: 0, count: 1 });
        assert_eq!(bvh.depth(), 1);
    }

    #[test]
    fn distant_pair_splits_into_two_leaves() {
        let boxes = [unit_box(Vec3::ZERO), unit_box(Vec3::new(100.0, 0.0, 0.0))];
        let bvh = Bvh::build(&boxes, &BuildParams::default()).unwrap();
        assert_eq!(bvh.nodes().len(), 3);
        let NodeKind::Internal { left, right, axis } = bvh.nodes()[0].kind else {
            panic!("root should be internal");
        };
        assert_eq!(axis, 0);
        let (l, r) = (bvh.nodes()[left as usize], bvh.nodes()[right as usize]);
        assert!(matches!(l.kind, NodeKind::Leaf { count: 1, .. }));
        assert!(matches!(r.kind, NodeKind::Leaf { count: 1, .. }));
        assert!(l.bounds.hi.x < r.bounds.lo.x);
        check_invariants(&bvh, &boxes);
    }

    #[test]
    fn errors() {
        assert_eq!(
            Bvh::build(&[], &BuildParams::default()).unwrap_err(),
            BuildError::NoPrimitives
        );
        let bad = [unit_box(Vec3::ZERO), Aabb::new(Vec3::ZERO, Vec3::new(f64::NAN, 1.0, 1.0))];
        assert_eq!(
            Bvh::build(&bad, &BuildParams::default()).unwrap_err(),
            BuildError::NonFiniteBounds { index: 1 }
        );
        let mut bvh = Bvh::build(&bad[..1], &BuildParams::default()).unwrap();
        assert!(matches!(
            bvh.refit(&[]),
            Err(BuildError::PrimitiveCountMismatch { expected: 1, actual: 0 })
        ));
    }

    #[test]
    fn identical_boxes_still_bounded_depth() {
        let boxes = vec![unit_box(Vec3::ZERO); 1000];
        for q in [BuildQuality::Fast, BuildQuality::Balanced] {
            let bvh = Bvh::build(&boxes, &BuildParams::with_quality(q)).unwrap();
            check_invariants(&bvh, &boxes);
            assert!(bvh.depth() <= 10);
        }
    }

    #[test]
    fn pathological_sah_input_respects_depth_limit() {
        // Exponentially spaced boxes tempt SAH into peeling one primitive per level.
        let boxes: Vec<Aabb> = (0..300)
            .map(|i| {
                let x = 1.1f64.powi(i);
                Aabb::new(Vec3::new(x, 0.0, 0.0), Vec3::new(x * 1.0001, 1e-3, 1e-3))
            })
            .collect();
        let bvh = Bvh::build(&boxes, &BuildParams::default()).unwrap();
        check_invariants(&bvh, &boxes);
    }

    #[test]
    fn refit_translates_boxes() {
        let boxes: Vec<Aabb> = (0..50)
            .map(|i| unit_box(Vec3::new(i as f64 * 1.5, (i % 7) as f64, (i % 3) as f64)))
            .collect();
        let mut bvh = Bvh::build(&boxes, &BuildParams::default()).unwrap();
        let before: Vec<BvhNode> = bvh.nodes().to_vec();
        bvh.refit(&boxes).unwrap();
        assert_eq!(before, bvh.nodes());

        let shift = Vec3::new(5.0, 0.0, 0.0);
        let moved: Vec<Aabb> = boxes.iter().map(|b| Aabb::new(b.lo + shift, b.hi + shift)).collect();
        bvh.refit(&moved).unwrap();
        for (a, b) in before.iter().zip(bvh.nodes()) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.bounds.lo + shift, b.bounds.lo);
            assert_eq!(a.bounds.hi + shift, b.bounds.hi);
        }
        check_invariants(&bvh, &moved);
    }
}
