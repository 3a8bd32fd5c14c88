//! Vector math, primitives and analytic ray/primitive intersection tests.

use std::ops::{Add, AddAssign, Div, Index, Mul, MulAssign, Neg, Sub};

/// Default upper bound of a ray's parametric interval.
pub const T_MAX_DEFAULT: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::splat(0.0);
    pub const ONE: Vec3 = Vec3::splat(1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    /// Unit vector in the same direction. A zero vector yields non-finite components.
    #[inline]
    pub fn normalize(self) -> Vec3 {
        self / self.length()
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn recip(self) -> Vec3 {
        Vec3::new(1.0 / self.x, 1.0 / self.y, 1.0 / self.z)
    }

    #[inline]
    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    #[inline]
    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    /// Index of the largest component (ties resolve to the lowest axis).
    pub fn max_axis(self) -> usize {
        if self.x >= self.y && self.x >= self.z {
            0
        } else if self.y >= self.z {
            1
        } else {
            2
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
        a * (1.0 - t) + b * t
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    #[inline]
    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Componentwise product.
impl Mul for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }
}

impl MulAssign for Vec3 {
    #[inline]
    fn mul_assign(&mut self, o: Vec3) {
        *self = *self * o;
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// A ray with a closed parametric interval `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Ray over the default interval `[0, 1e30]`.
    #[inline]
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self::segment(origin, direction, 0.0, T_MAX_DEFAULT)
    }

    #[inline]
    pub fn segment(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Self {
        debug_assert!(direction != Vec3::ZERO, "zero ray direction");
        debug_assert!(t_min < t_max, "empty ray interval [{t_min}, {t_max}]");
        Ray {
            origin,
            direction,
            t_min,
            t_max,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.t_min <= t && t <= self.t_max
    }
}

/// Vertex indices of one triangle in a [`TriangleMesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub indices: [u32; 3],
}

impl Triangle {
    pub fn new(i0: u32, i1: u32, i2: u32) -> Self {
        Triangle {
            indices: [i0, i1, i2],
        }
    }
}

/// An indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<Triangle>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<Triangle>) -> Self {
        TriangleMesh {
            vertices,
            triangles,
        }
    }

    #[inline]
    pub fn triangle_vertices(&self, prim: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[prim].indices;
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }
}

/// Axis-aligned bounding box. The empty box has `lo = +inf`, `hi = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Default for Aabb {
    fn default() -> Self {
        Aabb::EMPTY
    }
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        lo: Vec3::splat(f64::INFINITY),
        hi: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        Aabb { lo, hi }
    }

    pub fn from_point(p: Vec3) -> Self {
        Aabb { lo: p, hi: p }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x || self.lo.y > self.hi.y || self.lo.z > self.hi.z
    }

    /// True for a non-empty box whose corners are all finite.
    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && !self.is_empty()
    }

    #[inline]
    pub fn grow(&mut self, p: Vec3) {
        self.lo = self.lo.min(p);
        self.hi = self.hi.max(p);
    }

    #[inline]
    pub fn union(&self, o: &Aabb) -> Aabb {
        aabb_union(self, o)
    }

    pub fn extent(&self) -> Vec3 {
        self.hi - self.lo
    }

    pub fn centroid(&self) -> Vec3 {
        (self.lo + self.hi) * 0.5
    }

    /// Surface area; zero for the empty box.
    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn contains_point(&self, p: Vec3, slack: f64) -> bool {
        p.x >= self.lo.x - slack
            && p.y >= self.lo.y - slack
            && p.z >= self.lo.z - slack
            && p.x <= self.hi.x + slack
            && p.y <= self.hi.y + slack
            && p.z <= self.hi.z + slack
    }

    pub fn contains_box(&self, o: &Aabb, slack: f64) -> bool {
        o.is_empty() || (self.contains_point(o.lo, slack) && self.contains_point(o.hi, slack))
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (l, h) = (self.lo, self.hi);
        [
            Vec3::new(l.x, l.y, l.z),
            Vec3::new(h.x, l.y, l.z),
            Vec3::new(l.x, h.y, l.z),
            Vec3::new(h.x, h.y, l.z),
            Vec3::new(l.x, l.y, h.z),
            Vec3::new(h.x, l.y, h.z),
            Vec3::new(l.x, h.y, h.z),
            Vec3::new(h.x, h.y, h.z),
        ]
    }
}

pub fn aabb_of_triangle(v0: Vec3, v1: Vec3, v2: Vec3) -> Aabb {
    Aabb::new(v0.min(v1).min(v2), v0.max(v1).max(v2))
}

pub fn aabb_union(a: &Aabb, b: &Aabb) -> Aabb {
    Aabb::new(a.lo.min(b.lo), a.hi.max(b.hi))
}

/// A sphere used as the reference custom primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePrim {
    pub center: Vec3,
    pub radius: f64,
}

impl SpherePrim {
    pub fn new(center: Vec3, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        SpherePrim { center, radius }
    }

    pub fn bounds(&self) -> Aabb {
        let r = Vec3::splat(self.radius);
        Aabb::new(self.center - r, self.center + r)
    }
}

/// Intersection record produced by scene traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub prim_index: usize,
    /// `None` when the primitive was intersected outside of a scene.
    pub instance_index: Option<usize>,
    /// Unit geometric normal.
    pub normal: Vec3,
    pub bary_u: f64,
    pub bary_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleHit {
    pub t: f64,
    pub bary_u: f64,
    pub bary_v: f64,
    pub normal: Vec3,
}

/// Plane-then-edge-tests intersection.
///
/// The plane parameter is `t = n·(v0 - o) / n·d` with `n = (v1 - v0) × (v2 - v1)`.
/// The hit point must lie on the nonnegative side of all three edge functions,
/// which accepts both windings and counts points on an edge as hits.
///
/// Barycentrics are weights of `v1` and `v2`, so that the hit point is
/// `(1 - u - v)·v0 + u·v1 + v·v2`.
#[inline]
pub fn intersect_ray_triangle(ray: &Ray, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<TriangleHit> {
    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;
    let n = e0.cross(e1);
    let t = (v0 - ray.origin).dot(n) / n.dot(ray.direction);
    // Rejects NaN and +-inf from a degenerate triangle or a parallel ray.
    if !t.is_finite() || !ray.contains(t) {
        return None;
    }
    let p = ray.at(t);
    let a = n.dot(e0.cross(p - v0));
    let b = n.dot(e1.cross(p - v1));
    let c = n.dot(e2.cross(p - v2));
    if a < 0.0 || b < 0.0 || c < 0.0 {
        return None;
    }
    let sum = a + b + c;
    if !(sum > 0.0) {
        return None;
    }
    // a, b, c are proportional to the sub-areas opposite v2, v0 and v1.
    Some(TriangleHit {
        t,
        bary_u: c / sum,
        bary_v: a / sum,
        normal: n.normalize(),
    })
}

/// Slab test. `inv_dir` must be the componentwise reciprocal of the ray
/// direction. Rays lying exactly on a slab boundary count as hits.
#[inline]
pub fn intersect_ray_aabb(ray: &Ray, bounds: &Aabb, inv_dir: Vec3) -> bool {
    slab_entry(ray, bounds, inv_dir).is_some()
}

/// Entry distance of the slab test, clamped to `t_min`; `None` on a miss.
#[inline]
pub(crate) fn slab_entry(ray: &Ray, bounds: &Aabb, inv_dir: Vec3) -> Option<f64> {
    let mut t_near = ray.t_min;
    let mut t_far = ray.t_max;
    for axis in 0..3 {
        let o = ray.origin[axis];
        let (lo, hi) = (bounds.lo[axis], bounds.hi[axis]);
        if ray.direction[axis] == 0.0 {
            // Parallel to this slab: either always inside it or never.
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let inv = inv_dir[axis];
        let t0 = (lo - o) * inv;
        let t1 = (hi - o) * inv;
        let (t0, t1) = if t0 > t1 { (t1, t0) } else { (t0, t1) };
        // Widen the exit slightly so rounding never culls a grazing ray.
        let t1 = t1 + t1.abs() * (4.0 * f64::EPSILON);
        if t0 > t_near {
            t_near = t0;
        }
        if t1 < t_far {
            t_far = t1;
        }
        if t_near > t_far {
            return None;
        }
    }
    Some(t_near)
}

/// Smallest root of `|o + t·d - c|² = r²` inside the ray interval.
pub fn intersect_ray_sphere(ray: &Ray, sphere: &SpherePrim) -> Option<(f64, Vec3)> {
    let oc = ray.origin - sphere.center;
    let a = ray.direction.length_squared();
    let half_b = oc.dot(ray.direction);
    let r2 = sphere.radius * sphere.radius;
    // Discriminant from the perpendicular distance to the center, which
    // avoids cancellation for distant origins.
    let perp = oc - ray.direction * (half_b / a);
    let disc = a * (r2 - perp.length_squared());
    if !(disc >= 0.0) {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let q = -half_b - sqrt_disc.copysign(half_b);
    let c = oc.length_squared() - r2;
    let (mut t0, mut t1) = (q / a, c / q);
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    let t = [t0, t1]
        .into_iter()
        .find(|&t| t.is_finite() && ray.contains(t))?;
    let normal = (ray.at(t) - sphere.center) / sphere.radius;
    Some((t, normal))
}

pub fn triangle_area(v0: Vec3, v1: Vec3, v2: Vec3) -> f64 {
    0.5 * (v1 - v0).cross(v2 - v0).length()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn triangle_axis_aligned_hit() {
        let [a, b, c] = tri();
        let ray = Ray::segment(Vec3::new(0.25, 0.25, -1.0), Vec3::new(0.0, 0.0, 1.0), 0.0, 1e9);
        let hit = intersect_ray_triangle(&ray, a, b, c).unwrap();
        assert_eq!(hit.t, 1.0);
        assert!((hit.bary_u - 0.25).abs() < 1e-12);
        assert!((hit.bary_v - 0.25).abs() < 1e-12);
        assert_eq!(hit.normal, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn triangle_parallel_ray_misses() {
        let [a, b, c] = tri();
        let ray = Ray::segment(Vec3::new(0.25, 0.25, -1.0), Vec3::new(1.0, 0.0, 0.0), 0.0, 1e9);
        assert!(intersect_ray_triangle(&ray, a, b, c).is_none());
        // Parallel and inside the plane: 0/0.
        let ray = Ray::new(Vec3::new(-1.0, 0.25, 0.0), Vec3::new(1.0, 0.0, 0.0));
        assert!(intersect_ray_triangle(&ray, a, b, c).is_none());
    }

    #[test]
    fn triangle_two_sided_and_edges() {
        let [a, b, c] = tri();
        let down = Ray::new(Vec3::new(0.25, 0.25, 1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(intersect_ray_triangle(&down, a, b, c).is_some());
        assert!(intersect_ray_triangle(&down, a, c, b).is_some());
        // Exactly on the edge v0v1.
        let edge = Ray::new(Vec3::new(0.5, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(intersect_ray_triangle(&edge, a, b, c).is_some());
        // Interval excludes the plane.
        let short = Ray::segment(Vec3::new(0.25, 0.25, 1.0), Vec3::new(0.0, 0.0, -1.0), 0.0, 0.5);
        assert!(intersect_ray_triangle(&short, a, b, c).is_none());
    }

    #[test]
    fn degenerate_triangle_never_hits() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        let ray = Ray::new(Vec3::ZERO, p);
        assert!(intersect_ray_triangle(&ray, Vec3::ZERO, p, p * 2.0).is_none());
        assert!(intersect_ray_triangle(&ray, p, p, p).is_none());
    }

    #[test]
    fn aabb_slab_examples() {
        let b = Aabb::new(Vec3::splat(-1.0), Vec3::splat(1.0));
        let d = Vec3::new(0.0, 0.0, 1.0);
        let r = Ray::new(Vec3::new(0.0, 0.0, -2.0), d);
        assert!(intersect_ray_aabb(&r, &b, d.recip()));
        let r = Ray::new(Vec3::new(5.0, 0.0, -2.0), d);
        assert!(!intersect_ray_aabb(&r, &b, d.recip()));
        // Lying on the x = 1 face.
        let r = Ray::new(Vec3::new(1.0, 0.0, -2.0), d);
        assert!(intersect_ray_aabb(&r, &b, d.recip()));
        // Flat box from a triangle in the z = 0 plane.
        let [a, bb, c] = tri();
        let flat = aabb_of_triangle(a, bb, c);
        let r = Ray::new(Vec3::new(0.2, 0.2, -1.0), d);
        assert!(intersect_ray_aabb(&r, &flat, d.recip()));
        // Box behind the ray.
        let r = Ray::new(Vec3::new(0.0, 0.0, 2.0), d);
        assert!(!intersect_ray_aabb(&r, &b, d.recip()));
    }

    #[test]
    fn sphere_examples() {
        let s = SpherePrim::new(Vec3::ZERO, 1.0);
        let d = Vec3::new(0.0, 0.0, 1.0);
        let (t, n) = intersect_ray_sphere(&Ray::new(Vec3::new(0.0, 0.0, -3.0), d), &s).unwrap();
        assert_eq!(t, 2.0);
        assert_eq!(n, Vec3::new(0.0, 0.0, -1.0));
        assert!(intersect_ray_sphere(&Ray::new(Vec3::new(0.0, 2.0, -3.0), d), &s).is_none());
        // From inside the far root is returned.
        let (t, n) = intersect_ray_sphere(&Ray::new(Vec3::ZERO, d), &s).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!(n, d);
        // Both roots behind.
        assert!(intersect_ray_sphere(&Ray::new(Vec3::new(0.0, 0.0, 3.0), d), &s).is_none());
    }

    #[test]
    fn area_examples() {
        let [a, b, c] = tri();
        assert_eq!(triangle_area(a, b, c), 0.5);
        assert_eq!(triangle_area(a, b * 2.0, c * 2.0), 2.0);
        assert_eq!(
            triangle_area(Vec3::ZERO, Vec3::splat(1.0), Vec3::splat(2.0)),
            0.0
        );
    }

    #[test]
    fn aabb_examples() {
        let [a, b, c] = tri();
        let bb = aabb_of_triangle(a, b, c);
        assert_eq!(bb.lo, Vec3::ZERO);
        assert_eq!(bb.hi, Vec3::new(1.0, 1.0, 0.0));
        assert_eq!(aabb_union(&Aabb::EMPTY, &bb), bb);
        assert_eq!(aabb_union(&bb, &Aabb::EMPTY), bb);
        assert!(Aabb::EMPTY.is_empty());
        assert_eq!(Aabb::EMPTY.surface_area(), 0.0);
    }
}
