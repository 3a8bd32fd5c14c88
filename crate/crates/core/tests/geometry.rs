mod common;

use common::*;
use proptest::prelude::*;
use rtcore::geometry::*;

fn vec3(r: std::ops::Range<f64>) -> impl Strategy<Value = Vec3> {
    (r.clone(), r.clone(), r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn edge_values(o: Vec3, d: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<[f64; 3]> {
    let n = (v1 - v0).cross(v2 - v1);
    let t = n.dot(v0 - o) / n.dot(d);
    if !t.is_finite() {
        return None;
    }
    let p = o + d * t;
    Some([
        (v1 - v0).cross(p - v0).dot(n),
        (v2 - v1).cross(p - v1).dot(n),
        (v0 - v2).cross(p - v2).dot(n),
    ])
}

#[test]
fn triangle_matches_moller_trumbore() {
    let mut rng = TestRng::new(42);
    let (mut compared, mut hits) = (0, 0);
    for _ in 0..100_000 {
        let (v0, v1, v2) = (rng.vec_in(-1.0, 1.0), rng.vec_in(-1.0, 1.0), rng.vec_in(-1.0, 1.0));
        let o = rng.vec_in(-3.0, 3.0);
        let d = (rng.vec_in(-0.5, 0.5) - o).normalize();
        let ray = Ray::segment(o, d, 0.0, 1e9);
        let oracle = moller_trumbore(o, d, v0, v1, v2).filter(|&(t, _, _)| t >= 0.0);
        if let Some((_, u, v)) = oracle {
            if u.min(v).min(1.0 - u - v) < 1e-9 {
                continue;
            }
        }
        compared += 1;
        let got = intersect_ray_triangle(&ray, v0, v1, v2);
        assert_eq!(got.is_some(), oracle.is_some(), "{o:?} {d:?} {v0:?} {v1:?} {v2:?}");
        if let (Some(h), Some((t, u, v))) = (got, oracle) {
            hits += 1;
            assert!((h.t - t).abs() <= 1e-5 * (1.0 + t.abs()));
            assert!((h.bary_u - u).abs() < 1e-6 && (h.bary_v - v).abs() < 1e-6);
        }
    }
    assert!(compared > 99_000 && hits > 10_000, "{compared} {hits}");
}

#[test]
fn slab_is_conservative_against_marching() {
    let mut rng = TestRng::new(7);
    let mut inside_found = 0;
    for _ in 0..100_000 {
        let c = rng.vec_in(-1.0, 1.0);
        let e = rng.vec_in(0.01, 0.6);
        let b = Aabb::new(c - e, c + e);
        let o = rng.vec_in(-2.0, 2.0);
        let mut d = rng.unit_vector();
        // Some axis-parallel rays to exercise infinite reciprocals.
        if rng.uniform() < 0.1 {
            d = Vec3::new(0.0, d.y, 0.0).normalize();
        }
        let ray = Ray::segment(o, d, 0.0, rng.range(0.0, 4.0));
        if intersect_ray_aabb(&ray, &b, d.recip()) {
            continue;
        }
        let steps = 10_000;
        for k in 0..=steps {
            let t = ray.t_min + (ray.t_max - ray.t_min) * k as f64 / steps as f64;
            if b.contains_point(ray.at(t), 0.0) {
                inside_found += 1;
                break;
            }
        }
    }
    assert_eq!(inside_found, 0);
}

#[test]
fn sphere_residual() {
    let mut rng = TestRng::new(3);
    let mut hits = 0;
    for _ in 0..10_000 {
        let s = SpherePrim::new(rng.vec_in(-1.0, 1.0), rng.range(0.1, 2.0));
        let o = rng.vec_in(-5.0, 5.0);
        let d = (s.center + rng.vec_in(-2.0, 2.0) - o).normalize();
        if let Some((t, n)) = intersect_ray_sphere(&Ray::new(o, d), &s) {
            hits += 1;
            let f = (o + d * t - s.center).length_squared() - s.radius * s.radius;
            assert!(f.abs() <= 1e-4 * s.radius * s.radius);
            assert!((n.length() - 1.0).abs() < 1e-9);
        }
    }
    assert!(hits > 1000);
}

#[test]
fn union_of_leaf_boxes_is_vertex_box() {
    let mesh = soup(3000, 77);
    let blas = rtcore::accel::Blas::from_mesh(mesh.clone(), &Default::default()).unwrap();
    let leaves = blas
        .bvh()
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, rtcore::accel::NodeKind::Leaf { .. }))
        .fold(Aabb::EMPTY, |acc, n| aabb_union(&acc, &n.bounds));
    let direct = mesh.vertices.iter().fold(Aabb::EMPTY, |mut acc, &v| {
        acc.grow(v);
        acc
    });
    assert_eq!(leaves, direct);
    assert_eq!(blas.bounds(), direct);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn hit_point_reconstructs(v0 in vec3(-2.0..2.0), v1 in vec3(-2.0..2.0), v2 in vec3(-2.0..2.0),
                              o in vec3(-4.0..4.0), target in vec3(-1.0..1.0)) {
        let d = target - o;
        prop_assume!(d.length() > 1e-3);
        let ray = Ray::new(o, d.normalize());
        if let Some(h) = intersect_ray_triangle(&ray, v0, v1, v2) {
            let a = ray.at(h.t);
            let b = v0 * (1.0 - h.bary_u - h.bary_v) + v1 * h.bary_u + v2 * h.bary_v;
            prop_assert!((a - b).length() <= 1e-4 * (1.0 + h.t.abs()));
            prop_assert!(h.t.is_finite() && h.bary_u.is_finite() && h.bary_v.is_finite() && h.normal.is_finite());
            prop_assert!(h.bary_u >= 0.0 && h.bary_v >= 0.0 && h.bary_u + h.bary_v <= 1.0 + 1e-12);
            prop_assert!((h.normal.length() - 1.0).abs() < 1e-4);
            prop_assert!(intersect_ray_aabb(&ray, &aabb_of_triangle(v0, v1, v2), ray.direction.recip()));
        }
    }

    #[test]
    fn interior_hits_survive_small_perturbation(v0 in vec3(-2.0..2.0), v1 in vec3(-2.0..2.0), v2 in vec3(-2.0..2.0),
                                                w in (0.05f64..0.9, 0.05f64..1.0), o in vec3(-4.0..4.0),
                                                jitter in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let (wu, wv) = (w.0, w.1 * (0.95 - w.0));
        let target = v0 * (1.0 - wu - wv) + v1 * wu + v2 * wv;
        let d = target - o;
        prop_assume!(d.length() > 1e-2);
        let ray = Ray::new(o, d.normalize());
        let scale = (v1 - v0).length().max((v2 - v0).length()).max(1.0);
        let eps = 1e-6 * scale;
        let Some(vals) = edge_values(o, ray.direction, v0, v1, v2) else { return Ok(()); };
        let n2 = (v1 - v0).cross(v2 - v1).length_squared();
        prop_assume!(n2 > 1e-6);
        prop_assume!(vals.iter().all(|&e| e > eps * n2.sqrt() * scale));
        prop_assume!(ray.direction.dot((v1 - v0).cross(v2 - v1)).abs() > 1e-3 * n2.sqrt());
        let base = intersect_ray_triangle(&ray, v0, v1, v2);
        prop_assert!(base.is_some());
        let j = |i: usize| Vec3::new(jitter[i], jitter[i + 1], jitter[i + 2]) * (eps / 10.0);
        let moved = intersect_ray_triangle(&ray, v0 + j(0), v1 + j(3), v2 + j(6));
        prop_assert_eq!(base.is_some(), moved.is_some());
    }

    #[test]
    fn never_nan(v0 in vec3(-1.0..1.0), o in vec3(-2.0..2.0), d in vec3(-1.0..1.0)) {
        // Degenerate and parallel configurations included.
        let ray = Ray::new(o, d);
        for (a, b, c) in [(v0, v0, v0), (v0, v0 + d, v0 + d * 2.0), (v0, v0 + Vec3::new(1.0, 0.0, 0.0), v0 + d)] {
            if let Some(h) = intersect_ray_triangle(&ray, a, b, c) {
                prop_assert!(h.t.is_finite() && h.normal.is_finite() && h.bary_u.is_finite() && h.bary_v.is_finite());
            }
        }
        if let Some((t, n)) = intersect_ray_sphere(&ray, &SpherePrim::new(v0, 0.5)) {
            prop_assert!(t.is_finite() && n.is_finite());
        }
        prop_assert!(triangle_area(v0, o, d) >= 0.0);
    }
}
