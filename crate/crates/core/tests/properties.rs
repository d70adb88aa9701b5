use hypermetric::maps;
use hypermetric::metrics::{self, MetricParams};
use hypermetric::moebius::{self, MoebiusMap};
use hypermetric::{distance_to_set, Domain, Point, PointSet};
use proptest::prelude::*;

fn disk_point() -> impl Strategy<Value = Point> {
    (0.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(s, t)| {
        // depth log-uniform in [1e-6, 1]
        let r = 1.0 - 10f64.powf(-6.0 * s);
        Point::new(vec![r * t.cos(), r * t.sin()]).unwrap()
    })
}

fn upper_point() -> impl Strategy<Value = Point> {
    (-3.0f64..3.0, -6.0f64..0.5).prop_map(|(a, e)| Point::new(vec![a, 10f64.powf(e)]).unwrap())
}

fn center() -> impl Strategy<Value = Point> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| Point::new(vec![r * t.cos(), r * t.sin()]).unwrap())
}

fn c_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(5.0), 0.1f64..10.0]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn metrics_are_symmetric(x in disk_point(), y in disk_point(), c in c_value()) {
        let ball = Domain::ball(2).unwrap();
        let p = MetricParams::new(c).unwrap();
        let h = metrics::h_metric(&ball, p, &x, &y).unwrap();
        prop_assert!((h - metrics::h_metric(&ball, p, &y, &x).unwrap()).abs() <= 1e-14 * h.max(1.0));
        let j = metrics::j_metric(&ball, &x, &y).unwrap();
        prop_assert!((j - metrics::j_metric(&ball, &y, &x).unwrap()).abs() <= 1e-14 * j.max(1.0));
        let r = metrics::rho_ball(&x, &y).unwrap();
        prop_assert!((r - metrics::rho_ball(&y, &x).unwrap()).abs() <= 1e-14 * r.max(1.0));
        prop_assert_eq!(metrics::h_metric(&ball, p, &x, &x).unwrap(), 0.0);
        prop_assert_eq!(metrics::rho_ball(&x, &x).unwrap(), 0.0);
        prop_assert!(x == y || (h > 0.0 && j > 0.0 && r > 0.0));
    }

    #[test]
    fn halfspace_rho_is_symmetric(x in upper_point(), y in upper_point()) {
        let r = metrics::rho_halfspace(&x, &y).unwrap();
        prop_assert!((r - metrics::rho_halfspace(&y, &x).unwrap()).abs() <= 1e-14 * r.max(1.0));
    }

    #[test]
    fn h_increases_with_c(x in disk_point(), y in disk_point(), c in 0.1f64..10.0) {
        prop_assume!(x != y);
        let ball = Domain::ball(2).unwrap();
        let lo = metrics::h_metric(&ball, MetricParams::new(c).unwrap(), &x, &y).unwrap();
        let hi = metrics::h_metric(&ball, MetricParams::new(c * 1.01).unwrap(), &x, &y).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn h_triangle_holds_for_c_two(x in disk_point(), y in disk_point(), z in disk_point()) {
        let ball = Domain::ball(2).unwrap();
        let p = MetricParams::default();
        let h = |a: &Point, b: &Point| metrics::h_metric(&ball, p, a, b).unwrap();
        prop_assert!(h(&x, &z) + h(&z, &y) - h(&x, &y) >= -1e-9);
    }

    #[test]
    fn boundary_distance_is_lipschitz(x in disk_point(), y in disk_point()) {
        let ball = Domain::ball(2).unwrap();
        let gap = (ball.boundary_distance(&x).unwrap() - ball.boundary_distance(&y).unwrap()).abs();
        prop_assert!(gap <= x.distance(&y).unwrap() + 1e-12);
        let set = PointSet::new(&ball, vec![Point::new(vec![1.5, 0.0]).unwrap(), Point::new(vec![0.0, -2.0]).unwrap()]).unwrap();
        let gap = (distance_to_set(&x, &set).unwrap() - distance_to_set(&y, &set).unwrap()).abs();
        prop_assert!(gap <= x.distance(&y).unwrap() + 1e-12);
    }

    #[test]
    fn moebius_maps_are_isometries(x in disk_point(), y in disk_point(), a in center()) {
        let rho = metrics::rho_ball(&x, &y).unwrap();
        let g = MoebiusMap::ball_automorphism(a).unwrap();
        let moved = metrics::rho_ball(&g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
        prop_assert!((moved - rho).abs() <= 1e-9 * rho.max(1.0), "{} vs {}", moved, rho);
        let cayley = MoebiusMap::ball_to_half_space(2).unwrap();
        let half = metrics::rho_halfspace(&cayley.apply(&x).unwrap(), &cayley.apply(&y).unwrap()).unwrap();
        prop_assert!((half - rho).abs() <= 1e-9 * rho.max(1.0), "{} vs {}", half, rho);
    }

    #[test]
    fn moebius_distortion_is_at_most_two(x in disk_point(), y in disk_point(), a in center(), c in prop_oneof![Just(1.0), Just(2.0), Just(5.0)]) {
        let ball = Domain::ball(2).unwrap();
        let half = Domain::half_space(2).unwrap();
        let p = MetricParams::new(c).unwrap();
        let before = metrics::h_metric(&ball, p, &x, &y).unwrap();
        let g = MoebiusMap::ball_automorphism(a).unwrap();
        let after = metrics::h_metric(&ball, p, &g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
        prop_assert!(after <= 2.0 * before + 1e-10);
        let cayley = MoebiusMap::ball_to_half_space(2).unwrap();
        let after = metrics::h_metric(&half, p, &cayley.apply(&x).unwrap(), &cayley.apply(&y).unwrap()).unwrap();
        prop_assert!(after <= 2.0 * before + 1e-10);
    }

    #[test]
    fn absolute_ratio_is_moebius_invariant(pts in prop::collection::vec(disk_point(), 4), a in center()) {
        let r = match moebius::absolute_ratio(&pts[0], &pts[1], &pts[2], &pts[3]) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        prop_assume!(r.is_finite() && r < 1e6 && r > 1e-6);
        for map in [MoebiusMap::ball_automorphism(a.clone()).unwrap(), MoebiusMap::ball_to_half_space(2).unwrap(), MoebiusMap::Identity] {
            let img: Vec<Point> = pts.iter().map(|p| map.apply(p).unwrap()).collect();
            let s = moebius::absolute_ratio(&img[0], &img[1], &img[2], &img[3]).unwrap();
            prop_assert!((s - r).abs() <= 1e-9 * r, "{} vs {}", s, r);
        }
    }

    #[test]
    fn u_quantity_ignores_c(x in disk_point(), y in disk_point()) {
        let ball = Domain::ball(2).unwrap();
        let u1 = maps::u_quantity(&ball, MetricParams::new(1.0).unwrap(), &x, &y).unwrap();
        for c in [2.0, 5.0] {
            let u = maps::u_quantity(&ball, MetricParams::new(c).unwrap(), &x, &y).unwrap();
            prop_assert!((u - u1).abs() <= 1e-12 * u1.max(1.0));
        }
    }
}
