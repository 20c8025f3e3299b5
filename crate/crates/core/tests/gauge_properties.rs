use std::sync::{Arc, OnceLock};

use mkt_core::gauge::{Gauge, GaugeConstants, QuarticBlend, Randers};
use mkt_core::linalg::sym_eigenvalues;
use nalgebra::{Matrix2, Matrix3, SVector, Vector2, Vector3};
use proptest::prelude::*;

fn gauges2() -> &'static Vec<(Gauge<2>, GaugeConstants)> {
    static CELL: OnceLock<Vec<(Gauge<2>, GaugeConstants)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let gs = vec![
            Gauge::euclidean(),
            Gauge::ellipsoidal(Matrix2::new(4.0, 0.0, 0.0, 1.0)).unwrap(),
            Gauge::ellipsoidal(Matrix2::new(2.0, 0.7, 0.7, 1.5)).unwrap(),
            Gauge::custom(Arc::new(
                Randers::new(Matrix2::new(2.0, 0.3, 0.3, 1.0), Vector2::new(0.3, -0.2)).unwrap(),
            ))
            .unwrap(),
            Gauge::custom(Arc::new(QuarticBlend { weight: 0.5 })).unwrap(),
        ];
        gs.into_iter()
            .map(|g| {
                let c = g.constants(512).unwrap();
                (g, c)
            })
            .collect()
    })
}

fn gauges3() -> &'static Vec<(Gauge<3>, GaugeConstants)> {
    static CELL: OnceLock<Vec<(Gauge<3>, GaugeConstants)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let gs = vec![
            Gauge::euclidean(),
            Gauge::ellipsoidal(Matrix3::new(3.0, 0.5, 0.0, 0.5, 2.0, 0.2, 0.0, 0.2, 1.0)).unwrap(),
            Gauge::custom(Arc::new(
                Randers::new(Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 1.5)), Vector3::new(0.2, 0.1, -0.3))
                    .unwrap(),
            ))
            .unwrap(),
            Gauge::custom(Arc::new(QuarticBlend { weight: 0.4 })).unwrap(),
        ];
        gs.into_iter()
            .map(|g| {
                let c = g.constants(2048).unwrap();
                (g, c)
            })
            .collect()
    })
}

fn vec2() -> impl Strategy<Value = Vector2<f64>> {
    (-5.0..5.0f64, -5.0..5.0f64)
        .prop_filter("nonzero", |(a, b)| a.hypot(*b) > 1e-3)
        .prop_map(|(a, b)| Vector2::new(a, b))
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
        .prop_filter("nonzero", |(a, b, c)| (a * a + b * b + c * c).sqrt() > 1e-3)
        .prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn check_homogeneity<const D: usize>(g: &Gauge<D>, xi: &SVector<f64, D>, t: f64) -> Result<(), TestCaseError> {
    let r = g.eval(xi);
    prop_assert!((g.eval(&(xi * t)) - t * r).abs() <= 1e-12 * r * t.max(1.0));
    let (g1, g2) = (g.grad(xi).unwrap(), g.grad(&(xi * t)).unwrap());
    prop_assert!((g1 - g2).norm() <= 1e-8 * g1.norm());
    let (h1, h2) = (g.hess(xi).unwrap(), g.hess(&(xi * t)).unwrap());
    prop_assert!((h1 / t - h2).norm() <= 1e-8 * (h1 / t).norm().max(1e-12));
    Ok(())
}

fn check_euler<const D: usize>(g: &Gauge<D>, xi: &SVector<f64, D>) -> Result<(), TestCaseError> {
    let r = g.eval(xi);
    prop_assert!((g.grad(xi).unwrap().dot(xi) - r).abs() <= 1e-8 * r.max(1.0));
    let h = g.hess(xi).unwrap();
    prop_assert!((h * xi).norm() <= 1e-8 * (h.norm() * xi.norm()).max(1.0));
    Ok(())
}

fn check_bounds<const D: usize>(g: &Gauge<D>, c: &GaugeConstants, xi: &SVector<f64, D>) -> Result<(), TestCaseError> {
    let n = xi.norm();
    let r = g.eval(xi);
    let slack = 1e-9 * n;
    prop_assert!(c.c1 * n <= r + slack, "c1 bound {} > {}", c.c1 * n, r);
    prop_assert!(r <= c.c2 * n + slack, "c2 bound {} > {}", r, c.c2 * n);
    let dg = g.gamma_grad(xi);
    prop_assert!(dg.norm() <= c.c2 * c.c3 * n * (1.0 + 1e-9));
    prop_assert!(dg.dot(xi) >= c.c1 * c.c1 * n * n * (1.0 - 1e-9));
    Ok(())
}

fn check_ellipticity<const D: usize>(
    g: &Gauge<D>,
    c: &GaugeConstants,
    xi: &SVector<f64, D>,
) -> Result<(), TestCaseError> {
    let ev = sym_eigenvalues(&g.gamma_hess(xi).unwrap());
    prop_assert!(ev[0] >= c.c6 * (1.0 - 1e-9), "min eigenvalue {} < c6 {}", ev[0], c.c6);
    Ok(())
}

fn check_fd_gradient<const D: usize>(g: &Gauge<D>, xi: &SVector<f64, D>) -> Result<(), TestCaseError> {
    let u = xi.normalize();
    let h = 1e-6;
    let grad = g.grad(&u).unwrap();
    for i in 0..D {
        let mut e = SVector::<f64, D>::zeros();
        e[i] = h;
        let fd = (g.eval(&(u + e)) - g.eval(&(u - e))) / (2.0 * h);
        prop_assert!((fd - grad[i]).abs() <= 1e-6, "component {i}: fd {fd} vs {}", grad[i]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn homogeneity_2d(k in 0usize..5, xi in vec2(), t in 1e-3..10.0f64) {
        check_homogeneity(&gauges2()[k].0, &xi, t)?;
    }

    #[test]
    fn homogeneity_3d(k in 0usize..4, xi in vec3(), t in 1e-3..10.0f64) {
        check_homogeneity(&gauges3()[k].0, &xi, t)?;
    }

    #[test]
    fn euler_and_kernel_2d(k in 0usize..5, xi in vec2()) {
        check_euler(&gauges2()[k].0, &xi)?;
    }

    #[test]
    fn euler_and_kernel_3d(k in 0usize..4, xi in vec3()) {
        check_euler(&gauges3()[k].0, &xi)?;
    }

    #[test]
    fn subadditive_2d(k in 0usize..5, xi in vec2(), eta in vec2(), lambda in 0.0..5.0f64) {
        let g = &gauges2()[k].0;
        prop_assert!(g.eval(&(xi + eta)) <= g.eval(&xi) + g.eval(&eta) + 1e-12 * (xi.norm() + eta.norm()));
        let ray = xi * lambda;
        prop_assert!(rel(g.eval(&(xi + ray)), g.eval(&xi) + g.eval(&ray)) <= 1e-10);
    }

    #[test]
    fn subadditive_3d(k in 0usize..4, xi in vec3(), eta in vec3()) {
        let g = &gauges3()[k].0;
        prop_assert!(g.eval(&(xi + eta)) <= g.eval(&xi) + g.eval(&eta) + 1e-12 * (xi.norm() + eta.norm()));
    }

    #[test]
    fn gradient_matches_finite_differences_2d(k in 0usize..5, xi in vec2()) {
        check_fd_gradient(&gauges2()[k].0, &xi)?;
    }

    #[test]
    fn gradient_matches_finite_differences_3d(k in 0usize..4, xi in vec3()) {
        check_fd_gradient(&gauges3()[k].0, &xi)?;
    }

    #[test]
    fn polar_duality_2d(k in 0usize..5, xi in vec2(), eta in vec2()) {
        let g = &gauges2()[k].0;
        let p = g.polar().unwrap();
        prop_assert!(xi.dot(&eta) <= g.eval(&xi) * p.eval(&eta) * (1.0 + 1e-9) + 1e-12);
        // equality is attained at the maximizer Dρ⁰(η)
        let u = p.grad(&eta).unwrap();
        prop_assert!(rel(u.dot(&eta), g.eval(&u) * p.eval(&eta)) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sandwich_and_regularity_2d(k in 0usize..5, xi in vec2()) {
        let (g, c) = &gauges2()[k];
        check_bounds(g, c, &xi)?;
        check_ellipticity(g, c, &xi)?;
    }

    #[test]
    fn sandwich_and_regularity_3d(k in 0usize..4, xi in vec3()) {
        let (g, c) = &gauges3()[k];
        check_bounds(g, c, &xi)?;
        check_ellipticity(g, c, &xi)?;
    }
}
