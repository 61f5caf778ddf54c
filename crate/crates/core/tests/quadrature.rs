use std::f64::consts::PI;

use hilbert_sharp::quadrature::{
    integrate, integrate_whole_line, integrate_whole_line_with, integrate_with, Local, Point, QuadConfig,
    SingularitySpec,
};
use proptest::prelude::*;

fn sing(pairs: &[(f64, f64)]) -> SingularitySpec {
    SingularitySpec::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect()).unwrap()
}

#[test]
fn inverse_square_root_on_unit_interval() {
    let r = integrate(&|u: f64| u.powf(-0.5), 0.0, 1.0, &sing(&[(0.0, -0.5)]), 1e-10).unwrap();
    assert!(r.converged);
    assert!((r.value - 2.0).abs() <= 1e-10);
    assert!(r.abs_error_est <= 1e-10);
}

#[test]
fn arcsine_density_with_offsets() {
    let s = sing(&[(0.0, -0.5), (1.0, -0.5)]);
    let f = Local(|p: Point| (-p.minus(1.0)).powf(-0.5) * p.x.powf(-0.5));
    let r = integrate(&f, 0.0, 1.0, &s, 1e-12).unwrap();
    assert!(r.converged);
    assert!((r.value - PI).abs() <= 1e-12);
}

#[test]
fn arcsine_density_with_plain_closure_loses_little() {
    let s = sing(&[(0.0, -0.5), (1.0, -0.5)]);
    let f = |u: f64| (1.0 - u).powf(-0.5) * u.powf(-0.5);
    let r = integrate(&f, 0.0, 1.0, &s, 1e-6).unwrap();
    assert!((r.value - PI).abs() <= 1e-6);
}

#[test]
fn algebraic_tail() {
    let r = integrate(
        &|u: f64| u.powf(-1.5),
        1.0,
        f64::INFINITY,
        &SingularitySpec::none(),
        1e-11,
    )
    .unwrap();
    assert!(r.converged);
    assert!((r.value - 2.0).abs() <= 1e-11);
}

#[test]
fn lower_tail_and_singular_finite_end() {
    // ∫_{-∞}^{-1} |u|^{-2} = 1, ∫_{-2}^{-1} (u+2)^{-1/2} du = 2
    let r = integrate(
        &|u: f64| u.powi(-2),
        f64::NEG_INFINITY,
        -1.0,
        &SingularitySpec::none(),
        1e-12,
    )
    .unwrap();
    assert!((r.value - 1.0).abs() <= 1e-12);
    let s = sing(&[(-2.0, -0.5)]);
    let f = Local(|p: Point| p.minus(-2.0).powf(-0.5));
    let r = integrate(&f, -2.0, -1.0, &s, 1e-12).unwrap();
    assert!((r.value - 2.0).abs() <= 1e-12);
}

#[test]
fn gaussian_over_the_line() {
    let r = integrate_whole_line(&|u: f64| (-u * u).exp(), &SingularitySpec::none(), 1e-12).unwrap();
    assert!(r.converged);
    assert!((r.value - PI.sqrt()).abs() <= 1e-12);
}

#[test]
fn kernel_integrand_reproduces_k0() {
    // min{1,|u|}^{1/2} |u|^{-1} |1+u|^{-1/2}
    let s = sing(&[(0.0, -0.5), (-1.0, -0.5)]);
    let f = Local(|p: Point| {
        let u = p.x.abs();
        u.min(1.0).sqrt() / u / p.minus(-1.0).abs().sqrt()
    });
    let r = integrate_whole_line(&f, &s, 1e-11).unwrap();
    let want = 4.0 * (1.0 + 2f64.sqrt()).ln() + 2.0 * PI;
    assert!(r.converged);
    assert!((r.value - want).abs() <= 1e-10, "{} vs {want}", r.value);
}

#[test]
fn odd_integrand_vanishes() {
    let f = |u: f64| u * (-u.abs()).exp() / (1.0 + u * u).sqrt();
    let r = integrate_whole_line(&f, &SingularitySpec::none(), 1e-12).unwrap();
    assert!(r.value.abs() <= 1e-12);
}

#[test]
fn wide_panels_keep_accuracy() {
    // Far singular point: mass near the origin, kink at 1e200.
    let s = sing(&[(0.0, -0.5), (1e200, -0.3)]);
    let f = Local(|p: Point| {
        let d = p.minus(1e200).abs();
        p.x.abs().powf(-0.5) * (-p.x.abs()).exp() * (d / 1e200).powf(-0.3)
    });
    let r = integrate(&f, 0.0, f64::INFINITY, &s, 1e-11).unwrap();
    assert!(r.converged);
    assert!((r.value - PI.sqrt()).abs() <= 1e-10, "{}", r.value);
}

#[test]
fn transform_consistency() {
    let g = |u: f64| u.powf(-1.3) / (1.0 + u.powi(-2)).sqrt();
    let a = integrate(&g, 1.0, f64::INFINITY, &SingularitySpec::none(), 1e-12).unwrap();
    let h = |v: f64| g(1.0 / v) / (v * v);
    // h(v) ~ v^{-0.7} at 0
    let b = integrate(&h, 0.0, 1.0, &sing(&[(0.0, -0.7)]), 1e-12).unwrap();
    assert!((a.value - b.value).abs() <= a.abs_error_est + b.abs_error_est + 1e-12);
}

#[test]
fn tolerance_halving_corpus() {
    type F = Box<dyn Fn(f64) -> f64 + Sync>;
    let corpus: Vec<(F, f64, f64, SingularitySpec)> = vec![
        (Box::new(|u: f64| u.powf(-0.5)), 0.0, 1.0, sing(&[(0.0, -0.5)])),
        (
            Box::new(|u: f64| (u * 3.0).sin().abs()),
            0.0,
            2.0,
            SingularitySpec::none(),
        ),
        (
            Box::new(|u: f64| 1.0 / (1.0 + u * u)),
            0.0,
            f64::INFINITY,
            SingularitySpec::none(),
        ),
        (
            Box::new(|u: f64| u.powf(0.3) * (-u).exp()),
            0.0,
            f64::INFINITY,
            sing(&[(0.0, 0.3)]),
        ),
    ];
    for (f, a, b, s) in &corpus {
        for tol in [1e-6, 1e-9] {
            let r1 = integrate(f.as_ref(), *a, *b, s, tol).unwrap();
            let r2 = integrate(f.as_ref(), *a, *b, s, tol / 2.0).unwrap();
            assert!((r1.value - r2.value).abs() <= r1.abs_error_est.max(1e-15));
        }
    }
}

#[test]
fn invalid_specs_rejected() {
    assert!(SingularitySpec::at(0.0, -1.2).is_err());
    assert!(SingularitySpec::at(f64::INFINITY, 0.0).is_err());
    let s = sing(&[(3.0, -0.5)]);
    assert!(integrate(&|u: f64| u, 0.0, 1.0, &s, 1e-8).is_err());
    assert!(integrate(&|u: f64| u, 1.0, 0.0, &SingularitySpec::none(), 1e-8).is_err());
}

#[test]
fn exhausted_budget_is_reported() {
    let cfg = QuadConfig {
        max_evals: 100,
        ..QuadConfig::default()
    };
    let r = integrate_with(
        &|u: f64| (50.0 * u).sin().abs(),
        0.0,
        10.0,
        &SingularitySpec::none(),
        1e-14,
        &cfg,
    )
    .unwrap();
    assert!(!r.converged);
    assert!(r.n_evals > 0);
}

#[test]
fn parallel_matches_serial_bitwise() {
    let s = sing(&[(0.0, -0.5), (-1.0, -0.4)]);
    let f = Local(|p: Point| p.x.abs().powf(-0.5) * p.minus(-1.0).abs().powf(-0.4) * (-p.x * p.x).exp());
    let a = integrate_whole_line(&f, &s, 1e-11).unwrap();
    let b = hilbert_sharp::quadrature::integrate_whole_line_with(&f, &s, 1e-11, &QuadConfig::parallel()).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.abs_error_est.to_bits(), b.abs_error_est.to_bits());
}

proptest! {
    #[test]
    fn polynomials_are_exact(coeffs in prop::collection::vec(-1.0f64..1.0, 1..21), a in -2.0f64..0.0, w in 0.1f64..3.0) {
        let b = a + w;
        let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let anti = |x: f64| coeffs.iter().enumerate().rev().fold(0.0, |acc, (k, c)| acc * x + c / (k as f64 + 1.0)) * x;
        let scale: f64 = coeffs.iter().enumerate().map(|(k, c)| c.abs() * a.abs().max(b.abs()).powi(k as i32 + 1)).sum::<f64>() + 1.0;
        let r = integrate(&f, a, b, &SingularitySpec::none(), 1e-13 * scale).unwrap();
        prop_assert!((r.value - (anti(b) - anti(a))).abs() <= 1e-13 * scale);
    }

    #[test]
    fn converged_implies_error_within_tolerance(e in -0.9f64..2.0, c in 0.1f64..5.0, tol_exp in 4i32..12) {
        let tol = 10f64.powi(-tol_exp);
        let s = if e == 0.0 { SingularitySpec::none() } else { sing(&[(0.0, e)]) };
        let r = integrate(&|u: f64| u.powf(e) * (-c * u).exp(), 0.0, f64::INFINITY, &s, tol).unwrap();
        if r.converged {
            prop_assert!(r.abs_error_est <= tol);
        }
        prop_assert!(r.n_evals > 0);
    }

    #[test]
    fn power_law_integrals(e in -0.95f64..1.5) {
        let r = integrate(&|u: f64| u.powf(e), 0.0, 1.0, &sing(&[(0.0, e)]), 1e-11).unwrap();
        prop_assert!(r.converged);
        prop_assert!((r.value - 1.0 / (1.0 + e)).abs() <= 1e-11);
    }
}

#[test]
fn relative_tolerance_scales_with_magnitude() {
    let cfg = QuadConfig::default().with_rel_tol(1e-11);
    let want = 1e-30 * std::f64::consts::PI.sqrt();
    let f = |x: f64| 1e-30 * (-x * x).exp();
    let q = integrate_whole_line_with(&f, &SingularitySpec::none(), 1e-300, &cfg).unwrap();
    assert!(q.converged);
    assert!(((q.value - want) / want).abs() < 1e-10);
    assert!(q.abs_error_est <= 1e-11 * q.value * 1.0001);
    let r = integrate_whole_line(&f, &SingularitySpec::none(), 1e-300).unwrap();
    assert!(!r.converged || r.abs_error_est <= 1e-300);
}

#[test]
fn breakpoint_next_to_a_singularity_leaves_the_value_unchanged() {
    let g = Local(|p: Point| p.minus(-1.0).abs().powf(-0.75) * (-p.x * p.x).exp());
    let base = SingularitySpec::at(-1.0, -0.75).unwrap();
    let want = integrate_whole_line(&g, &base, 1e-13).unwrap();
    for d in [1e-12, 1e-9, 1e-6, 1e-4, 1e-2] {
        let s = base.clone().breakpoint(-1.0 - d).unwrap().breakpoint(1.0 + d).unwrap();
        let r = integrate_whole_line(&g, &s, 1e-13).unwrap();
        assert!(r.converged);
        assert!(
            (r.value - want.value).abs() <= 1e-12,
            "{d}: {} vs {}",
            r.value,
            want.value
        );
    }
}

#[test]
fn sided_point_stays_on_its_side_of_the_anchor() {
    let p = Point {
        x: 1.0,
        anchor: 1.0,
        offset: 1e-20,
    };
    assert!(p.sided() > 1.0);
    let p = Point {
        x: 1.0,
        anchor: 1.0,
        offset: -1e-20,
    };
    assert!(p.sided() < 1.0);
    assert_eq!(Point::at(1.0).sided(), 1.0);
    let p = Point {
        x: 1.5,
        anchor: 1.0,
        offset: 0.5,
    };
    assert_eq!(p.sided(), 1.5);
}

#[test]
fn strong_endpoint_singularity_reaches_full_accuracy() {
    for e in [-0.96, -0.99, -0.998] {
        let f = Local(|p: Point| p.minus(1.0).abs().powf(e) * (1.0 + p.x));
        let r = integrate(&f, 0.0, 1.0, &SingularitySpec::at(1.0, e).unwrap(), 1e-10).unwrap();
        // ∫_0^1 (1-u)^e (1+u) du = 2/(1+e) - 1/(2+e)
        let want = 2.0 / (1.0 + e) - 1.0 / (2.0 + e);
        assert!(r.converged, "{e}");
        assert!(((r.value - want) / want).abs() < 1e-12, "{e}: {} vs {want}", r.value);
    }
}
