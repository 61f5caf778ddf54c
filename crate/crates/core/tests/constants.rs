use hilbert_sharp::constants::{
    constant, cross_check, k0, k1, k2, k_lambda, k_total, k_total_combined_series, pair_factors, series_terms,
    ConstantKind, Method, DEFAULT_TOL,
};
use hilbert_sharp::specfun::pair_threshold;
use hilbert_sharp::{make_params, reference_grid};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// (β, μ, σ, K₁(σ), K₂(σ)) frozen from 30-digit mpmath (beta and 2F1).
const FROZEN: [(f64, f64, f64, f64, f64); 6] = [
    (0.5, 0.0, 0.0, 4.9043398276288792889, 4.9043398276288792889),
    (0.0, 0.25, 0.25, 8.9522644631869834578, 8.9522644631869834578),
    (0.5, -0.3, 0.1, 3.6824225534893533481, 10.38592302410942377),
    (-0.25, 0.4, 0.6, 8.6740095858562375835, 16.373621492431940594),
    (0.0, 0.1, 0.7, 6.6959516185134345699, 24.086947841744025424),
    (0.5, 0.3, 0.1, 12.215632501150625901, 11.295868083041358551),
];

#[test]
fn every_route_matches_frozen_values() {
    for (b, m, s, want1, want2) in FROZEN {
        let pr = make_params(b, m, s, 1, 2.0).unwrap();
        for method in Method::ALL {
            let a = k1(&pr, method, DEFAULT_TOL).unwrap();
            let c = k2(&pr, method, DEFAULT_TOL).unwrap();
            assert!(rel(a.value, want1) < 1e-10, "{method:?} K1 at {b},{m},{s}: {}", a.value);
            assert!(rel(c.value, want2) < 1e-10, "{method:?} K2 at {b},{m},{s}: {}", c.value);
        }
        let comb = k_total_combined_series(&pr, DEFAULT_TOL).unwrap();
        assert!(rel(comb.value, want1 + want2) < 1e-10);
    }
}

#[test]
fn zero_lambda_half_beta_closed_value() {
    // K₁ = ∫_0^1 u^{-1/2}(1+u)^{-1/2} du + B(1/2, 1/2) = 2 ln(1+√2) + π.
    let want = 2.0 * (1.0 + 2f64.sqrt()).ln() + std::f64::consts::PI;
    let pr = make_params(0.5, 0.0, 0.0, 1, 2.0).unwrap();
    for method in Method::ALL {
        let v = k1(&pr, method, DEFAULT_TOL).unwrap().value;
        assert!(rel(v, want) < 1e-11, "{method:?}: {v}");
    }
    assert!(rel(k0(0.5, 0.0).unwrap(), 2.0 * want) < 1e-12);
}

#[test]
fn k0_matches_general_constant() {
    for (b, s) in [(0.5, 0.0), (0.5, 0.2), (0.3, -0.1), (0.8, 0.5)] {
        let pr = make_params(b, -s, s, 1, 2.0).unwrap();
        let k = k_total(&pr, Method::Quadrature, DEFAULT_TOL).unwrap().value;
        assert!(rel(k0(b, s).unwrap(), k) < 1e-9, "({b}, {s})");
    }
}

#[test]
fn k_lambda_values() {
    // B(λ/2, λ/2) + 2B(1-λ, λ/2), mpmath.
    for (l, want) in [
        (0.2, 40.443838176262418051),
        (0.5, 17.904528926373966916),
        (0.8, 17.902340029051565723),
    ] {
        assert!(rel(k_lambda(l).unwrap(), want) < 1e-12);
        // β = 0, μ = σ = λ/2 reduces K to k_λ.
        let pr = make_params(0.0, 0.5 * l, 0.5 * l, 1, 2.0).unwrap();
        for method in Method::ALL {
            let v = k_total(&pr, method, DEFAULT_TOL).unwrap().value;
            assert!(rel(v, want) < 1e-9, "{method:?} at {l}: {v}");
        }
    }
}

#[test]
fn routes_agree_on_reference_grid() {
    for pr in reference_grid(1, 2.0).unwrap() {
        for kind in [ConstantKind::K1, ConstantKind::K2, ConstantKind::K] {
            let cc = cross_check(&pr, kind, DEFAULT_TOL).unwrap();
            assert!(cc.agree, "{kind:?} at {pr:?}: {cc:?}");
            assert!(cc.max_rel_discrepancy < 1e-8, "{kind:?} at {pr:?}: {cc:?}");
        }
    }
}

#[test]
fn second_constant_is_first_at_mu() {
    for pr in reference_grid(1, 2.0).unwrap() {
        let sw = pr.swapped();
        for method in Method::ALL {
            let a = k2(&pr, method, DEFAULT_TOL).unwrap().value;
            let b = k1(&sw, method, DEFAULT_TOL).unwrap().value;
            assert!(rel(a, b) < 1e-9, "{method:?} at {pr:?}");
        }
    }
}

#[test]
fn constant_is_symmetric_in_mu_sigma() {
    for pr in reference_grid(-1, 3.0).unwrap() {
        let a = constant(&pr, ConstantKind::K, Method::ClosedForm, DEFAULT_TOL)
            .unwrap()
            .value;
        let b = constant(&pr.swapped(), ConstantKind::K, Method::ClosedForm, DEFAULT_TOL)
            .unwrap()
            .value;
        assert!(rel(a, b) < 1e-13);
    }
}

#[test]
fn series_signs_settle_past_threshold() {
    for alpha in [-3.7, -0.6, 0.0001, 0.25, 0.5, 0.9, 1.4] {
        let k0 = pair_threshold(alpha) as usize;
        for u in [0.0, 0.3, 1.0] {
            let f = pair_factors(alpha, u, k0 + 200);
            let sign = f[k0].signum();
            assert!(
                f[k0..].iter().all(|v| v.signum() == sign || *v == 0.0),
                "alpha {alpha}, u {u}"
            );
        }
        let t = series_terms(alpha, 0.4, k0 + 200);
        let sign = t[k0].signum();
        assert!(t[k0..].iter().all(|v| v.signum() == sign || *v == 0.0), "alpha {alpha}");
    }
}

#[test]
fn constants_are_positive_and_finite() {
    for pr in reference_grid(1, 2.0).unwrap() {
        let v = k_total(&pr, Method::ClosedForm, DEFAULT_TOL).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
        assert!(v.abs_error_est < 1e-10 * v.value);
    }
}

fn admissible() -> impl Strategy<Value = (f64, f64, f64)> {
    (-0.9f64..0.9, 0.02f64..0.98, 0.1f64..0.9).prop_map(|(b, frac, split)| {
        // λ + 2β ranges over (0, 1 + β), keeping λ < 1 - β.
        let span = frac * (1.0 + b);
        let s = -b + split * span;
        let m = -b + (1.0 - split) * span;
        (b, m, s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_and_series_agree((b, m, s) in admissible()) {
        let pr = make_params(b, m, s, 1, 2.0).unwrap();
        let a = k_total(&pr, Method::ClosedForm, DEFAULT_TOL).unwrap();
        let c = k_total(&pr, Method::Series, DEFAULT_TOL).unwrap();
        let tol = (1e-8 * a.value).max(a.abs_error_est + c.abs_error_est);
        prop_assert!((a.value - c.value).abs() <= tol, "{:?} vs {:?}", a, c);
    }

    #[test]
    fn constant_decreases_away_from_the_diagonal((b, m, s) in admissible()) {
        // K is convex in σ along μ + σ = λ with minimum at μ = σ.
        let pr = make_params(b, m, s, 1, 2.0).unwrap();
        let mid = 0.5 * pr.lambda;
        let sym = make_params(b, mid, mid, 1, 2.0).unwrap();
        let k = k_total(&pr, Method::ClosedForm, DEFAULT_TOL).unwrap().value;
        let ks = k_total(&sym, Method::ClosedForm, DEFAULT_TOL).unwrap().value;
        prop_assert!(ks <= k * (1.0 + 1e-12));
    }
}
