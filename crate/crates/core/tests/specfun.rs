use hilbert_sharp::specfun::{beta, gamma, hyp_at_minus_one, hyp_at_minus_one_quadrature, hyp_at_minus_one_series};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Γ(x) from mpmath at 30 digits.
const GAMMA_REF: [(f64, f64); 10] = [
    (0.001, 999.42377248459546611),
    (0.013, 76.358567751324645431),
    (0.25, 3.6256099082219083119),
    (0.7, 1.2980553326475577857),
    (1.5, 0.88622692545275801365),
    (3.3, 2.6834373819557687936),
    (7.25, 1155.3810139199896872),
    (12.5, 136843365.46556585726),
    (27.1, 5.5979371754539561787e+26),
    (49.9, 4.1180110342530580419e+62),
];

// (α, θ, 2F1(α, θ; 1+θ; -1)/θ) from mpmath at 30 digits.
const HYP_REF: [(f64, f64, f64); 11] = [
    (-0.5, 0.1, 10.408990748177407553),
    (-0.5, 3.0, 0.44024187375634459188),
    (0.3, 0.25, 3.8179840225069670309),
    (0.9, 1.0, 0.71773462536293163654),
    (0.99, 0.5, 1.5742599224562689965),
    (1.5, 0.1, 9.1441029808264542861),
    (1.5, 3.0, 0.14788360463198482106),
    (1.2, 0.7, 1.0014055392686352821),
    (-0.2, 0.05, 20.161959148156150851),
    (1.9, 2.0, 0.20205321566087229703),
    (-3.5, 1.5, 3.8489894436869759821),
];

#[test]
fn gamma_matches_reference_table() {
    for (x, want) in GAMMA_REF {
        let got = gamma(x).unwrap();
        assert!(rel(got, want) <= 1e-13, "Γ({x}) = {got}, want {want}");
    }
}

/// Independent oracle: v = s^4 near each end removes the v^{-3/4} singularity,
/// then composite Gauss-Legendre on the smooth remainder.
fn beta_quarter_oracle() -> f64 {
    let nodes = [
        (-0.906179845938664, 0.236926885056189),
        (-0.538469310105683, 0.478628670499366),
        (0.0, 0.568888888888889),
        (0.538469310105683, 0.478628670499366),
        (0.906179845938664, 0.236926885056189),
    ];
    // ∫_0^{1/2} v^{-3/4}(1-v)^{-3/4} dv = 4 ∫_0^{2^{-1/4}} (1-s^4)^{-3/4} ds
    let upper = 0.5f64.powf(0.25);
    let panels = 4000;
    let h = upper / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let c = (i as f64 + 0.5) * h;
        for (x, w) in nodes {
            let s: f64 = c + 0.5 * h * x;
            total += 0.5 * h * w * 4.0 * (1.0 - s.powi(4)).powf(-0.75);
        }
    }
    2.0 * total
}

#[test]
fn beta_quarter_matches_substitution_oracle() {
    let oracle = beta_quarter_oracle();
    assert!(rel(beta(0.25, 0.25).unwrap(), oracle) < 1e-9);
    assert!(rel(oracle, 7.4162987092054876737) < 1e-9);
}

#[test]
fn hyp_matches_reference_table() {
    for (a, t, want) in HYP_REF {
        let got = hyp_at_minus_one(a, t).unwrap();
        assert!(rel(got.value, want) <= 1e-12, "H({a},{t}) = {}, want {want}", got.value);
        assert!(got.abs_error_est.is_finite() && got.abs_error_est >= 0.0);
    }
}

#[test]
fn series_and_quadrature_routes_agree_on_grid() {
    for i in 0..=8 {
        let a = -0.5 + 0.25 * i as f64;
        for t in [0.1, 0.25, 0.5, 1.0, 1.7, 3.0] {
            let s = hyp_at_minus_one_series(a, t, 1e-13).unwrap().value;
            let q = hyp_at_minus_one_quadrature(a, t, 1e-13).unwrap().value;
            assert!(rel(s, q) <= 1e-9, "alpha={a} theta={t}: {s} vs {q}");
        }
    }
}

proptest! {
    #[test]
    fn beta_is_symmetric(a in 0.05f64..10.0, b in 0.05f64..10.0) {
        prop_assert_eq!(beta(a, b).unwrap(), beta(b, a).unwrap());
    }

    #[test]
    fn beta_equals_gamma_ratio(a in 0.05f64..10.0, b in 0.05f64..10.0) {
        let g = gamma(a).unwrap() * gamma(b).unwrap() / gamma(a + b).unwrap();
        prop_assert!(rel(beta(a, b).unwrap(), g) <= 1e-11);
    }

    #[test]
    fn gamma_recurrence(x in 0.01f64..40.0) {
        prop_assert!(rel(gamma(x + 1.0).unwrap(), x * gamma(x).unwrap()) <= 1e-13);
    }

    #[test]
    fn hyp_decreases_in_alpha(a in -0.5f64..1.4, d in 0.05f64..0.5, t in 0.1f64..3.0) {
        let lo = hyp_at_minus_one(a, t).unwrap().value;
        let hi = hyp_at_minus_one(a + d, t).unwrap().value;
        prop_assert!(hi < lo);
        prop_assert!(hi > 0.0);
    }
}
