mod common;

use common::brute_force_boost_minimum;
use fairmatch::bounds::{
    f_ratio, minimizer_set, minimizer_set_three, one_minus_inv_e, sampab_bound, sampab_grid_minimum, sampb_bound,
};
use proptest::prelude::*;

/// `F(x, κ)` from the antiderivatives of its two integrands:
/// `∫ e^{−ζ} f(e^{−ζ}, x) dζ = −x/(1−x) · ln(x + (1−x) e^{−ζ})` and
/// `∫ f(e^{−ζ}, x) dζ = ln(x e^ζ + 1 − x)`.
fn closed_form_f(x_star: f64, kappa: f64) -> f64 {
    let early = |x: f64| {
        if (1.0 - x).abs() < 1e-15 {
            -(-kappa).exp_m1()
        } else {
            -x / (1.0 - x) * (x + (1.0 - x) * (-kappa).exp()).ln()
        }
    };
    let late = |x: f64| ((x * 1f64.exp() + 1.0 - x) / (x * kappa.exp() + 1.0 - x)).ln();
    let set = minimizer_set_three(x_star).unwrap();
    let e: f64 = set.iter().map(|&x| early(x)).sum();
    let l: f64 = set.iter().map(|&x| late(x)).sum();
    e + (-kappa).exp() * (1.0 - (-l).exp())
}

/// SAMP-B's ratio at `τ = 1` by summing the geometric pieces directly.
fn series_at_one() -> f64 {
    let e = 1f64.exp();
    let s: f64 = (1..200)
        .map(|k| {
            let piece = (-(k as f64 - 1.0)).exp() - (-(k as f64)).exp();
            (1.0 + piece * (e - 1.0)).ln()
        })
        .sum();
    1.0 - (-s).exp()
}

#[test]
fn samp_b_ratio_at_full_mass() {
    let r = sampb_bound(1.0).unwrap();
    assert!((r - series_at_one()).abs() < 1e-10, "{r}");
    assert!((r - 0.725).abs() < 1e-3);
}

#[test]
fn samp_b_ratio_is_smallest_at_full_mass() {
    let at_one = sampb_bound(1.0).unwrap();
    for k in 1..20 {
        let tau = k as f64 * 0.05;
        assert!(sampb_bound(tau).unwrap() >= at_one, "tau {tau}");
    }
}

#[test]
fn minimizer_set_examples() {
    let set = minimizer_set(0.7).unwrap();
    assert_eq!(set.len(), 2);
    assert!((set[0] - 0.63212).abs() < 1e-5);
    assert!((set[1] - 0.06788).abs() < 1e-5);
    assert_eq!(minimizer_set(0.3).unwrap(), vec![0.3]);
    assert!(minimizer_set(1.2).is_err());
}

#[test]
fn samp_ab_grid_minimum() {
    let m = sampab_grid_minimum(100).unwrap();
    assert!((m.ratio - 0.719).abs() < 2e-3, "{m:?}");
    assert!((m.x - one_minus_inv_e()).abs() < 0.01, "{m:?}");
    assert!((m.kappa - 1.0).abs() < 1e-9, "{m:?}");
    let at = sampab_bound(one_minus_inv_e(), 1.0).unwrap() / one_minus_inv_e();
    assert!((at - m.ratio).abs() < 1e-4);
}

#[test]
fn samp_ab_small_mass_limits() {
    let x = 1e-6;
    let e = 1f64.exp();
    assert!((sampab_bound(x, 0.0).unwrap() / x - (e - 1.0)).abs() < 1e-4);
    assert!((sampab_bound(x, 1.0).unwrap() / x - 1.0).abs() < 1e-4);
}

#[test]
fn lemma_structure_on_a_fixed_point() {
    let tau: f64 = 0.9;
    let growth = tau.exp_m1();
    let ours: f64 = minimizer_set(tau).unwrap().iter().map(|&x| (x * growth).ln_1p()).sum();
    let brute = brute_force_boost_minimum(tau, 1000, 12).unwrap();
    assert!((ours - brute).abs() < 5e-3, "{ours} vs {brute}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn samp_ab_matches_closed_form(x in 0.001f64..=1.0, kappa in 0.0f64..=1.0) {
        let ours = sampab_bound(x, kappa).unwrap();
        let exact = closed_form_f(x, kappa);
        prop_assert!((ours - exact).abs() < 1e-8, "x {x} kappa {kappa}: {ours} vs {exact}");
    }

    #[test]
    fn minimizer_set_respects_the_caps(tau in 0.0f64..=1.0) {
        let set = minimizer_set(tau).unwrap();
        let total: f64 = set.iter().sum();
        prop_assert!((total - tau).abs() < 1e-10);
        let mut sorted = set.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = 0.0;
        for (s, v) in sorted.iter().enumerate() {
            prefix += v;
            prop_assert!(prefix <= -(-((s + 1) as f64)).exp_m1() + 1e-12);
        }
    }

    #[test]
    fn f_ratio_is_bounded(p in 0.0f64..=1.0, x in 0.001f64..=1.0) {
        let v = f_ratio(p, x);
        prop_assert!(v >= x - 1e-15 && v <= 1.0 + 1e-15);
        prop_assert!((f_ratio(1.0, x) - x).abs() < 1e-15);
    }
}
