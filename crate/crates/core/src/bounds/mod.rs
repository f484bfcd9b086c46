//! Analytical side: the worst-case mass split `𝒮(τ)`, the SAMP-B and SAMP-AB
//! ratio bounds, adversarial instances and a brute-force clairvoyant oracle.

mod examples;
mod oracle;
mod quad;

use rayon::prelude::*;
use serde::Serialize;

pub use examples::{example1_solution, make_example1, make_example_worst};
pub use oracle::{clairvoyant_oracle, clairvoyant_value, ORACLE_LIMIT};
pub use quad::adaptive_simpson;

use crate::error::{Error, Result};

/// Quadrature tolerance for every integral in this module.
pub const QUAD_TOL: f64 = 1e-10;

/// Series truncation for the unbounded minimiser set.
pub const SERIES_TOL: f64 = 1e-12;

/// `1 − e^{−1}`.
pub fn one_minus_inv_e() -> f64 {
    -(-1.0f64).exp_m1()
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// The mass split of total `τ` across neighbours that minimises the boosting
/// bound: pieces `e^{−(k−1)} − e^{−k}` for as long as `1 − e^{−k} ≤ τ`, then
/// the residual. Pieces below `1e−12` are dropped; the last element is
/// computed as `τ` minus the others so the sum is `τ` up to that truncation.
pub fn minimizer_set(tau: f64) -> Result<Vec<f64>> {
    check_unit("tau", tau)?;
    let mut set = Vec::new();
    let mut used = 0.0;
    let mut k = 1;
    loop {
        let cum = -(-(k as f64)).exp_m1();
        let piece = (-((k - 1) as f64)).exp() * one_minus_inv_e();
        if cum > tau || piece < SERIES_TOL {
            break;
        }
        set.push(piece);
        used += piece;
        k += 1;
    }
    let residual = tau - used;
    if residual > SERIES_TOL {
        set.push(residual);
    }
    Ok(set)
}

/// The three-piece variant: `{x}` up to `1 − e^{−1}`, then
/// `{1 − e^{−1}, rest}` up to `1 − e^{−2}`, then
/// `{1 − e^{−1}, e^{−1} − e^{−2}, rest}`.
pub fn minimizer_set_three(x: f64) -> Result<Vec<f64>> {
    check_unit("x", x)?;
    let a = one_minus_inv_e();
    let b = (-1.0f64).exp() - (-2.0f64).exp();
    let set = if x <= a {
        vec![x]
    } else if x <= a + b {
        vec![a, x - a]
    } else {
        vec![a, b, x - a - b]
    };
    Ok(set.into_iter().filter(|&v| v > 0.0).collect())
}

/// Lower bound on `E[Z_i] / τ` for SAMP-B when agent `i` has LP mass `τ`:
/// `(1 − exp(−(1/τ) Σ_{x∈𝒮(τ)} ln(1 + x(e^τ − 1)))) / τ`.
pub fn sampb_bound(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} is outside (0, 1]")));
    }
    let growth = tau.exp_m1();
    let s: f64 = minimizer_set(tau)?
        .iter()
        .map(|&x| (x * growth).ln_1p())
        .sum();
    Ok(-(-s / tau).exp_m1() / tau)
}

/// `f(p, x) = x / (x + (1 − x) p)`.
pub fn f_ratio(p: f64, x: f64) -> f64 {
    x / (x + (1.0 - x) * p)
}

/// `F(x*, κ)`: the SAMP-AB lower bound on `E[Z]` for an agent of mass `x*`
/// whose attenuation stops at time fraction `κ`.
pub fn sampab_bound(x_star: f64, kappa: f64) -> Result<f64> {
    if !(x_star > 0.0 && x_star <= 1.0) {
        return Err(Error::InvalidParameter(format!("x = {x_star} is outside (0, 1]")));
    }
    check_unit("kappa", kappa)?;
    let set = minimizer_set_three(x_star)?;
    let mut early = 0.0;
    let mut late = 0.0;
    for &x in &set {
        early += adaptive_simpson(&|z: f64| (-z).exp() * f_ratio((-z).exp(), x), 0.0, kappa, QUAD_TOL);
        late += adaptive_simpson(&|z: f64| f_ratio((-z).exp(), x), kappa, 1.0, QUAD_TOL);
    }
    Ok(early + (-kappa).exp() * -(-late).exp_m1())
}

/// Inputs, set and value of one bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub kind: &'static str,
    pub x: f64,
    pub kappa: Option<f64>,
    pub set: Vec<f64>,
    pub value: f64,
    /// `value / x`.
    pub ratio: f64,
}

pub fn evaluate_sampb(tau: f64) -> Result<BoundEvaluation> {
    let ratio = sampb_bound(tau)?;
    Ok(BoundEvaluation {
        kind: "sampb",
        x: tau,
        kappa: None,
        set: minimizer_set(tau)?,
        value: ratio * tau,
        ratio,
    })
}

pub fn evaluate_sampab(x: f64, kappa: f64) -> Result<BoundEvaluation> {
    let value = sampab_bound(x, kappa)?;
    Ok(BoundEvaluation {
        kind: "sampab",
        x,
        kappa: Some(kappa),
        set: minimizer_set_three(x)?,
        value,
        ratio: value / x,
    })
}

/// Location and value of the minimum of `F(x, κ)/x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMinimum {
    pub x: f64,
    pub kappa: f64,
    pub ratio: f64,
}

/// Minimises `F(x, κ)/x` over `(0, 1] × [0, 1]`: a `resolution ×
/// (resolution + 1)` grid, then repeated finer grids around the best point.
pub fn sampab_grid_minimum(resolution: usize) -> Result<GridMinimum> {
    if resolution < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
    }
    let n = resolution;
    let ratio = |x: f64, k: f64| sampab_bound(x, k).map(|v| v / x).unwrap_or(f64::INFINITY);
    let best = (1..=n)
        .into_par_iter()
        .map(|a| {
            let x = a as f64 / n as f64;
            (0..=n)
                .map(|b| {
                    let k = b as f64 / n as f64;
                    GridMinimum { x, kappa: k, ratio: ratio(x, k) }
                })
                .fold(None, min_point)
                .expect("non-empty row")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, min_point)
        .expect("non-empty grid");
    let mut best = best;
    let mut half = 1.0 / n as f64;
    for _ in 0..6 {
        let m = 10;
        let (cx, ck) = (best.x, best.kappa);
        for a in 0..=2 * m {
            for b in 0..=2 * m {
                let x = (cx - half + a as f64 * half / m as f64).clamp(1e-9, 1.0);
                let k = (ck - half + b as f64 * half / m as f64).clamp(0.0, 1.0);
                let p = GridMinimum { x, kappa: k, ratio: ratio(x, k) };
                best = min_point(Some(best), p).expect("some");
            }
        }
        half /= 5.0;
    }
    Ok(best)
}

fn min_point(acc: Option<GridMinimum>, p: GridMinimum) -> Option<GridMinimum> {
    match acc {
        Some(a) if a.ratio <= p.ratio => Some(a),
        _ => Some(p),
    }
}
