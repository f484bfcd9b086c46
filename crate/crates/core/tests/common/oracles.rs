//! Reference computations that share no code with the library routines they
//! check.

use fairmatch::instance::Instance;
use fairmatch::lp::CapRule;

/// Subset-constraint violation by enumerating every subset of each
/// neighbourhood with at most `k_cap` members.
pub fn violated_by_enumeration(
    x: &[f64],
    instance: &Instance,
    k_cap: usize,
    rule: CapRule,
    tol: f64,
) -> Vec<bool> {
    (0..instance.n_offline())
        .map(|i| {
            let vals: Vec<f64> = instance.offline_edges(i).iter().map(|&(_, e)| x[e]).collect();
            let n = vals.len();
            (1u32..(1 << n)).any(|mask| {
                let size = mask.count_ones() as usize;
                if size > k_cap {
                    return false;
                }
                let sum: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| vals[b]).sum();
                sum > rule.cap(size, instance.horizon()) + tol
            })
        })
        .collect()
}

/// Minimum of `Σ_j ln(1 + x_j (e^τ − 1))` over allocations of total `τ` on a
/// grid of step `1/steps`, subject to the top-`s` mass of the allocation
/// being at most `1 − e^{−s}` for every `s ≤ max_items`.
///
/// Allocations are enumerated as non-increasing sequences, so the top-`s`
/// constraint is a prefix constraint. The state is (prefix mass, last item);
/// a suffix minimum over the previous item keeps each layer linear in the
/// number of states. `τ` is snapped to the grid; returns `None` when no
/// feasible allocation reaches it.
pub fn brute_force_boost_minimum(tau: f64, steps: usize, max_items: usize) -> Option<f64> {
    let target = (tau * steps as f64).round() as usize;
    let growth = tau.exp_m1();
    let cost: Vec<f64> = (0..=steps).map(|v| (v as f64 / steps as f64 * growth).ln_1p()).collect();
    let n = target + 1;
    // best[p][v]: min cost of a sequence with prefix p whose last item is v
    let mut best = vec![vec![f64::INFINITY; n]; n];
    let cap = |s: usize| ((-(-(s as f64)).exp_m1()) * steps as f64 + 1e-9).floor() as usize;
    for v in 1..=cap(1).min(target) {
        best[v][v] = cost[v];
    }
    let mut answer = best[target][1..].iter().copied().fold(f64::INFINITY, f64::min);
    for s in 2..=max_items {
        // suffix[p][v] = min_{u ≥ v} best[p][u]
        let mut suffix = vec![vec![f64::INFINITY; n + 1]; n];
        for p in 0..n {
            for v in (0..n).rev() {
                suffix[p][v] = suffix[p][v + 1].min(best[p][v]);
            }
        }
        let limit = cap(s).min(target);
        let mut next = vec![vec![f64::INFINITY; n]; n];
        for p in 1..=limit {
            for v in 1..=p {
                let prev = suffix[p - v][v];
                if prev.is_finite() {
                    next[p][v] = prev + cost[v];
                }
            }
        }
        best = next;
        answer = answer.min(best[target][1..].iter().copied().fold(f64::INFINITY, f64::min));
    }
    answer.is_finite().then_some(answer)
}
