use serde::Serialize;

use super::separation::max_subset_violation;
use super::CapRule;
use crate::instance::Instance;

/// Maximum violation per constraint family (0 when satisfied).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `Σ_i x_ij ≤ 1` per online type.
    pub online_capacity: f64,
    /// `Σ_j x_ij ≤ 1` per offline agent.
    pub offline_capacity: f64,
    /// Subset constraints up to the size cap, by exact separation.
    pub subset: f64,
    /// `0 ≤ x_ij ≤ 1`.
    pub bounds: f64,
}

impl FeasibilityReport {
    pub fn max(&self) -> f64 {
        self.online_capacity
            .max(self.offline_capacity)
            .max(self.subset)
            .max(self.bounds)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn check_feasibility(
    x: &[f64],
    instance: &Instance,
    k_cap: usize,
    cap_rule: CapRule,
) -> FeasibilityReport {
    let excess = |edges: &[(usize, usize)]| -> f64 {
        let total: f64 = edges.iter().map(|&(_, e)| x[e]).sum();
        (total - 1.0).max(0.0)
    };
    let online_capacity = (0..instance.n_online())
        .map(|j| excess(instance.online_edges(j)))
        .fold(0.0, f64::max);
    let offline_capacity = (0..instance.n_offline())
        .map(|i| excess(instance.offline_edges(i)))
        .fold(0.0, f64::max);
    let bounds = x
        .iter()
        .map(|&v| (-v).max(v - 1.0).max(0.0))
        .fold(0.0, f64::max);
    FeasibilityReport {
        online_capacity,
        offline_capacity,
        subset: max_subset_violation(x, instance, k_cap, cap_rule).max(0.0),
        bounds,
    }
}
