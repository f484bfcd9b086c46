//! Benchmark LPs for IFM, GFM and VOM.
//!
//! Variables are one `x_ij ∈ [0, 1]` per edge (indexed like
//! [`Instance::edges`]) plus a `λ ∈ [0, 1]` for the max-min objectives. The
//! online capacity rows `Σ_i x_ij ≤ 1` and offline capacity rows
//! `Σ_j x_ij ≤ 1` are always present. The subset family
//! `Σ_{j∈S} x_ij ≤ cap(|S|)` for `S ⊆ N_i, |S| ≤ K` is never materialised up
//! front; [`solve`] adds violated members lazily via [`separate`].

mod feasibility;
mod program;
mod separation;
mod solve;

use serde::{Deserialize, Serialize};

pub use feasibility::{check_feasibility, FeasibilityReport};
pub use program::{LinearProgram, MicroLpBackend, RelaxationSolver, Row, Sense};
pub use separation::{separate, SubsetCut};
pub use solve::{normalize_ifm, solve, LpSolution, SolveStatus, SolverConfig};

use crate::instance::Instance;
use crate::objective::Objective;

/// Tolerance for every LP feasibility and separation test.
pub const FEAS_TOL: f64 = 1e-9;

/// Hard upper bound on the default subset-size cap.
pub const DEFAULT_K_LIMIT: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("GFM model requested but the instance has no groups")]
    NoGroups,
    #[error("instance is not canonical (all rates 1, |J| = T)")]
    NotCanonical,
    #[error("cutting-plane loop hit the cap of {rounds} rounds; last max violation {last_violation:e} over {pending} pending cuts")]
    IterationCap {
        rounds: usize,
        last_violation: f64,
        pending: usize,
    },
    #[error("LP backend failure: {0}")]
    Backend(String),
    #[error("normalisation needs an IFM solution with non-negative value, got {0}")]
    BadNormalisation(String),
}

impl LpError {
    /// Backend failures and iteration caps point at a bug (the all-zero point
    /// is always feasible), not at bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            LpError::Backend(_) | LpError::IterationCap { .. } | LpError::BadNormalisation(_)
        )
    }
}

/// Right-hand side of the subset constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapRule {
    /// `1 − e^{−|S|}`, the large-`T` form.
    #[default]
    Asymptotic,
    /// `1 − (1 − |S|/T)^T`, exact for a finite horizon.
    FiniteHorizon,
}

impl CapRule {
    pub fn cap(self, size: usize, horizon: usize) -> f64 {
        match self {
            CapRule::Asymptotic => -(-(size as f64)).exp_m1(),
            CapRule::FiniteHorizon => {
                let t = horizon as f64;
                let s = size as f64;
                if s >= t {
                    1.0
                } else {
                    1.0 - (1.0 - s / t).powi(horizon as i32)
                }
            }
        }
    }
}

/// `min(20, max_i |N_i|)`, at least 1.
pub fn default_k_cap(instance: &Instance) -> usize {
    instance.max_offline_degree().clamp(1, DEFAULT_K_LIMIT)
}

/// A benchmark LP for one objective, plus the subset cuts installed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Objective,
    pub k_cap: usize,
    pub cap_rule: CapRule,
    /// Leave agents without neighbours out of the IFM λ-link rows.
    pub drop_isolated: bool,
    pub cuts: Vec<SubsetCut>,
    horizon: usize,
}

/// How many rows of each family a model has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowCounts {
    pub variables: usize,
    pub online_capacity: usize,
    pub offline_capacity: usize,
    pub lambda_links: usize,
    pub subset_cuts: usize,
}

/// Builds the model for `objective` with subset-size cap `k_cap`.
pub fn build_lp(instance: &Instance, objective: Objective, k_cap: usize) -> Result<LpModel, LpError> {
    if !instance.is_canonical() {
        return Err(LpError::NotCanonical);
    }
    if objective == Objective::Gfm && instance.groups().is_empty() {
        return Err(LpError::NoGroups);
    }
    if objective == Objective::Ifm {
        let isolated = instance.isolated_offline();
        if !isolated.is_empty() {
            log::warn!(
                "{} offline agents have no neighbours and are left out of the IFM minimum",
                isolated.len()
            );
        }
    }
    Ok(LpModel {
        objective,
        k_cap: k_cap.max(1),
        cap_rule: CapRule::default(),
        drop_isolated: true,
        cuts: Vec::new(),
        horizon: instance.horizon(),
    })
}

impl LpModel {
    pub fn with_cap_rule(mut self, rule: CapRule) -> Self {
        self.cap_rule = rule;
        self
    }

    pub fn with_drop_isolated(mut self, drop: bool) -> Self {
        self.drop_isolated = drop;
        self
    }

    pub fn has_lambda(&self) -> bool {
        self.objective != Objective::Vom
    }

    pub fn cap(&self, size: usize) -> f64 {
        self.cap_rule.cap(size, self.horizon)
    }

    fn linked_agents<'a>(&self, instance: &'a Instance) -> impl Iterator<Item = usize> + 'a {
        let drop = self.drop_isolated;
        (0..instance.n_offline()).filter(move |&i| !drop || !instance.offline_edges(i).is_empty())
    }

    pub fn row_counts(&self, instance: &Instance) -> RowCounts {
        let lambda_links = match self.objective {
            Objective::Ifm => self.linked_agents(instance).count(),
            Objective::Gfm => instance.groups().len(),
            Objective::Vom => 0,
        };
        RowCounts {
            variables: instance.n_edges(),
            online_capacity: instance.n_online(),
            offline_capacity: instance.n_offline(),
            lambda_links,
            subset_cuts: self.cuts.len(),
        }
    }

    /// Materialises the model (with its current cuts) as a maximisation LP.
    pub fn program(&self, instance: &Instance) -> LinearProgram {
        let n_edges = instance.n_edges();
        let mut lp = LinearProgram::default();
        for &(i, j) in instance.edges() {
            let obj = match self.objective {
                Objective::Vom => instance.weights()[i],
                _ => 0.0,
            };
            lp.add_var(format!("x_{i}_{j}"), obj, (0.0, 1.0));
        }
        let lambda = n_edges;
        if self.has_lambda() {
            let has_links = self.row_counts(instance).lambda_links > 0;
            let ub = if has_links { 1.0 } else { 0.0 };
            lp.add_var("lambda".into(), 1.0, (0.0, ub));
        }

        for j in 0..instance.n_online() {
            let coeffs: Vec<_> = instance.online_edges(j).iter().map(|&(_, e)| (e, 1.0)).collect();
            if !coeffs.is_empty() {
                lp.add_row(format!("cap_j{j}"), coeffs, Sense::Le, 1.0);
            }
        }
        for i in 0..instance.n_offline() {
            let coeffs: Vec<_> = instance.offline_edges(i).iter().map(|&(_, e)| (e, 1.0)).collect();
            if !coeffs.is_empty() {
                lp.add_row(format!("cap_i{i}"), coeffs, Sense::Le, 1.0);
            }
        }
        match self.objective {
            // Σ_j x_ij − λ ≥ 0
            Objective::Ifm => {
                for i in self.linked_agents(instance) {
                    let mut coeffs: Vec<_> =
                        instance.offline_edges(i).iter().map(|&(_, e)| (e, 1.0)).collect();
                    coeffs.push((lambda, -1.0));
                    lp.add_row(format!("link_i{i}"), coeffs, Sense::Ge, 0.0);
                }
            }
            // Σ_{i∈G} Σ_j x_ij − |G| λ ≥ 0
            Objective::Gfm => {
                for (g, members) in instance.groups().iter().enumerate() {
                    let mut coeffs: Vec<_> = members
                        .iter()
                        .flat_map(|&i| instance.offline_edges(i).iter().map(|&(_, e)| (e, 1.0)))
                        .collect();
                    coeffs.push((lambda, -(members.len() as f64)));
                    lp.add_row(format!("link_g{g}"), coeffs, Sense::Ge, 0.0);
                }
            }
            Objective::Vom => {}
        }
        let mut seen = std::collections::HashMap::new();
        for cut in &self.cuts {
            let size = cut.online.len();
            let k = seen.entry((cut.offline, size)).or_insert(0usize);
            let name = if *k == 0 {
                format!("cut_{}_{}", cut.offline, size)
            } else {
                format!("cut_{}_{}_{}", cut.offline, size, k)
            };
            *k += 1;
            let coeffs = cut
                .online
                .iter()
                .filter_map(|&j| instance.edge_index(cut.offline, j))
                .map(|e| (e, 1.0))
                .collect();
            lp.add_row(name, coeffs, Sense::Le, self.cap(size));
        }
        lp
    }

    /// The model in CPLEX LP text format, for cross-checking with external
    /// solvers.
    pub fn export_lp_text(&self, instance: &Instance) -> String {
        self.program(instance).to_lp_text()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceParts;

    fn path() -> Instance {
        Instance::new(InstanceParts::unit(2, 2, vec![(0, 0), (0, 1), (1, 1)])).unwrap()
    }

    #[test]
    fn path_ifm_row_counts() {
        let m = build_lp(&path(), Objective::Ifm, 2).unwrap();
        assert_eq!(
            m.row_counts(&path()),
            RowCounts {
                variables: 3,
                online_capacity: 2,
                offline_capacity: 2,
                lambda_links: 2,
                subset_cuts: 0
            }
        );
        let lp = m.program(&path());
        assert_eq!(lp.n_vars(), 4);
        assert_eq!(lp.rows.len(), 6);
    }

    #[test]
    fn vom_has_no_lambda() {
        let m = build_lp(&path(), Objective::Vom, 2).unwrap();
        assert!(!m.has_lambda());
        assert_eq!(m.program(&path()).n_vars(), 3);
        assert_eq!(m.row_counts(&path()).lambda_links, 0);
    }

    #[test]
    fn gfm_single_group_is_mean_mass() {
        let inst = path().with_groups(vec![vec![0, 1]]);
        let m = build_lp(&inst, Objective::Gfm, 2).unwrap();
        let lp = m.program(&inst);
        let link = lp.rows.iter().find(|r| r.name == "link_g0").unwrap();
        // Σ_i x_i ≥ |I| λ, i.e. λ ≤ (1/|I|) Σ_i x_i
        assert_eq!(link.coeffs.len(), 4);
        assert_eq!(link.coeffs.last(), Some(&(3, -2.0)));
    }

    #[test]
    fn gfm_without_groups_is_rejected() {
        let inst = path().with_groups(vec![]);
        assert!(matches!(build_lp(&inst, Objective::Gfm, 2), Err(LpError::NoGroups)));
    }

    #[test]
    fn cap_rules() {
        assert!((CapRule::Asymptotic.cap(1, 10) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((CapRule::FiniteHorizon.cap(1, 2) - 0.75).abs() < 1e-15);
        assert_eq!(CapRule::FiniteHorizon.cap(3, 3), 1.0);
        for s in 1..6 {
            assert!(CapRule::FiniteHorizon.cap(s, 8) >= CapRule::Asymptotic.cap(s, 8));
        }
    }

    #[test]
    fn default_k_is_capped_at_twenty() {
        let edges = (0..30).map(|j| (0, j)).collect();
        let inst = Instance::new(InstanceParts::unit(1, 30, edges)).unwrap();
        assert_eq!(default_k_cap(&inst), 20);
        assert_eq!(default_k_cap(&path()), 2);
    }

    #[test]
    fn export_names_rows_and_variables() {
        let mut m = build_lp(&path(), Objective::Ifm, 2).unwrap();
        m.cuts.push(SubsetCut {
            offline: 1,
            online: vec![1],
        });
        let text = m.export_lp_text(&path());
        for needle in ["Maximize", "cap_j0:", "cap_i1:", "link_i0:", "cut_1_1:", "x_0_1", "End"] {
            assert!(text.contains(needle), "missing {needle} in\n{text}");
        }
    }
}
