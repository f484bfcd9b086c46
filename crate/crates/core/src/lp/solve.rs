use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::program::{MicroLpBackend, RelaxationSolver};
use super::separation::{max_subset_violation, separate, SubsetCut};
use super::{CapRule, LpError, LpModel};
use crate::instance::Instance;
use crate::objective::{group_mean, Objective};

/// Default cap on cutting-plane rounds.
pub const DEFAULT_MAX_ROUNDS: usize = 1000;

#[derive(Clone)]
pub struct SolverConfig {
    pub max_rounds: usize,
    pub backend: Arc<dyn RelaxationSolver>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_rounds: DEFAULT_MAX_ROUNDS,
            backend: Arc::new(MicroLpBackend),
        }
    }
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("max_rounds", &self.max_rounds)
            .field("backend", &self.backend.name())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Final separation found no violated subset constraint.
    Optimal,
    /// Separation kept returning only cuts already in the model; the
    /// remaining violation is solver round-off and was polished away.
    NumericalConvergence,
    /// Produced by a post-processing step rather than the solver.
    Normalized,
}

/// A feasible point of the fully cut relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub objective_kind: Objective,
    /// One value per edge, in [`Instance::edges`] order.
    pub x: Vec<f64>,
    /// `x_i = Σ_j x_ij` per offline agent.
    pub mass: Vec<f64>,
    /// Objective value of `x` (τ for IFM).
    pub objective: f64,
    pub cuts: Vec<SubsetCut>,
    pub rounds: usize,
    pub k_cap: usize,
    pub cap_rule: CapRule,
    pub drop_isolated: bool,
    pub status: SolveStatus,
}

impl LpSolution {
    pub fn cut_count(&self) -> usize {
        self.cuts.len()
    }

    /// Online-side view: `(offline, x_ij)` for every edge at `j`.
    pub fn column(&self, instance: &Instance, j: usize) -> Vec<(usize, f64)> {
        instance
            .online_edges(j)
            .iter()
            .map(|&(i, e)| (i, self.x[e]))
            .collect()
    }
}

/// Cutting-plane loop: solve, separate, add the violated cuts, repeat.
pub fn solve(model: &LpModel, instance: &Instance, config: &SolverConfig) -> Result<LpSolution, LpError> {
    let mut model = model.clone();
    let mut installed: HashSet<SubsetCut> = model.cuts.iter().cloned().collect();
    let n_edges = instance.n_edges();
    let mut rounds = 0;
    let (x, status) = loop {
        if rounds >= config.max_rounds {
            let program = model.program(instance);
            let raw = config.backend.solve(&program)?;
            let x = &raw[..n_edges];
            return Err(LpError::IterationCap {
                rounds,
                last_violation: max_subset_violation(x, instance, model.k_cap, model.cap_rule),
                pending: separate(x, instance, model.k_cap, model.cap_rule).len(),
            });
        }
        rounds += 1;
        let program = model.program(instance);
        let mut raw = config.backend.solve(&program)?;
        raw.truncate(n_edges);
        let violated = separate(&raw, instance, model.k_cap, model.cap_rule);
        if violated.is_empty() {
            break (raw, SolveStatus::Optimal);
        }
        let fresh: Vec<_> = violated
            .into_iter()
            .filter(|c| !installed.contains(c))
            .collect();
        if fresh.is_empty() {
            break (raw, SolveStatus::NumericalConvergence);
        }
        log::debug!("round {rounds}: adding {} subset cuts", fresh.len());
        for cut in fresh {
            installed.insert(cut.clone());
            model.cuts.push(cut);
        }
    };
    let x = polish(x, instance, &model);
    Ok(finish(x, instance, &model, model.cuts.clone(), rounds, status))
}

/// Scales rows and columns down until every capacity and subset constraint
/// holds exactly; removes the solver's round-off.
fn polish(mut x: Vec<f64>, instance: &Instance, model: &LpModel) -> Vec<f64> {
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    for j in 0..instance.n_online() {
        let edges = instance.online_edges(j);
        let total: f64 = edges.iter().map(|&(_, e)| x[e]).sum();
        if total > 1.0 {
            for &(_, e) in edges {
                x[e] /= total;
            }
        }
    }
    for i in 0..instance.n_offline() {
        let edges = instance.offline_edges(i);
        let mut values: Vec<f64> = edges.iter().map(|&(_, e)| x[e]).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let mut factor: f64 = 1.0;
        let mut prefix = 0.0;
        for (s, v) in values.iter().enumerate() {
            prefix += v;
            if s < model.k_cap && prefix > 0.0 {
                factor = factor.min(model.cap(s + 1) / prefix);
            }
        }
        if prefix > 0.0 {
            factor = factor.min(1.0 / prefix);
        }
        if factor < 1.0 {
            for &(_, e) in edges {
                x[e] *= factor;
            }
        }
    }
    x
}

fn agent_mass(x: &[f64], instance: &Instance) -> Vec<f64> {
    (0..instance.n_offline())
        .map(|i| instance.offline_edges(i).iter().map(|&(_, e)| x[e]).sum())
        .collect()
}

fn objective_of(mass: &[f64], instance: &Instance, model: &LpModel) -> f64 {
    match model.objective {
        Objective::Ifm => (0..instance.n_offline())
            .filter(|&i| !model.drop_isolated || !instance.offline_edges(i).is_empty())
            .map(|i| mass[i])
            .reduce(f64::min)
            .unwrap_or(0.0),
        Objective::Gfm => instance
            .groups()
            .iter()
            .map(|g| group_mean(g, mass))
            .reduce(f64::min)
            .unwrap_or(0.0),
        Objective::Vom => instance.weights().iter().zip(mass).map(|(w, m)| w * m).sum(),
    }
}

fn finish(
    x: Vec<f64>,
    instance: &Instance,
    model: &LpModel,
    cuts: Vec<SubsetCut>,
    rounds: usize,
    status: SolveStatus,
) -> LpSolution {
    let mass = agent_mass(&x, instance);
    let objective = objective_of(&mass, instance, model);
    LpSolution {
        objective_kind: model.objective,
        x,
        mass,
        objective,
        cuts,
        rounds,
        k_cap: model.k_cap,
        cap_rule: model.cap_rule,
        drop_isolated: model.drop_isolated,
        status,
    }
}

/// Scales every offline row with `x_i > τ` down to exactly `τ`; the IFM
/// value is unchanged and, since every constraint is a packing constraint,
/// so is feasibility.
pub fn normalize_ifm(solution: &LpSolution, instance: &Instance) -> Result<LpSolution, LpError> {
    if solution.objective_kind != Objective::Ifm {
        return Err(LpError::BadNormalisation(format!(
            "objective is {}",
            solution.objective_kind
        )));
    }
    let tau = solution.objective;
    if !(tau >= 0.0) {
        return Err(LpError::BadNormalisation(format!("tau = {tau}")));
    }
    let mut x = solution.x.clone();
    let mut mass = solution.mass.clone();
    for i in 0..instance.n_offline() {
        if mass[i] > tau {
            let factor = tau / mass[i];
            for &(_, e) in instance.offline_edges(i) {
                x[e] *= factor;
            }
            mass[i] = instance.offline_edges(i).iter().map(|&(_, e)| x[e]).sum();
        }
    }
    Ok(LpSolution {
        x,
        mass,
        objective: tau,
        status: SolveStatus::Normalized,
        ..solution.clone()
    })
}
