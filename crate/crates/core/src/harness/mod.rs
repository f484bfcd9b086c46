//! Experiment orchestration: LP solve → attenuation plan → parallel trials →
//! metrics, plus parameter sweeps and report rendering.
//!
//! Trial `k` of an experiment with master seed `s` uses the trial seed
//! `derive(s, TRIAL, k)` for every policy, so all policies face the same
//! arrival sequences. Trials run in parallel but are merged in trial order, so
//! results do not depend on the thread count.

mod report;
mod sweep;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use report::{experiment_csv, render_text};
pub use sweep::{run_sweep, Generator, Grid, SweepConfig, SweepOutput, SweepRow, SweepSummaryRow};

use crate::attenuation::{instance_fingerprint, plan, AttenuationTable, PlanConfig, DEFAULT_SIM_COUNT};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{build_lp, default_k_cap, solve, LpSolution, SolverConfig};
use crate::objective::{group_mean, Objective};
use crate::policy::{run_trial, Greedy, MgsLite, Policy, PolicyError, PolicyKind, Ranking, SampAb, SampB};
use crate::rng::{derive, derive_all, tag};

/// Normal quantile for the reported 95% half-widths.
pub const Z95: f64 = 1.96;

/// LP masses at or below this count as zero for CR1.
pub const MASS_EPS: f64 = 1e-9;

/// Seed of trial `k` under `master_seed`.
pub fn trial_seed(master_seed: u64, k: usize) -> u64 {
    derive_all(master_seed, &[tag::TRIAL, k as u64])
}

/// Aggregated outcome of one policy over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub policy: String,
    pub objective: Objective,
    pub trials: usize,
    pub master_seed: u64,
    /// `Ẑ_i`, the fraction of trials in which agent `i` was matched.
    pub match_rate: Vec<f64>,
    /// 95% normal-approximation half-width of each `Ẑ_i`.
    pub half_width: Vec<f64>,
    pub objective_estimate: f64,
    pub objective_half_width: f64,
    /// `LP*`, the benchmark the ratios divide by.
    pub lp_objective: f64,
    /// `min_i Ẑ_i / x_i*` over agents with positive LP mass.
    pub cr1: Option<f64>,
    /// Agents left out of CR1 because their LP mass is zero.
    pub cr1_excluded: usize,
    /// `objective_estimate / LP*`.
    pub cr2: Option<f64>,
}

impl TrialReport {
    /// `min_i Ẑ_i / x_i` over agents with `x_i ≥ threshold`.
    pub fn min_ratio(&self, lp_mass: &[f64], threshold: f64) -> Option<f64> {
        self.match_rate
            .iter()
            .zip(lp_mass)
            .filter(|(_, &m)| m >= threshold && m > MASS_EPS)
            .map(|(z, m)| z / m)
            .reduce(f64::min)
    }
}

fn bernoulli_half_width(p: f64, n: usize) -> f64 {
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

fn mean_half_width(sum: f64, sum_sq: f64, n: usize) -> f64 {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Z95 * (var / nf).sqrt()
}

/// Runs `trials` trials of `policy` and aggregates them against `lp`.
pub fn evaluate_policy(
    instance: &Instance,
    policy: &dyn Policy,
    lp: &LpSolution,
    objective: Objective,
    trials: usize,
    master_seed: u64,
) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if objective == Objective::Gfm && instance.groups().is_empty() {
        return Err(PolicyError::NoGroups.into());
    }
    if lp.mass.len() != instance.n_offline() {
        return Err(PolicyError::LpMismatch {
            expected: instance.n_offline(),
            found: lp.mass.len(),
        }
        .into());
    }
    policy.check(instance)?;
    let outcomes: Vec<Vec<u32>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let state = run_trial(instance, policy, trial_seed(master_seed, k))?;
            Ok(state
                .events()
                .iter()
                .filter_map(|e| e.offline.map(|i| i as u32))
                .collect())
        })
        .collect::<std::result::Result<_, PolicyError>>()?;

    let n = instance.n_offline();
    let mut counts = vec![0u64; n];
    let groups = instance.groups();
    let mut group_sum = vec![0.0; groups.len()];
    let mut group_sq = vec![0.0; groups.len()];
    let (mut vom_sum, mut vom_sq) = (0.0, 0.0);
    let mut z = vec![0.0; n];
    for matched in &outcomes {
        for &i in matched {
            counts[i as usize] += 1;
            z[i as usize] = 1.0;
        }
        match objective {
            Objective::Gfm => {
                for (g, members) in groups.iter().enumerate() {
                    let v = group_mean(members, &z);
                    group_sum[g] += v;
                    group_sq[g] += v * v;
                }
            }
            Objective::Vom => {
                let v: f64 = matched.iter().map(|&i| instance.weights()[i as usize]).sum();
                vom_sum += v;
                vom_sq += v * v;
            }
            Objective::Ifm => {}
        }
        for &i in matched {
            z[i as usize] = 0.0;
        }
    }
    let match_rate: Vec<f64> = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    let half_width = match_rate.iter().map(|&p| bernoulli_half_width(p, trials)).collect();
    let objective_estimate = objective.evaluate(instance, &match_rate);
    let objective_half_width = match objective {
        Objective::Ifm => (0..n)
            .filter(|&i| !instance.offline_edges(i).is_empty())
            .min_by(|&a, &b| match_rate[a].total_cmp(&match_rate[b]).then(a.cmp(&b)))
            .map_or(0.0, |i| bernoulli_half_width(match_rate[i], trials)),
        Objective::Gfm => (0..groups.len())
            .min_by(|&a, &b| group_sum[a].total_cmp(&group_sum[b]).then(a.cmp(&b)))
            .map_or(0.0, |g| mean_half_width(group_sum[g], group_sq[g], trials)),
        Objective::Vom => mean_half_width(vom_sum, vom_sq, trials),
    };

    let positive = lp.mass.iter().filter(|&&m| m > MASS_EPS).count();
    let cr1 = if lp.objective > 0.0 {
        match_rate
            .iter()
            .zip(&lp.mass)
            .filter(|(_, &m)| m > MASS_EPS)
            .map(|(z, m)| z / m)
            .reduce(f64::min)
    } else {
        None
    };
    let cr2 = (lp.objective > 0.0).then(|| objective_estimate / lp.objective);
    Ok(TrialReport {
        policy: policy.name(),
        objective,
        trials,
        master_seed,
        match_rate,
        half_width,
        objective_estimate,
        objective_half_width,
        lp_objective: lp.objective,
        cr1,
        cr1_excluded: n - positive,
        cr2,
    })
}

/// Everything [`run_experiment`] needs besides the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub objective: Objective,
    pub policies: Vec<PolicyKind>,
    pub trials: usize,
    pub seed: u64,
    /// Subset-size cap for the LP; `None` uses the default.
    pub k_cap: Option<usize>,
    pub sim_count: usize,
    pub stride: usize,
    /// Worker threads; `None` uses the global pool. Results do not depend on
    /// it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(objective: Objective, policies: Vec<PolicyKind>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            objective,
            policies,
            trials,
            seed,
            k_cap: None,
            sim_count: DEFAULT_SIM_COUNT,
            stride: 1,
            threads: None,
        }
    }

    /// Seeds and settings of the attenuation planner.
    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            sim_count: self.sim_count,
            seed: derive(self.seed, tag::PLAN),
            stride: self.stride,
        }
    }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// SHA-256 over the config and the instance; identifies the run.
    pub config_hash: String,
    pub instance_hash: String,
    pub lp_objective: f64,
    pub lp_mass: Vec<f64>,
    pub lp_cuts: usize,
    pub k_cap: usize,
    pub reports: Vec<TrialReport>,
}

/// Hash identifying a run: the experiment config plus the instance.
pub fn config_hash(config: &ExperimentConfig, instance: &Instance) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serialises"));
    h.update(instance_fingerprint(instance).as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds one policy. LP-based policies need `lp`; SAMP-AB needs `table`.
pub fn build_policy(
    kind: PolicyKind,
    objective: Objective,
    lp: Option<&Arc<LpSolution>>,
    table: Option<&Arc<AttenuationTable>>,
) -> Result<Box<dyn Policy>> {
    let need_lp = || lp.cloned().ok_or(PolicyError::MissingLp(kind));
    Ok(match kind {
        PolicyKind::SampB => Box::new(SampB::new(need_lp()?)),
        PolicyKind::SampAb => Box::new(SampAb::new(
            need_lp()?,
            table.cloned().ok_or(PolicyError::MissingTable)?,
        )),
        PolicyKind::MgsLite => Box::new(MgsLite::new(need_lp()?)),
        PolicyKind::Greedy => Box::new(Greedy::new(objective)),
        PolicyKind::Ranking => Box::new(Ranking),
    })
}

/// Solves the LP, plans attenuation if SAMP-AB is requested, and evaluates
/// every policy on common arrival sequences.
pub fn run_experiment(instance: &Instance, config: &ExperimentConfig) -> Result<Experiment> {
    run_experiment_with(instance, config, None)
}

/// Like [`run_experiment`], but reuses `table` when it was planned for this
/// instance, LP and plan config.
pub fn run_experiment_with(
    instance: &Instance,
    config: &ExperimentConfig,
    table: Option<AttenuationTable>,
) -> Result<Experiment> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| experiment_inner(instance, config, table)),
        None => experiment_inner(instance, config, table),
    }
}

fn experiment_inner(
    instance: &Instance,
    config: &ExperimentConfig,
    table: Option<AttenuationTable>,
) -> Result<Experiment> {
    if config.policies.is_empty() {
        return Err(Error::InvalidParameter("no policies requested".into()));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let k_cap = config.k_cap.unwrap_or_else(|| default_k_cap(instance));
    let model = build_lp(instance, config.objective, k_cap)?;
    let lp = Arc::new(solve(&model, instance, &SolverConfig::default())?);
    let table = if config.policies.contains(&PolicyKind::SampAb) {
        let plan_cfg = config.plan_config();
        let t = match table {
            Some(t) if t.matches(instance, &lp, &plan_cfg) => t,
            Some(_) => {
                log::warn!("attenuation table does not match this run; replanning");
                plan(instance, &lp, &plan_cfg)?
            }
            None => plan(instance, &lp, &plan_cfg)?,
        };
        Some(Arc::new(t))
    } else {
        None
    };
    let mut reports = Vec::with_capacity(config.policies.len());
    for &kind in &config.policies {
        let policy = build_policy(kind, config.objective, Some(&lp), table.as_ref())?;
        reports.push(evaluate_policy(
            instance,
            policy.as_ref(),
            &lp,
            config.objective,
            config.trials,
            config.seed,
        )?);
    }
    Ok(Experiment {
        config: config.clone(),
        config_hash: config_hash(config, instance),
        instance_hash: instance_fingerprint(instance),
        lp_objective: lp.objective,
        lp_mass: lp.mass.clone(),
        lp_cuts: lp.cut_count(),
        k_cap,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceParts;

    #[test]
    fn half_widths() {
        assert_eq!(bernoulli_half_width(0.0, 10), 0.0);
        assert!((bernoulli_half_width(0.5, 100) - 0.098).abs() < 1e-12);
        assert_eq!(mean_half_width(3.0, 3.0, 3), 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let inst = Instance::new(InstanceParts::unit(1, 1, vec![(0, 0)])).unwrap();
        let cfg = ExperimentConfig::new(Objective::Ifm, vec![PolicyKind::SampB], 0, 1);
        assert!(matches!(run_experiment(&inst, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let inst = Instance::new(InstanceParts::unit(
            3,
            3,
            vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)],
        ))
        .unwrap();
        let mut cfg = ExperimentConfig::new(Objective::Ifm, vec![PolicyKind::SampB, PolicyKind::Ranking], 500, 9);
        cfg.threads = Some(1);
        let a = run_experiment(&inst, &cfg).unwrap();
        cfg.threads = Some(4);
        let b = run_experiment(&inst, &cfg).unwrap();
        assert_eq!(a.reports, b.reports);
    }
}
