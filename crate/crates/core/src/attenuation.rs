//! Monte-Carlo planning of the SAMP-AB muting factors.
//!
//! `β_{i,t}` is chosen so that agent `i` is active at round `t` with
//! probability at most the target `(1 − 1/T)^{t−1}`: if simulations of rounds
//! `1..t−1` (with the already fixed columns) show `i` active at the start of
//! `t` with frequency `α̂_{i,t}`, then `β_{i,t} = min(1, target_t / α̂_{i,t})`,
//! and `β = 1` when `α̂ = 0`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{sample_rounds, Instance};
use crate::lp::LpSolution;
use crate::policy::{MatchState, PolicyError};
use crate::rng::{derive_all, stream, tag, TrialRng};

/// Simulations per round when not configured otherwise.
pub const DEFAULT_SIM_COUNT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub sim_count: usize,
    pub seed: u64,
    /// Recompute `β` only every `stride` rounds, holding the last computed
    /// column in between. 1 computes every column.
    pub stride: usize,
}

impl PlanConfig {
    pub fn new(sim_count: usize, seed: u64) -> Self {
        PlanConfig {
            sim_count,
            seed,
            stride: 1,
        }
    }
}

/// `β_{i,t}` and the estimates `α̂_{i,t}` it was built from. Rounds are
/// 1-based in the accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationTable {
    pub horizon: usize,
    pub n_offline: usize,
    pub sim_count: usize,
    pub seed: u64,
    pub stride: usize,
    pub instance_hash: String,
    pub lp_hash: String,
    /// `beta[t−1][i]`.
    beta: Vec<Vec<f64>>,
    /// `alpha[t−1][i]`.
    alpha: Vec<Vec<f64>>,
    #[serde(skip)]
    attenuated: Vec<Vec<(usize, f64)>>,
}

impl AttenuationTable {
    fn from_columns(
        beta: Vec<Vec<f64>>,
        alpha: Vec<Vec<f64>>,
        n_offline: usize,
        config: PlanConfig,
        instance_hash: String,
        lp_hash: String,
    ) -> Self {
        let mut table = AttenuationTable {
            horizon: beta.len(),
            n_offline,
            sim_count: config.sim_count,
            seed: config.seed,
            stride: config.stride,
            instance_hash,
            lp_hash,
            beta,
            alpha,
            attenuated: Vec::new(),
        };
        table.index();
        table
    }

    fn index(&mut self) {
        self.attenuated = self.beta.iter().map(|col| attenuated_agents(col)).collect();
    }

    /// The all-ones table: SAMP-AB with it is exactly SAMP-B.
    pub fn identity(n_offline: usize, horizon: usize) -> Self {
        let ones = vec![vec![1.0; n_offline]; horizon];
        Self::from_columns(
            ones.clone(),
            ones,
            n_offline,
            PlanConfig {
                sim_count: 0,
                seed: 0,
                stride: 1,
            },
            String::new(),
            String::new(),
        )
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_offline(&self) -> usize {
        self.n_offline
    }

    pub fn beta(&self, i: usize, t: usize) -> f64 {
        self.beta[t - 1][i]
    }

    pub fn alpha(&self, i: usize, t: usize) -> f64 {
        self.alpha[t - 1][i]
    }

    pub fn beta_column(&self, t: usize) -> &[f64] {
        &self.beta[t - 1]
    }

    /// Agents with `β_{i,t} < 1` in ascending id order, with their factor.
    pub fn attenuated(&self, t: usize) -> &[(usize, f64)] {
        &self.attenuated[t - 1]
    }

    /// Cache key: instance hash, LP hash, simulation count and seed.
    pub fn cache_key(&self) -> String {
        format!(
            "{}-{}-{}-{}",
            self.instance_hash, self.lp_hash, self.sim_count, self.seed
        )
    }

    /// Whether this table was planned for exactly these inputs.
    pub fn matches(&self, instance: &Instance, lp: &LpSolution, config: &PlanConfig) -> bool {
        self.instance_hash == instance_fingerprint(instance)
            && self.lp_hash == lp_fingerprint(lp)
            && self.sim_count == config.sim_count
            && self.seed == config.seed
            && self.stride == config.stride
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut table: AttenuationTable = serde_json::from_str(text)?;
        if table.beta.len() != table.horizon
            || table.alpha.len() != table.horizon
            || table
                .beta
                .iter()
                .chain(&table.alpha)
                .any(|c| c.len() != table.n_offline)
        {
            return Err(Error::Data("attenuation table shape does not match its header".into()));
        }
        if table.beta.iter().flatten().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::Data("attenuation factor outside [0, 1]".into()));
        }
        table.index();
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn attenuated_agents(column: &[f64]) -> Vec<(usize, f64)> {
    column
        .iter()
        .enumerate()
        .filter(|(_, &b)| b < 1.0)
        .map(|(i, &b)| (i, b))
        .collect()
}

/// `(1 − 1/T)^{t−1}` for `t = 1..T`.
pub fn target_curve(horizon: usize) -> Vec<f64> {
    if horizon == 0 {
        return Vec::new();
    }
    let q = 1.0 - 1.0 / horizon as f64;
    (0..horizon).map(|k| q.powi(k as i32)).collect()
}

/// SHA-256 of the instance's canonical JSON encoding.
pub fn instance_fingerprint(instance: &Instance) -> String {
    let json = serde_json::to_vec(&instance.to_parts()).expect("instance parts serialise");
    hex(&Sha256::digest(json))
}

/// SHA-256 of the LP edge values' bit patterns.
pub fn lp_fingerprint(lp: &LpSolution) -> String {
    let mut h = Sha256::new();
    for v in &lp.x {
        h.update(v.to_bits().to_le_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Simulates SAMP-AB for `rounds` rounds with the muting lists `attenuated`
/// (indexed by round − 1). `observe(t, state)` runs after round `t`'s muting
/// and before its arrival.
fn simulate(
    instance: &Instance,
    x: &[f64],
    attenuated: &[Vec<(usize, f64)>],
    rounds: usize,
    rng: &mut TrialRng,
    mut observe: impl FnMut(usize, &MatchState),
) -> MatchState {
    use rand::Rng;
    let arrivals = sample_rounds(instance, rounds, rng);
    let mut state = MatchState::new(instance.n_offline(), rounds);
    for (k, &j) in arrivals.iter().enumerate() {
        for &(i, beta) in &attenuated[k] {
            if state.is_active(i) && rng.gen::<f64>() >= beta {
                state.mute(i);
            }
        }
        observe(k + 1, &state);
        let decision = crate::policy::samp_choice(x, instance, &state, j, rng);
        state.record(j, decision);
    }
    state
}

/// Plans the table column by column.
pub fn plan(instance: &Instance, lp: &LpSolution, config: &PlanConfig) -> Result<AttenuationTable> {
    if config.sim_count < 1 {
        return Err(Error::InvalidParameter("sim_count must be at least 1".into()));
    }
    if config.stride < 1 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if lp.x.len() != instance.n_edges() {
        return Err(PolicyError::LpMismatch {
            expected: instance.n_edges(),
            found: lp.x.len(),
        }
        .into());
    }
    let n = instance.n_offline();
    let horizon = instance.horizon();
    let target = target_curve(horizon);
    let mut beta: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut attenuated: Vec<Vec<(usize, f64)>> = Vec::with_capacity(horizon);
    if horizon > 0 {
        beta.push(vec![1.0; n]);
        alpha.push(vec![1.0; n]);
        attenuated.push(Vec::new());
    }
    for t in 2..=horizon {
        if (t - 2) % config.stride != 0 {
            let (b, a) = (beta[t - 2].clone(), alpha[t - 2].clone());
            attenuated.push(attenuated_agents(&b));
            beta.push(b);
            alpha.push(a);
            continue;
        }
        let counts = (0..config.sim_count)
            .into_par_iter()
            .fold(
                || vec![0u32; n],
                |mut acc, r| {
                    let mut rng = stream(derive_all(config.seed, &[tag::PLAN, t as u64, r as u64]));
                    let state = simulate(instance, &lp.x, &attenuated, t - 1, &mut rng, |_, _| {});
                    for (i, c) in acc.iter_mut().enumerate() {
                        *c += u32::from(state.is_active(i));
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u32; n],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        let a_col: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / config.sim_count as f64)
            .collect();
        let b_col: Vec<f64> = a_col
            .iter()
            .map(|&a| if a == 0.0 { 1.0 } else { (target[t - 1] / a).min(1.0) })
            .collect();
        attenuated.push(attenuated_agents(&b_col));
        beta.push(b_col);
        alpha.push(a_col);
        log::debug!("planned attenuation column {t}/{horizon}");
    }
    Ok(AttenuationTable::from_columns(
        beta,
        alpha,
        n,
        *config,
        instance_fingerprint(instance),
        lp_fingerprint(lp),
    ))
}

/// Replays SAMP-AB with `table` over `replicates` fresh simulations and
/// returns, per round `t` (outer index `t − 1`), the fraction of replicates in
/// which each agent is still active right after round `t`'s muting.
pub fn measure_activity(
    instance: &Instance,
    lp: &LpSolution,
    table: &AttenuationTable,
    replicates: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = instance.n_offline();
    let horizon = instance.horizon();
    let counts = (0..replicates)
        .into_par_iter()
        .fold(
            || vec![vec![0u32; n]; horizon],
            |mut acc, r| {
                let mut rng = stream(derive_all(seed, &[tag::PLAN, u64::MAX, r as u64]));
                simulate(instance, &lp.x, &table.attenuated, horizon, &mut rng, |t, s| {
                    for (i, c) in acc[t - 1].iter_mut().enumerate() {
                        *c += u32::from(s.is_active(i));
                    }
                });
                acc
            },
        )
        .reduce(
            || vec![vec![0u32; n]; horizon],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
                }
                a
            },
        );
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / replicates.max(1) as f64).collect())
        .collect()
}
