//! Online policies behind one stepping interface.
//!
//! A [`Policy`] is shared read-only across trials; [`Policy::start`] creates
//! the per-trial [`PolicyRun`] (e.g. RANKING's permutation). Each arrival is
//! processed by [`step`]: the run may first adjust the state (attenuation),
//! then picks an active neighbour or rejects.
//!
//! Randomness: a trial uses two streams derived from its seed, one for the
//! arrival sequence and one for every decision coin. Keeping them apart means
//! every policy sees the same arrivals for the same trial seed.

mod baselines;
mod samp;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{FixedRanking, Greedy, Ranking};
pub use samp::{
    boosted_distribution, CandidatePairGenerator, IndependentPairs, MgsLite, SampAb, SampB,
};
pub use state::{AgentStatus, Decision, MatchEvent, MatchState};

pub(crate) use samp::boosted_choice as samp_choice;

use crate::instance::{sample_arrivals, Instance};
use crate::rng::{derive, stream, tag, TrialRng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("LP solution has {found} edge values but the instance has {expected} edges")]
    LpMismatch { expected: usize, found: usize },
    #[error("attenuation table covers horizon {table} and {table_agents} agents, instance has horizon {instance} and {instance_agents} agents")]
    TableMismatch {
        table: usize,
        instance: usize,
        table_agents: usize,
        instance_agents: usize,
    },
    #[error("GFM greedy needs at least one group")]
    NoGroups,
    #[error("policy {0} needs an LP solution")]
    MissingLp(PolicyKind),
    #[error("policy samp-ab needs an attenuation table")]
    MissingTable,
    #[error("fixed ranking covers {ranking} agents, instance has {instance}")]
    RankingSize { ranking: usize, instance: usize },
    #[error("unknown policy {0:?} (expected samp-b, samp-ab, greedy, ranking or mgs-lite)")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "samp-b")]
    SampB,
    #[serde(rename = "samp-ab")]
    SampAb,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "ranking")]
    Ranking,
    #[serde(rename = "mgs-lite")]
    MgsLite,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::SampB,
        PolicyKind::SampAb,
        PolicyKind::Greedy,
        PolicyKind::Ranking,
        PolicyKind::MgsLite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::SampB => "samp-b",
            PolicyKind::SampAb => "samp-ab",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Ranking => "ranking",
            PolicyKind::MgsLite => "mgs-lite",
        }
    }

    pub fn needs_lp(self) -> bool {
        matches!(self, PolicyKind::SampB | PolicyKind::SampAb | PolicyKind::MgsLite)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm || k.as_str().replace('-', "") == norm)
            .ok_or_else(|| PolicyError::UnknownPolicy(s.to_string()))
    }
}

/// A policy configuration, shared read-only by all trials.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Rejects configurations that do not fit `instance`.
    fn check(&self, instance: &Instance) -> Result<(), PolicyError>;

    /// Per-trial initialisation; may consume decision randomness.
    fn start<'a>(&'a self, instance: &'a Instance, rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a>;
}

/// Per-trial policy state.
pub trait PolicyRun {
    /// Called before each arrival is revealed, with `state.round() + 1` the
    /// upcoming round.
    fn prepare_round(&mut self, _state: &mut MatchState, _rng: &mut TrialRng) {}

    /// Picks an active neighbour of `online` or rejects. A returned match is
    /// applied to the state.
    fn choose(&mut self, state: &MatchState, online: usize, rng: &mut TrialRng) -> Decision;
}

/// Processes one arrival of type `online`.
pub fn step(
    run: &mut dyn PolicyRun,
    state: &mut MatchState,
    online: usize,
    rng: &mut TrialRng,
) -> Decision {
    run.prepare_round(state, rng);
    let decision = run.choose(state, online, rng);
    state.record(online, decision);
    decision
}

/// Runs `policy` on the given arrivals with decisions drawn from
/// `decision_seed`.
pub fn run_sequence(
    instance: &Instance,
    policy: &dyn Policy,
    rounds: &[usize],
    decision_seed: u64,
) -> Result<MatchState, PolicyError> {
    policy.check(instance)?;
    let mut rng = stream(decision_seed);
    let mut run = policy.start(instance, &mut rng);
    let mut state = MatchState::new(instance.n_offline(), rounds.len());
    for &j in rounds {
        step(run.as_mut(), &mut state, j, &mut rng);
    }
    Ok(state)
}

/// Seed of the arrival stream of a trial.
pub fn arrival_seed(trial_seed: u64) -> u64 {
    derive(trial_seed, tag::ARRIVALS)
}

/// Seed of the decision stream of a trial.
pub fn decision_seed(trial_seed: u64) -> u64 {
    derive(trial_seed, tag::DECISIONS)
}

/// One full trial: samples `T` arrivals and runs the policy on them.
pub fn run_trial(
    instance: &Instance,
    policy: &dyn Policy,
    trial_seed: u64,
) -> Result<MatchState, PolicyError> {
    let arrivals = sample_arrivals(instance, arrival_seed(trial_seed));
    run_sequence(instance, policy, &arrivals.rounds, decision_seed(trial_seed))
}

/// Draws an index from `items` proportionally to the weights, which must sum
/// to `total > 0`. Round-off at the top end falls back to the last positive
/// item.
pub(crate) fn sample_weighted(items: &[(usize, f64)], total: f64, rng: &mut TrialRng) -> usize {
    use rand::Rng;
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for &(i, w) in items {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if u < acc {
                return i;
            }
        }
    }
    last.expect("sample_weighted needs positive total mass")
}

/// Uniform pick from a non-empty slice.
pub(crate) fn pick_uniform(items: &[usize], rng: &mut TrialRng) -> usize {
    use rand::Rng;
    if items.len() == 1 {
        items[0]
    } else {
        items[rng.gen_range(0..items.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_kind_round_trips() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("SAMP_AB".parse::<PolicyKind>().unwrap(), PolicyKind::SampAb);
        assert_eq!("mgslite".parse::<PolicyKind>().unwrap(), PolicyKind::MgsLite);
        assert!("bssx".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn weighted_sampling_follows_weights() {
        let mut rng = stream(5);
        let items = [(0, 0.3), (1, 0.0), (2, 0.1)];
        let n = 40_000;
        let hits = (0..n)
            .filter(|_| sample_weighted(&items, 0.4, &mut rng) == 0)
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 5.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }
}
