use std::sync::Arc;

use rand::Rng;

use super::{sample_weighted, Decision, MatchState, Policy, PolicyError, PolicyRun};
use crate::attenuation::AttenuationTable;
use crate::instance::Instance;
use crate::lp::LpSolution;
use crate::rng::TrialRng;

fn check_lp(lp: &LpSolution, instance: &Instance) -> Result<(), PolicyError> {
    if lp.x.len() != instance.n_edges() {
        return Err(PolicyError::LpMismatch {
            expected: instance.n_edges(),
            found: lp.x.len(),
        });
    }
    Ok(())
}

/// Active neighbours of `online` with their LP values.
fn active_column(
    x: &[f64],
    instance: &Instance,
    state: &MatchState,
    online: usize,
) -> (Vec<(usize, f64)>, f64) {
    let mut total = 0.0;
    let items: Vec<_> = instance
        .online_edges(online)
        .iter()
        .filter(|&&(i, _)| state.is_active(i))
        .map(|&(i, e)| {
            total += x[e];
            (i, x[e])
        })
        .collect();
    (items, total)
}

/// The boosted sampling distribution at an arrival of `online`: LP values
/// over the active neighbours, renormalised. Empty when there is no active
/// neighbour or their LP mass is zero.
pub fn boosted_distribution(
    lp: &LpSolution,
    instance: &Instance,
    state: &MatchState,
    online: usize,
) -> Vec<(usize, f64)> {
    let (items, total) = active_column(&lp.x, instance, state, online);
    if total <= 0.0 {
        return Vec::new();
    }
    items.into_iter().map(|(i, v)| (i, v / total)).collect()
}

pub(crate) fn boosted_choice(
    x: &[f64],
    instance: &Instance,
    state: &MatchState,
    online: usize,
    rng: &mut TrialRng,
) -> Decision {
    let (items, total) = active_column(x, instance, state, online);
    if total <= 0.0 {
        Decision::Reject
    } else {
        Decision::Match(sample_weighted(&items, total, rng))
    }
}

/// Applies round `round`'s muting coins. Only agents with `β < 1` flip a
/// coin, in ascending id order.
pub(crate) fn attenuate(
    table: &AttenuationTable,
    state: &mut MatchState,
    round: usize,
    rng: &mut TrialRng,
) {
    for &(i, beta) in table.attenuated(round) {
        if state.is_active(i) && rng.gen::<f64>() >= beta {
            state.mute(i);
        }
    }
}

/// Sampling with boosting: each arrival samples an active neighbour with
/// probability proportional to its LP value.
#[derive(Debug, Clone)]
pub struct SampB {
    lp: Arc<LpSolution>,
}

impl SampB {
    pub fn new(lp: Arc<LpSolution>) -> Self {
        SampB { lp }
    }
}

struct SampBRun<'a> {
    x: &'a [f64],
    instance: &'a Instance,
}

impl PolicyRun for SampBRun<'_> {
    fn choose(&mut self, state: &MatchState, online: usize, rng: &mut TrialRng) -> Decision {
        boosted_choice(self.x, self.instance, state, online, rng)
    }
}

impl Policy for SampB {
    fn name(&self) -> String {
        "samp-b".into()
    }

    fn check(&self, instance: &Instance) -> Result<(), PolicyError> {
        check_lp(&self.lp, instance)
    }

    fn start<'a>(&'a self, instance: &'a Instance, _rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        Box::new(SampBRun {
            x: &self.lp.x,
            instance,
        })
    }
}

/// Sampling with attenuation and boosting: before each arrival, every active
/// agent stays active with probability `β_{i,t}`; then SAMP-B runs over the
/// agents still active.
#[derive(Debug, Clone)]
pub struct SampAb {
    lp: Arc<LpSolution>,
    table: Arc<AttenuationTable>,
}

impl SampAb {
    pub fn new(lp: Arc<LpSolution>, table: Arc<AttenuationTable>) -> Self {
        SampAb { lp, table }
    }

    pub fn table(&self) -> &AttenuationTable {
        &self.table
    }
}

struct SampAbRun<'a> {
    x: &'a [f64],
    table: &'a AttenuationTable,
    instance: &'a Instance,
}

impl PolicyRun for SampAbRun<'_> {
    fn prepare_round(&mut self, state: &mut MatchState, rng: &mut TrialRng) {
        attenuate(self.table, state, state.round() + 1, rng);
    }

    fn choose(&mut self, state: &MatchState, online: usize, rng: &mut TrialRng) -> Decision {
        boosted_choice(self.x, self.instance, state, online, rng)
    }
}

impl Policy for SampAb {
    fn name(&self) -> String {
        "samp-ab".into()
    }

    fn check(&self, instance: &Instance) -> Result<(), PolicyError> {
        check_lp(&self.lp, instance)?;
        if self.table.horizon() != instance.horizon() || self.table.n_offline() != instance.n_offline() {
            return Err(PolicyError::TableMismatch {
                table: self.table.horizon(),
                instance: instance.horizon(),
                table_agents: self.table.n_offline(),
                instance_agents: instance.n_offline(),
            });
        }
        Ok(())
    }

    fn start<'a>(&'a self, instance: &'a Instance, _rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        Box::new(SampAbRun {
            x: &self.lp.x,
            table: &self.table,
            instance,
        })
    }
}

/// Produces the two candidates MGS-lite inspects at an arrival.
pub trait CandidatePairGenerator: Send + Sync {
    fn name(&self) -> &str;

    /// `column` lists `(offline, x_ij)` for every neighbour of the arriving
    /// type (its values sum to at most 1); `None` stands for the residual
    /// "no candidate" mass.
    fn draw(&self, column: &[(usize, f64)], rng: &mut TrialRng) -> [Option<usize>; 2];
}

/// Two independent draws from the LP column.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndependentPairs;

impl IndependentPairs {
    fn one(column: &[(usize, f64)], rng: &mut TrialRng) -> Option<usize> {
        let u = rng.gen::<f64>();
        let mut acc = 0.0;
        for &(i, v) in column {
            acc += v;
            if u < acc {
                return Some(i);
            }
        }
        None
    }
}

impl CandidatePairGenerator for IndependentPairs {
    fn name(&self) -> &str {
        "independent"
    }

    fn draw(&self, column: &[(usize, f64)], rng: &mut TrialRng) -> [Option<usize>; 2] {
        [Self::one(column, rng), Self::one(column, rng)]
    }
}

/// Two LP-guided candidates per arrival, matched to the first available one.
#[derive(Clone)]
pub struct MgsLite {
    lp: Arc<LpSolution>,
    generator: Arc<dyn CandidatePairGenerator>,
}

impl MgsLite {
    pub fn new(lp: Arc<LpSolution>) -> Self {
        Self::with_generator(lp, Arc::new(IndependentPairs))
    }

    pub fn with_generator(lp: Arc<LpSolution>, generator: Arc<dyn CandidatePairGenerator>) -> Self {
        MgsLite { lp, generator }
    }
}

struct MgsRun<'a> {
    policy: &'a MgsLite,
    instance: &'a Instance,
}

impl PolicyRun for MgsRun<'_> {
    fn choose(&mut self, state: &MatchState, online: usize, rng: &mut TrialRng) -> Decision {
        let x = &self.policy.lp.x;
        let column: Vec<_> = self
            .instance
            .online_edges(online)
            .iter()
            .map(|&(i, e)| (i, x[e]))
            .collect();
        self.policy
            .generator
            .draw(&column, rng)
            .into_iter()
            .flatten()
            .find(|&i| state.is_active(i))
            .map_or(Decision::Reject, Decision::Match)
    }
}

impl Policy for MgsLite {
    fn name(&self) -> String {
        format!("mgs-lite/{}", self.generator.name())
    }

    fn check(&self, instance: &Instance) -> Result<(), PolicyError> {
        check_lp(&self.lp, instance)
    }

    fn start<'a>(&'a self, instance: &'a Instance, _rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        Box::new(MgsRun {
            policy: self,
            instance,
        })
    }
}
