use rand::seq::SliceRandom;

use super::{pick_uniform, Decision, MatchState, Policy, PolicyError, PolicyRun};
use crate::instance::Instance;
use crate::objective::Objective;
use crate::rng::TrialRng;

/// Matches each arrival to the available neighbour that helps the objective
/// most right now, breaking ties uniformly.
///
/// * IFM: every available neighbour ties, so the choice is uniform.
/// * GFM: the neighbour whose groups have the lowest matched fraction (an
///   agent in several groups is scored by its neediest group).
/// * VOM: the neighbour with the largest weight.
#[derive(Debug, Clone, Copy)]
pub struct Greedy {
    objective: Objective,
}

impl Greedy {
    pub fn new(objective: Objective) -> Self {
        Greedy { objective }
    }
}

struct GreedyRun<'a> {
    objective: Objective,
    instance: &'a Instance,
    /// Groups of each agent (GFM only).
    membership: Vec<Vec<usize>>,
    group_matched: Vec<usize>,
    candidates: Vec<usize>,
}

impl GreedyRun<'_> {
    fn score(&self, i: usize) -> f64 {
        match self.objective {
            Objective::Ifm => 0.0,
            Objective::Vom => -self.instance.weights()[i],
            Objective::Gfm => self.membership[i]
                .iter()
                .map(|&g| self.group_matched[g] as f64 / self.instance.groups()[g].len() as f64)
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl PolicyRun for GreedyRun<'_> {
    fn choose(&mut self, state: &MatchState, online: usize, rng: &mut TrialRng) -> Decision {
        self.candidates.clear();
        let mut best = f64::INFINITY;
        for i in self.instance.online_neighbors(online) {
            if !state.is_active(i) {
                continue;
            }
            let s = self.score(i);
            if s < best {
                best = s;
                self.candidates.clear();
                self.candidates.push(i);
            } else if s == best {
                self.candidates.push(i);
            }
        }
        if self.candidates.is_empty() {
            return Decision::Reject;
        }
        let i = pick_uniform(&self.candidates, rng);
        for &g in &self.membership[i] {
            self.group_matched[g] += 1;
        }
        Decision::Match(i)
    }
}

impl Policy for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn check(&self, instance: &Instance) -> Result<(), PolicyError> {
        if self.objective == Objective::Gfm && instance.groups().is_empty() {
            return Err(PolicyError::NoGroups);
        }
        Ok(())
    }

    fn start<'a>(&'a self, instance: &'a Instance, _rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        let mut membership = vec![Vec::new(); instance.n_offline()];
        if self.objective == Objective::Gfm {
            for (g, members) in instance.groups().iter().enumerate() {
                for &i in members {
                    membership[i].push(g);
                }
            }
        }
        Box::new(GreedyRun {
            objective: self.objective,
            instance,
            membership,
            group_matched: vec![0; instance.groups().len()],
            candidates: Vec::new(),
        })
    }
}

/// Draws a uniformly random priority order at trial start and matches each
/// arrival to its available neighbour of lowest rank.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ranking;

struct RankingRun<'a> {
    instance: &'a Instance,
    rank: Vec<usize>,
}

impl PolicyRun for RankingRun<'_> {
    fn choose(&mut self, state: &MatchState, online: usize, _rng: &mut TrialRng) -> Decision {
        self.instance
            .online_neighbors(online)
            .filter(|&i| state.is_active(i))
            .min_by_key(|&i| self.rank[i])
            .map_or(Decision::Reject, Decision::Match)
    }
}

impl Ranking {
    /// Runs with a fixed permutation: `order[k]` is the agent of rank `k`.
    pub fn with_order(order: &[usize]) -> FixedRanking {
        let mut rank = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        FixedRanking { rank }
    }
}

impl Policy for Ranking {
    fn name(&self) -> String {
        "ranking".into()
    }

    fn check(&self, _instance: &Instance) -> Result<(), PolicyError> {
        Ok(())
    }

    fn start<'a>(&'a self, instance: &'a Instance, rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        let mut order: Vec<usize> = (0..instance.n_offline()).collect();
        order.shuffle(rng);
        let mut rank = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        Box::new(RankingRun { instance, rank })
    }
}

/// RANKING with a caller-chosen permutation instead of a random one.
#[derive(Debug, Clone)]
pub struct FixedRanking {
    rank: Vec<usize>,
}

impl Policy for FixedRanking {
    fn name(&self) -> String {
        "ranking-fixed".into()
    }

    fn check(&self, instance: &Instance) -> Result<(), PolicyError> {
        if self.rank.len() != instance.n_offline() {
            return Err(PolicyError::RankingSize {
                ranking: self.rank.len(),
                instance: instance.n_offline(),
            });
        }
        Ok(())
    }

    fn start<'a>(&'a self, instance: &'a Instance, _rng: &mut TrialRng) -> Box<dyn PolicyRun + 'a> {
        Box::new(RankingRun {
            instance,
            rank: self.rank.clone(),
        })
    }
}
