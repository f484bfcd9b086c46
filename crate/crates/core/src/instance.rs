//! The KIID market model: offline agents `I`, online types `J`, edges, and the
//! arrival distribution. Each of the `T` rounds draws one online type `j` with
//! probability `r_j / T`.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, tag};
use crate::{Error, Result};

/// Absolute tolerance on arrival rates and their sum.
pub const RATE_TOL: f64 = 1e-9;

/// Raw, unvalidated contents of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceParts {
    /// `w_i` per offline agent.
    pub weights: Vec<f64>,
    /// `r_j` per online type.
    pub rates: Vec<f64>,
    /// `(offline, online)` pairs.
    pub edges: Vec<(usize, usize)>,
    /// Groups of offline agents; may overlap.
    pub groups: Vec<Vec<usize>>,
    pub horizon: usize,
}

impl InstanceParts {
    /// Unit weights, unit rates, singleton groups and `T = |J|`.
    pub fn unit(n_offline: usize, n_online: usize, edges: Vec<(usize, usize)>) -> Self {
        InstanceParts {
            weights: vec![1.0; n_offline],
            rates: vec![1.0; n_online],
            edges,
            groups: singleton_groups(n_offline),
            horizon: n_online,
        }
    }
}

pub fn singleton_groups(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| vec![i]).collect()
}

/// An immutable bipartite instance with adjacency in both directions.
///
/// Edges are kept sorted by `(offline, online)` and deduplicated; the
/// position of an edge in [`Instance::edges`] is its edge index, which the LP
/// layer uses as the variable index.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    weights: Vec<f64>,
    rates: Vec<f64>,
    edges: Vec<(usize, usize)>,
    groups: Vec<Vec<usize>>,
    horizon: usize,
    // (online j, edge index) per offline agent
    offline_adj: Vec<Vec<(usize, usize)>>,
    // (offline i, edge index) per online type
    online_adj: Vec<Vec<(usize, usize)>>,
}

impl Instance {
    /// Builds an instance and rejects it if any invariant is violated.
    pub fn new(parts: InstanceParts) -> Result<Self> {
        let inst = Self::from_parts(parts);
        let violations = validate(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(Error::InvalidInstance(violations))
        }
    }

    /// Builds an instance without validating it. Edges whose endpoints are
    /// out of range are kept in the edge list (so [`validate`] can report
    /// them) but left out of the adjacency.
    pub fn from_parts(parts: InstanceParts) -> Self {
        let InstanceParts {
            weights,
            rates,
            mut edges,
            groups,
            horizon,
        } = parts;
        edges.sort_unstable();
        edges.dedup();
        let mut offline_adj = vec![Vec::new(); weights.len()];
        let mut online_adj = vec![Vec::new(); rates.len()];
        for (e, &(i, j)) in edges.iter().enumerate() {
            if i < weights.len() && j < rates.len() {
                offline_adj[i].push((j, e));
                online_adj[j].push((i, e));
            }
        }
        Instance {
            weights,
            rates,
            edges,
            groups,
            horizon,
            offline_adj,
            online_adj,
        }
    }

    pub fn into_parts(self) -> InstanceParts {
        InstanceParts {
            weights: self.weights,
            rates: self.rates,
            edges: self.edges,
            groups: self.groups,
            horizon: self.horizon,
        }
    }

    pub fn to_parts(&self) -> InstanceParts {
        self.clone().into_parts()
    }

    pub fn n_offline(&self) -> usize {
        self.weights.len()
    }

    pub fn n_online(&self) -> usize {
        self.rates.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// `(online j, edge index)` for each neighbour of offline agent `i`.
    pub fn offline_edges(&self, i: usize) -> &[(usize, usize)] {
        &self.offline_adj[i]
    }

    /// `(offline i, edge index)` for each neighbour of online type `j`.
    pub fn online_edges(&self, j: usize) -> &[(usize, usize)] {
        &self.online_adj[j]
    }

    pub fn offline_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.offline_adj[i].iter().map(|&(j, _)| j)
    }

    pub fn online_neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.online_adj[j].iter().map(|&(i, _)| i)
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i, j)).ok()
    }

    pub fn max_offline_degree(&self) -> usize {
        self.offline_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Offline agents with no neighbours. They are legal but never matched.
    pub fn isolated_offline(&self) -> Vec<usize> {
        (0..self.n_offline())
            .filter(|&i| self.offline_adj[i].is_empty())
            .collect()
    }

    pub fn is_canonical(&self) -> bool {
        self.n_online() == self.horizon && self.rates.iter().all(|&r| (r - 1.0).abs() <= RATE_TOL)
    }

    /// Replaces the group structure, keeping everything else.
    pub fn with_groups(self, groups: Vec<Vec<usize>>) -> Self {
        let mut parts = self.into_parts();
        parts.groups = groups;
        Self::from_parts(parts)
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Self {
        let mut parts = self.into_parts();
        parts.weights = weights;
        Self::from_parts(parts)
    }
}

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    EdgeEndpoint,
    RateSum,
    NegativeRate,
    Horizon,
    EmptyGroup,
    GroupMember,
    NegativeWeight,
}

impl Invariant {
    pub fn name(self) -> &'static str {
        match self {
            Invariant::EdgeEndpoint => "edge-endpoint",
            Invariant::RateSum => "rate-sum",
            Invariant::NegativeRate => "rate-nonnegative",
            Invariant::Horizon => "horizon-positive",
            Invariant::EmptyGroup => "group-nonempty",
            Invariant::GroupMember => "group-member",
            Invariant::NegativeWeight => "weight-nonnegative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant.name(), self.detail)
    }
}

/// Lists every invariant violation; empty iff the instance is well formed.
/// Isolated offline agents are not violations.
pub fn validate(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |invariant, detail: String| out.push(Violation { invariant, detail });
    let (n_i, n_j) = (inst.n_offline(), inst.n_online());

    for (e, &(i, j)) in inst.edges.iter().enumerate() {
        if i >= n_i || j >= n_j {
            push(
                Invariant::EdgeEndpoint,
                format!("edge {e} = (i={i}, j={j}) but |I|={n_i}, |J|={n_j}"),
            );
        }
    }
    for (j, &r) in inst.rates.iter().enumerate() {
        if !(r >= 0.0) || !r.is_finite() {
            push(Invariant::NegativeRate, format!("r_{j} = {r}"));
        }
    }
    let sum: f64 = inst.rates.iter().sum();
    if !((sum - inst.horizon as f64).abs() <= RATE_TOL) {
        push(
            Invariant::RateSum,
            format!("sum of rates is {sum} but horizon T = {}", inst.horizon),
        );
    }
    if inst.horizon == 0 {
        push(Invariant::Horizon, "horizon T must be positive".into());
    }
    for (g, members) in inst.groups.iter().enumerate() {
        if members.is_empty() {
            push(Invariant::EmptyGroup, format!("group {g} is empty"));
        }
        for &i in members {
            if i >= n_i {
                push(
                    Invariant::GroupMember,
                    format!("group {g} contains agent {i} but |I|={n_i}"),
                );
            }
        }
    }
    for (i, &w) in inst.weights.iter().enumerate() {
        if !(w >= 0.0) || !w.is_finite() {
            push(Invariant::NegativeWeight, format!("w_{i} = {w}"));
        }
    }
    out
}

/// Splits each online type with integral rate `r_j` into `r_j` unit-rate
/// copies sharing its neighbourhood. Copies of type `j` get consecutive ids in
/// order of `j`. Types with rate 0 disappear.
pub fn canonicalize(inst: &Instance) -> Result<Instance> {
    if inst.is_canonical() {
        return Ok(inst.clone());
    }
    let mut copies = Vec::with_capacity(inst.n_online());
    for (j, &r) in inst.rates.iter().enumerate() {
        let k = r.round();
        if !((r - k).abs() <= RATE_TOL) || k < 0.0 {
            return Err(Error::NonIntegralRate { online: j, rate: r });
        }
        copies.push(k as usize);
    }
    let mut rates = Vec::new();
    let mut edges = Vec::new();
    for (j, &k) in copies.iter().enumerate() {
        for _ in 0..k {
            let new_j = rates.len();
            rates.push(1.0);
            edges.extend(inst.online_neighbors(j).map(|i| (i, new_j)));
        }
    }
    Ok(Instance::from_parts(InstanceParts {
        weights: inst.weights.clone(),
        horizon: inst.horizon,
        rates,
        edges,
        groups: inst.groups.clone(),
    }))
}

/// The online types arriving in rounds `1..=T`, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalSequence {
    pub rounds: Vec<usize>,
    pub rng_seed: u64,
}

/// Draws `T` i.i.d. arrivals from `{r_j / T}`; a pure function of the seed.
pub fn sample_arrivals(inst: &Instance, seed: u64) -> ArrivalSequence {
    let mut rng = rng::stream(seed);
    let rounds = if inst.horizon == 0 || inst.n_online() == 0 {
        Vec::new()
    } else {
        sample_rounds(inst, inst.horizon, &mut rng)
    };
    ArrivalSequence {
        rounds,
        rng_seed: seed,
    }
}

pub(crate) fn sample_rounds<R: Rng>(inst: &Instance, len: usize, rng: &mut R) -> Vec<usize> {
    match WeightedIndex::new(&inst.rates) {
        Ok(dist) => (0..len).map(|_| dist.sample(rng)).collect(),
        Err(_) => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    Unit,
    /// `w_i ~ Uniform[0, 1]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "blocks")]
pub enum GroupMode {
    Singletons,
    /// Uniformly random partition into `k` blocks of near-equal size.
    RandomPartition(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_offline: usize,
    pub horizon: usize,
    pub degree: usize,
    pub weight_mode: WeightMode,
    pub group_mode: GroupMode,
    pub seed: u64,
}

/// Random instance in which every offline agent picks `degree` distinct
/// online neighbours uniformly from `T` unit-rate types.
pub fn generate_synthetic(p: &SyntheticParams) -> Result<Instance> {
    if p.n_offline == 0 || p.horizon == 0 {
        return Err(Error::InvalidParameter(
            "n_offline and horizon must be at least 1".into(),
        ));
    }
    if p.degree > p.horizon {
        return Err(Error::DegreeTooLarge {
            degree: p.degree,
            horizon: p.horizon,
        });
    }
    let mut rng = rng::stream(rng::derive(p.seed, tag::INSTANCE));
    let mut edges = Vec::with_capacity(p.n_offline * p.degree);
    for i in 0..p.n_offline {
        let mut picks = index::sample(&mut rng, p.horizon, p.degree).into_vec();
        picks.sort_unstable();
        edges.extend(picks.into_iter().map(|j| (i, j)));
    }
    let weights = match p.weight_mode {
        WeightMode::Unit => vec![1.0; p.n_offline],
        WeightMode::Uniform => {
            let mut wr = rng::stream(rng::derive(p.seed, tag::WEIGHTS));
            (0..p.n_offline).map(|_| wr.gen::<f64>()).collect()
        }
    };
    let groups = match p.group_mode {
        GroupMode::Singletons => singleton_groups(p.n_offline),
        GroupMode::RandomPartition(k) => {
            random_partition(p.n_offline, k, rng::derive(p.seed, tag::GROUPS))?
        }
    };
    Instance::new(InstanceParts {
        weights,
        rates: vec![1.0; p.horizon],
        edges,
        groups,
        horizon: p.horizon,
    })
}

/// Shuffles `0..n` and cuts it into `k` contiguous blocks whose sizes differ
/// by at most one. Members of each block are sorted.
pub fn random_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot partition {n} agents into {k} non-empty groups"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng::stream(seed));
    let (base, extra) = (n / k, n % k);
    let mut groups = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let len = base + usize::from(g < extra);
        let mut block = ids[start..start + len].to_vec();
        block.sort_unstable();
        groups.push(block);
        start += len;
    }
    Ok(groups)
}
