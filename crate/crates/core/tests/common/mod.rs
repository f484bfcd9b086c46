//! Shared strategies and independent reference computations for the
//! integration tests.
#![allow(dead_code)]

mod oracles;

#[allow(unused_imports)]
pub use oracles::{brute_force_boost_minimum, violated_by_enumeration};

use fairmatch::instance::{Instance, InstanceParts};
use proptest::prelude::*;

/// Random canonical instance with `|I| ≤ max_off`, `|J| = T ≤ max_on`,
/// uniform weights in `[0, 1]` and a random partition into at most two
/// groups.
pub fn tiny_instance(max_off: usize, max_on: usize) -> impl Strategy<Value = Instance> {
    (1..=max_off, 1..=max_on).prop_flat_map(|(n_off, n_on)| {
        (
            proptest::collection::vec(any::<bool>(), n_off * n_on),
            proptest::collection::vec(0.0f64..=1.0, n_off),
            proptest::collection::vec(any::<bool>(), n_off),
        )
            .prop_map(move |(mask, weights, side)| build(n_off, n_on, &mask, weights, &side))
    })
}

fn build(n_off: usize, n_on: usize, mask: &[bool], weights: Vec<f64>, side: &[bool]) -> Instance {
    let edges = (0..n_off)
        .flat_map(|i| (0..n_on).map(move |j| (i, j)))
        .zip(mask)
        .filter(|(_, &keep)| keep)
        .map(|(e, _)| e)
        .collect();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, &s) in side.iter().enumerate() {
        groups[usize::from(s)].push(i);
    }
    groups.retain(|g| !g.is_empty());
    Instance::new(InstanceParts {
        weights,
        rates: vec![1.0; n_on],
        edges,
        groups,
        horizon: n_on,
    })
    .expect("tiny instance is valid")
}

/// The single-edge instance at horizon `T`: one agent, `T` unit-rate types,
/// only type 0 adjacent.
pub fn single_edge(horizon: usize) -> Instance {
    Instance::new(InstanceParts::unit(1, horizon, vec![(0, 0)])).expect("valid")
}

