use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::objective::Objective;

/// Largest `|J|^T` the oracle accepts.
pub const ORACLE_LIMIT: f64 = 1e6;

/// Largest offline side the oracle accepts (it enumerates agent subsets).
const MAX_OFFLINE: usize = 20;

/// Expected clairvoyant optimum `E_S[OPT(S)]`: enumerates every arrival
/// multiset with its multinomial probability and, for each, the best integral
/// matching of arrivals to distinct neighbours.
///
/// IFM ignores agents without neighbours, like the default LP model.
pub fn clairvoyant_oracle(instance: &Instance, objective: Objective) -> Result<f64> {
    let n_on = instance.n_online();
    let horizon = instance.horizon();
    if (n_on as f64).powi(horizon as i32) > ORACLE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{n_on}^{horizon} arrival sequences exceed the oracle limit of {ORACLE_LIMIT}"
        )));
    }
    if instance.n_offline() > MAX_OFFLINE {
        return Err(Error::TooLarge(format!(
            "{} offline agents exceed the oracle limit of {MAX_OFFLINE}",
            instance.n_offline()
        )));
    }
    if objective == Objective::Gfm && instance.groups().is_empty() {
        return Err(Error::InvalidParameter("GFM oracle needs at least one group".into()));
    }
    let t = horizon as f64;
    let probs: Vec<f64> = instance.rates().iter().map(|r| r / t).collect();
    let log_fact: Vec<f64> = (0..=horizon)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let subsets = subset_values(instance, objective);
    let mut memo: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut counts = vec![0usize; n_on];
    let mut total = 0.0;
    compositions(&mut counts, 0, horizon, &mut |c| {
        let mut logp = log_fact[horizon];
        for (j, &k) in c.iter().enumerate() {
            if k > 0 {
                if probs[j] <= 0.0 {
                    return;
                }
                logp += k as f64 * probs[j].ln() - log_fact[k];
            }
        }
        let value = *memo
            .entry(c.to_vec())
            .or_insert_with(|| clairvoyant_value_with(instance, c, &subsets));
        total += logp.exp() * value;
    });
    Ok(total)
}

/// `OPT(S)` for the arrival multiset `counts` (arrivals per online type).
pub fn clairvoyant_value(instance: &Instance, objective: Objective, counts: &[usize]) -> f64 {
    clairvoyant_value_with(instance, counts, &subset_values(instance, objective))
}

/// Objective value of matching exactly the agent set encoded by each mask,
/// sorted best first.
fn subset_values(instance: &Instance, objective: Objective) -> Vec<(u32, f64)> {
    let n = instance.n_offline();
    let mut out: Vec<(u32, f64)> = (0..1u32 << n)
        .map(|mask| {
            let z: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
            (mask, objective.evaluate(instance, &z))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.count_ones().cmp(&b.0.count_ones())));
    out
}

fn clairvoyant_value_with(instance: &Instance, counts: &[usize], subsets: &[(u32, f64)]) -> f64 {
    subsets
        .iter()
        .find(|&&(mask, _)| matchable(instance, counts, mask))
        .map_or(0.0, |&(_, v)| v)
}

/// Whether every agent in `mask` can get a distinct arrival it is adjacent to.
fn matchable(instance: &Instance, counts: &[usize], mask: u32) -> bool {
    let mut load = vec![0usize; counts.len()];
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
    for i in 0..instance.n_offline() {
        if (mask >> i) & 1 == 0 {
            continue;
        }
        let mut seen = vec![false; counts.len()];
        if !augment(instance, counts, i, &mut load, &mut owner, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(
    instance: &Instance,
    counts: &[usize],
    i: usize,
    load: &mut [usize],
    owner: &mut [Vec<usize>],
    seen: &mut [bool],
) -> bool {
    for j in instance.offline_neighbors(i) {
        if seen[j] || counts[j] == 0 {
            continue;
        }
        seen[j] = true;
        if load[j] < counts[j] {
            load[j] += 1;
            owner[j].push(i);
            return true;
        }
        for k in 0..owner[j].len() {
            let other = owner[j][k];
            if augment(instance, counts, other, load, owner, seen) {
                // `other` moved elsewhere; its slot at `j` goes to `i`.
                let pos = owner[j].iter().position(|&a| a == other).expect("owner");
                owner[j][pos] = i;
                return true;
            }
        }
    }
    false
}

fn compositions(counts: &mut [usize], pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        visit(counts);
        counts[pos] = 0;
        return;
    }
    if counts.is_empty() {
        return;
    }
    for k in 0..=left {
        counts[pos] = k;
        compositions(counts, pos + 1, left - k, visit);
    }
    counts[pos] = 0;
}
