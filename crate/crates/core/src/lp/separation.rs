use serde::{Deserialize, Serialize};

use super::{CapRule, FEAS_TOL};
use crate::instance::Instance;

/// One member of the subset family: `Σ_{j∈online} x_{offline,j} ≤ cap(|online|)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetCut {
    pub offline: usize,
    pub online: Vec<usize>,
}

/// Exact separation of the subset constraints up to size `k_cap`.
///
/// For a fixed size `s`, the subset of `N_i` with the largest mass is the top
/// `s` values, so checking sorted prefix sums finds a violation whenever one
/// exists. Ties in value are broken by online id.
pub fn separate(
    x: &[f64],
    instance: &Instance,
    k_cap: usize,
    cap_rule: CapRule,
) -> Vec<SubsetCut> {
    let mut cuts = Vec::new();
    for i in 0..instance.n_offline() {
        let mut row: Vec<(f64, usize)> = instance
            .offline_edges(i)
            .iter()
            .map(|&(j, e)| (x[e], j))
            .collect();
        sort_desc(&mut row);
        let mut prefix = 0.0;
        for (s, &(v, _)) in row.iter().enumerate().take(k_cap) {
            prefix += v;
            let size = s + 1;
            if prefix > cap_rule.cap(size, instance.horizon()) + FEAS_TOL {
                let mut online: Vec<usize> = row[..size].iter().map(|&(_, j)| j).collect();
                online.sort_unstable();
                cuts.push(SubsetCut { offline: i, online });
            }
        }
    }
    cuts
}

/// Largest amount by which any subset constraint of size `≤ k_cap` is exceeded
/// (0 when all hold).
pub(crate) fn max_subset_violation(
    x: &[f64],
    instance: &Instance,
    k_cap: usize,
    cap_rule: CapRule,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instance.n_offline() {
        let mut row: Vec<(f64, usize)> = instance
            .offline_edges(i)
            .iter()
            .map(|&(j, e)| (x[e], j))
            .collect();
        sort_desc(&mut row);
        let mut prefix = 0.0;
        for (s, &(v, _)) in row.iter().enumerate().take(k_cap) {
            prefix += v;
            worst = worst.max(prefix - cap_rule.cap(s + 1, instance.horizon()));
        }
    }
    worst
}

fn sort_desc(row: &mut [(f64, usize)]) {
    row.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceParts;

    fn star(values: &[f64]) -> (Instance, Vec<f64>) {
        let n = values.len();
        let edges = (0..n).map(|j| (0, j)).collect();
        let inst = Instance::new(InstanceParts::unit(1, n, edges)).unwrap();
        (inst, values.to_vec())
    }

    #[test]
    fn single_neighbor_above_one_minus_inv_e_is_cut() {
        let (inst, x) = star(&[0.8]);
        let cuts = separate(&x, &inst, 8, CapRule::Asymptotic);
        assert_eq!(
            cuts,
            vec![SubsetCut {
                offline: 0,
                online: vec![0]
            }]
        );
    }

    #[test]
    fn pair_within_caps_is_not_cut() {
        let (inst, x) = star(&[0.6, 0.2]);
        assert!(separate(&x, &inst, 8, CapRule::Asymptotic).is_empty());
    }

    #[test]
    fn zero_point_is_not_cut() {
        let (inst, x) = star(&[0.0; 5]);
        assert!(separate(&x, &inst, 8, CapRule::Asymptotic).is_empty());
        assert_eq!(max_subset_violation(&x, &inst, 8, CapRule::Asymptotic), 0.0);
    }

    #[test]
    fn cut_uses_the_top_prefix() {
        // s=2 prefix {0.62, 0.3} = 0.92 > 0.8647; s=3 total 0.93 < 0.9502
        let (inst, x) = star(&[0.01, 0.62, 0.3]);
        let cuts = separate(&x, &inst, 8, CapRule::Asymptotic);
        assert_eq!(
            cuts,
            vec![SubsetCut {
                offline: 0,
                online: vec![1, 2]
            }]
        );
    }

    #[test]
    fn k_cap_limits_subset_size() {
        let (inst, x) = star(&[0.5, 0.4]);
        assert!(separate(&x, &inst, 1, CapRule::Asymptotic).is_empty());
        assert_eq!(separate(&x, &inst, 2, CapRule::Asymptotic).len(), 1);
    }
}
