use crate::instance::{singleton_groups, Instance, InstanceParts};
use crate::lp::{CapRule, LpSolution, SolveStatus};
use crate::objective::Objective;

/// `n` online types whose neighbourhoods are disjoint except for one shared
/// agent `i* = 0`. Every type has `n` neighbours: `i*` plus `n − 1` private
/// agents, so `|I| = n(n − 1) + 1`. Weights are 1 for `i*` and `n^{−3}` for
/// the others; `T = n`.
///
/// # Panics
/// When `n < 2`.
pub fn make_example1(n: usize) -> Instance {
    assert!(n >= 2, "example 1 needs n >= 2");
    let n_offline = n * (n - 1) + 1;
    let mut edges = Vec::with_capacity(n * n);
    for j in 0..n {
        edges.push((0, j));
        for k in 0..n - 1 {
            edges.push((1 + j * (n - 1) + k, j));
        }
    }
    let small = (n as f64).powi(-3);
    let mut weights = vec![small; n_offline];
    weights[0] = 1.0;
    Instance::new(InstanceParts {
        weights,
        rates: vec![1.0; n],
        edges,
        groups: singleton_groups(n_offline),
        horizon: n,
    })
    .expect("example 1 is a valid instance")
}

/// The uniform point `x_ij = 1/n` on [`make_example1`], an optimal VOM
/// solution with value `1 + ε² − ε³` for `ε = 1/n`.
///
/// The point saturates `i*` (mass 1), so it satisfies the subset constraints
/// only up to size `n − 1`: the full neighbourhood would need
/// `1 ≤ 1 − e^{−n}`. The returned solution records `k_cap = n − 1`.
pub fn example1_solution(n: usize) -> LpSolution {
    let inst = make_example1(n);
    let eps = 1.0 / n as f64;
    let x = vec![eps; inst.n_edges()];
    let mass: Vec<f64> = (0..inst.n_offline())
        .map(|i| inst.offline_edges(i).iter().map(|&(_, e)| x[e]).sum())
        .collect();
    let objective = Objective::Vom.evaluate(&inst, &mass);
    LpSolution {
        objective_kind: Objective::Vom,
        x,
        mass,
        objective,
        cuts: Vec::new(),
        rounds: 0,
        k_cap: n - 1,
        cap_rule: CapRule::Asymptotic,
        drop_isolated: true,
        status: SolveStatus::Optimal,
    }
}

/// The instance separating GREEDY and RANKING from SAMP-B: `|I| = |J| = T = n`,
/// online type 0 is adjacent to every agent and type `j ≥ 1` only to agent
/// `j`. Agent 0 therefore has the single neighbour type 0.
///
/// # Panics
/// When `n < 2`.
pub fn make_example_worst(n: usize) -> Instance {
    assert!(n >= 2, "the worst-case example needs n >= 2");
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, 0)).collect();
    edges.extend((1..n).map(|j| (j, j)));
    Instance::new(InstanceParts::unit(n, n, edges)).expect("worst-case example is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::check_feasibility;

    #[test]
    fn example1_shape() {
        let inst = make_example1(3);
        assert_eq!(inst.n_offline(), 7);
        assert_eq!(inst.offline_edges(0).len(), 3);
        assert!((1..7).all(|i| inst.offline_edges(i).len() == 1));
        assert!((0..3).all(|j| inst.online_edges(j).len() == 3));
    }

    #[test]
    fn example1_uniform_point_is_feasible() {
        for n in [3, 10] {
            let inst = make_example1(n);
            let sol = example1_solution(n);
            let rep = check_feasibility(&sol.x, &inst, n - 1, CapRule::Asymptotic);
            assert!(rep.is_feasible(1e-9), "{rep:?}");
            // the size-n subset of i* is short by exactly e^{-n}
            let full = check_feasibility(&sol.x, &inst, n, CapRule::Asymptotic);
            assert!((full.subset - (-(n as f64)).exp()).abs() < 1e-12, "{full:?}");
        }
        let eps = 0.1;
        assert!((example1_solution(10).objective - (1.0 + eps * eps - eps * eps * eps)).abs() < 1e-12);
    }

    #[test]
    fn worst_case_degrees() {
        let inst = make_example_worst(4);
        let deg: Vec<_> = (0..4).map(|j| inst.online_edges(j).len()).collect();
        assert_eq!(deg, vec![4, 1, 1, 1]);
        assert_eq!(inst.offline_neighbors(0).collect::<Vec<_>>(), vec![0]);
    }
}
