mod common;

use std::sync::Arc;

use common::{single_edge, tiny_instance};
use fairmatch::instance::InstanceParts;
use fairmatch::attenuation::AttenuationTable;
use fairmatch::bounds::{make_example_worst, one_minus_inv_e};
use fairmatch::harness::{evaluate_policy, run_experiment, ExperimentConfig, TrialReport};
use fairmatch::instance::Instance;
use fairmatch::lp::{build_lp, default_k_cap, solve, LpSolution, SolverConfig};
use fairmatch::objective::Objective;
use fairmatch::policy::{
    boosted_distribution, run_trial, Greedy, MatchState, MgsLite, Policy, PolicyKind, Ranking, SampAb, SampB,
};
use proptest::prelude::*;

fn lp(inst: &Instance, objective: Objective) -> Arc<LpSolution> {
    let model = build_lp(inst, objective, default_k_cap(inst)).unwrap();
    Arc::new(solve(&model, inst, &SolverConfig::default()).unwrap())
}

fn report(inst: &Instance, policy: &dyn Policy, sol: &LpSolution, trials: usize, seed: u64) -> TrialReport {
    evaluate_policy(inst, policy, sol, sol.objective_kind, trials, seed).unwrap()
}

fn all_policies(inst: &Instance, sol: &Arc<LpSolution>) -> Vec<Box<dyn Policy>> {
    let table = Arc::new(AttenuationTable::identity(inst.n_offline(), inst.horizon()));
    vec![
        Box::new(SampB::new(sol.clone())),
        Box::new(SampAb::new(sol.clone(), table)),
        Box::new(MgsLite::new(sol.clone())),
        Box::new(Greedy::new(sol.objective_kind)),
        Box::new(Ranking),
    ]
}

#[test]
fn single_edge_match_rate_is_the_arrival_probability() {
    for t in [1usize, 4, 20] {
        let inst = single_edge(t);
        let sol = lp(&inst, Objective::Ifm);
        let trials = 10_000;
        let r = report(&inst, &SampB::new(sol.clone()), &sol, trials, 7);
        let p = 1.0 - (1.0 - 1.0 / t as f64).powi(t as i32);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((r.match_rate[0] - p).abs() <= 3.0 * sigma + 1e-12, "T={t}: {} vs {p}", r.match_rate[0]);
    }
}

#[test]
fn identity_attenuation_reproduces_samp_b() {
    let inst = make_example_worst(8);
    let sol = lp(&inst, Objective::Ifm);
    let table = Arc::new(AttenuationTable::identity(inst.n_offline(), inst.horizon()));
    let a = report(&inst, &SampB::new(sol.clone()), &sol, 500, 3);
    let b = report(&inst, &SampAb::new(sol.clone(), table), &sol, 500, 3);
    assert_eq!(a.match_rate, b.match_rate);
    assert_eq!(a.objective_estimate, b.objective_estimate);
}

#[test]
fn policy_list_does_not_change_any_policy_result() {
    let inst = make_example_worst(6);
    let alone = run_experiment(&inst, &ExperimentConfig::new(Objective::Ifm, vec![PolicyKind::Greedy], 300, 9)).unwrap();
    let mixed = run_experiment(
        &inst,
        &ExperimentConfig::new(Objective::Ifm, vec![PolicyKind::SampB, PolicyKind::Ranking, PolicyKind::Greedy], 300, 9),
    )
    .unwrap();
    assert_eq!(alone.reports[0].match_rate, mixed.reports[2].match_rate);
}

#[test]
fn half_width_shrinks_with_root_trials() {
    let inst = make_example_worst(5);
    let sol = lp(&inst, Objective::Ifm);
    let small = report(&inst, &SampB::new(sol.clone()), &sol, 500, 1);
    let large = report(&inst, &SampB::new(sol.clone()), &sol, 8_000, 1);
    // 16× the trials → a quarter of the width, up to the change in p̂
    let ratio = small.half_width[1] / large.half_width[1];
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn baselines_starve_the_agent_behind_the_shared_type() {
    let n = 100;
    let inst = make_example_worst(n);
    let sol = lp(&inst, Objective::Ifm);
    let trials = 10_000;
    let ranking = report(&inst, &Ranking, &sol, trials, 5);
    let samp = report(&inst, &SampB::new(sol.clone()), &sol, trials, 5);
    // agent 0 has the shared type as its only neighbour
    let greedy = report(&inst, &Greedy::new(Objective::Ifm), &sol, trials, 5);
    assert!(ranking.match_rate[0] <= 0.2, "RANKING Z_0 = {}", ranking.match_rate[0]);
    assert!(greedy.match_rate[0] <= 0.2, "GREEDY Z_0 = {}", greedy.match_rate[0]);
    let min = samp.match_rate.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min >= 0.40, "SAMP-B min Z = {min}");
    assert!(min / one_minus_inv_e() >= 0.5);
}

#[test]
fn greedy_covers_both_agents_of_a_complete_two_by_two() {
    // every arrival has a free neighbour until both agents are taken
    let inst = Instance::new(InstanceParts::unit(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)])).unwrap();
    let sol = lp(&inst, Objective::Ifm);
    let r = report(&inst, &Greedy::new(Objective::Ifm), &sol, 2_000, 11);
    assert_eq!(r.match_rate, vec![1.0, 1.0]);
}

#[test]
fn boosted_distribution_conserves_mass() {
    let inst = make_example_worst(5);
    let sol = lp(&inst, Objective::Ifm);
    let mut state = MatchState::new(inst.n_offline(), inst.horizon());
    state.mute(2);
    let dist = boosted_distribution(&sol, &inst, &state, 0);
    let total: f64 = dist.iter().map(|&(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(dist.iter().all(|&(i, _)| i != 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boosting_renormalises_over_active_neighbours(
        inst in tiny_instance(4, 4),
        muted in proptest::collection::vec(any::<bool>(), 4),
        online in 0usize..4,
    ) {
        prop_assume!(online < inst.n_online());
        let sol = lp(&inst, Objective::Vom);
        let mut state = MatchState::new(inst.n_offline(), inst.horizon());
        for (i, &m) in muted.iter().enumerate().take(inst.n_offline()) {
            if m {
                state.mute(i);
            }
        }
        let active: Vec<(usize, f64)> = inst
            .online_edges(online)
            .iter()
            .filter(|&&(i, _)| state.is_active(i))
            .map(|&(i, e)| (i, sol.x[e]))
            .collect();
        let mass: f64 = active.iter().map(|&(_, v)| v).sum();
        let dist = boosted_distribution(&sol, &inst, &state, online);
        if mass <= 0.0 {
            prop_assert!(dist.is_empty());
        } else {
            let total: f64 = dist.iter().map(|&(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for &(i, p) in &dist {
                let v = active.iter().find(|&&(a, _)| a == i).map(|&(_, v)| v).unwrap();
                prop_assert!((p - v / mass).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trials_produce_valid_matchings(inst in tiny_instance(4, 4), seed in any::<u64>()) {
        let sol = lp(&inst, Objective::Vom);
        for policy in all_policies(&inst, &sol) {
            let state = run_trial(&inst, policy.as_ref(), seed).unwrap();
            let mut seen = vec![false; inst.n_offline()];
            prop_assert_eq!(state.events().len(), inst.horizon());
            for ev in state.events() {
                if let Some(i) = ev.offline {
                    prop_assert!(!seen[i], "{} matched agent {} twice", policy.name(), i);
                    seen[i] = true;
                    prop_assert!(inst.edge_index(i, ev.online).is_some());
                }
            }
            prop_assert_eq!(seen.iter().filter(|&&s| s).count(), state.matched_count());
        }
    }

    #[test]
    fn greedy_never_rejects_with_an_available_neighbour(inst in tiny_instance(4, 4), seed in any::<u64>()) {
        for objective in [Objective::Ifm, Objective::Vom] {
            let state = run_trial(&inst, &Greedy::new(objective), seed).unwrap();
            let mut matched = vec![false; inst.n_offline()];
            for ev in state.events() {
                let free = inst.online_neighbors(ev.online).any(|i| !matched[i]);
                prop_assert_eq!(ev.offline.is_some(), free);
                if let Some(i) = ev.offline {
                    matched[i] = true;
                }
            }
        }
    }
}
