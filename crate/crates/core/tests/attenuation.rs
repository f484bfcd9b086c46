use std::sync::Arc;

use fairmatch::attenuation::{measure_activity, plan, target_curve, AttenuationTable, PlanConfig};
use fairmatch::bounds::make_example1;
use fairmatch::harness::evaluate_policy;
use fairmatch::instance::{generate_synthetic, GroupMode, Instance, SyntheticParams, WeightMode};
use fairmatch::lp::{build_lp, default_k_cap, solve, LpSolution, SolverConfig};
use fairmatch::objective::Objective;
use fairmatch::policy::SampAb;

fn setup(inst: &Instance, objective: Objective) -> LpSolution {
    let model = build_lp(inst, objective, default_k_cap(inst)).unwrap();
    solve(&model, inst, &SolverConfig::default()).unwrap()
}

fn synthetic(seed: u64) -> Instance {
    generate_synthetic(&SyntheticParams {
        n_offline: 12,
        horizon: 15,
        degree: 3,
        weight_mode: WeightMode::Uniform,
        group_mode: GroupMode::Singletons,
        seed,
    })
    .unwrap()
}

#[test]
fn activity_follows_the_target_curve() {
    let inst = make_example1(6);
    let lp = setup(&inst, Objective::Vom);
    let table = plan(&inst, &lp, &PlanConfig::new(2_000, 4)).unwrap();
    let activity = measure_activity(&inst, &lp, &table, 4_000, 99);
    let target = target_curve(inst.horizon());
    for (t, row) in activity.iter().enumerate() {
        for (i, &a) in row.iter().enumerate() {
            // sampling noise of the plan (2 000 runs) and of the check (4 000)
            assert!(a <= target[t] + 0.05, "agent {i} round {}: {a} > {}", t + 1, target[t]);
        }
    }
    // the shared agent is the one being held back
    assert!((2..=inst.horizon()).any(|t| table.beta(0, t) < 1.0));
}

#[test]
fn activity_never_increases() {
    let inst = synthetic(2);
    let lp = setup(&inst, Objective::Vom);
    let table = plan(&inst, &lp, &PlanConfig::new(200, 1)).unwrap();
    let activity = measure_activity(&inst, &lp, &table, 500, 3);
    for i in 0..inst.n_offline() {
        for t in 1..activity.len() {
            assert!(activity[t][i] <= activity[t - 1][i], "agent {i} round {}", t + 1);
        }
    }
}

#[test]
fn table_is_a_pure_function_of_its_inputs() {
    let inst = synthetic(5);
    let lp = setup(&inst, Objective::Ifm);
    let cfg = PlanConfig::new(50, 17);
    let a = plan(&inst, &lp, &cfg).unwrap();
    let b = plan(&inst, &lp, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.matches(&inst, &lp, &cfg));
    assert!(!a.matches(&inst, &lp, &PlanConfig::new(50, 18)));
    for t in 1..=inst.horizon() {
        assert!(a.beta_column(t).iter().all(|b| (0.0..=1.0).contains(b)));
    }
    assert!(a.beta_column(1).iter().all(|&b| b == 1.0));
}

#[test]
fn stride_holds_columns() {
    let inst = synthetic(6);
    let lp = setup(&inst, Objective::Ifm);
    let mut cfg = PlanConfig::new(50, 1);
    cfg.stride = 4;
    let table = plan(&inst, &lp, &cfg).unwrap();
    // columns 2, 6, 10, … are computed; the next three repeat them
    for t in 3..=5 {
        assert_eq!(table.beta_column(t), table.beta_column(2));
    }
}

#[test]
fn table_round_trips_through_disk() {
    let inst = synthetic(8);
    let lp = setup(&inst, Objective::Ifm);
    let table = plan(&inst, &lp, &PlanConfig::new(30, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    table.save(&path).unwrap();
    let back = AttenuationTable::load(&path).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.cache_key(), table.cache_key());
}

#[test]
fn corrupt_table_is_rejected() {
    let inst = synthetic(8);
    let lp = setup(&inst, Objective::Ifm);
    let table = plan(&inst, &lp, &PlanConfig::new(10, 2)).unwrap();
    let json = table.to_json().unwrap().replacen("1.0", "1.5", 1);
    assert!(AttenuationTable::from_json(&json).is_err());
}

#[test]
fn table_for_another_instance_is_refused() {
    let inst = synthetic(8);
    let lp = Arc::new(setup(&inst, Objective::Ifm));
    let other = AttenuationTable::identity(inst.n_offline() + 1, inst.horizon());
    let policy = SampAb::new(lp.clone(), Arc::new(other));
    assert!(evaluate_policy(&inst, &policy, &lp, Objective::Ifm, 10, 1).is_err());
}
