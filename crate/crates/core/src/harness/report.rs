use std::fmt::Write;

use super::Experiment;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row per policy. Columns:
/// `policy,objective,trials,seed,lp_objective,objective_estimate,objective_half_width,cr1,cr1_excluded,cr2,config_hash`.
/// Ratios are empty when `LP* = 0`.
pub fn experiment_csv(exp: &Experiment) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "policy",
        "objective",
        "trials",
        "seed",
        "lp_objective",
        "objective_estimate",
        "objective_half_width",
        "cr1",
        "cr1_excluded",
        "cr2",
        "config_hash",
    ])
    .expect("in-memory write");
    for r in &exp.reports {
        w.write_record([
            r.policy.clone(),
            r.objective.to_string(),
            r.trials.to_string(),
            r.master_seed.to_string(),
            r.lp_objective.to_string(),
            r.objective_estimate.to_string(),
            r.objective_half_width.to_string(),
            opt(r.cr1),
            r.cr1_excluded.to_string(),
            opt(r.cr2),
            exp.config_hash.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Human-readable summary table.
pub fn render_text(exp: &Experiment) -> String {
    let mut s = String::new();
    let c = &exp.config;
    let _ = writeln!(
        s,
        "objective {}  trials {}  seed {}  K {}  LP* {:.6}  cuts {}",
        c.objective, c.trials, c.seed, exp.k_cap, exp.lp_objective, exp.lp_cuts
    );
    let _ = writeln!(s, "config {}", exp.config_hash);
    let _ = writeln!(
        s,
        "{:<20} {:>12} {:>10} {:>8} {:>8} {:>9}",
        "policy", "estimate", "±95%", "CR1", "CR2", "excluded"
    );
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in &exp.reports {
        let _ = writeln!(
            s,
            "{:<20} {:>12.6} {:>10.6} {:>8} {:>8} {:>9}",
            r.policy,
            r.objective_estimate,
            r.objective_half_width,
            fmt(r.cr1),
            fmt(r.cr2),
            r.cr1_excluded
        );
    }
    s
}
