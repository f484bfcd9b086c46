use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{run_experiment, ExperimentConfig};
use crate::attenuation::DEFAULT_SIM_COUNT;
use crate::error::{Error, Result};
use crate::ingest::{balanced_partition, downsample, parse_edge_list, parse_trips, read_instance, TripsConfig};
use crate::instance::{canonicalize, generate_synthetic, random_partition, GroupMode, Instance, SyntheticParams, WeightMode};
use crate::objective::Objective;
use crate::policy::PolicyKind;
use crate::rng::{derive_all, tag};

fn default_sim_count() -> usize {
    DEFAULT_SIM_COUNT
}

fn one() -> usize {
    1
}

fn unit_weights() -> WeightMode {
    WeightMode::Unit
}

fn singletons() -> GroupMode {
    GroupMode::Singletons
}

/// Where the instances of each cell come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// Random instances; the grid supplies `T` and the degree.
    Synthetic {
        n_offline: usize,
        #[serde(default = "unit_weights")]
        weight_mode: WeightMode,
        #[serde(default = "singletons")]
        group_mode: GroupMode,
    },
    /// Subsamples of a trips CSV; the grid supplies `T`.
    Trips {
        path: PathBuf,
        #[serde(default)]
        trips: TripsConfig,
    },
    /// Random balanced partitions of an edge-list graph.
    Graph {
        path: PathBuf,
        #[serde(default)]
        downsample: Option<usize>,
        /// Random partition of the offline side into this many groups;
        /// singletons when absent.
        #[serde(default)]
        groups: Option<usize>,
    },
    /// Fixed instance files; every file is one instance of a single cell.
    Files { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub horizon: Vec<usize>,
    #[serde(default)]
    pub degree: Vec<usize>,
}

/// A sweep file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub objective: Objective,
    pub policies: Vec<PolicyKind>,
    pub trials: usize,
    pub instances_per_cell: usize,
    pub seed: u64,
    #[serde(default)]
    pub k_cap: Option<usize>,
    #[serde(default = "default_sim_count")]
    pub sim_count: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub generator: Generator,
    #[serde(default)]
    pub grid: Grid,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // Data paths are relative to the config file.
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.generator {
            Generator::Trips { path, .. } | Generator::Graph { path, .. } => fix(path),
            Generator::Files { paths } => paths.iter_mut().for_each(fix),
            Generator::Synthetic { .. } => {}
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.policies.is_empty() {
            return bad("policies must not be empty");
        }
        if self.trials == 0 || self.instances_per_cell == 0 {
            return bad("trials and instances_per_cell must be at least 1");
        }
        match &self.generator {
            Generator::Synthetic { .. } if self.grid.horizon.is_empty() || self.grid.degree.is_empty() => {
                bad("synthetic sweeps need grid.horizon and grid.degree")
            }
            Generator::Trips { .. } if self.grid.horizon.is_empty() => bad("trips sweeps need grid.horizon"),
            Generator::Files { paths } if paths.is_empty() => bad("files sweep lists no paths"),
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `(horizon, degree)` per cell; absent axes are reported as 0.
    fn cells(&self) -> Vec<(usize, usize)> {
        let hs = if self.grid.horizon.is_empty() { vec![0] } else { self.grid.horizon.clone() };
        let ds = if self.grid.degree.is_empty() { vec![0] } else { self.grid.degree.clone() };
        hs.iter().flat_map(|&h| ds.iter().map(move |&d| (h, d))).collect()
    }
}

/// One (cell, instance, policy) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub horizon: usize,
    pub degree: usize,
    pub instance: usize,
    pub policy: String,
    pub objective: Objective,
    pub trials: usize,
    pub lp_objective: f64,
    pub objective_estimate: f64,
    pub cr1: Option<f64>,
    pub cr1_excluded: usize,
    pub cr2: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

/// Mean ratios of one policy over a cell's instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub cell: usize,
    pub horizon: usize,
    pub degree: usize,
    pub policy: String,
    pub instances: usize,
    pub mean_objective: f64,
    pub mean_cr1: Option<f64>,
    pub mean_cr2: Option<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummaryRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepOutput {
    /// Detail CSV, one row per (cell, instance, policy).
    pub fn detail_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "cell",
            "horizon",
            "degree",
            "instance",
            "policy",
            "objective",
            "trials",
            "lp_objective",
            "objective_estimate",
            "cr1",
            "cr1_excluded",
            "cr2",
            "seed",
            "config_hash",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.cell.to_string(),
                r.horizon.to_string(),
                r.degree.to_string(),
                r.instance.to_string(),
                r.policy.clone(),
                r.objective.to_string(),
                r.trials.to_string(),
                r.lp_objective.to_string(),
                r.objective_estimate.to_string(),
                opt(r.cr1),
                r.cr1_excluded.to_string(),
                opt(r.cr2),
                r.seed.to_string(),
                r.config_hash.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Summary CSV, one row per (cell, policy).
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "cell",
            "horizon",
            "degree",
            "policy",
            "instances",
            "mean_objective",
            "mean_cr1",
            "mean_cr2",
            "config_hash",
        ])
        .expect("in-memory write");
        for r in &self.summary {
            w.write_record([
                r.cell.to_string(),
                r.horizon.to_string(),
                r.degree.to_string(),
                r.policy.clone(),
                r.instances.to_string(),
                r.mean_objective.to_string(),
                opt(r.mean_cr1),
                opt(r.mean_cr2),
                r.config_hash.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn make_instance(cfg: &SweepConfig, horizon: usize, degree: usize, seed: u64) -> Result<Instance> {
    let inst = match &cfg.generator {
        Generator::Synthetic {
            n_offline,
            weight_mode,
            group_mode,
        } => generate_synthetic(&SyntheticParams {
            n_offline: *n_offline,
            horizon,
            degree,
            weight_mode: *weight_mode,
            group_mode: *group_mode,
            seed,
        })?,
        Generator::Trips { path, trips } => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            parse_trips(BufReader::new(file), trips, horizon, seed)?.instance
        }
        Generator::Graph {
            path,
            downsample: n,
            groups,
        } => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut graph = parse_edge_list(BufReader::new(file))?;
            if let Some(n) = n {
                graph = downsample(&graph, *n, seed);
            }
            let inst = balanced_partition(&graph, seed, seed)?;
            match groups {
                Some(k) => {
                    let g = random_partition(inst.n_offline(), *k, derive_all(seed, &[tag::GROUPS]))?;
                    inst.with_groups(g)
                }
                None => inst,
            }
        }
        Generator::Files { paths } => {
            let path = &paths[(seed as usize) % paths.len()];
            read_instance(path)?
        }
    };
    canonicalize(&inst)
}

/// Runs every cell of the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.check()?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let files = matches!(cfg.generator, Generator::Files { .. });
    for (c, (horizon, degree)) in cfg.cells().into_iter().enumerate() {
        let per_cell = match &cfg.generator {
            Generator::Files { paths } => paths.len(),
            _ => cfg.instances_per_cell,
        };
        for k in 0..per_cell {
            let inst_seed = if files {
                k as u64
            } else {
                derive_all(cfg.seed, &[tag::INSTANCE, c as u64, k as u64])
            };
            let instance = make_instance(cfg, horizon, degree, inst_seed)?;
            let run_seed = derive_all(cfg.seed, &[tag::TRIAL, c as u64, k as u64]);
            let mut exp_cfg = ExperimentConfig::new(cfg.objective, cfg.policies.clone(), cfg.trials, run_seed);
            exp_cfg.k_cap = cfg.k_cap;
            exp_cfg.sim_count = cfg.sim_count;
            exp_cfg.stride = cfg.stride;
            let exp = run_experiment(&instance, &exp_cfg)?;
            log::info!("cell {c} instance {k}: LP* = {}", exp.lp_objective);
            for r in exp.reports {
                rows.push(SweepRow {
                    cell: c,
                    horizon: if horizon == 0 { instance.horizon() } else { horizon },
                    degree,
                    instance: k,
                    policy: r.policy,
                    objective: r.objective,
                    trials: r.trials,
                    lp_objective: r.lp_objective,
                    objective_estimate: r.objective_estimate,
                    cr1: r.cr1,
                    cr1_excluded: r.cr1_excluded,
                    cr2: r.cr2,
                    seed: run_seed,
                    config_hash: hash.clone(),
                });
            }
        }
    }
    let summary = summarise(&rows, &hash);
    Ok(SweepOutput { rows, summary })
}

fn mean(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarise(rows: &[SweepRow], hash: &str) -> Vec<SweepSummaryRow> {
    let mut by_key: BTreeMap<(usize, String), Vec<&SweepRow>> = BTreeMap::new();
    let mut order: Vec<(usize, String)> = Vec::new();
    for r in rows {
        let key = (r.cell, r.policy.clone());
        if !by_key.contains_key(&key) {
            order.push(key.clone());
        }
        by_key.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &by_key[&key];
            let first = group[0];
            SweepSummaryRow {
                cell: first.cell,
                horizon: first.horizon,
                degree: first.degree,
                policy: first.policy.clone(),
                instances: group.len(),
                mean_objective: group.iter().map(|r| r.objective_estimate).sum::<f64>() / group.len() as f64,
                mean_cr1: mean(&group.iter().map(|r| r.cr1).collect::<Vec<_>>()),
                mean_cr2: mean(&group.iter().map(|r| r.cr2).collect::<Vec<_>>()),
                config_hash: hash.to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
objective = "ifm"
policies = ["samp-b", "greedy"]
trials = 20
instances_per_cell = 2
seed = 11

[generator]
kind = "synthetic"
n_offline = 6

[grid]
horizon = [5, 8]
degree = [2]
"#;

    #[test]
    fn counts_rows() {
        let cfg = SweepConfig::from_toml(SMALL).unwrap();
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 8);
        assert_eq!(out.summary.len(), 4);
        assert_eq!(out.detail_csv().lines().count(), 9);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = SMALL.replace("seed = 11", "seed = 11\ncolour = 3");
        assert!(matches!(SweepConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_missing_grid() {
        let text = SMALL.replace("degree = [2]", "");
        assert!(SweepConfig::from_toml(&text).is_err());
    }
}
