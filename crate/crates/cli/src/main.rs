//! `fairmatch`: generate and ingest instances, solve the benchmark LP, plan
//! attenuation, run experiments and sweeps, and evaluate the ratio bounds.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use fairmatch::attenuation::{plan, AttenuationTable};
use fairmatch::bounds::{evaluate_sampab, evaluate_sampb, minimizer_set, sampab_grid_minimum};
use fairmatch::error::{Error, Result};
use fairmatch::harness::{
    experiment_csv, render_text, run_experiment_with, run_sweep, Experiment, ExperimentConfig, SweepConfig,
};
use fairmatch::ingest::{
    balanced_partition, downsample, instance_to_json, parse_edge_list, parse_trips, read_instance, TripsConfig,
};
use fairmatch::instance::{canonicalize, generate_synthetic, GroupMode, Instance, SyntheticParams, WeightMode};
use fairmatch::lp::{build_lp, default_k_cap, normalize_ifm, solve, CapRule, LpSolution, SolverConfig};
use fairmatch::objective::Objective;
use fairmatch::policy::PolicyKind;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "fairmatch", version, about = "LP-guided fair online bipartite matching")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace); overrides RUST_LOG.
    #[arg(long, global = true)]
    log: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random synthetic instance.
    Generate(GenerateArgs),
    /// Build an instance from external data.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Solve the benchmark LP of an instance.
    SolveLp(SolveLpArgs),
    /// Plan the attenuation table SAMP-AB uses.
    PlanAttenuation(PlanArgs),
    /// Evaluate policies on one instance.
    Run(RunArgs),
    /// Run a grid of experiments described by a TOML file.
    Sweep(SweepArgs),
    /// Evaluate the competitive-ratio bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Re-render a saved JSON run report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Unit,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Caps {
    Asymptotic,
    FiniteHorizon,
}

impl From<Caps> for CapRule {
    fn from(c: Caps) -> Self {
        match c {
            Caps::Asymptotic => CapRule::Asymptotic,
            Caps::FiniteHorizon => CapRule::FiniteHorizon,
        }
    }
}

#[derive(Args)]
struct OutputArg {
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n_offline: usize,
    /// Number of online types, equal to the horizon `T`.
    #[arg(long)]
    horizon: usize,
    /// Online neighbours per offline agent.
    #[arg(long)]
    degree: usize,
    #[arg(long, value_enum, default_value = "unit")]
    weights: Weights,
    /// Random partition of the offline agents into this many groups
    /// (singletons when absent).
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Subcommand)]
enum IngestCommand {
    /// Drivers and riders from a trips CSV; edges join trips with the same
    /// pickup area.
    Trips {
        #[arg(long)]
        input: PathBuf,
        /// Number of trips to sample (the horizon).
        #[arg(long)]
        horizon: usize,
        /// TOML file with column names, time formats and the time window.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep trips at any time, ignoring the configured window.
        #[arg(long)]
        all_times: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Random balanced partition of an edge-list graph.
    Graph {
        #[arg(long)]
        input: PathBuf,
        /// Keep a random subset of this many nodes first.
        #[arg(long)]
        downsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Args)]
struct LpArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "ifm")]
    objective: Objective,
    /// Largest subset size in the subset constraints.
    #[arg(long)]
    k_cap: Option<usize>,
}

#[derive(Args)]
struct SolveLpArgs {
    #[command(flatten)]
    lp: LpArgs,
    #[arg(long, value_enum, default_value = "asymptotic")]
    cap_rule: Caps,
    /// Rescale an IFM solution so every agent has the same mass.
    #[arg(long)]
    normalize: bool,
    /// Also write the final program in LP text format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    out: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    lp: LpArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = fairmatch::attenuation::DEFAULT_SIM_COUNT)]
    sim_count: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    lp: LpArgs,
    /// Comma-separated policies: samp-b, samp-ab, greedy, ranking, mgs-lite.
    #[arg(long, value_delimiter = ',', default_value = "samp-b")]
    policy: Vec<PolicyKind>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = fairmatch::attenuation::DEFAULT_SIM_COUNT)]
    sim_count: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Reuse a table from `plan-attenuation` when it matches this run.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    out: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Also write the per-(cell, policy) summary CSV here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    out: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// SAMP-B's guarantee at LP mass `τ`.
    Sampb {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        json: bool,
    },
    /// SAMP-AB's guarantee, at a point or minimised over a grid.
    #[command(group(ArgGroup::new("mode").required(true).args(["grid", "x"])))]
    Sampab {
        #[arg(long, conflicts_with_all = ["x", "kappa"])]
        grid: bool,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long, requires = "kappa")]
        x: Option<f64>,
        #[arg(long, requires = "x")]
        kappa: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// The mass allocation minimising the boosting bound.
    MinimizerSet {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// JSON written by `run --out json`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    out: Format,
    #[command(flatten)]
    output: OutputArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if let Some(level) = &cli.log {
        logger.parse_filters(level);
    }
    logger.init();

    match std::panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { EXIT_DATA } else { EXIT_INTERNAL })
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Ingest(c) => ingest(c),
        Command::SolveLp(a) => solve_lp(a),
        Command::PlanAttenuation(a) => plan_attenuation(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Bound(c) => bound(c),
        Command::Report(a) => report(a),
    }
}

fn emit(out: &OutputArg, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn load_instance(path: &Path) -> Result<Instance> {
    canonicalize(&read_instance(path)?)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let inst = generate_synthetic(&SyntheticParams {
        n_offline: a.n_offline,
        horizon: a.horizon,
        degree: a.degree,
        weight_mode: match a.weights {
            Weights::Unit => WeightMode::Unit,
            Weights::Uniform => WeightMode::Uniform,
        },
        group_mode: a.groups.map_or(GroupMode::Singletons, GroupMode::RandomPartition),
        seed: a.seed,
    })?;
    emit(&a.out, &instance_to_json(&inst))
}

fn ingest(c: IngestCommand) -> Result<()> {
    match c {
        IngestCommand::Trips {
            input,
            horizon,
            config,
            all_times,
            seed,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => {
                    TripsConfig::from_toml(&std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?
                }
                None => TripsConfig::default(),
            };
            if all_times {
                cfg.window = None;
            }
            let ingest = parse_trips(open(&input)?, &cfg, horizon, seed)?;
            log::info!(
                "{} rows, {} skipped, {} in window",
                ingest.rows,
                ingest.skipped,
                ingest.in_window
            );
            emit(&out, &instance_to_json(&ingest.instance))
        }
        IngestCommand::Graph {
            input,
            downsample: n,
            seed,
            out,
        } => {
            let mut graph = parse_edge_list(open(&input)?)?;
            if let Some(n) = n {
                graph = downsample(&graph, n, seed);
            }
            let inst = balanced_partition(&graph, seed, seed)?;
            emit(&out, &instance_to_json(&inst))
        }
    }
}

fn lp_for(a: &LpArgs, inst: &Instance, rule: CapRule) -> Result<LpSolution> {
    let k = a.k_cap.unwrap_or_else(|| default_k_cap(inst));
    let model = build_lp(inst, a.objective, k)?.with_cap_rule(rule);
    Ok(solve(&model, inst, &SolverConfig::default())?)
}

fn solve_lp(a: SolveLpArgs) -> Result<()> {
    let inst = load_instance(&a.lp.instance)?;
    let rule = CapRule::from(a.cap_rule);
    let mut sol = lp_for(&a.lp, &inst, rule)?;
    if a.normalize {
        sol = normalize_ifm(&sol, &inst)?;
    }
    if let Some(path) = &a.export_lp {
        let mut model = build_lp(&inst, a.lp.objective, sol.k_cap)?.with_cap_rule(rule);
        model.cuts = sol.cuts.clone();
        std::fs::write(path, model.export_lp_text(&inst)).map_err(|e| Error::io(path, e))?;
    }
    let text = match a.out {
        Format::Json => json(&sol),
        Format::Csv => {
            let mut s = String::from("offline,online,x\n");
            for (&(i, j), x) in inst.edges().iter().zip(&sol.x) {
                s.push_str(&format!("{i},{j},{x}\n"));
            }
            s
        }
        Format::Text => format!(
            "objective {}  LP* {:.6}  K {}  cuts {}  rounds {}  status {:?}\n",
            sol.objective_kind,
            sol.objective,
            sol.k_cap,
            sol.cut_count(),
            sol.rounds,
            sol.status
        ),
    };
    emit(&a.output, &text)
}

fn plan_attenuation(a: PlanArgs) -> Result<()> {
    let inst = load_instance(&a.lp.instance)?;
    let sol = lp_for(&a.lp, &inst, CapRule::default())?;
    let mut cfg = ExperimentConfig::new(a.lp.objective, vec![PolicyKind::SampAb], 1, a.seed);
    cfg.sim_count = a.sim_count;
    cfg.stride = a.stride;
    let table = plan(&inst, &sol, &cfg.plan_config())?;
    emit(&a.output, &table.to_json()?)
}

fn run(a: RunArgs) -> Result<()> {
    let inst = load_instance(&a.lp.instance)?;
    let mut cfg = ExperimentConfig::new(a.lp.objective, a.policy, a.trials, a.seed);
    cfg.k_cap = a.lp.k_cap;
    cfg.sim_count = a.sim_count;
    cfg.stride = a.stride;
    cfg.threads = a.threads;
    let table = a.table.as_deref().map(AttenuationTable::load).transpose()?;
    let exp = run_experiment_with(&inst, &cfg, table)?;
    emit(&a.output, &render(&exp, a.out))
}

fn render(exp: &Experiment, out: Format) -> String {
    match out {
        Format::Text => render_text(exp),
        Format::Csv => experiment_csv(exp),
        Format::Json => json(exp),
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = SweepConfig::load(&a.config)?;
    let result = run_sweep(&cfg)?;
    if let Some(path) = &a.summary {
        std::fs::write(path, result.summary_csv()).map_err(|e| Error::io(path, e))?;
    }
    let text = match a.out {
        Format::Json => json(&result),
        Format::Csv | Format::Text => result.detail_csv(),
    };
    emit(&a.output, &text)
}

fn bound(c: BoundCommand) -> Result<()> {
    // The series tail is printed only as a count; `--json` has every term.
    let fmt_set = |set: &[f64]| {
        let shown: Vec<String> = set.iter().filter(|&&v| v >= 5e-6).map(|v| format!("{v:.5}")).collect();
        let hidden = set.len() - shown.len();
        let mut s = shown.join(", ");
        if hidden > 0 {
            s.push_str(&format!(", … {hidden} terms < 5e-6"));
        }
        s
    };
    let text = match c {
        BoundCommand::Sampb { tau, json: as_json } => {
            let ev = evaluate_sampb(tau)?;
            if as_json {
                json(&ev)
            } else {
                format!("sampb tau={tau} ratio={:.6} set={{{}}}\n", ev.ratio, fmt_set(&ev.set))
            }
        }
        BoundCommand::Sampab {
            grid,
            resolution,
            x,
            kappa,
            json: as_json,
        } => match (grid, x, kappa) {
            (true, _, _) => {
                let m = sampab_grid_minimum(resolution)?;
                if as_json {
                    json(&m)
                } else {
                    format!("sampab grid minimum ratio={:.6} at x={:.5} kappa={:.5}\n", m.ratio, m.x, m.kappa)
                }
            }
            (false, Some(x), Some(kappa)) => {
                let ev = evaluate_sampab(x, kappa)?;
                if as_json {
                    json(&ev)
                } else {
                    format!(
                        "sampab x={x} kappa={kappa} value={:.6} ratio={:.6} set={{{}}}\n",
                        ev.value,
                        ev.ratio,
                        fmt_set(&ev.set)
                    )
                }
            }
            _ => unreachable!("clap requires --grid or --x with --kappa"),
        },
        BoundCommand::MinimizerSet { tau, json: as_json } => {
            let set = minimizer_set(tau)?;
            if as_json {
                json(&set)
            } else {
                format!("{{{}}}\n", fmt_set(&set))
            }
        }
    };
    io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let exp: Experiment = serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", a.input.display())))?;
    emit(&a.output, &render(&exp, a.out))
}
