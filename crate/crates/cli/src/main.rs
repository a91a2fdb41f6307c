//! Command-line front end: instance generation and validation, evaluation,
//! optimization runs, benchmarks, the non-cooperative game, revenue
//! allocation and LP export.
//!
//! Exit codes: 0 success, 2 invalid input or failed validation, 3 the budget
//! produced no usable result, 4 I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fare_alliance::allocation::{allocate, AllocationResult};
use fare_alliance::bench::{
    parse_weight_grid, regime_sweep, run_algorithm, run_suite, sos2_gap_study, summarize, Algorithm, GapConfig,
    GapRecord, RegimeRow, RunConfig, SuiteConfig, SuiteRow, WarmStartKind,
};
use fare_alliance::casegen::{generate, SyntheticConfig};
use fare_alliance::descent::{DescentConfig, ExactEvaluator};
use fare_alliance::game::{iterated_best_response, verify_ne, IbrConfig, IbrOutcome, NeCheck, OperatorWeights};
use fare_alliance::lp::export_milp;
use fare_alliance::model::{FareVector, Instance, ObjectiveWeights, OperatorKind, PerOperator};
use fare_alliance::report::RunReport;
use fare_alliance::second_stage::{solve, SecondStageConfig, SecondStageSolution};
use fare_alliance::ModelError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NoResult(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NoResult(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Invalid(_) => "invalid",
            CliError::NoResult(_) => "no_result",
            CliError::Io(_) => "io",
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Parser)]
#[command(name = "fare-alliance", version, about = "Cooperative fare design for transit and MOD alliances")]
struct Cli {
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Check an instance and list rule violations.
    Validate { instance: PathBuf },
    /// Evaluate one fare vector.
    Eval(EvalArgs),
    /// Optimize fares.
    Solve(SolveArgs),
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Iterated best response between the two operators.
    Game(GameArgs),
    /// Split allied revenue between the operators.
    Allocate(AllocateArgs),
    /// Optimize under a list of objective weights and tabulate the outcomes.
    RegimeSweep(SweepArgs),
    /// Write the second-stage model for fixed fares in LP format.
    ExportLp(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named configuration: tiny, desk or large.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the reference income ratios for price sensitivities.
    #[arg(long)]
    income_aware: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Budgeted {
    /// Wall-clock limit of the main phase, in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Evaluation cap of the main phase; with it the run is reproducible.
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    max_trajectories: Option<usize>,
    /// Anchors per SOS2 line.
    #[arg(long, default_value_t = 11)]
    anchors: usize,
    #[arg(long, env = "FARE_ALLIANCE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum WsProc {
    Uniform,
    Bo,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// sos2cd, sos2cd-r, sos2cd-md, sos2cd-mdr, bfcd or bo.
    #[arg(long, default_value = "sos2cd-mdr")]
    algo: String,
    #[command(flatten)]
    budget: Budgeted,
    /// Warm-start phase length in seconds.
    #[arg(long, default_value_t = 0.0)]
    ws_time: f64,
    #[arg(long)]
    ws_max_evals: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform")]
    ws_proc: WsProc,
    /// Override the instance's objective weights, as `pax,rev,vmt`.
    #[arg(long)]
    weights: Option<String>,
    /// Leave wall-clock time out of the report.
    #[arg(long)]
    omit_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    instance: PathBuf,
    /// `b0_tr,bd_tr,b0_mod,bd_mod,lambda`, or a JSON file holding fares or a report.
    #[arg(long)]
    fares: String,
    /// `auto` solves the second stage; otherwise one 0/1 digit per category.
    #[arg(long, default_value = "auto")]
    activations: String,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// All algorithms on shared seeds.
    Suite {
        instance: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Comma-separated algorithm ids (default: all).
        #[arg(long)]
        algos: Option<String>,
        #[command(flatten)]
        budget: Budgeted,
        /// Per-run CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// SOS2 line search against a dense scan of the same line.
    Sos2Gap {
        instance: PathBuf,
        #[arg(long, default_value_t = 100)]
        lines: usize,
        #[arg(long, env = "FARE_ALLIANCE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GameArgs {
    instance: PathBuf,
    /// Transit operator weights `pax,rev,vmt`.
    #[arg(long)]
    weights_tr: String,
    /// MOD operator weights `pax,rev,vmt`.
    #[arg(long, default_value = "0,1,0")]
    weights_mod: String,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    max_rounds: usize,
    /// Grid step of the equilibrium check.
    #[arg(long, default_value_t = 0.05)]
    verify_step: f64,
    #[arg(long, env = "FARE_ALLIANCE_SEED", default_value_t = 0)]
    seed: u64,
    /// Round-by-round CSV transcript.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AllocateArgs {
    /// A game result and an allied run report, in that order.
    #[arg(long, num_args = 2, value_names = ["GAME", "REPORT"], conflicts_with = "values")]
    from_results: Option<Vec<PathBuf>>,
    /// `f_nc_tr,f_nc_mod,f_allied`.
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    instance: PathBuf,
    /// Weight vectors `pax,rev,vmt` separated by `;`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value = "sos2cd-mdr")]
    algo: String,
    #[command(flatten)]
    budget: Budgeted,
    /// One run report per weight vector, as JSON lines.
    #[arg(long)]
    reports: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long)]
    fares: String,
    #[arg(long)]
    out: PathBuf,
}

/// Non-cooperative outcome with the figures allocation needs.
#[derive(serde::Serialize, serde::Deserialize)]
struct GameReport {
    instance_hash: String,
    instance_name: Option<String>,
    weights: OperatorWeights<f64>,
    seed: u64,
    outcome: IbrOutcome<f64>,
    ne_check: NeCheck<f64>,
    /// Own-component revenue of each operator at the equilibrium.
    operator_revenue: PerOperator<f64>,
    /// Revenue term of each operator's objective (full route prices).
    objective_revenue: PerOperator<f64>,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{}", text.trim_end()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<S: serde::Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Loads an instance and rejects it if validation finds violations.
fn load_instance(path: &Path) -> Result<Instance<f64>> {
    let inst = Instance::<f64>::load(path)?;
    let violations = inst.validate();
    if violations.is_empty() {
        Ok(inst)
    } else {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(CliError::Invalid(format!("{} fails validation:\n{}", path.display(), lines.join("\n"))))
    }
}

fn parse_numbers(text: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Invalid(format!("{what}: {x:?}: {e}"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(CliError::Invalid(format!("{what}: expected {n} comma-separated numbers, got {}", v.len())));
    }
    Ok(v)
}

fn parse_weights(text: &str) -> Result<ObjectiveWeights<f64>> {
    let v = parse_numbers(text, 3, "weights")?;
    if v.iter().any(|&x| x < 0.0) {
        return Err(CliError::Invalid("weights must be nonnegative".into()));
    }
    Ok(ObjectiveWeights::new(v[0], v[1], v[2]))
}

fn parse_fares(text: &str, inst: &Instance<f64>) -> Result<FareVector<f64>> {
    let fares = if text.ends_with(".json") {
        let v = read_json(Path::new(text))?;
        let v = v.get("fares").cloned().unwrap_or(v);
        serde_json::from_value(v).map_err(|e| CliError::Invalid(format!("{text}: no fare vector: {e}")))?
    } else {
        let v = parse_numbers(text, 5, "fares")?;
        FareVector::from_array([v[0], v[1], v[2], v[3], v[4]])
    };
    if !inst.bounds().contains(&fares) {
        return Err(CliError::Invalid(format!("fares {} lie outside the instance bounds", to_json(&fares).trim())));
    }
    Ok(fares)
}

fn parse_algo(id: &str) -> Result<Algorithm> {
    Algorithm::parse(id).ok_or_else(|| {
        let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.id()).collect();
        CliError::Invalid(format!("unknown algorithm {id:?}; expected one of {}", known.join(", ")))
    })
}

fn check_budget(b: &Budgeted) -> Result<()> {
    if !(b.time_limit >= 0.0) || !b.time_limit.is_finite() {
        return Err(CliError::Invalid("time limit must be a nonnegative number of seconds".into()));
    }
    if b.anchors < 2 {
        return Err(CliError::Invalid("at least two anchors per line are needed".into()));
    }
    Ok(())
}

fn run_config(algorithm: Algorithm, b: &Budgeted, threads: usize) -> RunConfig {
    RunConfig {
        algorithm,
        time_limit: b.time_limit,
        max_evaluations: b.max_evals,
        max_trajectories: b.max_trajectories,
        descent: DescentConfig { anchors: b.anchors, parallel_anchors: threads > 1, ..DescentConfig::default() },
        seed: b.seed,
        ..RunConfig::default()
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let mut config = match (&a.config, &a.preset) {
        (Some(path), _) => serde_json::from_value::<SyntheticConfig>(read_json(path)?)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => SyntheticConfig::preset(name)
            .ok_or_else(|| CliError::Invalid(format!("unknown preset {name:?}; expected tiny, desk or large")))?,
        (None, None) => SyntheticConfig::desk(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.income_aware {
        config.income_ratios = Some(SyntheticConfig::reference_income_ratios(config.town_count));
    }
    let inst = generate(&config).map_err(|e| CliError::Invalid(e.to_string()))?;
    inst.save(&a.out)?;
    eprintln!(
        "wrote {}: {} passenger types, {} routes, {} categories",
        a.out.display(),
        inst.passenger_types().len(),
        inst.routes().len(),
        inst.num_categories()
    );
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<()> {
    let inst = Instance::<f64>::load(path)?;
    let violations = inst.validate();
    println!("{}", to_json(&json!({ "instance_hash": inst.content_hash(), "violations": violations })).trim_end());
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} violation(s)", violations.len())))
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let mut inst = load_instance(&a.instance)?;
    if let Some(w) = &a.weights {
        inst = inst.with_weights(parse_weights(w)?);
    }
    let fares = parse_fares(&a.fares, &inst)?;
    let sol = if a.activations == "auto" {
        solve(&inst, &fares, &SecondStageConfig::default()).map_err(|e| CliError::Invalid(e.to_string()))?
    } else {
        let x: Vec<bool> = a
            .activations
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CliError::Invalid(format!("activation digit {c:?} is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        if x.len() != inst.num_categories() {
            return Err(CliError::Invalid(format!(
                "{} activation digits for {} categories",
                x.len(),
                inst.num_categories()
            )));
        }
        SecondStageSolution::evaluate(&inst, &fares, x, true)
    };
    let config = json!({ "fares": fares, "activations": a.activations, "weights": inst.weights() });
    let report = RunReport::new(&inst, &sol, "eval", config, 0, 1, None);
    write_out(a.out.as_deref(), &to_json(&report))
}

fn cmd_solve(a: &SolveArgs, threads: usize) -> Result<()> {
    check_budget(&a.budget)?;
    let mut inst = load_instance(&a.instance)?;
    if let Some(w) = &a.weights {
        inst = inst.with_weights(parse_weights(w)?);
    }
    let algorithm = parse_algo(&a.algo)?;
    let mut config = run_config(algorithm, &a.budget, threads);
    config.ws_time = a.ws_time;
    config.ws_max_evaluations = a.ws_max_evals;
    config.ws_proc = match a.ws_proc {
        WsProc::Uniform => WarmStartKind::Uniform,
        WsProc::Bo => WarmStartKind::Bo,
    };
    let out = run_algorithm(&ExactEvaluator::new(&inst), &config).map_err(|e| CliError::Invalid(e.to_string()))?;
    let timing = (!a.omit_timing).then_some(out.elapsed_seconds);
    let echo = serde_json::to_value(&config).expect("config serializes");
    let report = RunReport::new(&inst, &out.solution, algorithm.id(), echo, config.seed, out.evaluations, timing);
    write_out(a.out.as_deref(), &to_json(&report))?;
    if out.completed == 0 && matches!(algorithm, Algorithm::Sos2(_)) {
        return Err(CliError::NoResult(format!(
            "no trajectory finished within the budget ({} started); the report holds the initial random point",
            out.trajectories
        )));
    }
    Ok(())
}

fn cmd_bench(c: &BenchCommand, threads: usize) -> Result<()> {
    match c {
        BenchCommand::Suite { instance, trials, algos, budget, csv } => {
            check_budget(budget)?;
            let inst = load_instance(instance)?;
            let algorithms = match algos {
                Some(list) => list.split(',').map(|s| parse_algo(s.trim())).collect::<Result<Vec<_>>>()?,
                None => Algorithm::ALL.to_vec(),
            };
            let run = run_config(algorithms[0], budget, threads);
            let config = SuiteConfig { trials: *trials, algorithms, run, base_seed: budget.seed };
            let rows = run_suite(&inst, &config).map_err(|e| CliError::Invalid(e.to_string()))?;
            if let Some(path) = csv {
                let mut text = format!("{}\n", SuiteRow::CSV_HEADER);
                for r in &rows {
                    text.push_str(&r.csv_row());
                    text.push('\n');
                }
                write_out(Some(path), &text)?;
            }
            write_out(None, &to_json(&summarize(&rows)))
        }
        BenchCommand::Sos2Gap { instance, lines, seed, out } => {
            let inst = load_instance(instance)?;
            let cfg = GapConfig { lines: *lines, seed: *seed, ..GapConfig::default() };
            let recs = sos2_gap_study(&inst, &cfg).map_err(|e| CliError::Invalid(e.to_string()))?;
            let mut text = format!("{}\n", GapRecord::CSV_HEADER);
            for r in &recs {
                text.push_str(&r.csv_row());
                text.push('\n');
            }
            let mean = recs.iter().map(|r| r.gap_pct).sum::<f64>() / recs.len().max(1) as f64;
            eprintln!("mean gap {mean:.4}% over {} lines", recs.len());
            write_out(out.as_deref(), &text)
        }
    }
}

fn cmd_game(a: &GameArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    if !(a.epsilon > 0.0) {
        return Err(CliError::Invalid("epsilon must be positive".into()));
    }
    let weights = PerOperator::new(parse_weights(&a.weights_tr)?, parse_weights(&a.weights_mod)?);
    let config = IbrConfig { epsilon: a.epsilon, max_rounds: a.max_rounds, seed: a.seed, ..IbrConfig::default() };
    let outcome = iterated_best_response(&inst, &weights, &config);
    let ne_check = verify_ne(&inst, &outcome.fares, &weights, a.verify_step, a.epsilon);
    let off = vec![false; inst.num_categories()];
    let rev = |k| fare_alliance::choice::operator_revenue(&inst, &outcome.fares, &off, k);
    let full = fare_alliance::choice::welfare(&inst, &outcome.fares, &off).rev_term;
    if let Some(path) = &a.transcript {
        write_out(Some(path), &outcome.transcript_csv())?;
    }
    let converged = outcome.converged;
    let report = GameReport {
        instance_hash: inst.content_hash(),
        instance_name: inst.name().map(str::to_string),
        weights,
        seed: a.seed,
        operator_revenue: PerOperator::new(rev(OperatorKind::Transit), rev(OperatorKind::Mod)),
        objective_revenue: PerOperator::new(full, full),
        outcome,
        ne_check,
    };
    write_out(a.out.as_deref(), &to_json(&report))?;
    if !converged {
        return Err(CliError::NoResult(format!("no convergence within {} rounds; last iterate reported", a.max_rounds)));
    }
    Ok(())
}

fn cmd_allocate(a: &AllocateArgs) -> Result<()> {
    let result: AllocationResult<f64> = match (&a.from_results, &a.values) {
        (Some(paths), _) => {
            let game: GameReport = serde_json::from_value(read_json(&paths[0])?)
                .map_err(|e| CliError::Invalid(format!("{}: not a game result: {e}", paths[0].display())))?;
            let run: RunReport<f64> = serde_json::from_value(read_json(&paths[1])?)
                .map_err(|e| CliError::Invalid(format!("{}: not a run report: {e}", paths[1].display())))?;
            // The allied run may use other objective weights, so the hashes
            // need not agree; the instance names must.
            if game.instance_name != run.instance_name {
                return Err(CliError::Invalid(format!(
                    "game result is for {:?} but the run report is for {:?}",
                    game.instance_name, run.instance_name
                )));
            }
            let allied = run.operator_revenue.transit + run.operator_revenue.mobility;
            allocate(game.operator_revenue.transit, game.operator_revenue.mobility, allied)
        }
        (None, Some(text)) => {
            let v = parse_numbers(text, 3, "values")?;
            if v.iter().any(|&x| x < 0.0) {
                return Err(CliError::Invalid("revenues must be nonnegative".into()));
            }
            allocate(v[0], v[1], v[2])
        }
        (None, None) => return Err(CliError::Invalid("pass --from-results or --values".into())),
    };
    write_out(a.out.as_deref(), &to_json(&result))
}

fn cmd_sweep(a: &SweepArgs, threads: usize) -> Result<()> {
    check_budget(&a.budget)?;
    let inst = load_instance(&a.instance)?;
    let grid = parse_weight_grid(&a.grid).map_err(CliError::Invalid)?;
    if grid.is_empty() {
        return Err(CliError::Invalid("empty weight grid".into()));
    }
    let run = run_config(parse_algo(&a.algo)?, &a.budget, threads);
    let rows: Vec<RegimeRow> = regime_sweep(&inst, &grid, &run).map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(path) = &a.reports {
        let echo = serde_json::to_value(&run).expect("config serializes");
        let mut text = String::new();
        for r in &rows {
            let w_inst = inst.with_weights(r.weights);
            let sol = solve(&w_inst, &r.fares, &SecondStageConfig::default()).map_err(|e| CliError::Invalid(e.to_string()))?;
            let rep = RunReport::new(&w_inst, &sol, "regime-sweep", echo.clone(), run.seed, 0, None);
            text.push_str(&serde_json::to_string(&rep).expect("report serializes"));
            text.push('\n');
        }
        write_out(Some(path), &text)?;
    }
    let mut text = format!("{}\n", RegimeRow::CSV_HEADER);
    for r in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    write_out(a.out.as_deref(), &text)
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let fares = parse_fares(&a.fares, &inst)?;
    export_milp(&inst, &fares, &a.out).map_err(|e| CliError::Io(format!("cannot write {}: {e}", a.out.display())))
}

fn run(cli: &Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Validate { instance } => cmd_validate(instance),
        Command::Eval(a) => cmd_eval(a),
        Command::Solve(a) => cmd_solve(a, cli.threads),
        Command::Bench(c) => cmd_bench(c, cli.threads),
        Command::Game(a) => cmd_game(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::RegimeSweep(a) => cmd_sweep(a, cli.threads),
        Command::ExportLp(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.code())
        }
    }
}
