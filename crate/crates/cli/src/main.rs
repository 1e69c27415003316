//! `havenwalk`: generate scenarios, solve policies, run Monte Carlo batches
//! and query solved artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use havenwalk::rover::HybridState;
use havenwalk::scenario::{Landing, Scenario};
use havenwalk::scenario_gen::{gen_sweep_scenario, SweepParams};
use havenwalk::simulator::{
    format_batch_csv, format_trace, rollout, run_batch_with_profiles, sample_start_states, trial_rng, Controller,
    PolicyTable, ProfileSet,
};
use havenwalk::solver::{format_curve_csv, min_energy_curve, solve};
use havenwalk::{Cell, Error, Flavour, PolicyArtifact, TOOL_VERSION};

const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Parser)]
#[command(name = "havenwalk", version, about = "Risk-bounded recovery planning for solar rovers")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sweep scenario directory.
    Gen(GenArgs),
    /// Run value iteration and write a policy artifact.
    Solve(SolveArgs),
    /// Roll policies out against shared fault profiles and write a batch CSV.
    Simulate(SimulateArgs),
    /// Predicted risk and recommended action at a hybrid state.
    Query(QueryArgs),
    /// Minimum departure energy over time at a cell, one CSV per threshold.
    Curve(CurveArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, default_value_t = 10)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    /// Cell side, m.
    #[arg(long, default_value_t = 240.0)]
    cell_size: f64,
    #[arg(long, default_value_t = 24.0)]
    window_hours: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Config keys replaced for this run, e.g. `--set solver.max_iterations=500`.
#[derive(clap::Args)]
struct Overrides {
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavourArg {
    Nearest,
    Interp,
    Conservative,
}

impl From<FlavourArg> for Flavour {
    fn from(f: FlavourArg) -> Self {
        match f {
            FlavourArg::Nearest => Flavour::Nearest,
            FlavourArg::Interp => Flavour::Interp,
            FlavourArg::Conservative => Flavour::Conservative,
        }
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    flavour: FlavourArg,
    /// Convergence threshold; defaults to the config value.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sweep ceiling; defaults to the config value.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    policy_artifacts: Vec<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `ROW,COL,T,B` or `auto-band`.
    #[arg(long, default_value = "auto-band")]
    start: String,
    /// Predicted-risk band for `auto-band` starts, `LO,HI`.
    #[arg(long, default_value = "0.01,0.9")]
    band: String,
    /// Number of `auto-band` starts.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_attempts: usize,
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-trial path traces.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Trials traced per start and policy.
    #[arg(long, default_value_t = 10)]
    trace_trials: usize,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(clap::Args)]
struct QueryArgs {
    #[arg(long)]
    artifact: PathBuf,
    /// `ROW,COL`.
    #[arg(long)]
    cell: String,
    /// Epoch seconds.
    #[arg(long)]
    t: f64,
    /// Wh.
    #[arg(long)]
    b: f64,
    /// Scenario directory; defaults to the one recorded in the artifact.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(clap::Args)]
struct CurveArgs {
    #[arg(long)]
    artifact: PathBuf,
    /// `ROW,COL`.
    #[arg(long)]
    cell: String,
    #[arg(long, num_args = 1.., required = true)]
    thresholds: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Malformed flag values; exit code 1 like parser errors.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::NonConvergence { .. }) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Query(a) => query(a),
        Command::Curve(a) => curve(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let params = SweepParams {
        n_rows: a.rows,
        n_cols: a.cols,
        cell_size: a.cell_size,
        window_s: a.window_hours * 3600.0,
        seed: a.seed,
        ..SweepParams::default()
    };
    let scenario = gen_sweep_scenario::<f64>(&params)?.build()?;
    scenario.write(&a.out)?;
    let manifest = a.out.join(MANIFEST_FILE);
    std::fs::write(&manifest, metadata_lines(&scenario_metadata(scenario.hash())))
        .with_context(|| format!("writing {}", manifest.display()))?;
    println!("scenario_hash={}", scenario.hash());
    println!("cells={}", scenario.space.cells().len());
    println!("havens={}", scenario.safe_set.havens().count());
    println!("states={}", scenario.space.cardinality());
    Ok(())
}

fn solve_cmd(a: SolveArgs) -> Result<()> {
    let scenario = load_scenario(&a.scenario, &a.overrides)?;
    let flavour = Flavour::from(a.flavour);
    let epsilon = a.epsilon.unwrap_or(scenario.config.solver.epsilon);
    let max_iterations = a.max_iterations.unwrap_or(scenario.config.solver.max_iterations);
    let clock = Instant::now();
    let solution = solve(&scenario, flavour, epsilon, max_iterations)?;
    let wall = clock.elapsed().as_secs_f64();
    let artifact = PolicyArtifact::from_solution(&scenario, &solution, epsilon, TOOL_VERSION);
    artifact.write(&a.out)?;
    println!("scenario_hash={}", scenario.hash());
    println!("flavour={flavour}");
    println!("states={}", scenario.space.cardinality());
    println!("transition_structures={}", artifact.n_structures);
    println!("iterations={}", solution.stats.iterations);
    println!("residual={:e}", solution.stats.residual);
    println!("wall_time_s={wall:.3}");
    println!("artifact={}", a.out.display());
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let scenario = load_scenario(&a.scenario, &a.overrides)?;
    let mut tables = Vec::with_capacity(a.policy_artifacts.len());
    for path in &a.policy_artifacts {
        let artifact = PolicyArtifact::read(path)?;
        artifact
            .check_scenario(scenario.hash())
            .with_context(|| format!("refusing to simulate {}", path.display()))?;
        tables.push(PolicyTable::from_artifact(&artifact));
    }
    let controllers = tables
        .iter()
        .map(|t| Controller::new(&scenario, t))
        .collect::<havenwalk::Result<Vec<_>>>()?;

    let starts = if a.start == "auto-band" {
        let band = parse_pair(&a.band, "--band")?;
        sample_start_states(&controllers, a.starts, band, a.seed, a.max_attempts)?
    } else {
        vec![parse_start(&a.start)?]
    };
    for x in &starts {
        if !matches!(scenario.classify(*x), Landing::Live(_)) {
            return Err(Error::Invalid(format!("start {} is not a live state", show(x))).into());
        }
    }

    let profiles = ProfileSet::sample(scenario.config.faults.rate_alpha, scenario.drive_horizon(), a.trials, a.seed)?;
    let mut results = Vec::new();
    for (k, x0) in starts.iter().enumerate() {
        let batch = run_batch_with_profiles(&controllers, *x0, &profiles)?;
        for r in &batch {
            println!(
                "start={k} {} policy={} predicted={:.6} actual={:.6} stderr={:.6} reckless={}",
                show(x0),
                r.policy,
                r.predicted_risk,
                r.actual_risk,
                r.stderr,
                r.reckless
            );
        }
        results.extend(batch);
        if let Some(dir) = &a.traces {
            write_traces(dir, k, *x0, &controllers, &profiles, a.trace_trials, scenario.hash())?;
        }
    }

    let mut meta = scenario_metadata(scenario.hash());
    meta.push(("seed", a.seed.to_string()));
    meta.push(("trials", a.trials.to_string()));
    write_file(&a.out, &format_batch_csv(&results, &meta))
}

fn write_traces(
    dir: &Path,
    k: usize,
    x0: HybridState<f64>,
    controllers: &[Controller<'_, f64>],
    profiles: &ProfileSet<f64>,
    n: usize,
    hash: &str,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (j, ctrl) in controllers.iter().enumerate() {
        let mut trials = Vec::new();
        for (i, p) in profiles.profiles.iter().enumerate().take(n) {
            let mut rng = trial_rng(profiles.seed, i);
            trials.push((i, rollout(ctrl, x0, p, &mut rng)?));
        }
        let mut meta = scenario_metadata(hash);
        meta.push(("policy", ctrl.flavour().to_string()));
        meta.push(("start", show(&x0)));
        let text = metadata_lines(&meta) + &format_trace(&trials);
        write_file(&dir.join(format!("start{k}_{j}_{}.txt", ctrl.flavour())), &text)?;
    }
    Ok(())
}

fn query(a: QueryArgs) -> Result<()> {
    let artifact = PolicyArtifact::read(&a.artifact)?;
    let space = artifact.space::<f64>()?;
    let x = HybridState::new(parse_cell(&a.cell)?, a.t, a.b);
    println!("scenario_hash={}", artifact.scenario_hash);
    println!("flavour={}", artifact.flavour);

    if let Some(reason) = outside_region(&artifact, &space, &x) {
        println!("risk=1");
        println!("region=failure ({reason})");
        println!("action=none");
        return Ok(());
    }

    let dir = match &a.scenario {
        Some(d) => d.clone(),
        None if !artifact.scenario_path.is_empty() => PathBuf::from(&artifact.scenario_path),
        None => return Err(usage("artifact records no scenario directory; pass --scenario")),
    };
    let scenario = load_scenario(&dir, &a.overrides)?;
    artifact.check_scenario(scenario.hash())?;
    let table = PolicyTable::from_artifact(&artifact);
    let ctrl = Controller::new(&scenario, &table)?;
    let risk = ctrl.predicted(&x);
    println!("risk={risk}");
    match scenario.classify(x) {
        Landing::Safe(_) => {
            println!("region=safe");
            println!("action=none");
        }
        Landing::Failed(_) => {
            println!("region=failure");
            println!("action=none");
        }
        Landing::Live(_) if risk >= 1.0 => {
            println!("region=live");
            println!("action=none");
        }
        Landing::Live(x) => {
            println!("region=live");
            let mut choices: Vec<(f64, havenwalk::Action)> = Vec::new();
            for (w, act) in ctrl.action_choices(&x)? {
                match choices.iter_mut().find(|(_, a)| *a == act) {
                    Some(c) => c.0 += w,
                    None => choices.push((w, act)),
                }
            }
            let text = if choices.len() == 1 {
                choices[0].1.name().to_string()
            } else {
                choices
                    .iter()
                    .map(|(w, act)| format!("{}:{w}", act.name()))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            println!("action={text}");
        }
    }
    Ok(())
}

fn outside_region(artifact: &PolicyArtifact, space: &havenwalk::DiscreteStateSpace, x: &HybridState<f64>) -> Option<String> {
    let b = &artifact.bounds;
    let (rows, cols) = artifact.grid_shape;
    if x.cell.row >= rows || x.cell.col >= cols {
        Some(format!("cell {} is off the {rows}x{cols} grid", x.cell))
    } else if space.cell_index(x.cell).is_none() {
        Some(format!("cell {} is not traversable", x.cell))
    } else if x.t < b.t_min {
        Some(format!("t precedes t_min {}", b.t_min))
    } else if x.t > b.t_max {
        Some(format!("t exceeds t_max {}", b.t_max))
    } else if x.b < b.b_min {
        Some(format!("b below b_min {}", b.b_min))
    } else {
        None
    }
}

fn curve(a: CurveArgs) -> Result<()> {
    let artifact = PolicyArtifact::read(&a.artifact)?;
    let space = artifact.space::<f64>()?;
    let cell = parse_cell(&a.cell)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for thr in &a.thresholds {
        let points = min_energy_curve(&artifact.values, &space, cell, *thr)?;
        let mut meta = scenario_metadata(&artifact.scenario_hash);
        meta.push(("flavour", artifact.flavour.to_string()));
        meta.push(("cell", format!("{},{}", cell.row, cell.col)));
        meta.push(("threshold", thr.to_string()));
        let path = a.out.join(format!("curve_r{}_c{}_{thr}.csv", cell.row, cell.col));
        write_file(&path, &format_curve_csv(&points, &meta))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn load_scenario(dir: &Path, overrides: &Overrides) -> Result<Scenario<f64>> {
    let pairs = overrides
        .set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    // Recorded in artifacts so `query` can find the scenario again.
    let dir = std::fs::canonicalize(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(Scenario::load_with_overrides(&dir, &pairs)?)
}

fn scenario_metadata(hash: &str) -> Vec<(&'static str, String)> {
    vec![("scenario_hash", hash.to_string()), ("tool_version", TOOL_VERSION.to_string())]
}

fn metadata_lines(meta: &[(&str, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn show(x: &HybridState<f64>) -> String {
    format!("cell={},{} t={} b={}", x.cell.row, x.cell.col, x.t, x.b)
}

fn numbers(text: &str, n: usize, flag: &str) -> Result<Vec<f64>> {
    let v = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("{flag}: cannot parse `{text}`")))?;
    if v.len() != n {
        return Err(usage(format!("{flag}: expected {n} comma-separated numbers, got `{text}`")));
    }
    Ok(v)
}

fn index(v: f64, flag: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(usage(format!("{flag}: `{v}` is not a cell index")))
    }
}

fn parse_cell(text: &str) -> Result<Cell> {
    let v = numbers(text, 2, "--cell")?;
    Ok(Cell::new(index(v[0], "--cell")?, index(v[1], "--cell")?))
}

fn parse_start(text: &str) -> Result<HybridState<f64>> {
    let v = numbers(text, 4, "--start")?;
    Ok(HybridState::new(Cell::new(index(v[0], "--start")?, index(v[1], "--start")?), v[2], v[3]))
}

fn parse_pair(text: &str, flag: &str) -> Result<(f64, f64)> {
    let v = numbers(text, 2, flag)?;
    Ok((v[0], v[1]))
}
