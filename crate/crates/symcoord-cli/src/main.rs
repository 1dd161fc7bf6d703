//! `symcoord`: solve, evaluate, and verify finite-horizon two-agent
//! symmetric-strategy team models.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use symcoord_cli::format::{common_labels, load_model, Loaded, LoadedModel, NumericMode};
use symcoord_cli::report;
use symcoord_cli::scenario::{builtin_scenarios, find_scenario, verify_all};

use symcoord_core::analysis::reduce_to_current_state;
use symcoord_core::belief::check_conditional_independence;
use symcoord_core::model::{InfoStructure, StrategyPair};
use symcoord_core::prescription::{GridSpec, Refinement};
use symcoord_core::scalar::Scalar;
use symcoord_core::solver::{
    extract_symmetric_strategy, reachable_tree, replay_symmetric_strategy, solve, Budgets,
};
use symcoord_core::traj::{evaluate_exact, evaluate_mc, DEFAULT_NODE_BUDGET};

#[derive(Parser)]
#[command(
    name = "symcoord",
    about = "Coordinator dynamic programming for two-agent teams restricted to symmetric strategies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model file path, or the name of a built-in scenario
    /// (see `symcoord verify --list`).
    #[arg(long)]
    model: String,
    /// Override the model's information structure (p1a/p1b/p1c/p1d).
    #[arg(long)]
    structure: Option<String>,
    /// Numeric mode; fraction syntax in the file forces `rational`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Prescription grid resolution K (weights are multiples of 1/K).
    #[arg(long, default_value_t = 20)]
    grid: u32,
    /// Search deterministic prescriptions only (same as --grid 1).
    #[arg(long, default_value_t = false)]
    deterministic_only: bool,
    /// Coordinate-descent refinement, written `steps,shrink`.
    #[arg(long)]
    refine: Option<String>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Directory for CSV artifacts; defaults to $SYMCOORD_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coordinator dynamic program and print J*.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Worker threads for batch work; the solver itself is
        /// sequential and deterministic regardless.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Exactly evaluate the model's embedded strategy (pair).
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo estimate of the embedded symmetric strategy's cost.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
    },
    /// Trace the coordinator's reachable belief tree to CSV.
    Belief {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reduce the embedded full-history pair to current-state strategies.
    Reduce {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check conditional independence of private information given the
    /// common information.
    Independence {
        #[command(flatten)]
        model: ModelArgs,
        /// Time to check; defaults to the horizon.
        #[arg(long)]
        at: Option<usize>,
    },
    /// Re-derive every built-in scenario's numbers and compare exactly.
    Verify {
        /// Check a single scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Write the verification table to a CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// List the built-in scenarios and exit.
        #[arg(long, default_value_t = false)]
        list: bool,
        /// Worker threads for the scenario batch.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerificationFailed) => ExitCode::from(1),
        Err(CliError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn parse_structure(code: &Option<String>) -> Result<Option<InfoStructure>, CliError> {
    match code {
        None => Ok(None),
        Some(c) => InfoStructure::from_code(c)
            .map(Some)
            .ok_or_else(|| CliError::Input(format!("unknown information structure `{c}`"))),
    }
}

fn parse_mode(mode: &Option<String>) -> Result<Option<NumericMode>, CliError> {
    match mode.as_deref() {
        None => Ok(None),
        Some("rational") => Ok(Some(NumericMode::Rational)),
        Some("float") => Ok(Some(NumericMode::Float)),
        Some(other) => Err(CliError::Input(format!(
            "mode must be `rational` or `float`, not `{other}`"
        ))),
    }
}

fn parse_grid(args: &GridArgs) -> Result<GridSpec, CliError> {
    let refinement = match &args.refine {
        None => Refinement::None,
        Some(text) => {
            let (steps, shrink) = text
                .split_once(',')
                .ok_or_else(|| CliError::Input("--refine expects `steps,shrink`".to_string()))?;
            let steps: u32 = steps.trim().parse().map_err(CliError::input)?;
            let shrink: u32 = shrink.trim().parse().map_err(CliError::input)?;
            if shrink < 2 {
                return Err(CliError::Input("refine shrink must be at least 2".into()));
            }
            Refinement::CoordinateDescent { steps, shrink }
        }
    };
    if args.grid == 0 {
        return Err(CliError::Input("--grid must be at least 1".into()));
    }
    Ok(GridSpec {
        resolution: if args.deterministic_only { 1 } else { args.grid },
        include_deterministic: true,
        refinement,
    })
}

fn load(args: &ModelArgs) -> Result<Loaded, CliError> {
    let text = if Path::new(&args.model).exists() {
        std::fs::read_to_string(&args.model).map_err(CliError::input)?
    } else if let Some(scenario) = find_scenario(&args.model) {
        scenario.text.to_string()
    } else {
        return Err(CliError::Input(format!(
            "`{}` is neither a readable file nor a built-in scenario",
            args.model
        )));
    };
    let structure = parse_structure(&args.structure)?;
    let mode = parse_mode(&args.mode)?;
    let loaded = load_model(&text, mode, structure).map_err(CliError::input)?;
    warn_on_non_exchangeable(&loaded);
    Ok(loaded)
}

fn warn_on_non_exchangeable(loaded: &Loaded) {
    let exchangeable = match loaded {
        Loaded::Rational(m) => m.model.cost_is_exchangeable(),
        Loaded::Float(m) => m.model.cost_is_exchangeable(),
    };
    if !exchangeable {
        eprintln!(
            "note: the stage cost is not exchangeable in the two agents; \
             symmetric strategies are rarely a natural restriction here"
        );
    }
}

fn out_dir(args: &OutArgs) -> Option<PathBuf> {
    args.out
        .clone()
        .or_else(|| std::env::var_os("SYMCOORD_OUT_DIR").map(PathBuf::from))
}

fn artifact_name(loaded_name: Option<&str>, kind: &str) -> String {
    format!("{}_{kind}.csv", loaded_name.unwrap_or("model"))
}

/// Renders a value as `fraction (decimal)` in rational mode, or the
/// decimal alone in float mode.
fn show<N: Scalar>(v: &N) -> String {
    if N::EXACT {
        format!("{v} ({})", v.to_f64())
    } else {
        format!("{}", v.to_f64())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            model,
            grid,
            out,
            threads,
        } => {
            let _ = threads;
            let spec = parse_grid(&grid)?;
            match load(&model)? {
                Loaded::Rational(m) => run_solve(&m, &spec, &out),
                Loaded::Float(m) => run_solve(&m, &spec, &out),
            }
        }
        Command::Evaluate { model } => match load(&model)? {
            Loaded::Rational(m) => run_evaluate(&m),
            Loaded::Float(m) => run_evaluate(&m),
        },
        Command::Mc { model, seed, n } => {
            if n == 0 {
                return Err(CliError::Input("--n must be at least 1".into()));
            }
            match load(&model)? {
                Loaded::Rational(m) => run_mc(&m, seed, n),
                Loaded::Float(m) => run_mc(&m, seed, n),
            }
        }
        Command::Belief { model, grid, out } => {
            let spec = parse_grid(&grid)?;
            match load(&model)? {
                Loaded::Rational(m) => run_belief(&m, &spec, &out),
                Loaded::Float(m) => run_belief(&m, &spec, &out),
            }
        }
        Command::Reduce { model, out } => match load(&model)? {
            Loaded::Rational(m) => run_reduce(&m, &out),
            Loaded::Float(m) => run_reduce(&m, &out),
        },
        Command::Independence { model, at } => match load(&model)? {
            Loaded::Rational(m) => run_independence(&m, at),
            Loaded::Float(m) => run_independence(&m, at),
        },
        Command::Verify {
            scenario,
            csv,
            list,
            threads,
        } => run_verify(scenario, csv, list, threads),
    }
}

fn run_solve<N: Scalar>(
    loaded: &LoadedModel<N>,
    spec: &GridSpec,
    out: &OutArgs,
) -> Result<(), CliError> {
    let report =
        solve(&loaded.model, loaded.structure, spec, &Budgets::default()).map_err(CliError::input)?;
    println!(
        "model: {} ({}), grid K = {}",
        loaded.name.as_deref().unwrap_or("<unnamed>"),
        loaded.structure.code(),
        report.grid_resolution
    );
    println!("J* = {}", show(&report.j_star));
    for (x0, v) in &report.initial_values {
        println!(
            "V_1(x0 = {}) = {}",
            loaded.model.shared_space().label(*x0),
            show(v)
        );
    }
    println!(
        "nodes: {}, memo hits: {}, prescriptions evaluated: {}",
        report.nodes, report.memo_hits, report.prescriptions_evaluated
    );
    let tree =
        reachable_tree(&loaded.model, loaded.structure, &report).map_err(CliError::input)?;
    println!(
        "belief tree: {} reachable nodes over horizon {}",
        tree.len(),
        loaded.model.horizon()
    );
    if let Some(dir) = out_dir(out) {
        std::fs::create_dir_all(&dir).map_err(CliError::input)?;
        let path = dir.join(artifact_name(loaded.name.as_deref(), "prescriptions"));
        let file = std::fs::File::create(&path).map_err(CliError::input)?;
        report::write_prescriptions_csv(&loaded.model, loaded.structure, &tree, file)
            .map_err(CliError::input)?;
        println!("wrote {}", path.display());
        let path = dir.join(artifact_name(loaded.name.as_deref(), "beliefs"));
        let file = std::fs::File::create(&path).map_err(CliError::input)?;
        report::write_belief_csv(&loaded.model, loaded.structure, &tree, file)
            .map_err(CliError::input)?;
        println!("wrote {}", path.display());
    }
    // Round-trip sanity: replaying the extracted symmetric strategy
    // reproduces J*.
    let g = extract_symmetric_strategy(&loaded.model, loaded.structure, &report)
        .map_err(CliError::input)?;
    let j = evaluate_exact(
        &loaded.model,
        &StrategyPair::symmetric(g),
        loaded.structure,
        DEFAULT_NODE_BUDGET,
    )
    .map_err(CliError::input)?;
    if j != report.j_star {
        return Err(CliError::Input(format!(
            "internal check failed: extracted strategy evaluates to {} instead of J*",
            show(&j)
        )));
    }
    Ok(())
}

fn embedded_pair<N: Scalar>(loaded: &LoadedModel<N>) -> Result<StrategyPair<N>, CliError> {
    match (&loaded.strategy, &loaded.strategy2) {
        (Some(g1), Some(g2)) => Ok(StrategyPair::new(g1.clone(), g2.clone())),
        (Some(g), None) => Ok(StrategyPair::symmetric(g.clone())),
        (None, _) => Err(CliError::Input(
            "the model file has no embedded strategy".into(),
        )),
    }
}

fn run_evaluate<N: Scalar>(loaded: &LoadedModel<N>) -> Result<(), CliError> {
    let pair = embedded_pair(loaded)?;
    let j = evaluate_exact(&loaded.model, &pair, loaded.structure, DEFAULT_NODE_BUDGET)
        .map_err(CliError::input)?;
    println!(
        "J = {} under {} for the embedded {}",
        show(&j),
        loaded.structure.code(),
        if loaded.strategy2.is_some() {
            "strategy pair"
        } else {
            "symmetric strategy"
        }
    );
    Ok(())
}

fn run_mc<N: Scalar>(loaded: &LoadedModel<N>, seed: u64, n: u64) -> Result<(), CliError> {
    let g = loaded
        .strategy
        .clone()
        .ok_or_else(|| CliError::Input("the model file has no embedded strategy".into()))?;
    if loaded.strategy2.is_some() {
        return Err(CliError::Input(
            "Monte Carlo evaluation takes a symmetric strategy, but the file ships a pair".into(),
        ));
    }
    let (estimate, stderr) =
        evaluate_mc(&loaded.model, &g, loaded.structure, seed, n).map_err(CliError::input)?;
    println!(
        "estimate = {} +- {} (seed {seed}, n = {n})",
        show(&estimate),
        stderr.to_f64()
    );
    Ok(())
}

fn run_belief<N: Scalar>(
    loaded: &LoadedModel<N>,
    spec: &GridSpec,
    out: &OutArgs,
) -> Result<(), CliError> {
    // Trace under the embedded symmetric strategy when there is one,
    // otherwise under the solved coordinator strategy.
    let tree = match &loaded.strategy {
        Some(g) => replay_symmetric_strategy(&loaded.model, loaded.structure, g)
            .map_err(CliError::input)?,
        None => {
            let solved = solve(&loaded.model, loaded.structure, spec, &Budgets::default())
                .map_err(CliError::input)?;
            reachable_tree(&loaded.model, loaded.structure, &solved).map_err(CliError::input)?
        }
    };
    match out_dir(out) {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(CliError::input)?;
            let path = dir.join(artifact_name(loaded.name.as_deref(), "beliefs"));
            let file = std::fs::File::create(&path).map_err(CliError::input)?;
            report::write_belief_csv(&loaded.model, loaded.structure, &tree, file)
                .map_err(CliError::input)?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut buf = Vec::new();
            report::write_belief_csv(&loaded.model, loaded.structure, &tree, &mut buf)
                .map_err(CliError::input)?;
            std::io::stdout()
                .write_all(&buf)
                .map_err(CliError::input)?;
        }
    }
    Ok(())
}

fn run_reduce<N: Scalar>(loaded: &LoadedModel<N>, out: &OutArgs) -> Result<(), CliError> {
    if loaded.structure != InfoStructure::P1b {
        return Err(CliError::Input(
            "the reduction consumes full-local-history strategies (p1b)".into(),
        ));
    }
    let pair = embedded_pair(loaded)?;
    let report = reduce_to_current_state(&loaded.model, &pair, DEFAULT_NODE_BUDGET)
        .map_err(CliError::input)?;
    println!("cost before = {}", show(&report.cost_before));
    println!("cost after  = {}", show(&report.cost_after));
    println!("symmetry gap = {}", show(&report.symmetry_gap));
    if let Some(w) = &report.witness {
        println!(
            "witness: t = {}, x = {}, common = {}",
            w.t,
            w.private
                .iter()
                .map(|&x| loaded.model.local_space().label(x).to_string())
                .collect::<Vec<_>>()
                .join("|"),
            common_labels(&loaded.model, InfoStructure::P1c, &w.common),
        );
    }
    if let Some(dir) = out_dir(out) {
        std::fs::create_dir_all(&dir).map_err(CliError::input)?;
        let path = dir.join(artifact_name(loaded.name.as_deref(), "reduction"));
        let file = std::fs::File::create(&path).map_err(CliError::input)?;
        report::write_reduction_csv(&loaded.model, &report, file).map_err(CliError::input)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_independence<N: Scalar>(
    loaded: &LoadedModel<N>,
    at: Option<usize>,
) -> Result<(), CliError> {
    let pair = embedded_pair(loaded)?;
    let t = at.unwrap_or(loaded.model.horizon());
    if t == 0 || t > loaded.model.horizon() {
        return Err(CliError::Input(format!(
            "--at must lie in 1..={}",
            loaded.model.horizon()
        )));
    }
    let report = check_conditional_independence(
        &loaded.model,
        &pair,
        loaded.structure,
        t,
        DEFAULT_NODE_BUDGET,
    )
    .map_err(CliError::input)?;
    println!(
        "conditional independence at t = {t} under {}: {}",
        loaded.structure.code(),
        if report.holds { "holds" } else { "FAILS" }
    );
    println!("max deviation = {}", show(&report.max_deviation));
    if let Some(w) = &report.witness {
        println!(
            "witness: common = {}, p1 = {}, p2 = {}, joint = {}, marginal product = {}",
            common_labels(&loaded.model, loaded.structure, &w.common),
            w.p1.iter()
                .map(|&x| loaded.model.local_space().label(x).to_string())
                .collect::<Vec<_>>()
                .join("|"),
            w.p2.iter()
                .map(|&x| loaded.model.local_space().label(x).to_string())
                .collect::<Vec<_>>()
                .join("|"),
            show(&w.joint),
            show(&w.marginal_product),
        );
    }
    Ok(())
}

fn run_verify(
    scenario: Option<String>,
    csv: Option<PathBuf>,
    list: bool,
    threads: usize,
) -> Result<(), CliError> {
    if list {
        for s in builtin_scenarios() {
            println!("{:<18} {}", s.name, s.summary);
        }
        return Ok(());
    }
    if let Some(name) = &scenario {
        if find_scenario(name).is_none() {
            return Err(CliError::Input(format!("unknown scenario `{name}`")));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(CliError::input)?;
    let (rows, ok) = pool.install(|| verify_all(scenario.as_deref()));
    print!("{}", report::render_verify_table(&rows));
    if let Some(path) = csv {
        let file = std::fs::File::create(&path).map_err(CliError::input)?;
        report::write_verify_csv(&rows, file).map_err(CliError::input)?;
        println!("wrote {}", path.display());
    }
    if ok {
        println!("all {} checks passed", rows.len());
        Ok(())
    } else {
        println!(
            "{} of {} checks failed",
            rows.iter().filter(|r| !r.pass).count(),
            rows.len()
        );
        Err(CliError::VerificationFailed)
    }
}
