//! Command-line interface.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::counts::{CountTable, FeasibilityPolicy};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, Experiment, ExperimentConfig, GridSpec};
use crate::par::Execution;
use crate::risk::Projection;
use crate::rng::{stream, Purpose};
use crate::select::{
    bootstrap_shape, penalty_path, slope_calibrate_with, BootstrapOptions, PenaltyShape, SelectOptions,
    SelectionResult, Selector, SlopeCalibration, SlopePath, SlopeRule, Universe,
};
use crate::sources::{build_renewal_model, Init, RenewalParams, SourceJson, SourceModel};
use crate::tree::{Alphabet, ContextTree, TreeJson};

#[derive(Debug, Parser)]
#[command(name = "vlmc", version, about = "Context tree selection and risk oracles for variable length Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a renewal source (or a source given as JSON).
    Simulate(SimulateArgs),
    /// Select a context tree for an observed sequence.
    Fit(FitArgs),
    /// Exact risk of a tree against a renewal source.
    Risk(RiskArgs),
    /// Penalty path and slope calibration for an observed sequence.
    Slope(FitArgs),
    /// Run one of the renewal simulation experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3.0)]
    lambda: f64,
    #[arg(long, default_value_t = 14)]
    ko: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Source model JSON (alphabet, contexts, transitions); overrides --lambda/--ko.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Discard this many steps instead of starting from the stationary law.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PenaltyKind {
    Bic,
    Aic,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UniverseKind {
    Complete,
    Renewal,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Sequence file: one line of symbols, or raw symbol indices with --raw.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "01")]
    alphabet: String,
    #[arg(long, default_value_t = 5)]
    dmax: usize,
    #[arg(long, value_enum, default_value_t = PenaltyKind::Bic)]
    penalty: PenaltyKind,
    /// Penalty constant (default 0.5 for bic, 1 for aic, 2 for bootstrap).
    #[arg(long = "const")]
    constant: Option<f64>,
    /// Calibrate the constant with the slope algorithm.
    #[arg(long)]
    slope: bool,
    #[arg(long, default_value = "0.05:8:60")]
    grid: GridSpec,
    /// Jump rule: largest complexity drop, or steepest descent of L·C(L).
    #[arg(long, default_value = "drop")]
    slope_rule: SlopeRule,
    #[arg(long = "bootstrap-B", default_value_t = 20)]
    bootstrap_b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = UniverseKind::Complete)]
    universe: UniverseKind,
    /// Admit leaves whose counts are below this threshold only when zero.
    #[arg(long)]
    threshold: Option<f64>,
    /// Input bytes are symbol indices rather than symbol characters.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RiskArgs {
    /// Tree file: `alphabet=..` header and one context per line, or JSON.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    lambda: f64,
    #[arg(long, default_value_t = 14)]
    ko: usize,
    #[arg(long)]
    source: Option<PathBuf>,
    /// Also report the variance and total risk of the plug-in fit on this sequence.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_parser = ["fig1", "fig2", "fig4", "table1"])]
    name: String,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    lambda: f64,
    #[arg(long, default_value_t = 14)]
    ko: usize,
    #[arg(long = "bootstrap-B", default_value_t = 20)]
    bootstrap_b: usize,
    #[arg(long, default_value = "0.05:8:60")]
    grid: GridSpec,
    /// Jump rule: largest complexity drop, or steepest descent of L·C(L).
    #[arg(long, default_value = "drop")]
    slope_rule: SlopeRule,
    /// Restrict the resampling methods to trees on the BIC penalty path.
    #[arg(long)]
    two_step: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(e.to_string()))
}

fn read_sequence(path: &Path, alphabet: &Alphabet, raw: bool) -> Result<Vec<u8>> {
    if raw {
        let bytes = fs::read(path)?;
        if let Some(position) = bytes.iter().position(|&b| b as usize >= alphabet.size()) {
            return Err(Error::AlphabetViolation {
                symbol: char::from(bytes[position]),
                position,
            });
        }
        Ok(bytes)
    } else {
        alphabet.encode(fs::read_to_string(path)?.trim())
    }
}

fn read_tree(path: &Path) -> Result<ContextTree> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let json: TreeJson = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        ContextTree::from_json(&json)
    } else {
        text.parse()
    }
}

fn read_source(path: &Path) -> Result<SourceModel> {
    let json: SourceJson =
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    SourceModel::from_json(&json)
}

fn load_source(source: Option<&Path>, lambda: f64, ko: usize) -> Result<SourceModel> {
    match source {
        Some(path) => read_source(path),
        None => Ok(build_renewal_model(&RenewalParams { lambda, k_o: ko })?
            .source()
            .clone()),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let source = load_source(args.source.as_deref(), args.lambda, args.ko)?;
    let init = args.burn_in.map_or(Init::Stationary, Init::BurnIn);
    let mut rng = stream(args.seed, 0, Purpose::Simulation, 0);
    let x = source.simulate(args.n, &mut rng, init);
    emit(args.out.as_deref(), &(source.alphabet().decode(&x) + "\n"))
}

#[derive(Serialize)]
struct SlopeOutput {
    path: SlopePath,
    calibration: SlopeCalibration,
}

#[derive(Serialize)]
struct FitOutput {
    n: usize,
    d_max: usize,
    penalty: &'static str,
    universe: Universe,
    selection: SelectionResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<SlopeOutput>,
}

fn fit_output(args: &FitArgs, force_slope: bool) -> Result<FitOutput> {
    let alphabet = Alphabet::new(&args.alphabet)?;
    let x = read_sequence(&args.input, &alphabet, args.raw)?;
    let table = CountTable::new(&x, &alphabet, args.dmax)?;
    let mut options = SelectOptions::new(args.dmax);
    if let Some(t) = args.threshold {
        options.policy = FeasibilityPolicy::Threshold(t);
    }
    options.universe = match args.universe {
        UniverseKind::Complete => Universe::Complete,
        UniverseKind::Renewal => Universe::RenewalFamily,
    };
    let base = Selector::new(&table, PenaltyShape::Bic, options)?;
    let (selector, name, default_constant) = match args.penalty {
        PenaltyKind::Bic => (base, "bic", 0.5),
        PenaltyKind::Aic => (base.with_shape(PenaltyShape::Aic), "aic", 1.0),
        PenaltyKind::Bootstrap => {
            let boot = BootstrapOptions {
                samples: args.bootstrap_b,
                seed: args.seed,
                replicate: 0,
            };
            let shape = bootstrap_shape(&base, &x, &boot)?;
            (base.with_shape(PenaltyShape::PerLeaf(shape)), "bootstrap", 2.0)
        }
    };
    let (selection, slope) = if args.slope || force_slope {
        let path = penalty_path(&selector, &args.grid.values()?, Execution::default())?;
        let calibration = slope_calibrate_with(&path, args.slope_rule)?;
        let selection = selector.solve(calibration.l_final)?;
        (selection, Some(SlopeOutput { path, calibration }))
    } else {
        (selector.solve(args.constant.unwrap_or(default_constant))?, None)
    };
    Ok(FitOutput {
        n: x.len(),
        d_max: args.dmax,
        penalty: name,
        universe: options.universe,
        selection,
        slope,
    })
}

#[derive(Serialize)]
struct RiskOutput {
    tree: TreeJson,
    bias: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total: Option<f64>,
}

fn risk(args: &RiskArgs) -> Result<()> {
    let tree = read_tree(&args.tree)?;
    let source = load_source(args.source.as_deref(), args.lambda, args.ko)?;
    let projection = Projection::new(&source, &tree)?;
    let (variance, total) = match &args.input {
        Some(path) => {
            let x = read_sequence(path, tree.alphabet(), false)?;
            let table = CountTable::new(&x, tree.alphabet(), tree.depth())?;
            let report = projection.report(&table.plug_in(&tree))?;
            (Some(report.variance), Some(report.total))
        }
        None => (None, None),
    };
    let out = RiskOutput {
        tree: tree.to_json(),
        bias: projection.bias(),
        variance,
        total,
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let name: Experiment = args.name.parse()?;
    let config = ExperimentConfig {
        n: args.n,
        replicates: args.replicates,
        seed: args.seed,
        renewal: RenewalParams {
            lambda: args.lambda,
            k_o: args.ko,
        },
        bootstrap_samples: args.bootstrap_b,
        grid: args.grid,
        slope_rule: args.slope_rule,
        two_step: args.two_step,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..ExperimentConfig::new(name)
    };
    for path in run_experiment(&config, &args.out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Fit(args) => emit(args.out.as_deref(), &to_json(&fit_output(args, false)?)?),
        Command::Slope(args) => emit(args.out.as_deref(), &to_json(&fit_output(args, true)?)?),
        Command::Risk(args) => risk(args),
        Command::Experiment(args) => experiment(args),
    }
}

/// Parses `argv` (including the program name), runs the command, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
