//! Command-line front end for the `owqs` simulator.
//!
//! Subcommands:
//!
//! * `simulate`: run a pattern and print a JSON report,
//! * `reorder`: print the execution plan chosen by the reordering pass,
//! * `gflow-check`: decide whether the pattern's open graph has a gflow,
//! * `bench`: run generated pattern families in both modes and print CSV.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or runtime error,
//! 3 incorrect pattern (no gflow). Errors are printed as JSON on stdout.

pub mod bench;
pub mod io;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use owqs::engine::EngineError;
use owqs::generators::AngleSet;
use owqs::gflow::{find_gflow, OpenGraph};
use owqs::oracle::dense_run;
use owqs::scheduler::SchedulerError;
use owqs::{
    parse_pattern, reorder, run, tune_weights, tune_weights_free, validate, CostWeights, ExecutionPlan, Mode,
    OutcomePolicy, Pattern, RunConfig,
};
use thiserror::Error;

use crate::bench::{BenchSpec, Family};
use crate::io::{ErrorJson, GflowJson, PlanJson, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("incorrect pattern")]
    IncorrectPattern,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::IncorrectPattern => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Input(_) => "input",
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
            CliError::IncorrectPattern => "incorrect_pattern",
        }
    }

    pub fn to_json(&self) -> ErrorJson {
        ErrorJson {
            kind: self.kind().to_string(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

impl From<owqs::pattern::PatternError> for CliError {
    fn from(e: owqs::pattern::PatternError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SchedulerError> for CliError {
    fn from(e: SchedulerError) -> Self {
        match e {
            SchedulerError::WeightsSyntax(_) | SchedulerError::InvalidWeights => CliError::Usage(e.to_string()),
            SchedulerError::Pattern(p) => p.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::IncorrectPattern => CliError::IncorrectPattern,
            EngineError::Invalid(r) => CliError::Validation(r.to_string()),
            EngineError::Pattern(p) => p.into(),
            EngineError::Input(m) => CliError::Input(m),
            EngineError::ForcedLength { .. } | EngineError::ForcedNotBit(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<owqs::oracle::OracleError> for CliError {
    fn from(e: owqs::oracle::OracleError) -> Self {
        CliError::Runtime(format!("oracle: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "owqs", version, about = "One-way quantum computation pattern simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a pattern and print the output state as JSON.
    Simulate(SimulateArgs),
    /// Print the reordered execution plan.
    Reorder(ReorderArgs),
    /// Check whether the pattern's open graph has a gflow.
    GflowCheck(GflowArgs),
    /// Benchmark a pattern family in both modes and print CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Owqs,
    Eowqs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Owqs => Mode::Owqs,
            ModeArg::Eowqs => Mode::Eowqs,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// State JSON file, or `plus` for |+> on every input.
    #[arg(long, default_value = "plus")]
    pub input: String,
    #[arg(long, value_enum, default_value = "owqs")]
    pub mode: ModeArg,
    /// Seed for random outcomes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outcome bits in plan measurement order (see `reorder`), not file order.
    #[arg(long)]
    pub force_outcomes: Option<String>,
    /// Cost weights `w_ms,w_os,w_ss,w_flag` or `auto`.
    #[arg(long, default_value = "auto")]
    pub weights: String,
    /// Also run the dense reference simulator on the same branch.
    #[arg(long)]
    pub oracle: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include kernel counts and discarded phases.
    #[arg(long)]
    pub stats: bool,
    /// Report the output as a single tensored state.
    #[arg(long)]
    pub tensor: bool,
}

#[derive(Debug, Args)]
pub struct ReorderArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// Cost weights `w_ms,w_os,w_ss,w_flag` or `auto`.
    #[arg(long, default_value = "auto")]
    pub weights: String,
    /// `eowqs` plans the positive branch, ignoring signal dependencies.
    #[arg(long, value_enum, default_value = "owqs")]
    pub mode: ModeArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GflowArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// Print correction sets and layers as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Linear,
    Cluster2d,
    Random,
    File,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Rows of a 2D cluster.
    #[arg(long = "N", default_value_t = 2)]
    pub rows: usize,
    /// Columns of a cluster (or length of a linear one).
    #[arg(long = "M", default_value_t = 8)]
    pub cols: usize,
    /// Qubits of a random pattern.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// zero, clifford, pi4 or uniform.
    #[arg(long, default_value = "uniform")]
    pub angles: String,
    #[arg(long)]
    pub allow_nogflow: bool,
    /// Pattern file for `--family file`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Timed repetitions per row; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub inner: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `--weights`.
pub fn parse_weights(s: &str) -> Result<Option<CostWeights>, CliError> {
    if s == "auto" {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|e: SchedulerError| CliError::Usage(e.to_string()))
    }
}

pub fn load_pattern(path: &std::path::Path) -> Result<Pattern, CliError> {
    let text = io::read(path)?;
    let p = parse_pattern(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let report = validate(&p);
    if !report.is_ok() {
        return Err(CliError::Validation(format!("{}:\n{report}", path.display())));
    }
    Ok(p)
}

/// Plan for `p` in `mode`; weights are tuned when `weights` is `None`.
pub fn plan_for(
    p: &Pattern,
    mode: Mode,
    weights: Option<CostWeights>,
) -> Result<(CostWeights, ExecutionPlan), CliError> {
    Ok(match (mode, weights) {
        (Mode::Owqs, None) => tune_weights(p)?,
        (Mode::Owqs, Some(w)) => (w, reorder(p, &w)?),
        (Mode::Eowqs, None) => tune_weights_free(p)?,
        (Mode::Eowqs, Some(w)) => (w, reorder(&p.without_signals(), &w)?),
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<RunReport, CliError> {
    let weights = parse_weights(&args.weights)?;
    let forced = args.force_outcomes.as_deref().map(io::parse_bits).transpose()?;
    let mode: Mode = args.mode.into();
    if mode == Mode::Eowqs && forced.is_some() {
        return Err(CliError::Usage(
            "--force-outcomes does not apply to eowqs, which takes the all-zero branch".into(),
        ));
    }
    let p = load_pattern(&args.pattern)?;
    let input = io::load_input(&args.input, &p)?;

    let (w, plan, run_pattern, cfg) = match mode {
        Mode::Owqs => {
            let (w, plan) = plan_for(&p, mode, weights)?;
            let policy = match forced {
                Some(bits) => OutcomePolicy::Forced(bits),
                None => OutcomePolicy::Random { seed: args.seed },
            };
            (w, plan, p.clone(), RunConfig::owqs(policy))
        }
        Mode::Eowqs => {
            let og = OpenGraph::from_pattern(&p)?;
            if find_gflow(&og).is_none() {
                return Err(CliError::IncorrectPattern);
            }
            let (w, plan) = plan_for(&p, mode, weights)?;
            (w, plan, p.without_signals(), RunConfig::eowqs())
        }
    };
    let mut result = run(&run_pattern, &plan, &input, &cfg)?;
    if mode == Mode::Eowqs {
        if let Ok((_, checked)) = owqs::run_eowqs(&p, &input) {
            result.stats.warnings.extend(checked.stats.warnings);
        }
    }

    let oracle = if args.oracle {
        let by_qubit: BTreeMap<_, _> = result.outcomes.iter().collect();
        let bits: Vec<u8> = run_pattern.measured_qubits().iter().map(|q| by_qubit[q]).collect();
        Some(dense_run(&run_pattern, &input, &bits)?)
    } else {
        None
    };
    Ok(RunReport::new(
        mode,
        &result,
        PlanJson::new(&plan, Some(w)),
        args.tensor,
        args.stats,
        oracle.as_ref(),
    ))
}

/// Text dump (or JSON) of the chosen plan.
pub fn reorder_cmd(args: &ReorderArgs) -> Result<String, CliError> {
    let weights = parse_weights(&args.weights)?;
    let p = load_pattern(&args.pattern)?;
    let (w, plan) = plan_for(&p, args.mode.into(), weights)?;
    if args.json {
        serde_json::to_string_pretty(&PlanJson::new(&plan, Some(w))).map_err(|e| CliError::Runtime(e.to_string()))
    } else {
        Ok(format!("weights = {w}\n{plan}"))
    }
}

/// Returns the text to print; `Err(IncorrectPattern)` carries exit code 3.
pub fn gflow_cmd(args: &GflowArgs) -> Result<String, (String, CliError)> {
    let p = load_pattern(&args.pattern).map_err(|e| (String::new(), e))?;
    let og = OpenGraph::from_pattern(&p).map_err(|e| (String::new(), e.into()))?;
    let g = find_gflow(&og);
    let text = if args.json {
        let report = GflowJson {
            found: g.is_some(),
            layers: g.as_ref().map_or(0, |g| g.layer_count()),
            correction_sets: g
                .as_ref()
                .map(|g| {
                    g.correction_sets
                        .iter()
                        .map(|(k, v)| (*k, v.iter().copied().collect()))
                        .collect()
                })
                .unwrap_or_default(),
            layering: g.as_ref().map(|g| g.layering.clone()).unwrap_or_default(),
        };
        serde_json::to_string_pretty(&report).expect("plain data") + "\n"
    } else {
        match &g {
            Some(g) => format!("found\nlayers {}\n", g.layer_count()),
            None => "not found\n".to_string(),
        }
    };
    match g {
        Some(_) => Ok(text),
        None => Err((text, CliError::IncorrectPattern)),
    }
}

pub fn bench_spec(args: &BenchArgs) -> Result<BenchSpec, CliError> {
    let family = match args.family {
        FamilyArg::Linear => Family::Linear { m: args.cols },
        FamilyArg::Cluster2d => Family::Cluster2d {
            n: args.rows,
            m: args.cols,
        },
        FamilyArg::Random => Family::Random {
            n: args.n,
            density: args.density,
            angles: args.angles.parse::<AngleSet>().map_err(CliError::Usage)?,
            allow_nogflow: args.allow_nogflow,
        },
        FamilyArg::File => Family::File(
            args.path
                .clone()
                .ok_or_else(|| CliError::Usage("--family file needs --path".into()))?,
        ),
    };
    let sizes_ok = match &family {
        Family::Linear { m } => *m >= 1,
        Family::Cluster2d { n, m } => *n >= 1 && *m >= 1,
        Family::Random { n, density, .. } => *n >= 2 && (0.0..=1.0).contains(density),
        Family::File(_) => true,
    };
    if !sizes_ok || args.reps == 0 {
        return Err(CliError::Usage(
            "family sizes and --reps must be positive, --density in [0, 1]".into(),
        ));
    }
    Ok(BenchSpec {
        family,
        seed: args.seed,
        reps: args.reps,
        inner: args.inner,
    })
}

fn write_out(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Runs a parsed command, writing results to `stdout` and diagnostics to
/// `stderr`. Returns the process exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result: Result<(), CliError> = match &cli.command {
        Command::Simulate(a) => simulate(a).and_then(|report| {
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
            write_out(a.out.as_ref(), &text, stdout)
        }),
        Command::Reorder(a) => reorder_cmd(a).and_then(|text| {
            let text = if text.ends_with('\n') { text } else { text + "\n" };
            write_out(None, &text, stdout)
        }),
        Command::GflowCheck(a) => match gflow_cmd(a) {
            Ok(text) => write_out(None, &text, stdout),
            Err((text, e)) => {
                let _ = stdout.write_all(text.as_bytes());
                if text.is_empty() {
                    Err(e)
                } else {
                    return e.exit_code();
                }
            }
        },
        Command::Bench(a) => bench_spec(a).and_then(|spec| {
            let out = bench::run_bench(&spec)?;
            for w in &out.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let mut buf = Vec::new();
            bench::write_csv(&out.rows, &mut buf)?;
            write_out(a.out.as_ref(), &String::from_utf8(buf).expect("csv is utf-8"), stdout)
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let json = serde_json::to_string(&serde_json::json!({ "error": e.to_json() })).expect("plain data");
            let _ = writeln!(stdout, "{json}");
            e.exit_code()
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = write!(stderr, "{}", e.render());
            if code != 0 {
                let err = CliError::Usage(e.kind().to_string());
                let json = serde_json::to_string(&serde_json::json!({ "error": err.to_json() })).expect("plain data");
                let _ = writeln!(stdout, "{json}");
            }
            code
        }
    }
}
