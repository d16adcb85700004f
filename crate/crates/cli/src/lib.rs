//! Command dispatch for the `oomlab` binary.
//!
//! Reports go to stdout as JSON (or CSV where a flat table exists), messages to
//! stderr. Exit codes: 0 success or PASS, 1 FAIL or invalid input, 2 usage
//! error, 3 INCONCLUSIVE.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use oomlab::causal::{
    causal_span_rank, enumerate_causal_states, statistical_complexity, topological_complexity,
    DEFAULT_CLUSTER_TOL,
};
use oomlab::dimension::{minimize_oom, process_dimension, DEFAULT_TOL_REL};
use oomlab::experiments::{Verdict, EQUIVALENCE_TOL};
use oomlab::files::{
    element_from_json, load_experiment_spec, load_model_file, parse_model_file, run_experiment,
    FileError, Model, ModelFile,
};
use oomlab::ncoom::{
    nc_evaluate_basis, nc_evaluate_ordered, nc_process_dimension, nc_stationarity_check,
    OperatorOrder, DEFAULT_NC_DEPTH, DEFAULT_SAMPLES,
};
use oomlab::oom::{
    sample_trajectory, stationarity_check, word_probability, DEFAULT_NEG_TOL,
    DEFAULT_VALIDATION_DEPTH,
};
use oomlab::{DimensionReport, OomError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Environment variable overriding the default seed of 0.
pub const SEED_ENV: &str = "OOMLAB_SEED";

/// Library operation and the subcommand that reaches it.
pub const COVERAGE: &[(&str, &str)] = &[
    ("construct_algebra", "nc-eval"),
    ("unit_element", "validate"),
    ("is_positive", "nc-eval"),
    ("basis_elements", "nc-eval"),
    ("validate_oom", "validate"),
    ("word_probability", "eval"),
    ("hmm_to_oom", "eval"),
    ("mixture_direct_sum", "validate"),
    ("stationarity_check", "validate"),
    ("sample_trajectory", "sample"),
    ("apply_tau", "dim"),
    ("build_hankel", "dim"),
    ("numerical_rank", "dim"),
    ("process_dimension", "dim"),
    ("minimize_oom", "minimize"),
    ("equivalent", "minimize"),
    ("predictive_distribution", "causal"),
    ("enumerate_causal_states", "causal"),
    ("statistical_complexity", "causal"),
    ("topological_complexity", "causal"),
    ("causal_span_rank", "causal"),
    ("validate_ncoom", "validate"),
    ("nc_evaluate", "nc-eval"),
    ("embed_classical", "nc-dim"),
    ("nc_hankel", "nc-dim"),
    ("nc_process_dimension", "nc-dim"),
    ("nc_mixture_direct_sum", "validate"),
    ("nc_stationarity_check", "validate"),
    ("cylinder_distance", "experiment"),
    ("run_additivity", "experiment"),
    ("run_semicontinuity", "experiment"),
    ("run_upperbound", "experiment"),
    ("parse_model_file", "validate"),
];

#[derive(Debug, Parser)]
#[command(
    name = "oomlab",
    version,
    about = "Observable operator models from the command line"
)]
pub struct Cli {
    /// Worker threads for Hankel fills (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check model conditions and stationarity.
    Validate(ValidateArgs),
    /// Probability of a word.
    Eval(EvalArgs),
    /// Process dimension from the Hankel rank ladder.
    Dim(DimArgs),
    /// Minimal equivalent OOM.
    Minimize(MinimizeArgs),
    /// Finite-horizon causal states.
    Causal(CausalArgs),
    /// Evaluate an NC-OOM state on a product of algebra elements.
    NcEval(NcEvalArgs),
    /// Dimension of an NC-OOM (classical models are embedded).
    NcDim(DimArgs),
    /// Run experiment specifications.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Draw a trajectory.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model file (JSON).
    #[arg(long, short)]
    model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Word length for the classical checks.
    #[arg(long, default_value_t = DEFAULT_VALIDATION_DEPTH)]
    depth: usize,
    /// Tensor length for NC checks.
    #[arg(long, default_value_t = DEFAULT_NC_DEPTH)]
    nc_depth: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Word over the model alphabet, e.g. `101` or `a,b,a`.
    #[arg(long, allow_hyphen_values = true)]
    word: String,
    #[arg(long, default_value_t = DEFAULT_NEG_TOL)]
    neg_tol: f64,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 6)]
    max_level: usize,
    #[arg(long, default_value_t = DEFAULT_TOL_REL)]
    tol_rel: f64,
    /// Print `level,rank` rows instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = DEFAULT_TOL_REL)]
    tol_rel: f64,
    /// Word length for the equivalence check (default: sum of dimensions).
    #[arg(long)]
    check_len: Option<usize>,
    /// Also write the minimized model file here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CausalArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    past_len: usize,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
    cluster_tol: f64,
    #[arg(long, default_value_t = DEFAULT_TOL_REL)]
    tol_rel: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Forward,
    Reversed,
}

impl From<OrderArg> for OperatorOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Forward => OperatorOrder::Forward,
            OrderArg::Reversed => OperatorOrder::Reversed,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct FactorSource {
    /// Comma-separated matrix-unit indices, one per tensor factor.
    #[arg(long)]
    basis: Option<String>,
    /// JSON file: a list of elements, each a list of row-major complex blocks.
    #[arg(long)]
    factors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NcEvalArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    source: FactorSource,
    #[arg(long, value_enum, default_value = "forward")]
    order: OrderArg,
    #[arg(long, default_value_t = DEFAULT_NEG_TOL)]
    pos_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Run one specification file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    spec: PathBuf,
    /// Directory receiving report.json and measurements.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Print the measurement table as CSV instead of the JSON report.
    #[arg(long)]
    csv: bool,
    /// Include wall-clock runtime in the report (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    length: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Model(#[from] OomError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(OomError::UnknownSymbol(_) | OomError::SymbolIndex { .. }) => {
                EXIT_USAGE
            }
            _ => EXIT_FAIL,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command produced: text for stdout and the exit code.
struct Outcome {
    stdout: String,
    code: i32,
}

impl Outcome {
    fn json(value: &Value, code: i32) -> Self {
        Outcome {
            stdout: to_json(value),
            code,
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Parses arguments and runs the command, writing to the given streams.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn seed_or_env(seed: Option<u64>) -> CliResult<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
        }),
        Err(_) => Ok(0),
    }
}

fn classical(model: &Model, command: &str) -> CliResult<oomlab::OomModel> {
    model.to_oom().ok_or_else(|| {
        CliError::Usage(format!(
            "`{command}` needs a classical model (oom, hmm or mixture)"
        ))
    })
}

fn dimension_code(r: &DimensionReport) -> i32 {
    if r.stabilized {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    }
}

fn dimension_output(report: &DimensionReport, csv: bool) -> Outcome {
    let code = dimension_code(report);
    if csv {
        let mut s = String::from("level,rank\n");
        for (level, rank) in &report.rank_by_level {
            s.push_str(&format!("{level},{rank}\n"));
        }
        return Outcome { stdout: s, code };
    }
    Outcome {
        stdout: to_json(report),
        code,
    }
}

fn dispatch(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Eval(a) => {
            let model = parse_model_file(&a.model.model)?;
            let oom = classical(&model, "eval")?;
            let word = oom.alphabet().parse_word(&a.word)?;
            let p = word_probability(&oom, &word, a.neg_tol)?;
            Ok(Outcome::json(&json!({ "probability": p }), EXIT_OK))
        }
        Command::Dim(a) => {
            let model = parse_model_file(&a.model.model)?;
            let report = match &model {
                Model::Nc(m) => nc_process_dimension(m, a.max_level, a.tol_rel)?,
                other => process_dimension(&classical(other, "dim")?, a.max_level, a.tol_rel)?,
            };
            Ok(dimension_output(&report, a.csv))
        }
        Command::NcDim(a) => {
            let model = parse_model_file(&a.model.model)?;
            let report = nc_process_dimension(&model.to_ncoom(), a.max_level, a.tol_rel)?;
            Ok(dimension_output(&report, a.csv))
        }
        Command::Minimize(a) => minimize(a),
        Command::Causal(a) => causal(a),
        Command::NcEval(a) => nc_eval(a),
        Command::Experiment(ExperimentCommand::Run(a)) => experiment(a),
        Command::Sample(a) => {
            let seed = seed_or_env(a.seed)?;
            let model = parse_model_file(&a.model.model)?;
            let oom = classical(&model, "sample")?;
            let word = sample_trajectory(&oom, a.length, seed, DEFAULT_NEG_TOL)?;
            Ok(Outcome::json(
                &json!({
                    "seed": seed,
                    "length": a.length,
                    "word": oom.alphabet().format_word(&word),
                }),
                EXIT_OK,
            ))
        }
    }
}

fn validate(a: ValidateArgs) -> CliResult<Outcome> {
    let seed = seed_or_env(a.seed)?;
    let model = load_model_file(&a.model.model)?;
    let (validation, stationarity) = match &model {
        Model::Nc(m) => (
            serde_json::to_value(oomlab::ncoom::validate_ncoom(
                m, a.nc_depth, a.samples, seed,
            )?),
            nc_stationarity_check(m, a.nc_depth, a.samples, seed, OperatorOrder::Forward)
                .map(|r| serde_json::to_value(r).expect("report serializes")),
        ),
        other => {
            let oom = classical(other, "validate")?;
            (
                serde_json::to_value(oomlab::oom::validate_oom(&oom, a.depth, DEFAULT_NEG_TOL)?),
                stationarity_check(&oom, a.depth)
                    .map(|r| serde_json::to_value(r).expect("report serializes")),
            )
        }
    };
    let validation = validation.expect("report serializes");
    let passed = validation["passed"].as_bool().unwrap_or(false);
    // Stationarity is informational: valid models need not be stationary.
    let stationarity = stationarity.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let report = json!({
        "kind": model.kind(),
        "valid": passed,
        "validation": validation,
        "stationarity": stationarity,
    });
    Ok(Outcome::json(
        &report,
        if passed { EXIT_OK } else { EXIT_FAIL },
    ))
}

fn minimize(a: MinimizeArgs) -> CliResult<Outcome> {
    let model = parse_model_file(&a.model.model)?;
    let oom = classical(&model, "minimize")?;
    let min = minimize_oom(&oom, a.tol_rel)?;
    let check_len = a.check_len.unwrap_or(oom.dim() + min.dim());
    let deviation = oomlab::oom::max_cylinder_deviation(&oom, &min, check_len)?;
    let equivalent = oomlab::dimension::equivalent(&oom, &min, check_len, EQUIVALENCE_TOL)?;
    let minimized = Model::Oom(min);
    if let Some(path) = &a.output {
        fs::write(path, to_json(&ModelFile::from(&minimized))).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    let report = json!({
        "original_dim": oom.dim(),
        "minimized_dim": match &minimized { Model::Oom(m) => m.dim(), _ => unreachable!() },
        "check_len": check_len,
        "max_deviation": deviation,
        "equivalent": equivalent,
        "model": ModelFile::from(&minimized),
    });
    Ok(Outcome::json(
        &report,
        if equivalent { EXIT_OK } else { EXIT_FAIL },
    ))
}

fn causal(a: CausalArgs) -> CliResult<Outcome> {
    let model = parse_model_file(&a.model.model)?;
    let oom = classical(&model, "causal")?;
    let partition = enumerate_causal_states(&oom, a.past_len, a.horizon, a.cluster_tol)?;
    let alphabet = oom.alphabet();
    let states: Vec<Value> = partition
        .states
        .iter()
        .map(|s| {
            json!({
                "weight": s.weight,
                "representative": s.representative,
                "members": s.members.iter().map(|w| alphabet.format_word(w)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let report = json!({
        "surrogate": "finite pasts of exact length past_len stand in for infinite pasts",
        "past_len": a.past_len,
        "horizon": a.horizon,
        "cluster_tol": a.cluster_tol,
        "n_states": partition.len(),
        "statistical_complexity_bits": statistical_complexity(&partition),
        "topological_complexity_bits": topological_complexity(&partition)?,
        "span_rank": causal_span_rank(&partition, a.tol_rel),
        "states": states,
    });
    Ok(Outcome::json(&report, EXIT_OK))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn nc_eval(a: NcEvalArgs) -> CliResult<Outcome> {
    let model = parse_model_file(&a.model.model)?.to_ncoom();
    let algebra = model.algebra().clone();
    let (value, positive) = if let Some(basis) = &a.source.basis {
        let tuple = basis
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad basis index {s:?}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let elements = tuple
            .iter()
            .map(|&i| algebra.basis_element(i))
            .collect::<Result<Vec<_>, _>>()?;
        let value = match a.order {
            OrderArg::Forward => nc_evaluate_basis(&model, &tuple)?,
            order => nc_evaluate_ordered(&model, &elements, order.into())?,
        };
        (
            value,
            elements
                .iter()
                .map(|e| e.is_positive(a.pos_tol))
                .collect::<Vec<_>>(),
        )
    } else {
        let path = a.source.factors.as_ref().expect("clap enforces one source");
        let text = read_text(path)?;
        let list: Vec<Value> = serde_json::from_str(&text).map_err(|e| FileError::Parse {
            path: path.clone(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let elements = list
            .iter()
            .map(|v| element_from_json(&algebra, v))
            .collect::<Result<Vec<_>, _>>()?;
        let value = nc_evaluate_ordered(&model, &elements, a.order.into())?;
        (
            value,
            elements.iter().map(|e| e.is_positive(a.pos_tol)).collect(),
        )
    };
    let report = json!({
        "value": [value.re, value.im],
        "factors_positive": positive,
        "order": OperatorOrder::from(a.order),
    });
    Ok(Outcome::json(&report, EXIT_OK))
}

fn experiment(a: RunArgs) -> CliResult<Outcome> {
    let seed = seed_or_env(a.seed)?;
    let spec = load_experiment_spec(&a.spec)?;
    let base = a.spec.parent().unwrap_or_else(|| Path::new("."));
    let start = Instant::now();
    let mut report = run_experiment(&spec, base, seed)?;
    report.runtime_ms = a.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    if let Some(dir) = &a.out_dir {
        let io = |path: PathBuf| move |source| CliError::Io { path, source };
        fs::create_dir_all(dir).map_err(io(dir.clone()))?;
        let json_path = dir.join("report.json");
        fs::write(&json_path, to_json(&report)).map_err(io(json_path.clone()))?;
        let csv_path = dir.join("measurements.csv");
        fs::write(&csv_path, report.to_csv()).map_err(io(csv_path.clone()))?;
    }
    let code = match report.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let stdout = if a.csv {
        report.to_csv()
    } else {
        to_json(&report)
    };
    Ok(Outcome { stdout, code })
}

/// Names of all top-level subcommands.
pub fn subcommand_names() -> Vec<String> {
    use clap::CommandFactory;
    Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect()
}
