//! Command-line front end: argument types, the command runners and output
//! plumbing. `main.rs` only maps the outcome to an exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use levelkit::counterexample::{self, CertificateConfig};
use levelkit::levelsets::{self, dist_to_level_set};
use levelkit::matrixineq::{self, BlockPair};
use levelkit::operators::{make_operator, EllipticOperator, OperatorSpec, Side};
use levelkit::suite::{self, SuiteConfig, SuiteReport};
use levelkit::{acdo, SymMat};
use serde_json::{json, Value};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "TOOLKIT_WORKERS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: levelkit::Error },

    #[error(transparent)]
    Library(#[from] levelkit::Error),
}

impl CliError {
    /// Input problems map to exit 2, failures inside a computation to exit 1.
    pub fn exit_code(&self) -> i32 {
        use levelkit::Error as E;
        match self {
            CliError::Library(
                E::NoBracket { .. } | E::EigenNotConverged { .. } | E::NoAcceptedSamples | E::NoTouchingFound,
            ) => EXIT_ASSERTION,
            CliError::Library(E::PreconditionNotMet(_)) => EXIT_ASSERTION,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "levelkit", version, about = "Level-set tools for degenerate elliptic operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the distance operator at one matrix and point.
    Acdo(AcdoArgs),
    /// Probe the continuity condition on shrinking balls.
    Condition(ConditionArgs),
    /// Check the block matrix inequality, for one pair or on random instances.
    Matrixineq(MatrixArgs),
    /// Build the comparison counterexample certificate.
    Counterexample(CounterexampleArgs),
    /// Run the full property suite.
    Properties(PropertiesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = acdo::DEFAULT_TOL)]
    pub tol: f64,
    /// Write here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AcdoArgs {
    #[arg(long)]
    pub operator: PathBuf,
    /// Matrix literal, rows separated by `;`, entries by `,`.
    #[arg(long = "X", value_name = "MATRIX")]
    pub x: String,
    /// Evaluation point; defaults to the origin.
    #[arg(long)]
    pub x0: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long)]
    pub operator: PathBuf,
    #[arg(long)]
    pub x0: String,
    /// Strictly decreasing radii.
    #[arg(long, default_value = "0.1,0.05,0.02,0.01")]
    pub t: String,
    #[arg(long, default_value_t = 128)]
    pub pairs: usize,
    /// Level-set samples per pair.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long = "X", value_name = "MATRIX", requires_all = ["y", "alpha"])]
    pub x: Option<String>,
    #[arg(long = "Y", value_name = "MATRIX")]
    pub y: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Points of the `ε` grid.
    #[arg(long, default_value_t = matrixineq::GRID_POINTS)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Grid resolution: spacing `1/grid`, `100·grid` boundary samples per edge.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[arg(long, default_value_t = 10_000)]
    pub residual_samples: usize,
    #[arg(long, default_value_t = 500)]
    pub axis_trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PropertiesArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Samples per property (orderings, gap and direction counts scale with it).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Also rerun the suite on the current and on a single worker and compare.
    #[arg(long)]
    pub determinism: bool,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Acdo(a) => &a.common,
            Command::Condition(a) => &a.common,
            Command::Matrixineq(a) => &a.common,
            Command::Counterexample(a) => &a.common,
            Command::Properties(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Acdo(_) => "acdo",
            Command::Condition(_) => "condition",
            Command::Matrixineq(_) => "matrixineq",
            Command::Counterexample(_) => "counterexample",
            Command::Properties(_) => "properties",
        }
    }
}

/// Rendered output plus the failed assertions, each with its witness.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub failures: Vec<Value>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }

    pub fn failure_report(&self, command: &str) -> String {
        let doc = json!({ "status": "assertion_failure", "command": command, "failures": self.failures });
        serde_json::to_string_pretty(&doc).expect("plain data")
    }
}

pub fn parse_operator_spec(path: &Path) -> Result<OperatorSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    OperatorSpec::from_json_str(&text).map_err(|source| CliError::Spec { path: path.to_path_buf(), source })
}

/// `"1,2;2,3"`; the result is `(M + Mᵀ)/2`.
pub fn parse_matrix(s: &str) -> Result<SymMat, CliError> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| parse_list(r).map_err(|e| CliError::Config(format!("matrix `{s}`: {e}"))))
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(CliError::Config(format!("matrix `{s}` is not square: {n} rows, a row has {} entries", r.len())));
    }
    Ok(SymMat::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("`{v}` is not a finite number")))
        })
        .collect()
}

/// Worker count from [`WORKERS_ENV`], `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{WORKERS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn check_common(c: &Common) -> Result<(), CliError> {
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        return Err(CliError::Config(format!("--tol must be positive, got {}", c.tol)));
    }
    Ok(())
}

fn build(spec: &OperatorSpec) -> Result<EllipticOperator<f64>, CliError> {
    Ok(make_operator(spec)?)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data");
    s.push('\n');
    s
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    check_common(cmd.common())?;
    match cmd {
        Command::Acdo(a) => run_acdo(a),
        Command::Condition(a) => run_condition(a),
        Command::Matrixineq(a) => run_matrixineq(a),
        Command::Counterexample(a) => run_counterexample(a),
        Command::Properties(a) => run_properties(a),
    }
}

fn run_acdo(a: &AcdoArgs) -> Result<Outcome, CliError> {
    let spec = parse_operator_spec(&a.operator)?;
    let op = build(&spec)?;
    let m = parse_matrix(&a.x)?;
    let x0 = match &a.x0 {
        Some(s) => parse_list(s)?,
        None => vec![0.0; op.space_dim()],
    };
    let tol = a.common.tol;
    let r = acdo::compute_acdo(&op, &m, &x0, tol)?;
    let from_minus = acdo::acdo_from_minus(&op, &m, &x0, tol)?;
    let dist_plus = dist_to_level_set(&op, &m, &x0, Side::Plus, tol)?;
    let dist_minus = dist_to_level_set(&op, &m, &x0, Side::Minus, tol)?;
    let body = match a.common.format {
        Format::Json => pretty(&json!({
            "command": "acdo",
            "operator": spec.to_json_value(),
            "x0": x0,
            "X": m,
            "tol": tol,
            "value": r.value,
            "bracket": [r.bracket.0, r.bracket.1],
            "evals": r.evals,
            "value_from_sublevel": from_minus,
            "dist_plus": dist_plus,
            "dist_minus": dist_minus,
        })),
        Format::Csv => format!(
            "value,bracket_lo,bracket_hi,evals,value_from_sublevel,dist_plus,dist_minus\n{},{},{},{},{},{},{}\n",
            r.value, r.bracket.0, r.bracket.1, r.evals, from_minus, dist_plus, dist_minus
        ),
    };
    Ok(Outcome { body, failures: Vec::new() })
}

fn run_condition(a: &ConditionArgs) -> Result<Outcome, CliError> {
    let spec = parse_operator_spec(&a.operator)?;
    let op = build(&spec)?;
    let x0 = parse_list(&a.x0)?;
    let t = parse_list(&a.t)?;
    let c = &a.common;
    let report = levelsets::check_condition(&op, &x0, &t, a.pairs, a.samples, c.seed, c.tol)?;
    // Either nothing to detect (excess at tolerance level) or a decaying trend.
    let flat = report.sup_excess().iter().all(|&e| e <= 2.0 * c.tol);
    let pass = flat || report.trend_pass;
    let mut failures = Vec::new();
    if !pass {
        let worst = report
            .rows
            .iter()
            .max_by(|p, q| p.sup_excess_plus.max(p.sup_excess_minus).total_cmp(&q.sup_excess_plus.max(q.sup_excess_minus)))
            .expect("non-empty schedule");
        failures.push(json!({
            "check": "excess decays",
            "decay_slope": report.decay_slope,
            "slope_min": levelsets::DECAY_SLOPE_MIN,
            "final_sup_excess": report.final_sup_excess,
            "final_max": levelsets::FINAL_EXCESS_MAX,
            "witness": worst,
        }));
    }
    let body = match c.format {
        Format::Json => pretty(&json!({
            "command": "condition",
            "operator": spec.to_json_value(),
            "seed": c.seed,
            "tol": c.tol,
            "pass": pass,
            "report": report,
        })),
        Format::Csv => report.to_csv(),
    };
    Ok(Outcome { body, failures })
}

fn check_rows_csv(reports: &[SuiteReport]) -> String {
    let mut out = String::from("criterion,name,check,pass,samples,worst,relation,limit\n");
    for r in reports {
        for c in &r.checks {
            out.push_str(&format!(
                "{},{},\"{}\",{},{},{},{},{}\n",
                r.id, r.name, c.name, c.pass, c.samples, c.worst, c.relation, c.limit
            ));
        }
    }
    out
}

fn suite_failures(reports: &[SuiteReport]) -> Vec<Value> {
    reports
        .iter()
        .flat_map(|r| r.failures().into_iter().map(move |c| json!({ "criterion": r.id, "check": c })))
        .collect()
}

fn run_matrixineq(a: &MatrixArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    let (Some(xs), Some(ys), Some(alpha)) = (&a.x, &a.y, a.alpha) else {
        let cfg = SuiteConfig { seed: c.seed, ..SuiteConfig::default() };
        let report = suite::matrix_inequalities(&cfg);
        let reports = [report];
        let body = match c.format {
            Format::Json => pretty(&serde_json::to_value(&reports[0]).expect("plain data")),
            Format::Csv => check_rows_csv(&reports),
        };
        return Ok(Outcome { body, failures: suite_failures(&reports) });
    };
    let pair = BlockPair::new(parse_matrix(xs)?, parse_matrix(ys)?, alpha)?;
    let grid = matrixineq::eps_grid(alpha, a.grid);
    let defect = matrixineq::block_defect(&pair)?;
    let scale = pair.x.op_norm()?.max(pair.y.op_norm()?).max(1.0);
    let holds = defect <= c.tol * scale;
    let forward = if holds { Some(matrixineq::forward_direction_check(&pair, &grid, c.tol)?) } else { None };
    let reverse = matrixineq::reverse_direction_check(&pair.x, &pair.y, alpha, &grid, c.tol)?;
    // The two forms must agree.
    let mut failures = Vec::new();
    if let Some(f) = forward.as_ref().filter(|f| !f.pass) {
        failures.push(json!({ "check": "block inequality implies resolvent form", "witness_eps": f.witness_eps }));
    }
    if reverse.hypotheses.pass && !reverse.pass {
        failures.push(json!({ "check": "resolvent form implies block inequality", "block_defect": reverse.block_defect }));
    }
    let body = match c.format {
        Format::Json => pretty(&json!({
            "command": "matrixineq",
            "X": pair.x,
            "Y": pair.y,
            "alpha": alpha,
            "tol": c.tol,
            "block_defect": defect,
            "block_inequality_holds": holds,
            "forward": forward,
            "reverse": reverse,
        })),
        Format::Csv => format!(
            "block_defect,block_inequality_holds,resolvent_form_holds,grid_points\n{},{},{},{}\n",
            defect, holds, reverse.hypotheses.pass, reverse.hypotheses.checked
        ),
    };
    Ok(Outcome { body, failures })
}

fn run_counterexample(a: &CounterexampleArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    let cfg = CertificateConfig {
        grid: a.grid,
        residual_samples: a.residual_samples,
        axis_trials: a.axis_trials,
        seed: c.seed,
    };
    if a.residual_samples == 0 || a.axis_trials == 0 {
        return Err(CliError::Config("--residual-samples and --axis-trials must be positive".into()));
    }
    let cert = counterexample::certificate::<f64>(&cfg)?;
    let failures: Vec<Value> = cert.failures().into_iter().map(|f| json!({ "check": f })).collect();
    let body = match c.format {
        Format::Json => pretty(&json!({
            "command": "counterexample",
            "grid": a.grid,
            "seed": c.seed,
            "certificate": cert,
        })),
        Format::Csv => counterexample::axis_profile_csv::<f64>(a.grid + 1),
    };
    Ok(Outcome { body, failures })
}

fn run_properties(a: &PropertiesArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    if !(1..=levelkit::operators::MAX_DIM).contains(&a.dim) {
        return Err(CliError::Config(format!("--dim must be in 1..={}", levelkit::operators::MAX_DIM)));
    }
    if a.samples == 0 || a.grid < 2 {
        return Err(CliError::Config("--samples must be positive and --grid at least 2".into()));
    }
    let base = SuiteConfig::default();
    let scaled = |n: usize| (n * a.samples).div_ceil(base.samples).max(1);
    let cfg = SuiteConfig {
        seed: c.seed,
        tol: c.tol,
        dim: a.dim,
        samples: a.samples,
        orderings: scaled(base.orderings),
        gap_samples: scaled(base.gap_samples),
        direction_instances: scaled(base.direction_instances),
        certificate: CertificateConfig { grid: a.grid, seed: c.seed, ..base.certificate.clone() },
        ..base
    };
    let mut reports = suite::run_all(&cfg);
    if a.determinism {
        let reference = suite::report_json(&reports);
        let workers = rayon_workers();
        reports.push(suite::determinism(&cfg, &reference, workers));
    }
    let pass = reports.iter().all(|r| r.pass);
    let body = match c.format {
        Format::Json => pretty(&json!({ "command": "properties", "seed": c.seed, "pass": pass, "criteria": reports })),
        Format::Csv => check_rows_csv(&reports),
    };
    Ok(Outcome { body, failures: suite_failures(&reports) })
}

fn rayon_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
