//! The `pdeforest` command-line tool.
//!
//! | subcommand | does |
//! |---|---|
//! | `gen-data <problem> <out>` | solves a benchmark problem and writes a dataset file |
//! | `discover <dataset>` | runs the genetic search and writes a manifest, evolution log and report |
//! | `render <string>` | prints the display form of a computable string and whether it is valid |
//!
//! Exit status: 0 converged (or success), 2 generation budget exhausted,
//! 1 usage or configuration error, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    preset, read_dataset, solve, write_dataset, DatasetFileError, Problem, Scheme, SolverError,
};
use crate::error::ConfigError;
use crate::eval::DEFAULT_BOUNDARY_TRIM;
use crate::expr::{parse_forest, to_display_string, validate, GenConfig};
use crate::ga::{
    evolve_with, format_coefficient, write_evolution_log, EvolveError, GAConfig, GenerationEvent,
    RunOptions,
};
use crate::regress::RegressionParams;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EVOLUTION_LOG_FILE: &str = "evolution.csv";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Parser)]
#[command(
    name = "pdeforest",
    version,
    about = "Discover PDEs from gridded data with evolved expression forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a benchmark problem and write the dataset file
    GenData(GenDataArgs),
    /// Search for the equation governing a dataset
    Discover(DiscoverArgs),
    /// Print the display form of a computable string and check its validity
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// burgers, kdv, chafee_infante, pde_divide or pde_compound
    pub problem: Problem,
    pub output: PathBuf,
    /// Stored spatial points
    #[arg(long)]
    pub nx: Option<usize>,
    /// Stored time slices
    #[arg(long)]
    pub nt: Option<usize>,
    /// Internal time step
    #[arg(long)]
    pub dt: Option<f64>,
    /// Internal steps per stored slice
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Internal grid refinement factor
    #[arg(long)]
    pub refine: Option<usize>,
    /// Time integrator: forward-euler or rk4
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Physical parameter override, e.g. --param nu=0.05
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "forward_euler" | "euler" | "fe" => Ok(Scheme::ForwardEuler),
        "rk4" => Ok(Scheme::Rk4),
        _ => Err(format!("unknown scheme `{s}` (forward-euler or rk4)")),
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub generations: usize,
    /// Even population size
    #[arg(long, default_value_t = 20)]
    pub population: usize,
    #[arg(long, default_value_t = 4)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5)]
    pub max_width: usize,
    /// Ridge penalty
    #[arg(long, default_value_t = 1e-5)]
    pub lambda: f64,
    /// STRidge threshold on the normalized-column scale
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, default_value_t = 25)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub aic_threshold: f64,
    /// Per-candidate probability of regrowing one tree
    #[arg(long, default_value_t = 0.3)]
    pub p_replace: f64,
    /// Per-node mutation probability
    #[arg(long, default_value_t = 0.3)]
    pub p_mutate: f64,
    /// Per-slot crossover exchange probability
    #[arg(long, default_value_t = 0.5)]
    pub p_cross: f64,
    /// Probability of a leaf when growing trees
    #[arg(long, default_value_t = 0.5)]
    pub p_operand: f64,
    /// Grid lines dropped at each edge of both axes before fitting
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_TRIM)]
    pub boundary_trim: usize,
    /// Scoring threads (results do not depend on this)
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value = "run")]
    pub out_dir: PathBuf,
    /// Suppress per-generation progress on stderr
    #[arg(long)]
    pub quiet: bool,
}

impl DiscoverArgs {
    pub fn ga_config(&self) -> GAConfig {
        GAConfig {
            generations: self.generations,
            population: self.population,
            p_operand: self.p_operand,
            p_mutate_node: self.p_mutate,
            p_cross: self.p_cross,
            p_replace_tree: self.p_replace,
            max_width: self.max_width,
            max_depth: self.max_depth,
            aic_threshold: self.aic_threshold,
            rng_seed: self.seed,
            regression: RegressionParams {
                lambda: self.lambda,
                tol: self.tol,
                max_sweeps: self.max_sweeps,
                normalize_columns: true,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Computable string; several trees may be joined with `&`
    pub string: String,
    #[arg(long, default_value_t = 4)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5)]
    pub max_width: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Dataset(#[from] DatasetFileError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Solver(_) => EXIT_USAGE,
            CliError::Dataset(_) | CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        match e {
            EvolveError::Config(c) => CliError::Config(c),
            EvolveError::Dataset(m) => CliError::Usage(m),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Outcome of a discovery run as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub converged: bool,
    pub generations_run: usize,
    pub equation: String,
    /// Computable strings of the best forest, joined with ` & `.
    pub forest: String,
    pub coefficients: Vec<f64>,
    pub k: usize,
    pub mse: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub manifest: String,
    pub evolution_log: String,
    pub report: String,
}

/// Everything needed to repeat a discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub dataset: String,
    pub problem: String,
    pub boundary_trim: usize,
    pub seed: u64,
    pub ga: GAConfig,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outcome: RunOutcome,
    pub artifacts: Artifacts,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_CONVERGED
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::GenData(a) => gen_data(a, out),
        Command::Discover(a) => discover(a, out, err),
        Command::Render(a) => render(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn gen_data(a: &GenDataArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = preset(a.problem);
    if let Some(nx) = a.nx {
        cfg.nx = nx;
    }
    if let Some(nt) = a.nt {
        cfg.nt_store = nt;
    }
    if let Some(dt) = a.dt {
        cfg.dt_internal = dt;
    }
    if let Some(s) = a.subsample {
        cfg.subsample_every = s;
    }
    if let Some(r) = a.refine {
        cfg.refine = r;
    }
    if let Some(s) = a.scheme {
        cfg.scheme = s;
    }
    for (k, v) in &a.params {
        if !cfg.params.contains_key(k) {
            return Err(CliError::Usage(format!(
                "{} has no parameter `{k}`",
                cfg.problem
            )));
        }
        cfg.params.insert(k.clone(), *v);
    }
    cfg.sync_t_max();
    cfg.validate()?;
    let _ = writeln!(
        out,
        "{}: {} x {} stored (dx={}, dt={}), internal grid x{} with dt={:e} ({})",
        cfg.problem,
        cfg.nx,
        cfg.nt_store,
        cfg.dx(),
        cfg.dt_store(),
        cfg.refine,
        cfg.dt_internal,
        cfg.scheme.name()
    );
    for lim in cfg.step_limits()? {
        let _ = writeln!(
            out,
            "  stability: dt={:e} <= {:e} ({}), ratio {:.3}",
            cfg.dt_internal,
            lim.bound,
            lim.name,
            cfg.dt_internal / lim.bound
        );
    }
    let d = solve(&cfg)?;
    write_dataset(&d, &a.output)?;
    let _ = writeln!(out, "wrote {}", a.output.display());
    Ok(EXIT_CONVERGED)
}

pub fn discover(
    a: &DiscoverArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = a.ga_config();
    cfg.validate()?;
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let data = read_dataset(&a.dataset)?
        .with_boundary_trim(a.boundary_trim)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.out_dir).map_err(io_err(&a.out_dir))?;
    let opts = RunOptions {
        threads: a.threads,
        ..RunOptions::default()
    };
    let quiet = a.quiet;
    let result = evolve_with(&cfg, &data, opts, |ev| {
        if let (false, GenerationEvent::Best(rec)) = (quiet, ev) {
            let _ = writeln!(
                err,
                "gen {:>3}  aic {:>10.4}  {}",
                rec.generation, rec.aic, rec.equation
            );
        }
    })?;
    let finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);

    let log_path = a.out_dir.join(EVOLUTION_LOG_FILE);
    let file = fs::File::create(&log_path).map_err(io_err(&log_path))?;
    write_evolution_log(&result.history, file).map_err(|e| CliError::Io {
        path: log_path.display().to_string(),
        source: io::Error::other(e),
    })?;

    let score = result
        .best
        .score
        .clone()
        .unwrap_or_else(|| crate::regress::CandidateScore::invalid(0));
    let outcome = RunOutcome {
        converged: result.converged,
        generations_run: result.generations_run,
        equation: result.equation_display.clone(),
        forest: result.best.forest.to_string(),
        coefficients: score.xi.clone(),
        k: score.k,
        mse: score.mse,
        aic: score.aic,
    };

    let report_path = a.out_dir.join(REPORT_FILE);
    let mut report = String::new();
    report.push_str(&format!(
        "dataset: {} ({})\n",
        a.dataset.display(),
        data.info.problem
    ));
    report.push_str(&format!("{}\n", result.equation_display));
    report.push_str(&format!("forest: {}\n", outcome.forest));
    report.push_str("terms:\n");
    for (t, c) in result.best.forest.trees().iter().zip(&score.xi) {
        let status = if *c == 0.0 { "  (pruned)" } else { "" };
        report.push_str(&format!(
            "  {:>12}  {}{status}\n",
            format_coefficient(*c),
            to_display_string(t)
        ));
    }
    report.push_str(&format!(
        "k: {}\nmse: {:.4e}\naic: {:.4}\n",
        score.k, score.mse, score.aic
    ));
    report.push_str(&format!(
        "converged: {} after {} of {} generations (threshold {})\n",
        if result.converged { "yes" } else { "no" },
        result.generations_run,
        cfg.generations,
        cfg.aic_threshold
    ));
    fs::write(&report_path, &report).map_err(io_err(&report_path))?;

    let manifest_path = a.out_dir.join(MANIFEST_FILE);
    let manifest = RunManifest {
        tool: "pdeforest".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        dataset: a.dataset.display().to_string(),
        problem: data.info.problem.clone(),
        boundary_trim: a.boundary_trim,
        seed: cfg.rng_seed,
        ga: cfg.clone(),
        threads: a.threads,
        started_at,
        finished_at,
        outcome,
        artifacts: Artifacts {
            manifest: manifest_path.display().to_string(),
            evolution_log: log_path.display().to_string(),
            report: report_path.display().to_string(),
        },
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;

    let _ = write!(out, "{report}");
    Ok(if result.converged {
        EXIT_CONVERGED
    } else {
        EXIT_BUDGET
    })
}

pub fn render(a: &RenderArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let forest = parse_forest(&a.string).map_err(|e| {
        let caret = format!("{}^", " ".repeat(e.position()));
        CliError::Usage(format!("parse error: {e}\n  {}\n  {caret}", a.string))
    })?;
    let display: Vec<String> = forest.trees().iter().map(to_display_string).collect();
    let _ = writeln!(out, "{}", display.join(" + "));
    let cfg = GenConfig {
        max_depth: a.max_depth,
        max_width: a.max_width,
        ..GenConfig::default()
    };
    let violations = validate(&forest, &cfg);
    if violations.is_empty() {
        let _ = writeln!(out, "valid");
    } else {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "invalid: {}", list.join("; "));
    }
    Ok(EXIT_CONVERGED)
}
