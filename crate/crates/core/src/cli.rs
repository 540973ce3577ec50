//! `hoeg` command-line interface.
//!
//! Exit codes: 0 success, 1 numeric/solver failure, 2 usage error,
//! 3 verdict failure, 4 I/O failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::certify::{certify, fit_rate, CertifyConfig};
use crate::continuous::{simulate, ContinuousConfig, DEFAULT_NORM_FLOOR, DEFAULT_RESOLVENT_TOL};
use crate::error::Error;
use crate::field::Field;
use crate::output::{write_continuous_csv, write_json, write_trajectory_csv, RunSummary, SimulationSummary};
use crate::problem::{builtin, OperatorMode, ProblemSpec, BUILTIN_NAMES};
use crate::recipes::{run_recipe, FigureRecipe, RecipeName, RecipeResult};
use crate::solver::{run, SolverConfig, TrajectoryLog};
use crate::svg::{self, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SEED_ENV: &str = "HOEG_SEED";

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Argument(_) | Error::UnknownProblem(_) | Error::Dimension { .. } | Error::Capability(_) => {
                EXIT_USAGE
            }
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            Error::Json(j) if j.is_io() => EXIT_IO,
            Error::Json(_) => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "hoeg", version, about = "Higher-order extragradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver on one configuration.
    Run(RunArgs),
    /// Re-run a preset figure and check its qualitative claim.
    Reproduce(ReproduceArgs),
    /// Integrate the continuous-time dynamics.
    Simulate(SimulateArgs),
    /// Estimate weak-MVI, smoothness and comonotonicity constants.
    Certify(CertifyArgs),
    /// Run the solver and fit the convergence rate.
    Rate(RunArgs),
    /// List built-in problems.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Standard,
    Competitive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub p: u32,
    /// Defaults to the problem's published constant.
    #[serde(default, alias = "Lp")]
    pub lp: Option<f64>,
    #[serde(alias = "K")]
    pub k: usize,
    /// Defaults to all ones.
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: ModeKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stop_norm: f64,
}

impl RunConfig {
    pub fn operator_mode(&self) -> Result<OperatorMode, Error> {
        match (self.mode, self.alpha) {
            (ModeKind::Standard, _) => Ok(OperatorMode::Standard),
            (ModeKind::Competitive, Some(alpha)) => {
                let m = OperatorMode::Competitive { alpha };
                m.validate()?;
                Ok(m)
            }
            (ModeKind::Competitive, None) => Err(Error::argument("competitive mode needs --alpha")),
        }
    }

    pub fn solver_config(&self, problem: &ProblemSpec) -> Result<SolverConfig, Error> {
        let lp = match self.lp {
            Some(l) => l,
            None => problem.published_constant(self.p).ok_or_else(|| {
                Error::argument(format!(
                    "problem `{}` has no published L_{}; pass --Lp",
                    problem.name(),
                    self.p
                ))
            })?,
        };
        let z0 = self.z0.clone().unwrap_or_else(|| vec![1.0; problem.dim()]);
        if z0.len() != problem.dim() {
            return Err(Error::Dimension {
                expected: problem.dim(),
                got: z0.len(),
            });
        }
        let config = SolverConfig::new(self.p, lp, self.k, z0)
            .with_mode(self.operator_mode()?)
            .with_stop_norm(self.stop_norm);
        config.validate()?;
        Ok(config)
    }

    pub fn execute(&self) -> Result<(ProblemSpec, TrajectoryLog), Error> {
        let problem = builtin(&self.problem)?;
        let config = self.solver_config(&problem)?;
        let log = run(&problem, &config)?;
        Ok((problem, log))
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON file mirroring the run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "Lp")]
    pub lp: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Comma-separated initial point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z0: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub stop_norm: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?
            }
            None => RunConfig {
                problem: self
                    .problem
                    .clone()
                    .ok_or_else(|| Failure::new(EXIT_USAGE, "--problem is required without --config"))?,
                p: self.p.unwrap_or(1),
                lp: None,
                k: self.k.unwrap_or(1000),
                z0: None,
                mode: ModeKind::Standard,
                alpha: None,
                outputs: Outputs::default(),
                seed: 0,
                stop_norm: 0.0,
            },
        };
        if let Some(v) = &self.problem {
            cfg.problem = v.clone();
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if self.lp.is_some() {
            cfg.lp = self.lp;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if self.z0.is_some() {
            cfg.z0 = self.z0.clone();
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if let Some(v) = self.stop_norm {
            cfg.stop_norm = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.csv.is_some() {
            cfg.outputs.csv = self.csv.clone();
        }
        if self.svg.is_some() {
            cfg.outputs.svg = self.svg.clone();
        }
        if self.json.is_some() {
            cfg.outputs.json = self.json.clone();
        }
        cfg.seed = seed_override(cfg.seed)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// One of mforsaken, forsaken_F, forsaken_Falpha, x2y_F, x2y_Falpha.
    pub name: String,
    #[arg(long, default_value = "reproduce_out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 1)]
    pub p: u32,
    #[arg(long = "t-end", default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z0: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_RESOLVENT_TOL)]
    pub resolvent_tol: f64,
    #[arg(long, default_value_t = DEFAULT_NORM_FLOOR)]
    pub norm_floor: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 1)]
    pub p: u32,
    /// Exponent of the order-q estimate (default 2).
    #[arg(long)]
    pub q: Option<f64>,
    /// Certify F_α instead of F.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "Lp")]
    pub lp: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run the solver for K iterations to fit the rate and the trajectory radius D.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z0: Option<Vec<f64>>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(seed),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(path, e))
}

fn with_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let stdout = io::stdout();
    write_json(stdout.lock(), value).map_err(Failure::from)
}

fn rate_series(label: &str, log: &TrajectoryLog) -> Series {
    Series::new(
        label,
        log.running_min_sq()
            .into_iter()
            .enumerate()
            .map(|(k, m)| ((k + 1) as f64, m))
            .collect(),
    )
}

fn path_series(label: &str, log: &TrajectoryLog) -> Series {
    Series::new(label, log.records.iter().map(|r| (r.z_k[0], r.z_k[1])).collect())
}

fn run_svg(problem: &ProblemSpec, log: &TrajectoryLog) -> String {
    let title = format!("{} (p = {})", problem.name(), log.order_p);
    let rate = svg::loglog(
        &title,
        "k + 1",
        "min ‖F(z_{j+½})‖²",
        &[rate_series("min opnorm²", log)],
    );
    if problem.dim() != 2 {
        return rate;
    }
    let markers: Vec<(f64, f64)> = problem
        .z_star()
        .map(|z| vec![(z.as_vector()[0], z.as_vector()[1])])
        .unwrap_or_default();
    let traj = svg::trajectory(&title, &[path_series("z_k", log)], &markers);
    combine_side_by_side(&rate, &traj)
}

/// Places two standalone SVG documents next to each other.
fn combine_side_by_side(left: &str, right: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1280\" height=\"480\">\n<g>{}</g>\n<g transform=\"translate(640 0)\">{}</g>\n</svg>\n",
        left.trim_end(),
        right.trim_end()
    )
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let (problem, log) = cfg.execute()?;
    let summary = RunSummary::new(problem.name(), &log);
    if let Some(path) = &cfg.outputs.csv {
        with_path(path, write_trajectory_csv(create(path)?, &log))?;
    }
    if let Some(path) = &cfg.outputs.svg {
        write_text(path, &run_svg(&problem, &log))?;
    }
    match &cfg.outputs.json {
        Some(path) => with_path(path, write_json(create(path)?, &summary))?,
        None => print_json(&summary)?,
    }
    if let Some(msg) = &log.failure {
        return Err(Failure::new(EXIT_SOLVER, format!("half-step solver failed: {msg}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateReport {
    problem: String,
    p: u32,
    records: usize,
    slope: f64,
    min_opnorm: f64,
}

fn cmd_rate(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let (problem, log) = cfg.execute()?;
    let report = RateReport {
        problem: problem.name().to_string(),
        p: log.order_p,
        records: log.records.len(),
        slope: fit_rate(&log)?,
        min_opnorm: log.min_op_norm(),
    };
    if let Some(path) = &cfg.outputs.csv {
        with_path(path, write_trajectory_csv(create(path)?, &log))?;
    }
    match &cfg.outputs.json {
        Some(path) => with_path(path, write_json(create(path)?, &report)),
        None => print_json(&report),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let problem = builtin(&args.problem)?;
    let z0 = args.z0.clone().unwrap_or_else(|| vec![1.0; problem.dim()]);
    let mut config = ContinuousConfig::new(args.p, args.t_end, args.dt, z0);
    config.resolvent_tol = args.resolvent_tol;
    config.norm_floor = args.norm_floor;
    let log = simulate(&Field::standard(&problem), &config)?;
    if let Some(path) = &args.csv {
        with_path(path, write_continuous_csv(create(path)?, &log))?;
    }
    let summary = SimulationSummary::new(problem.name(), &log);
    match &args.json {
        Some(path) => with_path(path, write_json(create(path)?, &summary))?,
        None => print_json(&summary)?,
    }
    match &log.failure {
        Some(f) => Err(Failure::new(
            EXIT_SOLVER,
            format!("resolvent failed at t = {}: {}", f.t, f.message),
        )),
        None => Ok(()),
    }
}

fn cmd_certify(args: &CertifyArgs) -> Result<(), Failure> {
    let problem = builtin(&args.problem)?;
    let mode = match args.alpha {
        Some(alpha) => OperatorMode::Competitive { alpha },
        None => OperatorMode::Standard,
    };
    let field = Field::new(&problem, mode)?;
    let config = CertifyConfig {
        p: args.p,
        q: args.q,
        lipschitz: args.lp,
        n_samples: args.samples,
        seed: seed_override(args.seed.unwrap_or(0))?,
    };
    let log = match args.k {
        Some(k) => {
            let lp = args
                .lp
                .or_else(|| problem.published_constant(args.p))
                .ok_or_else(|| Failure::new(EXIT_USAGE, "--K needs --Lp for a problem without a published L_p"))?;
            let z0 = args.z0.clone().unwrap_or_else(|| vec![1.0; problem.dim()]);
            let sc = SolverConfig::new(args.p, lp, k, z0).with_mode(mode);
            Some(run(&problem, &sc)?)
        }
        None => None,
    };
    let report = certify(&field, &config, log.as_ref())?;
    match &args.json {
        Some(path) => with_path(path, write_json(create(path)?, &report)),
        None => print_json(&report),
    }
}

fn write_recipe_outputs(result: &RecipeResult, dir: &Path) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let recipe = &result.recipe;
    let problem = builtin(recipe.problem)?;
    let markers: Vec<(f64, f64)> = problem
        .z_star()
        .map(|z| vec![(z.as_vector()[0], z.as_vector()[1])])
        .unwrap_or_default();
    let mut verdict = String::new();
    verdict.push_str(&format!("recipe: {}\nclaim: {}\n", recipe.name, recipe.claim.statement()));
    for panel in &result.panels {
        let label = |z0: &[f64; 2]| format!("z0 = ({}, {})", z0[0], z0[1]);
        let title = format!("{} p = {} L = {} {:?}", recipe.name, panel.panel.p, panel.panel.lipschitz, panel.panel.mode);
        let paths: Vec<Series> = panel.z0s.iter().zip(&panel.logs).map(|(z, l)| path_series(&label(z), l)).collect();
        let rates: Vec<Series> = panel.z0s.iter().zip(&panel.logs).map(|(z, l)| rate_series(&label(z), l)).collect();
        let stem = format!("{}_p{}", recipe.name, panel.panel.p);
        write_text(&dir.join(format!("{stem}.svg")), &svg::trajectory(&title, &paths, &markers))?;
        write_text(
            &dir.join(format!("{stem}_rate.svg")),
            &svg::loglog(&title, "k + 1", "min ‖F(z_{j+½})‖²", &rates),
        )?;
        verdict.push_str(&format!(
            "panel p = {}: {}\n",
            panel.panel.p,
            if panel.verdict.passed { "PASS" } else { "FAIL" }
        ));
        for d in &panel.verdict.details {
            verdict.push_str(&format!("  {d}\n"));
        }
    }
    verdict.push_str(&format!("overall: {}\n", if result.passed() { "PASS" } else { "FAIL" }));
    let path = dir.join(format!("{}_verdict.txt", recipe.name));
    write_text(&path, &verdict)?;
    print!("{verdict}");
    Ok(path)
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<(), Failure> {
    let name: RecipeName = args.name.parse()?;
    let result = run_recipe(&FigureRecipe::get(name))?;
    write_recipe_outputs(&result, &args.out_dir)?;
    if result.passed() {
        return Ok(());
    }
    let failed: Vec<String> = result
        .panels
        .iter()
        .filter(|p| !p.verdict.passed)
        .map(|p| format!("p = {}: {}", p.panel.p, p.verdict.claim))
        .collect();
    Err(Failure::new(EXIT_VERDICT, format!("claim failed: {}", failed.join("; "))))
}

fn cmd_list() -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    for name in BUILTIN_NAMES {
        writeln!(out, "{name}").map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Rate(a) => cmd_rate(a),
        Command::List => cmd_list(),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("hoeg: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_aliases() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"problem": "bilinear", "p": 1, "Lp": 1.0, "K": 10, "z0": [1, 0]}"#,
        )
        .unwrap();
        assert_eq!(cfg.lp, Some(1.0));
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.mode, ModeKind::Standard);
        assert!(serde_json::from_str::<RunConfig>(r#"{"problem": "x", "p": 1, "k": 1, "bogus": 1}"#).is_err());
    }

    #[test]
    fn lp_defaults_to_published_constant() {
        let cfg: RunConfig = serde_json::from_str(r#"{"problem": "modified_forsaken", "p": 2, "k": 3}"#).unwrap();
        let problem = builtin(&cfg.problem).unwrap();
        let sc = cfg.solver_config(&problem).unwrap();
        assert_eq!(sc.lipschitz, 50_000.0);
        assert_eq!(sc.z0, vec![1.0, 1.0]);

        let cfg: RunConfig = serde_json::from_str(r#"{"problem": "bilinear", "p": 1, "k": 3}"#).unwrap();
        let err = cfg.solver_config(&builtin("bilinear").unwrap()).unwrap_err();
        assert_eq!(Failure::from(err).code, EXIT_USAGE);
    }

    #[test]
    fn competitive_needs_alpha() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"problem": "x2y", "p": 1, "k": 3, "mode": "competitive"}"#).unwrap();
        assert!(cfg.operator_mode().is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::UnknownProblem("x".into())).code, EXIT_USAGE);
        assert_eq!(Failure::from(Error::Io(io::Error::other("x"))).code, EXIT_IO);
        assert_eq!(Failure::from(Error::numeric("x")).code, EXIT_SOLVER);
    }
}
