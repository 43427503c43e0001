//! Command-line front end: construction, verification, asymptotics, phase portraits and
//! classification, with a fixed exit-code contract (0 success, 1 failed check, 2 rejected
//! parameters or input, 3 no convergence).

pub mod json;

use clap::{Args, Parser, Subcommand};
use rsl_core::asymptotics::{self, AsymptoticsError};
use rsl_core::exact_solutions::{self, ExactError, SchoutenLocal};
use rsl_core::phase_system::{self, PhaseError, PhaseState, SteadyRegime};
use rsl_core::potential_theory::{self, FamilyKind};
use rsl_core::profile::{fmt17, ProfileError};
use rsl_core::shooting::{self, ConstructConfig, FamilyConfig, ShootingError};
use rsl_core::warped_geometry::{self, GeometryError};
use rsl_core::{Params, Profile};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Default `verify --tol`; matches the accuracy of the finite-difference identity checks.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-5;

#[derive(Parser, Debug)]
#[command(name = "rsl", version, about = "Construct, verify and classify warped-product gradient rho-Einstein solitons")]
pub struct Cli {
    /// JSON object with defaults for the command's flags (same names, '-' or '_'); flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a steady soliton by shooting and write its profile.
    Construct(ConstructArgs),
    /// Check a profile against the soliton equations and identities.
    Verify(VerifyArgs),
    /// Compare fitted growth exponents of a profile with the predictions.
    Asymptotics(AsymptoticsArgs),
    /// Sample the phase-plane vector field and its nullcline as CSV.
    PhasePortrait(PortraitArgs),
    /// Enumerate cylinder solutions or audit the potential families.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Write a closed-form profile.
    #[command(subcommand)]
    Exact(ExactCommand),
}

#[derive(Args, Debug, Default)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Decreasing ε values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps_ladder: Option<Vec<f64>>,
    /// Extent of the family variable (default 1000 (n-2) |1 - 2mρ|).
    #[arg(long)]
    pub span: Option<f64>,
    /// Rescale so that the scalar curvature at the tip is 1.
    #[arg(long)]
    pub normalize: bool,
    /// Number of profile samples along the limit curve.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Profile file; the profile goes to standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Concurrent ε-family integrations (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Sup-norm tolerance for every check (default 1e-5).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct AsymptoticsArgs {
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Fraction of samples in the fitted tail, in (0, 0.5].
    #[arg(long)]
    pub tail_fraction: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct PortraitArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<i8>,
    /// `min,max` of x (default -1.5,1.5).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_range: Option<Vec<f64>>,
    /// `min,max` of y (default -3,3).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y_range: Option<Vec<f64>>,
    /// Points per axis (default 50).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Warping factor of the (x, y) slice; irrelevant when λ = 0 (default 1).
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ClassifyCommand {
    /// All cylinder solutions ℝ × N for (n, ρ, λ).
    Cylinders(CylinderArgs),
    /// Nondegeneracy verdicts and random probes for the six potential families.
    Families(FamiliesArgs),
}

#[derive(Args, Debug, Default)]
pub struct CylinderArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct FamiliesArgs {
    /// Dimension (default 4).
    #[arg(long)]
    pub n: Option<u32>,
    /// Value of f where the registry members are evaluated (default 1.5).
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<f64>,
    /// Random probe samples per family (default 200).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ExactCommand {
    /// Cylinder `ω = ω0`, `f = c r² + a0 r + b0`.
    Cylinder(ExactCylinderArgs),
    /// Flat `ω = r + a0/λ`, `f = λ r²/2 + a0 r`.
    Flat(ExactFlatArgs),
    /// Local shrinking Schouten solution in dimension 3.
    Schouten(ExactSchoutenArgs),
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    /// Largest radius (default 10).
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Number of samples (default 201).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ExactCylinderArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Which entry of the cylinder list (default 0).
    #[arg(long)]
    pub index: Option<usize>,
    /// Radius where the list leaves ω0 free (default 1).
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b0: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Default)]
pub struct ExactFlatArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Default)]
pub struct ExactSchoutenArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

/// A failure with its exit code and a machine-readable description.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub error: String,
    pub reason: String,
    pub message: String,
    pub details: Value,
}

impl CliError {
    pub fn new(code: i32, error: &str, reason: &str, message: impl Into<String>) -> Self {
        Self { code, error: error.into(), reason: reason.into(), message: message.into(), details: Value::Null }
    }

    pub fn rejected(reason: &str, message: impl Into<String>) -> Self {
        Self::new(EXIT_REJECTED, "rejected", reason, message)
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    /// The JSON line written to standard error.
    pub fn to_json(&self) -> String {
        let mut v = json!({"error": self.error, "reason": self.reason, "message": self.message, "exit_code": self.code});
        if !self.details.is_null() {
            v["details"] = self.details.clone();
        }
        serde_json::to_string(&v).expect("error serializes")
    }
}

impl From<ShootingError> for CliError {
    fn from(e: ShootingError) -> Self {
        let code = match &e {
            ShootingError::OutOfRegime { .. } | ShootingError::InvalidInput(_) | ShootingError::Phase(_) => EXIT_REJECTED,
            _ => EXIT_NOT_CONVERGED,
        };
        let reason = match &e {
            ShootingError::Phase(PhaseError::SchoutenSingular) => "schouten_singular",
            _ => e.kind(),
        };
        let error = if code == EXIT_REJECTED { "rejected" } else { "not_converged" };
        Self::new(code, error, reason, e.to_string())
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        let reason = match &e {
            PhaseError::SchoutenSingular => "schouten_singular",
            PhaseError::InvalidParameters(_) => "invalid_parameters",
            PhaseError::NotSteady { .. } => "not_steady",
            PhaseError::DenominatorZero { .. } => "denominator_zero",
            PhaseError::OutOfRegime { .. } => "out_of_regime",
        };
        Self::rejected(reason, e.to_string())
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        Self::rejected("invalid_parameters", e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        Self::rejected("invalid_profile", e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        Self::rejected("geometry", e.to_string())
    }
}

/// What a successful (or check-failing) command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// Text for standard output.
    pub stdout: String,
    /// Set when a check failed: the JSON line for standard error.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, failure: None }
    }
}

/// Flag defaults read from `--config`.
#[derive(Debug, Default)]
pub struct Config(Map<String, Value>);

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = read(path)?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => Ok(Self(map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect())),
            Ok(_) => Err(CliError::rejected("invalid_config", "config file must hold a JSON object")),
            Err(e) => Err(CliError::rejected("invalid_config", e.to_string())),
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::rejected("invalid_config", format!("config key {key}: {e}"))),
        }
    }

    /// The flag if given, else the config value.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.pick(flag, key)?.ok_or_else(|| CliError::rejected("missing_argument", format!("--{} is required", key.replace('_', "-"))))
    }

    fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::rejected("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::rejected("io", format!("{}: {e}", path.display())))
}

/// Writes `text` to `output` if given (returning an empty stdout), else returns it for stdout.
fn emit(output: Option<&Path>, text: String) -> Result<String, CliError> {
    match output {
        Some(p) => {
            write(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn load_profile(path: &Path) -> Result<Profile, CliError> {
    Ok(Profile::from_json(&read(path)?)?)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Construct(a) => construct(a, &cfg),
        Command::Verify(a) => verify(a, &cfg),
        Command::Asymptotics(a) => asymptotics_cmd(a, &cfg),
        Command::PhasePortrait(a) => phase_portrait(a, &cfg),
        Command::Classify(ClassifyCommand::Cylinders(a)) => classify_cylinders(a, &cfg),
        Command::Classify(ClassifyCommand::Families(a)) => classify_families(a, &cfg),
        Command::Exact(c) => exact(c, &cfg),
    }
}

fn construct(a: &ConstructArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let n: u32 = cfg.require(a.n, "n")?;
    let rho: f64 = cfg.require(a.rho, "rho")?;
    let p = Params::steady(n, rho).map_err(CliError::from)?;
    if p.steady_regime() == SteadyRegime::Nonexistence {
        let mode = if p.is_schouten() { "schouten_constraint" } else { "no_complete_steady_soliton" };
        return Err(CliError::rejected(
            "nonexistence_regime",
            format!("no complete noncompact steady soliton for 1/(2m) <= rho < 1/m (n = {n}, rho = {rho})"),
        )
        .with_details(json!({"n": n, "rho": rho, "mode": mode})));
    }
    let defaults = FamilyConfig::<f64>::default();
    let jobs = cfg.pick(a.jobs, "jobs")?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()));
    let mut conf = ConstructConfig {
        family: FamilyConfig {
            epsilons: cfg.or(a.eps_ladder.clone(), "eps_ladder", defaults.epsilons.clone())?,
            span: cfg.pick(a.span, "span")?,
            jobs: jobs.max(1),
            ..defaults
        },
        normalize: cfg.flag(a.normalize, "normalize")?,
        ..ConstructConfig::default()
    };
    if let Some(s) = cfg.pick(a.samples, "samples")? {
        conf.reconstruct.samples = s;
    }
    log::info!("constructing n = {n}, rho = {rho} with ladder {:?}", conf.family.epsilons);
    let c = shooting::construct(&p, &conf)?;
    let text = c.profile.to_json();
    let output: Option<PathBuf> = cfg.pick(a.output.clone(), "output")?;
    let summary = json!({
        "n": n,
        "rho": rho,
        "normalized": conf.normalize,
        "samples": c.profile.len(),
        "r_max": c.profile.r[c.profile.len() - 1],
        "output": output.as_ref().map(|p| p.display().to_string()),
        "summary": c.summary,
    });
    match output {
        Some(path) => {
            write(&path, &text)?;
            Ok(Outcome::ok(json::to_string(&summary)))
        }
        None => {
            log::info!("{}", serde_json::to_string(&summary).unwrap_or_default());
            Ok(Outcome::ok(text))
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    /// Radius of the worst sample, when the check has one.
    r: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct Skipped {
    name: &'static str,
    reason: String,
}

fn verify(a: &VerifyArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let path: PathBuf = cfg.require(a.profile.clone(), "profile")?;
    let tol: f64 = cfg.or(a.tol, "tol", DEFAULT_VERIFY_TOL)?;
    if !(tol > 0.0) {
        return Err(CliError::rejected("invalid_argument", "--tol must be positive"));
    }
    let prof = load_profile(&path)?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut push = |name, value: f64, r: Option<f64>| checks.push(Check { name, value, r, pass: value < tol });

    let res = warped_geometry::soliton_residual(&prof);
    if res.indices.is_empty() {
        skipped.push(Skipped { name: "soliton_residual", reason: "no sample away from the tip".into() });
    } else {
        push("soliton_residual", res.sup_rel, Some(prof.r[res.worst_index]));
    }
    match warped_geometry::identity_checks(&prof) {
        Ok(id) => {
            push("equ1_trace", id.equ1_sup, Some(id.worst_r[0]));
            push("equ2_divergence", id.equ2_sup, Some(id.worst_r[1]));
            push("equ3_laplacian", id.equ3_sup, Some(id.worst_r[2]));
            if let Some(s) = id.schouten_ric_grad_f_sup {
                push("schouten_ric_grad_f", s, None);
            }
        }
        Err(e) => skipped.push(Skipped { name: "identities", reason: e.to_string() }),
    }
    match warped_geometry::level_set_geometry(&prof) {
        Ok(ls) => push("gauss_riccati", ls.gauss_sup, None),
        Err(e) => skipped.push(Skipped { name: "gauss_riccati", reason: e.to_string() }),
    }
    match potential_theory::rectifiability_witness(&prof) {
        Ok(w) => push("gradient_chain", w.chain_sup, None),
        Err(e) => skipped.push(Skipped { name: "gradient_chain", reason: e.to_string() }),
    }
    let worst = checks
        .iter()
        .filter(|c| !c.pass)
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Greater))
        .map(|c| json!({"name": c.name, "value": c.value, "r": c.r}));
    let pass = checks.iter().all(|c| c.pass) && !checks.is_empty();
    let report = json!({
        "profile": path.display().to_string(),
        "params": prof.params,
        "samples": prof.len(),
        "tol": tol,
        "checks": checks,
        "skipped": skipped,
        "pass": pass,
        "worst_failure": worst,
    });
    let stdout = emit(cfg.pick(a.output.clone(), "output")?.as_deref(), json::to_string(&report))?;
    if pass {
        return Ok(Outcome::ok(stdout));
    }
    let err = CliError::new(EXIT_CHECK_FAILED, "check_failed", "tolerance_exceeded", format!("verification failed at tol = {tol}"))
        .with_details(worst.unwrap_or(json!({"name": "no_checks"})));
    Ok(Outcome { code: EXIT_CHECK_FAILED, stdout, failure: Some(err.to_json()) })
}

fn asymptotics_err(e: AsymptoticsError) -> CliError {
    match e {
        AsymptoticsError::NonpositiveData { .. } => CliError::new(EXIT_CHECK_FAILED, "check_failed", e.kind(), e.to_string()),
        AsymptoticsError::OutOfRegime { .. } => CliError::rejected("out_of_regime", e.to_string()),
        _ => CliError::rejected(e.kind(), e.to_string()),
    }
}

fn asymptotics_cmd(a: &AsymptoticsArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let path: PathBuf = cfg.require(a.profile.clone(), "profile")?;
    let tail: f64 = cfg.or(a.tail_fraction, "tail_fraction", asymptotics::DEFAULT_TAIL_FRACTION)?;
    let prof = load_profile(&path)?;
    let p = prof.params;
    let exps = asymptotics::profile_exponents(&prof, tail).map_err(asymptotics_err)?;
    let cigar = if p.is_steady() && p.is_cigar() { Some(asymptotics::cigar_checks(&prof, tail).map_err(asymptotics_err)?) } else { None };
    // Phase-time limits along the trajectory with the profile's parameters.
    let t_span = if p.is_cigar() { 60.0 } else { 2000.0 };
    let limits = shooting::phase_trajectory(&p, 1e-6, t_span)
        .ok()
        .and_then(|traj| asymptotics::limit_diagnostics(&traj, &p).ok());
    let mut failures = Vec::new();
    for (name, c) in [("omega", &exps.omega), ("f", &exps.f), ("volume", &exps.volume)] {
        if !c.pass {
            failures.push(json!({"name": name, "fitted": c.fit.exponent, "predicted": c.predicted, "tolerance": c.tolerance}));
        }
    }
    if let Some(c) = &cigar {
        if !c.omega_flat {
            failures.push(json!({"name": "omega_tail_oscillation", "value": c.omega_tail_oscillation, "tolerance": 0.01}));
        }
    }
    let pass = failures.is_empty();
    let report = json!({
        "profile": path.display().to_string(),
        "params": p,
        "tail_fraction": tail,
        "exponents": exps,
        "cigar": cigar,
        "phase_limits": limits,
        "pass": pass,
        "failures": failures,
    });
    let stdout = emit(cfg.pick(a.output.clone(), "output")?.as_deref(), json::to_string(&report))?;
    if pass {
        return Ok(Outcome::ok(stdout));
    }
    let err = CliError::new(EXIT_CHECK_FAILED, "check_failed", "exponent_mismatch", "fitted exponents differ from the predictions")
        .with_details(Value::Array(failures));
    Ok(Outcome { code: EXIT_CHECK_FAILED, stdout, failure: Some(err.to_json()) })
}

fn range(v: Option<Vec<f64>>, what: &str) -> Result<Option<(f64, f64)>, CliError> {
    match v {
        None => Ok(None),
        Some(v) if v.len() == 2 && v[0] < v[1] && v.iter().all(|x| x.is_finite()) => Ok(Some((v[0], v[1]))),
        Some(_) => Err(CliError::rejected("invalid_argument", format!("--{what} needs min,max with min < max"))),
    }
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

fn phase_portrait(a: &PortraitArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let n: u32 = cfg.require(a.n, "n")?;
    let rho: f64 = cfg.require(a.rho, "rho")?;
    let lambda: f64 = cfg.or(a.lambda, "lambda", 0.0)?;
    let kappa: i8 = cfg.or(a.kappa, "kappa", 1)?;
    let (x0, x1) = range(cfg.pick(a.x_range.clone(), "x_range")?, "x-range")?.unwrap_or((-1.5, 1.5));
    let (y0, y1) = range(cfg.pick(a.y_range.clone(), "y_range")?, "y-range")?.unwrap_or((-3.0, 3.0));
    let grid: usize = cfg.or(a.grid, "grid", 50)?;
    let omega: f64 = cfg.or(a.omega, "omega", 1.0)?;
    if grid < 2 {
        return Err(CliError::rejected("invalid_argument", "--grid must be at least 2"));
    }
    let p = Params::new(n, rho, lambda, kappa)?;
    if p.is_schouten() {
        return Err(PhaseError::SchoutenSingular.into());
    }
    let mut csv = String::from("kind,x,y,dx,dy\n");
    let mut row = |kind: &str, x: f64, y: f64, d: [f64; 3]| {
        csv.push_str(&format!("{kind},{},{},{},{}\n", fmt17(x), fmt17(y), fmt17(d[0]), fmt17(d[1])));
    };
    let xs = linspace(x0, x1, grid);
    for y in linspace(y0, y1, grid) {
        for &x in &xs {
            row("field", x, y, phase_system::vector_field(&p, &PhaseState::new(x, y, omega))?);
        }
    }
    if p.is_steady() {
        if p.steady_regime() == SteadyRegime::Case2 {
            let (z0, z1) = (0f64.max(-y1), -y0);
            if z0 < z1 {
                for z in linspace(z0, z1, grid) {
                    let x = phase_system::nullcline_k(&p, z)?;
                    row("nullcline_k", x, -z, phase_system::vector_field(&p, &PhaseState::new(x, -z, omega))?);
                }
            }
        } else {
            let (s0, s1) = (0f64.max(y0), y1);
            if s0 < s1 {
                for y in linspace(s0, s1, grid) {
                    let x = phase_system::nullcline_h(&p, y)?;
                    row("nullcline_h", x, y, phase_system::vector_field(&p, &PhaseState::new(x, y, omega))?);
                }
            }
        }
    }
    Ok(Outcome::ok(emit(cfg.pick(a.output.clone(), "output")?.as_deref(), csv)?))
}

fn classify_cylinders(a: &CylinderArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let n: u32 = cfg.require(a.n, "n")?;
    let rho: f64 = cfg.require(a.rho, "rho")?;
    let lambda: f64 = cfg.require(a.lambda, "lambda")?;
    let sols = exact_solutions::cylinder_solutions(n, rho, lambda)?;
    let report = json!({"n": n, "rho": rho, "lambda": lambda, "count": sols.len(), "solutions": sols});
    Ok(Outcome::ok(emit(cfg.pick(a.output.clone(), "output")?.as_deref(), json::to_string(&report))?))
}

fn classify_families(a: &FamiliesArgs, cfg: &Config) -> Result<Outcome, CliError> {
    let n: u32 = cfg.or(a.n, "n", 4)?;
    let f: f64 = cfg.or(a.f, "f", 1.5)?;
    let samples: usize = cfg.or(a.samples, "samples", potential_theory::DEFAULT_PROBE_SAMPLES)?;
    let seed: u64 = cfg.or(a.seed, "seed", potential_theory::DEFAULT_PROBE_SEED)?;
    let err = |e: potential_theory::PotentialError| CliError::rejected(e.kind(), e.to_string());
    let mut entries = Vec::new();
    for (set, kind) in potential_theory::family_registry::<f64>().iter().zip(FamilyKind::ALL) {
        let values = set.evaluate(n, f).map_err(err)?;
        let nd = potential_theory::nondegeneracy_check(set, n, f).map_err(err)?;
        let probe = potential_theory::probe_family(kind, samples, seed).map_err(err)?;
        entries.push(json!({
            "label": kind.label(),
            "kind": kind,
            "name": set.family_name,
            "params": set.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<_, _>>(),
            "coefficients": values,
            "nondegeneracy": nd,
            "probe": probe,
        }));
    }
    let report = json!({"n": n, "f": f, "threshold": potential_theory::ND_THRESHOLD, "families": entries});
    Ok(Outcome::ok(emit(cfg.pick(a.output.clone(), "output")?.as_deref(), json::to_string(&report))?))
}

fn grid(g: &GridArgs, cfg: &Config) -> Result<(f64, usize, Option<PathBuf>), CliError> {
    Ok((cfg.or(g.r_max, "r_max", 10.0)?, cfg.or(g.samples, "samples", 201)?, cfg.pick(g.output.clone(), "output")?))
}

fn exact(c: &ExactCommand, cfg: &Config) -> Result<Outcome, CliError> {
    let (prof, output) = match c {
        ExactCommand::Cylinder(a) => {
            let n: u32 = cfg.require(a.n, "n")?;
            let rho: f64 = cfg.require(a.rho, "rho")?;
            let lambda: f64 = cfg.require(a.lambda, "lambda")?;
            let (r_max, samples, out) = grid(&a.grid, cfg)?;
            let sols = exact_solutions::cylinder_solutions_with(n, rho, lambda, cfg.or(a.omega0, "omega0", 1.0)?)?;
            let idx: usize = cfg.or(a.index, "index", 0)?;
            let sol = sols
                .get(idx)
                .ok_or_else(|| CliError::rejected("no_such_solution", format!("{} cylinder solutions, index {idx} requested", sols.len())))?;
            (sol.profile(n, rho, lambda, cfg.or(a.a0, "a0", 0.0)?, cfg.or(a.b0, "b0", 0.0)?, r_max, samples)?, out)
        }
        ExactCommand::Flat(a) => {
            let (r_max, samples, out) = grid(&a.grid, cfg)?;
            let prof = exact_solutions::flat_gaussian(
                cfg.require(a.n, "n")?,
                cfg.require(a.rho, "rho")?,
                cfg.require(a.lambda, "lambda")?,
                cfg.or(a.a0, "a0", 0.0)?,
                r_max,
                samples,
            )?;
            (prof, out)
        }
        ExactCommand::Schouten(a) => {
            let (r_max, samples, out) = grid(&a.grid, cfg)?;
            let mut s = SchoutenLocal::new(cfg.require(a.a, "a")?, cfg.require(a.b, "b")?, cfg.require(a.lambda, "lambda")?);
            s.r0 = cfg.or(a.r0, "r0", 0.0)?;
            s.c = cfg.or(a.c, "c", 0.0)?;
            s.d = cfg.or(a.d, "d", 0.0)?;
            s.e = cfg.or(a.e, "e", 0.0)?;
            (exact_solutions::schouten_shrinker_local(&s, r_max, samples)?, out)
        }
    };
    Ok(Outcome::ok(emit(output.as_deref(), prof.to_json())?))
}
