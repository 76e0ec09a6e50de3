//! Command line and config-file parsing.
//!
//! Angles are given in degrees on the command line and in the config file and
//! converted to radians here. Flags override values from `--config`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ontolab::ontic::ModelKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_GRID_SIZE: usize = 256;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_N: usize = 10;
pub const DEFAULT_LP_GRID: usize = 2001;
pub const DEFAULT_SCAN_TOL: f64 = 1e-4;
pub const DEFAULT_THETA_STEP_DEG: f64 = 15.0;
pub const DEFAULT_ARC_DEG: f64 = 270.0;
pub const DEFAULT_B_GRID: usize = 72;

#[derive(Debug, Parser)]
#[command(name = "ontolab", version, about = "Ontological-model experiments for two entangled qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum predictions for one (θ, a, b)
    Qm(Flags),
    /// Calibrate a model and check it against quantum mechanics
    VerifyModel(Flags),
    /// Coarse-grained profile and variance δ of one wing
    Variance(Flags),
    /// Minimized chained correlation Ω(a, n) for a list of n
    ChainBound(Flags),
    /// Minimum averaged Rényi entropy at fixed mean and variance
    Entropy(Flags),
    /// Variance and chain bound over a θ grid
    Sweep(Flags),
    /// Exclusion check for belt models with long azimuth arcs
    Obstruction(Flags),
}

impl Command {
    fn parts(&self) -> (Experiment, &Flags) {
        match self {
            Command::Qm(f) => (Experiment::Qm, f),
            Command::VerifyModel(f) => (Experiment::VerifyModel, f),
            Command::Variance(f) => (Experiment::Variance, f),
            Command::ChainBound(f) => (Experiment::ChainBound, f),
            Command::Entropy(f) => (Experiment::Entropy, f),
            Command::Sweep(f) => (Experiment::Sweep, f),
            Command::Obstruction(f) => (Experiment::Obstruction, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Qm,
    VerifyModel,
    Variance,
    ChainBound,
    Entropy,
    Sweep,
    Obstruction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Cap,
    Belt,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cap => ModelKind::Cap,
            ModelArg::Belt => ModelKind::Belt,
        }
    }
}

/// Flags shared by every subcommand; each experiment reads the ones it needs.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// State parameter θ in degrees, 0 ≤ θ ≤ 90
    #[arg(long)]
    pub theta_deg: Option<f64>,
    /// Direction of a in degrees (0 = z)
    #[arg(long)]
    pub a_deg: Option<f64>,
    /// Direction of b in degrees
    #[arg(long)]
    pub b_deg: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Chain length, or a comma-separated increasing list
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Rényi order (`inf` for the min-entropy)
    #[arg(long)]
    pub renyi_alpha: Option<f64>,
    /// Variance δ of f = 2p − 1
    #[arg(long)]
    pub delta: Option<f64>,
    /// Mean outcome probability P(X = +1)
    #[arg(long)]
    pub p_psi: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Nodes of the entropy LP grid
    #[arg(long)]
    pub lp_grid: Option<usize>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Calibration tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also scan the critical variance (entropy)
    #[arg(long)]
    pub critical: bool,
    #[arg(long)]
    pub scan_tol: Option<f64>,
    /// θ step of the sweep, in degrees
    #[arg(long)]
    pub theta_step_deg: Option<f64>,
    /// Azimuth arc extent of wing A (obstruction), in degrees
    #[arg(long)]
    pub arc_a_deg: Option<f64>,
    #[arg(long)]
    pub arc_b_deg: Option<f64>,
    /// Number of b directions (obstruction)
    #[arg(long)]
    pub b_grid: Option<usize>,
    /// Number of restarts of the chain search
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the calibrated model record (JSON) here (verify-model)
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Key-value config file (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record wall-clock times (output is then no longer reproducible byte for byte)
    #[arg(long)]
    pub timing: bool,
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub theta_deg: Option<f64>,
    pub a_deg: Option<f64>,
    pub b_deg: Option<f64>,
    pub model: Option<ModelArg>,
    pub n: Option<NList>,
    pub renyi_alpha: Option<f64>,
    pub delta: Option<f64>,
    pub p_psi: Option<f64>,
    pub grid_size: Option<usize>,
    pub lp_grid: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub critical: Option<bool>,
    pub scan_tol: Option<f64>,
    pub theta_step_deg: Option<f64>,
    pub arc_a_deg: Option<f64>,
    pub arc_b_deg: Option<f64>,
    pub b_grid: Option<usize>,
    pub restarts: Option<usize>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
    pub timing: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NList {
    One(usize),
    Many(Vec<usize>),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            context: format!("reading config {}", path.display()),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))
    }
}

/// Fully resolved run configuration; echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Radians; `None` where the experiment does not use it.
    pub theta: Option<f64>,
    pub alpha_meas: f64,
    pub beta_meas: f64,
    pub model: ModelArg,
    pub n: Vec<usize>,
    /// `None` encodes the min-entropy (α = ∞).
    pub renyi_alpha: Option<f64>,
    pub delta: Option<f64>,
    pub p_psi: Option<f64>,
    pub grid_size: usize,
    pub lp_grid: usize,
    pub samples: u64,
    pub seed: u64,
    pub tol: f64,
    pub critical: bool,
    pub scan_tol: f64,
    pub theta_step_deg: f64,
    pub arc_a: f64,
    pub arc_b: f64,
    pub b_grid: usize,
    pub restarts: usize,
    pub output_format: Format,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    #[serde(skip)]
    pub save_model: Option<PathBuf>,
    pub timing: bool,
}

impl RunConfig {
    pub fn renyi_order(&self) -> f64 {
        self.renyi_alpha.unwrap_or(f64::INFINITY)
    }
}

fn require_range(flag: &str, value: f64, lo: f64, hi: f64) -> Result<f64, CliError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("--{flag} must lie in [{lo}, {hi}], got {value}")))
    }
}

fn require_finite(flag: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("--{flag} must be finite, got {value}")))
    }
}

/// Parse `argv` (including the program name) into a [`RunConfig`].
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let (experiment, flags) = cli.command.parts();
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    resolve(experiment, flags, file)
}

pub fn resolve(experiment: Experiment, f: &Flags, file: FileConfig) -> Result<RunConfig, CliError> {
    let theta_deg = f.theta_deg.or(file.theta_deg);
    let needs_theta = !matches!(experiment, Experiment::Entropy | Experiment::Sweep);
    let p_psi = f.p_psi.or(file.p_psi);
    if needs_theta && theta_deg.is_none() {
        return Err(CliError::Usage("missing required --theta-deg (or theta_deg in the config file)".into()));
    }
    if experiment == Experiment::Entropy && theta_deg.is_none() && p_psi.is_none() {
        return Err(CliError::Usage("entropy needs --p-psi or --theta-deg".into()));
    }
    let theta = theta_deg
        .map(|t| require_range("theta-deg", t, 0.0, 90.0).map(f64::to_radians))
        .transpose()?;

    let n = match (&f.n, file.n) {
        (Some(list), _) => list.clone(),
        (None, Some(NList::One(n))) => vec![n],
        (None, Some(NList::Many(list))) => list,
        (None, None) => vec![DEFAULT_N],
    };
    if n.is_empty() || n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!("--n must be a strictly increasing list of positive integers, got {n:?}")));
    }

    let renyi = f.renyi_alpha.or(file.renyi_alpha).unwrap_or(1.0);
    if renyi.is_nan() || renyi < 0.0 {
        return Err(CliError::Usage(format!("--renyi-alpha must be ≥ 0, got {renyi}")));
    }
    let delta = f.delta.or(file.delta).map(|d| require_finite("delta", d)).transpose()?;
    let p_psi = p_psi.map(|p| require_range("p-psi", p, 0.0, 1.0)).transpose()?;

    let grid_size = f.grid_size.or(file.grid_size).unwrap_or(DEFAULT_GRID_SIZE);
    if grid_size < ontolab::coarse::MIN_GRID_SIZE {
        return Err(CliError::Usage(format!(
            "--grid-size must be at least {}, got {grid_size}",
            ontolab::coarse::MIN_GRID_SIZE
        )));
    }
    let lp_grid = f.lp_grid.or(file.lp_grid).unwrap_or(DEFAULT_LP_GRID);
    if lp_grid < ontolab::entropy::MIN_LP_GRID {
        return Err(CliError::Usage(format!(
            "--lp-grid must be at least {}, got {lp_grid}",
            ontolab::entropy::MIN_LP_GRID
        )));
    }
    let samples = f.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
    if experiment == Experiment::VerifyModel && samples < 10_000 {
        return Err(CliError::Usage(format!("--samples must be at least 10000, got {samples}")));
    }
    let tol = f.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
    }
    let scan_tol = f.scan_tol.or(file.scan_tol).unwrap_or(DEFAULT_SCAN_TOL);
    if !(scan_tol > 0.0 && scan_tol.is_finite()) {
        return Err(CliError::Usage(format!("--scan-tol must be positive, got {scan_tol}")));
    }
    let step = f.theta_step_deg.or(file.theta_step_deg).unwrap_or(DEFAULT_THETA_STEP_DEG);
    let step = require_range("theta-step-deg", step, 1e-6, 90.0)?;
    let arc_a = require_range("arc-a-deg", f.arc_a_deg.or(file.arc_a_deg).unwrap_or(DEFAULT_ARC_DEG), 1e-9, 360.0)?;
    let arc_b = require_range("arc-b-deg", f.arc_b_deg.or(file.arc_b_deg).unwrap_or(DEFAULT_ARC_DEG), 1e-9, 360.0)?;
    let b_grid = f.b_grid.or(file.b_grid).unwrap_or(DEFAULT_B_GRID);
    if b_grid == 0 {
        return Err(CliError::Usage("--b-grid must be positive".into()));
    }
    let default_format = match experiment {
        Experiment::Sweep | Experiment::ChainBound => Format::Csv,
        _ => Format::Json,
    };

    Ok(RunConfig {
        experiment,
        theta,
        alpha_meas: require_finite("a-deg", f.a_deg.or(file.a_deg).unwrap_or(0.0))?.to_radians(),
        beta_meas: require_finite("b-deg", f.b_deg.or(file.b_deg).unwrap_or(0.0))?.to_radians(),
        model: f.model.or(file.model).unwrap_or(ModelArg::Belt),
        n,
        renyi_alpha: renyi.is_finite().then_some(renyi),
        delta,
        p_psi,
        grid_size,
        lp_grid,
        samples,
        seed: f.seed.or(file.seed).unwrap_or(ontolab::rng::DEFAULT_SEED),
        tol,
        critical: f.critical || file.critical.unwrap_or(false),
        scan_tol,
        theta_step_deg: step,
        arc_a: arc_a.to_radians(),
        arc_b: arc_b.to_radians(),
        b_grid,
        restarts: f.restarts.or(file.restarts).unwrap_or(ontolab::chain::DEFAULT_RESTARTS),
        output_format: f.format.or(file.format).unwrap_or(default_format),
        output_path: f.output.clone().or(file.output),
        save_model: f.save_model.clone().or(file.save_model),
        timing: f.timing || file.timing.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn variance_example_converts_units() {
        let c = parse_config(["ontolab", "variance", "--theta-deg", "60", "--a-deg", "0", "--model", "belt"]).unwrap();
        assert_eq!(c.experiment, Experiment::Variance);
        assert!((c.theta.unwrap() - FRAC_PI_3).abs() < 1e-15);
        assert_eq!(c.alpha_meas, 0.0);
        assert_eq!(c.model, ModelArg::Belt);
        assert_eq!(c.grid_size, DEFAULT_GRID_SIZE);
    }

    #[test]
    fn n_list_parses() {
        let c = parse_config(["ontolab", "chain-bound", "--theta-deg", "90", "--n", "2,5,10"]).unwrap();
        assert_eq!(c.n, vec![2, 5, 10]);
        assert_eq!(c.output_format, Format::Csv);
    }

    #[test]
    fn missing_theta_is_a_usage_error() {
        let e = parse_config(["ontolab", "variance", "--a-deg", "0"]).unwrap_err();
        assert!(matches!(e, CliError::Usage(ref m) if m.contains("--theta-deg")));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_config(["ontolab", "qm", "--theta-deg", "120"]).is_err());
        assert!(parse_config(["ontolab", "chain-bound", "--theta-deg", "10", "--n", "5,2"]).is_err());
        assert!(parse_config(["ontolab", "qm", "--theta-deg", "10", "--bogus", "1"]).is_err());
        assert!(parse_config(["ontolab", "entropy"]).is_err());
    }

    #[test]
    fn infinite_renyi_order_is_encoded_as_none() {
        let c = parse_config(["ontolab", "entropy", "--p-psi", "0.25", "--renyi-alpha", "inf"]).unwrap();
        assert_eq!(c.renyi_alpha, None);
        assert!(c.renyi_order().is_infinite());
    }
}
