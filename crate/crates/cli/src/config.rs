//! JSON run configuration shared by all commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use maxid_core::data::{DataScale, MaximaDataset};
use maxid_core::inference::{EvalMode, FitOptions, PairWeights, WeightRule};
use maxid_core::model::{DependenceParams, Family, Metric, ModelSpec, ParamId, StudyDesign};
use maxid_core::numerics::NelderMeadOptions;
use maxid_core::simulate::{mountain_range_design, OutputScale};

use crate::error::{config_err, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Worker threads for the library's parallel loops.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    /// Data CSV (replicates × stations, blank = missing).
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<ModelChoice>,
    /// Initial (fitting) or true (simulation) dependence parameters.
    #[serde(default)]
    pub params: Option<ParamsConfig>,
    #[serde(default)]
    pub weights: Option<WeightRule>,
    #[serde(default)]
    pub quadrature: Option<EvalMode>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub margins: Option<MarginsConfig>,
    #[serde(default)]
    pub transform: Option<TransformConfig>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub cv: Option<CvConfig>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsConfig>,
}

/// Station file or the synthetic mountain-range layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub mountain: Option<MountainConfig>,
}

fn default_metric() -> Metric {
    Metric::Euclidean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountainConfig {
    pub grid: usize,
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `"model6"` or an explicit family with fixed/free overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Name(String),
    Explicit(ModelSection),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub nonstationary: bool,
    #[serde(default)]
    pub anisotropic: bool,
    /// Parameters held at their `params` value.
    #[serde(default)]
    pub fix: Vec<String>,
    /// Parameters released for estimation.
    #[serde(default)]
    pub free: Vec<String>,
}

impl ModelChoice {
    pub fn label(&self) -> String {
        match self {
            ModelChoice::Name(n) => n.clone(),
            ModelChoice::Explicit(s) => s
                .name
                .clone()
                .or_else(|| s.family.map(|f| format!("{f:?}")))
                .unwrap_or_else(|| "custom".into()),
        }
    }

    pub fn resolve(&self) -> CliResult<ModelSpec> {
        let spec = match self {
            ModelChoice::Name(n) => parse_model_name(n)?,
            ModelChoice::Explicit(s) => {
                let mut spec = match (&s.name, s.family) {
                    (Some(n), None) => parse_model_name(n)?,
                    (None, Some(f)) => ModelSpec::new(f, s.nonstationary, s.anisotropic),
                    (Some(_), Some(_)) => return config_err("model: give either `name` or `family`, not both"),
                    (None, None) => return config_err("model: `name` or `family` is required"),
                };
                for p in &s.fix {
                    spec = spec.fix(parse_param(p)?);
                }
                for p in &s.free {
                    spec = spec.set_free(parse_param(p)?, true);
                }
                spec
            }
        };
        spec.validate().map_err(|e| CliError::Config(format!("model {}: {e}", self.label())))?;
        Ok(spec)
    }
}

fn parse_model_name(n: &str) -> CliResult<ModelSpec> {
    let k = n
        .strip_prefix("model")
        .and_then(|k| k.parse::<u32>().ok())
        .ok_or_else(|| CliError::Config(format!("unknown model `{n}` (expected model1..model10)")))?;
    ModelSpec::numbered(k).map_err(|e| CliError::Config(e.to_string()))
}

fn parse_param(s: &str) -> CliResult<ParamId> {
    s.parse().map_err(|e: maxid_core::Error| CliError::Config(e.to_string()))
}

/// Partial parameter set; missing entries take the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub nu: Option<f64>,
    pub aniso_a: Option<f64>,
    pub aniso_theta: Option<f64>,
}

impl ParamsConfig {
    pub fn resolve(&self) -> DependenceParams {
        let d = DependenceParams::default();
        DependenceParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            lambda0: self.lambda0.unwrap_or(d.lambda0),
            lambda1: self.lambda1.unwrap_or(d.lambda1),
            lambda2: self.lambda2.unwrap_or(d.lambda2),
            nu: self.nu.unwrap_or(d.nu),
            aniso_a: self.aniso_a.unwrap_or(d.aniso_a),
            aniso_theta: self.aniso_theta.unwrap_or(d.aniso_theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    MaxId,
    Gaussian,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_scale")]
    pub scale: OutputScale,
    #[serde(default = "default_generator")]
    pub generator: Generator,
    /// Degrees of freedom of the t generator (defaults to `params.alpha`).
    #[serde(default)]
    pub dof: Option<f64>,
}

fn default_epsilon() -> f64 {
    1e-4
}
fn default_max_points() -> usize {
    100_000
}
fn default_scale() -> OutputScale {
    OutputScale::Uniform
}
fn default_generator() -> Generator {
    Generator::MaxId
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub restarts: usize,
    pub seed: u64,
    pub jitter: f64,
    pub max_iter: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let o = FitOptions::default();
        Self {
            restarts: o.restarts,
            seed: o.seed,
            jitter: o.jitter,
            max_iter: o.optimizer.max_iter,
            f_tol: o.optimizer.f_tol,
            x_tol: o.optimizer.x_tol,
            initial_step: o.optimizer.initial_step,
        }
    }
}

impl FitConfig {
    pub fn options(&self, mode: EvalMode) -> CliResult<FitOptions> {
        if self.restarts == 0 {
            return config_err("fit.restarts must be at least 1");
        }
        Ok(FitOptions {
            restarts: self.restarts,
            seed: self.seed,
            jitter: self.jitter,
            mode,
            optimizer: NelderMeadOptions {
                max_iter: self.max_iter,
                f_tol: self.f_tol,
                x_tol: self.x_tol,
                initial_step: self.initial_step,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginsConfig {
    /// Location basis CSV `replicate,station,<columns>`; intercept only when absent.
    #[serde(default)]
    pub covariates: Option<PathBuf>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Also write the uniform-scale dataset.
    #[serde(default = "default_true")]
    pub write_uniform: bool,
}

fn default_restarts() -> usize {
    3
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ToUniform,
    ToRaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// `margins.json` written by `fit-margins`.
    pub margins: PathBuf,
    #[serde(default)]
    pub covariates: Option<PathBuf>,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// `fit.json` written by `fit-dependence`.
    pub fit: PathBuf,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    /// Models to compare; the top-level `model` when empty.
    #[serde(default)]
    pub models: Vec<ModelChoice>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// `fit.json` supplying model and parameters (else `model` + `params`).
    #[serde(default)]
    pub fit: Option<PathBuf>,
    #[serde(default)]
    pub theta2: Option<Theta2Config>,
    #[serde(default)]
    pub theta_d: Option<ThetaDConfig>,
    #[serde(default)]
    pub effective_range: Option<RangeConfig>,
    #[serde(default)]
    pub return_periods: Option<ReturnPeriodConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theta2Config {
    pub distances: Vec<f64>,
    pub levels: Vec<f64>,
    #[serde(default)]
    pub alt: f64,
    #[serde(default = "default_time")]
    pub time: f64,
}

fn default_time() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaDConfig {
    pub subsets: usize,
    pub size: usize,
    pub level: f64,
    pub seed: u64,
    #[serde(default = "default_time")]
    pub time: f64,
    #[serde(default = "default_qmc")]
    pub qmc_points: usize,
}

fn default_qmc() -> usize {
    maxid_core::maxid::THETA_D_QMC_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub altitudes: Vec<f64>,
    pub times: Vec<f64>,
    pub level: f64,
    #[serde(default = "default_target")]
    pub target: f64,
}

fn default_target() -> f64 {
    1.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnPeriodConfig {
    /// Raw-scale event, one value per station (`null` = missing).
    pub event: Vec<Option<f64>>,
    pub margins: PathBuf,
    /// Raw-scale dataset the margins were fitted on (fixes station order and replicate count).
    pub raw_data: PathBuf,
    #[serde(default)]
    pub covariates: Option<PathBuf>,
    /// Replicate indices (0-based) whose time and margins serve as reference years.
    pub reference_replicates: Vec<usize>,
    pub simulations: usize,
    pub seed: u64,
}

/// Parses a config document, checking the schema version.
pub fn parse_config(text: &str, origin: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{origin}{}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            locate(text, "schema_version"),
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// ` (line N)` of the first occurrence of `"key"` in the document, or empty.
pub fn locate(text: &str, key: &str) -> String {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|n| format!(" (line {})", n + 1))
        .unwrap_or_default()
}

/// Loaded configuration plus its source text and directory.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub text: String,
    pub origin: String,
    /// Relative paths are resolved against this directory.
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let origin = path.display().to_string();
        let config = parse_config(&text, &origin)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, text, origin, base })
    }

    pub fn from_config(config: RunConfig) -> Self {
        Self { config, text: String::new(), origin: "<built-in>".into(), base: PathBuf::new() }
    }

    /// Error message pointing at `key` in the source.
    pub fn err<T>(&self, key: &str, msg: impl std::fmt::Display) -> CliResult<T> {
        Err(CliError::Config(format!("{}{}: {msg}", self.origin, locate(&self.text, key))))
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Existing input file referenced by `key`.
    pub fn input(&self, key: &str, p: &Path) -> CliResult<PathBuf> {
        let full = self.path(p);
        if !full.is_file() {
            return self.err(key, format!("file {} does not exist", full.display()));
        }
        Ok(full)
    }

    pub fn output_dir(&self) -> CliResult<PathBuf> {
        let dir = self.path(self.config.output_dir.as_deref().unwrap_or(Path::new(".")));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        match &self.config.model {
            Some(m) => m.resolve().or_else(|e| self.err("model", e)),
            None => self.err("model", "a `model` entry is required"),
        }
    }

    pub fn params(&self) -> DependenceParams {
        self.config.params.unwrap_or_default().resolve()
    }

    pub fn mode(&self) -> EvalMode {
        self.config.quadrature.unwrap_or_default()
    }

    pub fn fit_options(&self) -> CliResult<FitOptions> {
        self.config.fit.clone().unwrap_or_default().options(self.mode()).or_else(|e| self.err("fit", e))
    }

    /// Design with `n_replicates` rescaled times.
    pub fn design(&self, n_replicates: usize) -> CliResult<StudyDesign> {
        let Some(d) = &self.config.design else {
            return self.err("design", "a `design` entry is required");
        };
        match (&d.file, &d.mountain) {
            (Some(f), None) => Ok(StudyDesign::read_csv(&self.input("design", f)?, d.metric, n_replicates)?),
            (None, Some(m)) => Ok(mountain_range_design(m.grid, m.perturbation, m.seed, n_replicates)
                .or_else(|e| self.err("mountain", e))?),
            _ => self.err("design", "give exactly one of `file` or `mountain`"),
        }
    }

    pub fn data(&self, default_scale: DataScale) -> CliResult<MaximaDataset> {
        let Some(p) = &self.config.data else {
            return self.err("data", "a `data` entry is required");
        };
        Ok(MaximaDataset::read(&self.input("data", p)?, default_scale)?)
    }

    /// Uniform-scale data and its design, checked against each other.
    pub fn uniform_data_and_design(&self) -> CliResult<(MaximaDataset, StudyDesign)> {
        let data = self.data(DataScale::Uniform)?;
        if data.scale() != DataScale::Uniform {
            return self.err("data", format!("expected uniform-scale data, found {:?}", data.scale()));
        }
        let design = self.design(data.n_replicates())?;
        if design.n_sites() != data.n_stations() {
            return self.err(
                "design",
                format!("design has {} sites but data has {} stations", design.n_sites(), data.n_stations()),
            );
        }
        Ok((data, design))
    }

    pub fn weights(&self, design: &StudyDesign) -> CliResult<PairWeights> {
        let rule = self.config.weights.unwrap_or(WeightRule::AllOnes);
        PairWeights::from_rule(design, rule).or_else(|e| self.err("weights", e))
    }
}
