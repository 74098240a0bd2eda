//! Declarative experiment configuration. One TOML document per run; unknown
//! keys are fatal because silent typos corrupt statistical experiments.

use serde::{Deserialize, Serialize};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "md" => Ok(OutputFormat::Md),
            other => Err(format!("unknown format '{other}' (json|csv|md)")),
        }
    }
}

fn default_seed() -> u64 {
    7
}

fn default_out_dir() -> String {
    "out".into()
}

/// Root config: global knobs plus exactly one experiment payload. Unknown
/// keys are rejected by the per-experiment payload structs (serde cannot
/// combine deny_unknown_fields with the flattened experiment tag here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// human-readable run name; doubles as the report file stem
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// worker threads; 0 = all logical cores
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "experiment")]
pub enum Experiment {
    Tail(TailConfig),
    Diameter(DiameterConfig),
    Product(ProductConfig),
    HansonWright(HansonWrightConfig),
    Xdy(XdyConfig),
    NormDegree(NormDegreeConfig),
    Resolvent(ResolventConfig),
    Robust(RobustConfig),
    Moments(MomentsConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Tail(_) => "tail",
            Experiment::Diameter(_) => "diameter",
            Experiment::Product(_) => "product",
            Experiment::HansonWright(_) => "hanson_wright",
            Experiment::Xdy(_) => "xdy",
            Experiment::NormDegree(_) => "norm_degree",
            Experiment::Resolvent(_) => "resolvent",
            Experiment::Robust(_) => "robust",
            Experiment::Moments(_) => "moments",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Gaussian,
    Sphere,
    Ball,
    Cube,
    Laplace,
    LqBall,
}

impl std::str::FromStr for ModelFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(ModelFamily::Gaussian),
            "sphere" => Ok(ModelFamily::Sphere),
            "ball" => Ok(ModelFamily::Ball),
            "cube" => Ok(ModelFamily::Cube),
            "laplace" => Ok(ModelFamily::Laplace),
            "lq_ball" => Ok(ModelFamily::LqBall),
            other => Err(format!("unknown model family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    /// random unit linear forms (seeded separately from the samples)
    RandomUnit,
    /// first canonical coordinate
    Coordinate,
}

fn default_fits() -> usize {
    5
}

fn default_window() -> [f64; 2] {
    [1e-3, 1e-1]
}

fn default_delta() -> f64 {
    0.05
}

fn default_consts() -> [f64; 2] {
    [2.0, std::f64::consts::SQRT_2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub model: ModelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lq_exponent: Option<f64>,
    pub dims: Vec<usize>,
    pub n_samples: usize,
    pub observation: ObservationKind,
    /// fitted exponent must land in this closed interval (median over fits)
    pub q_range: [f64; 2],
    #[serde(default = "default_fits")]
    pub fits_per_dim: usize,
    /// (C, c) of the declared envelope used in the coverage check
    #[serde(default = "default_consts")]
    pub envelope_constants: [f64; 2],
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
    #[serde(default = "default_delta")]
    pub confidence_delta: f64,
    /// also demand 100% DKW-adjusted coverage below the declared envelope
    #[serde(default)]
    pub check_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterExpectation {
    /// diameter within [lo, hi], dimension-free
    OrderOne { lo: f64, hi: f64 },
    /// normalized-sum spread at least factor * sqrt(dim)
    SqrtDim { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiameterConfig {
    pub model: ModelFamily,
    pub dims: Vec<usize>,
    pub n_samples: usize,
    #[serde(default = "default_observations")]
    pub observations: usize,
    /// replicate a scalar source across the dimension (the anti-example)
    #[serde(default)]
    pub replicate_scalar: bool,
    pub expect: DiameterExpectation,
}

fn default_observations() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// entry-wise products of independent scalar gaussians
    Scalars,
    /// sample covariance X X^T / n observed through unit-Frobenius pairings
    Covariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductConfig {
    pub mode: ProductMode,
    /// scalar mode: list of factor counts with their exponent windows
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factor_checks: Vec<FactorCheck>,
    #[serde(default)]
    pub n_samples: usize,
    /// covariance mode: square dimensions and trial count
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub trials: usize,
    /// covariance mode: max allowed max/min ratio of std * sqrt(n)
    #[serde(default)]
    pub stability_factor: f64,
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorCheck {
    pub m: usize,
    pub q_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HansonWrightConfig {
    pub dim: usize,
    pub n_samples: usize,
    pub n_matrices: usize,
    /// allowed interval for Var(x^T A y) / ||A||_F^2
    pub variance_ratio_range: [f64; 2],
    /// far-tail exponent window, probed on the scalar product x*y
    pub far_tail_q_range: [f64; 2],
    /// (C, c) for the envelope pass
    pub envelope_constants: [f64; 2],
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XdyMode {
    /// observable diameter of X D Y^T u across scales
    Action,
    /// Frobenius gap between E[X D Y^T] and E[X E[D] Y^T]
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XdyConfig {
    pub mode: XdyMode,
    pub dims: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_observations")]
    pub observations: usize,
    /// max allowed max/min ratio of the normalized constants
    pub stability_factor: f64,
    #[serde(default)]
    pub p_fixed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormCase {
    Euclidean,
    Sup,
    Spectral,
    Frobenius,
    Diag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormDegreeConfig {
    pub cases: Vec<NormCaseConfig>,
    pub trials: usize,
    /// max allowed max/min ratio of fitted constants within a case
    pub stability_factor: f64,
    /// check E||Z|| against the exact gamma-ratio value at this dimension
    #[serde(default)]
    pub gamma_oracle_dim: usize,
    #[serde(default)]
    pub gamma_oracle_rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormCaseConfig {
    pub case: NormCase,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    /// isotropic reference point
    pub p: usize,
    pub n: usize,
    pub d_value: f64,
    pub trials: usize,
    pub rel_error_max: f64,
    /// scaling run at fixed p/n; empty disables
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scaling_ns: Vec<usize>,
    #[serde(default)]
    pub scaling_ratio_factor: f64,
    /// leave-one-out verification draws; 0 disables
    #[serde(default)]
    pub loo_draws: usize,
    #[serde(default)]
    pub loo_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustConfig {
    pub amplitude: f64,
    pub offset: f64,
    /// (p, n) pairs; the coupling ratio is compared across them
    pub shapes: Vec<[usize; 2]>,
    pub coupling_ratio_max: f64,
    #[serde(default = "default_fp_tol")]
    pub tolerance: f64,
    #[serde(default = "default_fp_iters")]
    pub max_iterations: usize,
}

fn default_fp_tol() -> f64 {
    1e-12
}

fn default_fp_iters() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub n_samples: usize,
    /// (C, c) used in the moment bounds
    pub envelope_constants: [f64; 2],
    pub orders: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}
