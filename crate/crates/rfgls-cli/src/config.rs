//! JSON configuration payloads. Unknown keys are rejected so a typo cannot
//! silently fall back to a default.

use serde::Deserialize;

use rfgls::{CovarianceSpec, ExperimentConfig, ForestParams, LocationScheme, MeanKind, ParamBounds, Resample};

use crate::CliError;

pub const SEED_ENV: &str = "RFGLS_SEED";

/// Seed priority: command-line flag, then config key, then the RFGLS_SEED
/// environment variable, then zero.
pub fn resolve_seed(flag: Option<u64>, config_key: Option<u64>) -> u64 {
    flag.or(config_key)
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    #[serde(default = "default_n_tree")]
    pub n_tree: usize,
    #[serde(default)]
    pub t_n: Option<usize>,
    #[serde(default = "default_t_c")]
    pub t_c: usize,
    #[serde(default)]
    pub m_try: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_resample")]
    pub resample: Resample,
}

fn default_n_tree() -> usize {
    100
}
fn default_t_c() -> usize {
    5
}
fn default_resample() -> Resample {
    Resample::Bootstrap
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_tree: default_n_tree(),
            t_n: None,
            t_c: default_t_c(),
            m_try: None,
            seed: None,
            resample: default_resample(),
        }
    }
}

impl ForestConfig {
    pub fn params(&self, n_features: usize, seed: u64) -> ForestParams {
        ForestParams {
            n_tree: self.n_tree,
            t_n: self.t_n.unwrap_or(usize::MAX),
            t_c: self.t_c,
            m_try: self.m_try.unwrap_or_else(|| (n_features / 3).max(1)),
            seed,
            resample: self.resample,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub sigma2: f64,
    pub phi: f64,
    pub tau2: f64,
}

/// Configuration of the `fit` command: stage-1 and final forest parameters,
/// neighbor count of the working factor, estimation bounds, and an optional
/// oracle covariance that skips estimation.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default)]
    pub stage1: Option<ForestConfig>,
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    #[serde(default)]
    pub bounds: Option<ParamBounds>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_neighbors() -> usize {
    20
}

impl FitConfig {
    pub fn pipeline(&self, n_features: usize, seed: u64) -> rfgls::PipelineConfig {
        let stage1 = self.stage1.clone().unwrap_or_else(|| self.forest.clone());
        let stage1_seed = stage1.seed.unwrap_or(seed.wrapping_add(1));
        let mut cfg = rfgls::PipelineConfig::new(
            self.forest.params(n_features, seed),
            stage1.params(n_features, stage1_seed),
        );
        cfg.neighbors = self.neighbors;
        if let Some(b) = self.bounds {
            cfg.bounds = b;
        }
        if let Some(o) = &self.oracle {
            cfg.oracle_spec = Some(CovarianceSpec::exponential(o.sigma2, o.phi, o.tau2));
        }
        cfg
    }
}

/// Scalar-or-array grid entry.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    Many(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::One(v) => vec![*v],
            Grid::Many(v) => v.clone(),
        }
    }
}

/// Configuration of the `bench` command. Omitted grid entries default to the
/// full benchmark grids: sigma2 in {1, 5, 10}, phi in 3/(c sqrt 2) for
/// c in {0.25, 0.5, 0.75}, tau2_frac in {0.01, 0.1, 0.25}.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_mean")]
    pub mean: MeanKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub sigma2: Option<Grid>,
    #[serde(default)]
    pub phi: Option<Grid>,
    #[serde(default)]
    pub tau2_frac: Option<Grid>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_n_tree")]
    pub n_tree: usize,
    #[serde(default)]
    pub t_n: Option<usize>,
    #[serde(default = "default_t_c")]
    pub t_c: usize,
    #[serde(default)]
    pub m_try: Option<usize>,
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_resample")]
    pub resample: Resample,
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
}

fn default_mean() -> MeanKind {
    MeanKind::M1
}
fn default_n() -> usize {
    250
}
fn default_replicates() -> usize {
    100
}
fn default_eval_points() -> usize {
    1000
}

pub fn default_phi_grid() -> Vec<f64> {
    [0.25, 0.5, 0.75]
        .iter()
        .map(|c| 3.0 / (c * std::f64::consts::SQRT_2))
        .collect()
}

impl BenchConfig {
    /// Cross product of the grids, in (sigma2, phi, tau2_frac) order.
    pub fn settings(&self, seed: u64) -> Vec<ExperimentConfig> {
        let sigma2s = self.sigma2.as_ref().map(Grid::values).unwrap_or_else(|| vec![1.0, 5.0, 10.0]);
        let phis = self.phi.as_ref().map(Grid::values).unwrap_or_else(default_phi_grid);
        let fracs = self
            .tau2_frac
            .as_ref()
            .map(Grid::values)
            .unwrap_or_else(|| vec![0.01, 0.1, 0.25]);
        let mut out = Vec::new();
        for &sigma2 in &sigma2s {
            for &phi in &phis {
                for &tau2_frac in &fracs {
                    out.push(ExperimentConfig {
                        mean: self.mean,
                        n: self.n,
                        sigma2,
                        phi,
                        tau2_frac,
                        replicates: self.replicates,
                        n_tree: self.n_tree,
                        t_n: self.t_n,
                        t_c: self.t_c,
                        m_try: self.m_try,
                        eval_points: self.eval_points,
                        seed,
                        resample: self.resample,
                        neighbors: self.neighbors,
                        locations: LocationScheme::Uniform2d,
                    });
                }
            }
        }
        out
    }
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
