use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::environment::NoiseKind;
use crate::error::{Error, Result};
use crate::selectors::DEFAULT_BUDGET;
use crate::slucb::SupportSelector;

/// Exploration multiplier giving `n0` around 50 at `d = 100, k = 60,
/// T = 1300, s = 5`.
pub const DEFAULT_C_SCALE: f64 = 4e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RegretGrowth,
    SparsitySweep,
    MethodCompare,
    SemiReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Sparse-LinUCB with best subset selection.
    Slucb,
    Ssucb,
    /// Sparse-LinUCB handed the true support.
    Oracle,
    Lasso,
    Iht,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Slucb => "slucb",
            Method::Ssucb => "ssucb",
            Method::Oracle => "oracle",
            Method::Lasso => "lasso",
            Method::Iht => "iht",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slucb" | "bss" => Ok(Method::Slucb),
            "ssucb" => Ok(Method::Ssucb),
            "oracle" => Ok(Method::Oracle),
            "lasso" | "lasso_variant" => Ok(Method::Lasso),
            "iht" | "iht_variant" => Ok(Method::Iht),
            "random" => Ok(Method::Random),
            other => Err(Error::config(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// `s` coordinates set to `+-1`.
    Rademacher,
    /// `s` coordinates drawn from `N(0, 1)`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Exact,
    Heuristic,
    Auto,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Sparsity levels for `regret_growth` and `sparsity_sweep`; empty means
    /// `environment.s` alone.
    #[serde(default)]
    pub sparsities: Vec<usize>,
}

fn default_algorithm() -> String {
    "slucb".into()
}

fn default_reps() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    pub d: usize,
    pub k: usize,
    pub horizon: usize,
    pub s: usize,
    pub noise_sd: f64,
    pub context_scale: f64,
    pub noise: NoiseName,
    pub signal: SignalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseName {
    Gaussian,
    Uniform,
}

impl From<NoiseName> for NoiseKind {
    fn from(n: NoiseName) -> Self {
        match n {
            NoiseName::Gaussian => NoiseKind::Gaussian,
            NoiseName::Uniform => NoiseKind::Uniform,
        }
    }
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            d: 100,
            k: 60,
            horizon: 1300,
            s: 5,
            noise_sd: 1.0,
            context_scale: 1.0,
            noise: NoiseName::Gaussian,
            signal: SignalKind::Rademacher,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub delta: f64,
    pub lambda: f64,
    pub c_scale: f64,
    pub alpha_scale: f64,
    pub gamma_scale: f64,
    /// Fixed exploration length; overrides the `c_scale` formula.
    pub n0: Option<usize>,
    /// Sub-Gaussian constants; defaults follow the environment.
    pub sigma: Option<f64>,
    pub nu: Option<f64>,
    pub rho: Option<f64>,
}

impl Default for TuningSection {
    fn default() -> Self {
        Self {
            delta: 0.1,
            lambda: 1.0,
            c_scale: DEFAULT_C_SCALE,
            alpha_scale: 1.0,
            gamma_scale: 1.0,
            n0: None,
            sigma: None,
            nu: None,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectorSection {
    pub kind: SelectorKind,
    pub budget: u128,
    pub restarts: usize,
    pub iht_iters: usize,
}

impl Default for SelectorSection {
    fn default() -> Self {
        Self {
            kind: SelectorKind::Auto,
            budget: DEFAULT_BUDGET,
            restarts: 8,
            iht_iters: 200,
        }
    }
}

impl SelectorSection {
    pub fn support_selector(&self) -> SupportSelector {
        match self.kind {
            SelectorKind::Exact => SupportSelector::Exact { budget: self.budget },
            SelectorKind::Heuristic => SupportSelector::Heuristic {
                restarts: self.restarts,
            },
            SelectorKind::Auto => SupportSelector::Auto {
                budget: self.budget,
                restarts: self.restarts,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiRealSection {
    pub data: PathBuf,
    pub arm_col: String,
    pub outcome_col: String,
    #[serde(default)]
    pub features: Option<Vec<String>>,
    #[serde(default)]
    pub arms: Option<Vec<String>>,
    #[serde(default = "default_noise_dims")]
    pub noise_dims: usize,
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default = "one")]
    pub noise_sd: f64,
    #[serde(default = "default_semi_horizon")]
    pub horizon: usize,
    /// Sparsity budget per epoch; defaults to the number of nonzero
    /// coordinates of the fitted parameter.
    #[serde(default)]
    pub s: Option<usize>,
}

fn default_noise_dims() -> usize {
    41
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_semi_horizon() -> usize {
    2600
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub selector: SelectorSection,
    #[serde(default)]
    pub semi_real: Option<SemiRealSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(sr), Some(dir)) = (cfg.semi_real.as_mut(), path.parent()) {
            if sr.data.is_relative() {
                sr.data = dir.join(&sr.data);
            }
        }
        Ok(cfg)
    }

    /// Methods to run: the `methods` list when given, else `algorithm`.
    pub fn methods(&self) -> Result<Vec<Method>> {
        if self.experiment.methods.is_empty() {
            Ok(vec![self.experiment.algorithm.parse()?])
        } else {
            self.experiment.methods.iter().map(|m| m.parse()).collect()
        }
    }

    pub fn sparsities(&self) -> Vec<usize> {
        if self.experiment.sparsities.is_empty() {
            vec![self.environment.s]
        } else {
            self.experiment.sparsities.clone()
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.experiment
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        self.methods()?;
        let env = &self.environment;
        if env.d == 0 || env.k == 0 || env.horizon == 0 {
            return Err(Error::config("d, k and horizon must be positive"));
        }
        for s in self.sparsities() {
            if s == 0 || s > env.d {
                return Err(Error::config(format!("sparsity {s} outside 1..={}", env.d)));
            }
        }
        if !(env.noise_sd >= 0.0) || !(env.context_scale > 0.0) {
            return Err(Error::config("noise_sd must be >= 0 and context_scale > 0"));
        }
        let t = &self.tuning;
        if !(t.delta > 0.0 && t.delta < 1.0) || !(t.lambda > 0.0) {
            return Err(Error::config("delta must lie in (0, 1) and lambda be positive"));
        }
        if t.n0 == Some(0) {
            return Err(Error::config("n0 must be positive"));
        }
        if self.selector.restarts == 0 {
            return Err(Error::config("selector.restarts must be at least 1"));
        }
        if e.kind == ExperimentKind::SemiReal {
            let sr = self
                .semi_real
                .as_ref()
                .ok_or_else(|| Error::config("semi_real experiments need a [semi_real] section"))?;
            if !sr.data.is_file() {
                return Err(Error::config(format!(
                    "data file {} does not exist",
                    sr.data.display()
                )));
            }
            if sr.horizon == 0 {
                return Err(Error::config("semi_real.horizon must be positive"));
            }
        }
        Ok(())
    }
}
