//! Replicated experiments, aggregation and CSV output.

mod config;
mod output;

pub use config::{
    parse_methods, EnvironmentSection, ExperimentConfig, ExperimentKind, ExperimentSection,
    Method, NoiseName, SelectorKind, SelectorSection, SemiRealSection, SignalKind, TuningSection,
    DEFAULT_C_SCALE,
};
pub use output::{format_float, write_outputs, LONG_HEADER, SUMMARY_HEADER};

use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::environment::{semi_real_env, ContextGenerator, CsvTable, EnvSpec, SemiRealOptions};
use crate::error::{Error, Result};
use crate::linops::SparseParam;
use crate::sim::{problem_rng, simulate, RandomPolicy, RunReport};
use crate::slucb::{
    compute_ssucb_tuning, compute_tuning, run_slucb, ModelConstants, SlucbParams, SsucbParams,
    SupportSelector,
};
use crate::ssucb::run_ssucb;

/// A bandit instance together with its true support.
#[derive(Debug, Clone)]
pub struct Problem {
    pub env: EnvSpec,
    pub support: Vec<usize>,
    /// Sparsity budget handed to the policies.
    pub s: usize,
}

/// Gaussian-context instance with an `s`-sparse parameter drawn from the
/// problem stream of `seed`.
pub fn synthetic_problem(env: &EnvironmentSection, s: usize, seed: u64) -> Result<Problem> {
    if s == 0 || s > env.d {
        return Err(Error::config(format!("sparsity {s} outside 1..={}", env.d)));
    }
    let mut rng = problem_rng(seed);
    let mut support = sample(&mut rng, env.d, s).into_vec();
    support.sort_unstable();
    let coefs: Vec<f64> = support
        .iter()
        .map(|_| match env.signal {
            SignalKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SignalKind::Gaussian => rng.sample(StandardNormal),
        })
        .collect();
    let theta = SparseParam::scatter(env.d, support.clone(), &coefs)?;
    let spec = EnvSpec::new(
        env.k,
        ContextGenerator::GaussianIid {
            scale: env.context_scale,
        },
        theta,
        env.noise_sd,
        env.horizon,
    )?
    .with_noise(env.noise.into());
    Ok(Problem {
        env: spec,
        support,
        s,
    })
}

/// Semi-synthetic instance built from the `[semi_real]` section.
pub fn semi_real_problem(sr: &SemiRealSection) -> Result<Problem> {
    let table = CsvTable::from_path(&sr.data)?;
    let opts = SemiRealOptions {
        arm_column: sr.arm_col.clone(),
        outcome_column: sr.outcome_col.clone(),
        features: sr.features.clone(),
        arms: sr.arms.clone(),
        noise_dims: sr.noise_dims,
        standardize: sr.standardize,
        noise_sd: sr.noise_sd,
        horizon: sr.horizon,
    };
    let (env, _) = semi_real_env(&table, &opts)?;
    let support = env.theta_star().nonzero();
    let s = sr.s.unwrap_or(support.len()).clamp(1, env.d());
    Ok(Problem { env, support, s })
}

/// Model constants for `problem` under the `[tuning]` section.
pub fn model_constants(problem: &Problem, tuning: &TuningSection) -> ModelConstants {
    let env = &problem.env;
    let scale = match env.context() {
        ContextGenerator::GaussianIid { scale } => *scale,
        _ => 1.0,
    };
    let sigma = tuning.sigma.unwrap_or(scale.max(1.0));
    let rho = tuning.rho.unwrap_or(env.rho().min(sigma));
    ModelConstants {
        sigma,
        nu: tuning.nu.unwrap_or(env.noise_sd().max(1.0)),
        rho,
        radius: env.radius().max(f64::MIN_POSITIVE),
        s: problem.s,
        k: env.k(),
        horizon: env.horizon(),
        d: env.d(),
        delta: tuning.delta,
        lambda: tuning.lambda,
        c_scale: tuning.c_scale,
        alpha_scale: tuning.alpha_scale,
        gamma_scale: tuning.gamma_scale,
        n0_override: tuning.n0,
    }
}

/// Tuned parameters for both policies.
pub fn tune(problem: &Problem, tuning: &TuningSection) -> Result<(SlucbParams, SsucbParams)> {
    let c = model_constants(problem, tuning);
    Ok((compute_tuning(&c)?, compute_ssucb_tuning(&c)?))
}

/// One seeded run of `method` on `problem`.
pub fn run_method(
    method: Method,
    problem: &Problem,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<RunReport> {
    let (slucb, ssucb) = tune(problem, &cfg.tuning)?;
    let env = &problem.env;
    match method {
        Method::Slucb => run_slucb(env, &slucb, &cfg.selector.support_selector(), seed),
        Method::Ssucb => run_ssucb(env, &ssucb, &cfg.selector.support_selector(), seed),
        Method::Oracle => run_slucb(
            env,
            &slucb,
            &SupportSelector::Oracle {
                support: problem.support.clone(),
            },
            seed,
        ),
        Method::Lasso => run_slucb(env, &slucb, &SupportSelector::Lasso, seed),
        Method::Iht => run_slucb(
            env,
            &slucb,
            &SupportSelector::Iht {
                iters: cfg.selector.iht_iters,
            },
            seed,
        ),
        Method::Random => simulate(env, &mut RandomPolicy, seed),
    }
}

/// Per-period mean and 5%/95% quantiles of cumulative regret across
/// replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretBand {
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl RegretBand {
    pub fn from_curves(curves: &[Vec<f64>]) -> Result<Self> {
        let len = curves.first().map(Vec::len).unwrap_or(0);
        if curves.is_empty() || curves.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("regret curves must be non-empty and equally long"));
        }
        let mut band = RegretBand {
            mean: Vec::with_capacity(len),
            q05: Vec::with_capacity(len),
            q95: Vec::with_capacity(len),
        };
        let mut column = vec![0.0; curves.len()];
        for t in 0..len {
            for (slot, c) in column.iter_mut().zip(curves) {
                *slot = c[t];
            }
            band.mean.push(column.iter().sum::<f64>() / column.len() as f64);
            column.sort_by(f64::total_cmp);
            band.q05.push(quantile_sorted(&column, 0.05));
            band.q95.push(quantile_sorted(&column, 0.95));
        }
        Ok(band)
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Values at the last period.
    pub fn last(&self) -> (f64, f64, f64) {
        let n = self.len() - 1;
        (self.mean[n], self.q05[n], self.q95[n])
    }
}

/// Linear-interpolation quantile of an ascending slice (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// All replications of one method at one sparsity level.
#[derive(Debug, Clone)]
pub struct MethodRuns {
    pub method: Method,
    pub s: usize,
    pub runs: Vec<RunReport>,
    pub band: RegretBand,
    /// Summed wall-clock seconds over replications.
    pub seconds: f64,
}

impl MethodRuns {
    pub fn label(&self) -> String {
        format!("{}_s{}", self.method, self.s)
    }

    pub fn mean_seconds(&self) -> f64 {
        self.seconds / self.runs.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub groups: Vec<MethodRuns>,
    /// Soft-check failures, reported but not fatal.
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    /// Groups ordered by mean final regret, ties by method then sparsity.
    pub fn ranking(&self) -> Vec<&MethodRuns> {
        let mut rows: Vec<&MethodRuns> = self.groups.iter().collect();
        rows.sort_by(|a, b| {
            a.band
                .last()
                .0
                .total_cmp(&b.band.last().0)
                .then(a.method.cmp(&b.method))
                .then(a.s.cmp(&b.s))
        });
        rows
    }
}

fn replicate(
    method: Method,
    cfg: &ExperimentConfig,
    problem_for: &(dyn Fn(u64) -> Result<Problem> + Sync),
    s: usize,
) -> Result<MethodRuns> {
    let reps = cfg.experiment.replications;
    let base = cfg.experiment.base_seed;
    let one = |rep: usize| -> Result<(RunReport, f64)> {
        let seed = base.wrapping_add(rep as u64);
        let problem = problem_for(seed)?;
        let start = Instant::now();
        let report = run_method(method, &problem, cfg, seed)?;
        Ok((report, start.elapsed().as_secs_f64()))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(RunReport, f64)>> = {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(RunReport, f64)>> = (0..reps).map(one).collect();

    let mut runs = Vec::with_capacity(reps);
    let mut seconds = 0.0;
    for r in results {
        let (report, secs) = r?;
        runs.push(report);
        seconds += secs;
    }
    let curves: Vec<Vec<f64>> = runs.iter().map(|r| r.trace.cumulative()).collect();
    let band = RegretBand::from_curves(&curves)?;
    Ok(MethodRuns {
        method,
        s,
        runs,
        band,
        seconds,
    })
}

/// Runs every replication the config asks for.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let methods = cfg.methods()?;
    let mut groups = Vec::new();
    if cfg.experiment.kind == ExperimentKind::SemiReal {
        let sr = cfg
            .semi_real
            .as_ref()
            .ok_or_else(|| Error::config("missing [semi_real] section"))?;
        let problem = semi_real_problem(sr)?;
        let s = problem.s;
        let shared = move |_: u64| Ok(problem.clone());
        for &m in &methods {
            groups.push(replicate(m, cfg, &shared, s)?);
        }
    } else {
        for s in cfg.sparsities() {
            let env = cfg.environment.clone();
            let make = move |seed: u64| synthetic_problem(&env, s, seed);
            for &m in &methods {
                groups.push(replicate(m, cfg, &make, s)?);
            }
        }
    }
    let warnings = soft_checks(&groups);
    Ok(ExperimentReport {
        kind: cfg.experiment.kind,
        groups,
        warnings,
    })
}

/// Runs the listed methods on matched seeds and ranks them.
pub fn compare_methods(cfg: &ExperimentConfig, methods: &[Method]) -> Result<ExperimentReport> {
    if methods.is_empty() {
        return Err(Error::config("no methods to compare"));
    }
    let mut cfg = cfg.clone();
    cfg.experiment.methods = methods.iter().map(|m| m.name().to_string()).collect();
    if cfg.experiment.kind != ExperimentKind::SemiReal {
        cfg.experiment.kind = ExperimentKind::MethodCompare;
    }
    run_experiment(&cfg)
}

fn soft_checks(groups: &[MethodRuns]) -> Vec<String> {
    let mut warnings = Vec::new();
    for g in groups {
        if g.runs.len() < 20 {
            continue;
        }
        let b = &g.band;
        let outside = (0..b.len())
            .filter(|&t| b.mean[t] < b.q05[t] || b.mean[t] > b.q95[t])
            .count();
        if outside > 0 {
            warnings.push(format!(
                "{}: mean outside the 5-95% band at {outside} periods",
                g.label()
            ));
        }
    }
    warnings
}
