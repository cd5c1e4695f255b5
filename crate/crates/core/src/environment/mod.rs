//! The stochastic bandit world: context generators, linear rewards, regret
//! accounting, and the semi-synthetic multi-treatment construction.

mod arms;
mod table;

pub use arms::{fit_arm_models, semi_real_env, standardize_columns, ArmFit, ArmModels, SemiRealOptions};
pub use table::CsvTable;

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linops::SparseParam;

#[derive(Debug, Clone, PartialEq)]
pub enum ContextGenerator {
    /// Every coordinate i.i.d. `Normal(0, scale^2)`.
    GaussianIid { scale: f64 },
    /// Each arm is an independent uniform draw from `rows`.
    Empirical { rows: Vec<Vec<f64>> },
    /// One base row per period (plus `noise_dims` standard normal
    /// coordinates), placed in arm `i`'s block and zero elsewhere.
    BlockTreatment {
        base: Vec<Vec<f64>>,
        arm_params: Vec<SparseParam>,
        noise_dims: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Uniform on `[-sqrt(3) sd, sqrt(3) sd]`, same variance as the Gaussian.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct EnvSpec {
    d: usize,
    k: usize,
    context: ContextGenerator,
    noise_sd: f64,
    noise: NoiseKind,
    theta_star: SparseParam,
    horizon: usize,
    radius: f64,
}

impl EnvSpec {
    /// The declared radius defaults to `|theta_star|`.
    pub fn new(
        k: usize,
        context: ContextGenerator,
        theta_star: SparseParam,
        noise_sd: f64,
        horizon: usize,
    ) -> Result<Self> {
        let d = theta_star.dim();
        if k == 0 {
            return Err(Error::config("at least one arm is required"));
        }
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
            return Err(Error::config(format!("noise sd must be finite and >= 0, got {noise_sd}")));
        }
        match &context {
            ContextGenerator::GaussianIid { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::config("gaussian context scale must be positive"));
                }
            }
            ContextGenerator::Empirical { rows } => {
                if rows.is_empty() {
                    return Err(Error::config("empirical context generator has no rows"));
                }
                if let Some(bad) = rows.iter().find(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: bad.len(),
                    });
                }
            }
            ContextGenerator::BlockTreatment {
                base,
                arm_params,
                noise_dims,
            } => {
                if base.is_empty() {
                    return Err(Error::config("block-treatment generator has no base rows"));
                }
                let width = base[0].len() + noise_dims;
                if arm_params.len() != k || k * width != d {
                    return Err(Error::config(format!(
                        "block layout {k} arms x width {width} does not match dimension {d}"
                    )));
                }
                if base.iter().any(|r| r.len() != base[0].len()) {
                    return Err(Error::config("ragged base feature rows"));
                }
            }
        }
        let radius = theta_star.norm();
        Ok(Self {
            d,
            k,
            context,
            noise_sd,
            noise: NoiseKind::Gaussian,
            theta_star,
            horizon,
            radius,
        })
    }

    /// Block-treatment world: `theta_star` stacks each arm's parameters,
    /// zero-padded over the noise coordinates.
    pub fn block_treatment(
        base: Vec<Vec<f64>>,
        arm_params: Vec<SparseParam>,
        noise_dims: usize,
        noise_sd: f64,
        horizon: usize,
    ) -> Result<Self> {
        let base_dim = base.first().map(|r| r.len()).unwrap_or(0);
        let width = base_dim + noise_dims;
        let k = arm_params.len();
        let mut theta = vec![0.0; k * width];
        for (i, p) in arm_params.iter().enumerate() {
            if p.dim() != base_dim {
                return Err(Error::DimensionMismatch {
                    expected: base_dim,
                    got: p.dim(),
                });
            }
            theta[i * width..i * width + base_dim].copy_from_slice(p.values());
        }
        let theta_star = SparseParam::from_dense(theta);
        Self::new(
            k,
            ContextGenerator::BlockTreatment {
                base,
                arm_params,
                noise_dims,
            },
            theta_star,
            noise_sd,
            horizon,
        )
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || self.theta_star.norm() > radius {
            return Err(Error::config(format!(
                "radius {radius} must be positive and bound |theta*| = {}",
                self.theta_star.norm()
            )));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise
    }

    pub fn theta_star(&self) -> &SparseParam {
        &self.theta_star
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn context(&self) -> &ContextGenerator {
        &self.context
    }

    /// Smallest per-coordinate second moment of the context generator.
    pub fn rho(&self) -> f64 {
        match &self.context {
            ContextGenerator::GaussianIid { scale } => scale * scale,
            ContextGenerator::Empirical { rows } => min_second_moment(rows),
            ContextGenerator::BlockTreatment {
                base, arm_params, ..
            } => {
                // a block is active with probability 1/k
                let base_rho = min_second_moment(base).min(1.0);
                base_rho / arm_params.len() as f64
            }
        }
    }

    /// One draw of the reward noise.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.noise {
            NoiseKind::Gaussian => self.noise_sd * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Uniform => {
                let half = 3f64.sqrt() * self.noise_sd;
                rng.random_range(-1.0..1.0) * half
            }
        }
    }

    /// Samples a round of `k` covariates for period `t` (1-based).
    pub fn sample_round<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<Round> {
        sample_round(self, t, rng)
    }
}

fn min_second_moment(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    (0..dim)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>() / n)
        .fold(f64::INFINITY, f64::min)
}

/// The `k` candidate covariates offered at period `t`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub t: usize,
    d: usize,
    covariates: Vec<f64>,
}

impl Round {
    pub fn new(t: usize, covariates: Vec<Vec<f64>>) -> Result<Self> {
        let d = covariates.first().map(|c| c.len()).unwrap_or(0);
        if covariates.is_empty() {
            return Err(Error::invalid("a round needs at least one arm"));
        }
        if covariates.iter().any(|c| c.len() != d) {
            return Err(Error::invalid("ragged covariates"));
        }
        if covariates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        Ok(Self {
            t,
            d,
            covariates: covariates.concat(),
        })
    }

    pub fn k(&self) -> usize {
        self.covariates.len() / self.d.max(1)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arm(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.d..(i + 1) * self.d]
    }

    pub fn arms(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.covariates.chunks_exact(self.d.max(1))
    }
}

/// Draws the round for period `t`. Gaussian and empirical generators draw the
/// `k` arms independently; the block generator shares one base row across
/// arms, each arm seeing it in its own block.
pub fn sample_round<R: Rng + ?Sized>(spec: &EnvSpec, t: usize, rng: &mut R) -> Result<Round> {
    if t == 0 || t > spec.horizon {
        return Err(Error::invalid(format!("period {t} outside [1, {}]", spec.horizon)));
    }
    let (d, k) = (spec.d, spec.k);
    let mut covariates = vec![0.0; k * d];
    match &spec.context {
        ContextGenerator::GaussianIid { scale } => {
            for v in covariates.iter_mut() {
                *v = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        ContextGenerator::Empirical { rows } => {
            if rows.is_empty() {
                return Err(Error::config("empirical context generator has no rows"));
            }
            for arm in covariates.chunks_exact_mut(d) {
                let row = &rows[rng.random_range(0..rows.len())];
                arm.copy_from_slice(row);
            }
        }
        ContextGenerator::BlockTreatment { base, noise_dims, .. } => {
            let base_row = &base[rng.random_range(0..base.len())];
            let width = base_row.len() + noise_dims;
            let mut block = Vec::with_capacity(width);
            block.extend_from_slice(base_row);
            for _ in 0..*noise_dims {
                block.push(rng.sample::<f64, _>(StandardNormal));
            }
            for (i, arm) in covariates.chunks_exact_mut(d).enumerate() {
                arm[i * width..(i + 1) * width].copy_from_slice(&block);
            }
        }
    }
    Ok(Round { t, d, covariates })
}

/// `<x, theta*> + eps` with `eps ~ Normal(0, noise_sd^2)`.
pub fn realize_reward<R: Rng + ?Sized>(
    x: &[f64],
    theta_star: &SparseParam,
    noise_sd: f64,
    rng: &mut R,
) -> Result<f64> {
    if x.len() != theta_star.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta_star.dim(),
            got: x.len(),
        });
    }
    Ok(theta_star.dot(x) + noise_sd * rng.sample::<f64, _>(StandardNormal))
}

/// Noiseless mean reward of every arm.
pub fn arm_means(round: &Round, theta_star: &SparseParam) -> Vec<f64> {
    round.arms().map(|x| theta_star.dot(x)).collect()
}

/// Instantaneous regret `max_i <X_i, theta*> - <X_chosen, theta*>` (0-based
/// `chosen`).
pub fn regret_step(round: &Round, chosen: usize, theta_star: &SparseParam) -> Result<f64> {
    if chosen >= round.k() {
        return Err(Error::invalid(format!("arm {chosen} outside [0, {})", round.k())));
    }
    let means = arm_means(round, theta_star);
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((best - means[chosen]).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Explore,
    Ucb,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Explore => "explore",
            Stage::Ucb => "ucb",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub best_mean: f64,
    pub chosen_mean: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub epoch: usize,
    pub stage: Stage,
    pub support_size: usize,
}

/// Per-period record of a run. Cumulative regret is the running sum of the
/// instantaneous regrets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: usize,
        arm: usize,
        reward: f64,
        best_mean: f64,
        chosen_mean: f64,
        epoch: usize,
        stage: Stage,
        support_size: usize,
    ) {
        let regret = (best_mean - chosen_mean).max(0.0);
        let cum_regret = self.final_regret() + regret;
        self.records.push(TraceRecord {
            t,
            arm,
            reward,
            best_mean,
            chosen_mean,
            regret,
            cum_regret,
            epoch,
            stage,
            support_size,
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.records.last().map(|r| r.cum_regret).unwrap_or(0.0)
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_regret).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(d: usize, j: usize, v: f64) -> SparseParam {
        let mut x = vec![0.0; d];
        x[j] = v;
        SparseParam::from_dense(x)
    }

    #[test]
    fn noiseless_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let theta = unit(3, 0, 2.0);
        assert_eq!(realize_reward(&[1.0, 0.0, 0.0], &theta, 0.0, &mut rng).unwrap(), 2.0);
        assert_eq!(realize_reward(&[0.0, 4.0, -1.0], &theta, 0.0, &mut rng).unwrap(), 0.0);
        assert!(realize_reward(&[0.0], &theta, 0.0, &mut rng).is_err());
    }

    #[test]
    fn regret_arithmetic() {
        let theta = unit(1, 0, 1.0);
        let round = Round::new(1, vec![vec![1.0], vec![0.25]]).unwrap();
        assert_eq!(regret_step(&round, 0, &theta).unwrap(), 0.0);
        assert_eq!(regret_step(&round, 1, &theta).unwrap(), 0.75);
        assert!(regret_step(&round, 2, &theta).is_err());
    }

    #[test]
    fn empirical_single_row() {
        let theta = SparseParam::zeros(3);
        let row = vec![1.5, -2.0, 0.25];
        let env = EnvSpec::new(
            2,
            ContextGenerator::Empirical { rows: vec![row.clone()] },
            theta,
            1.0,
            10,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let round = env.sample_round(1, &mut rng).unwrap();
        assert_eq!(round.arm(0), row.as_slice());
        assert_eq!(round.arm(1), row.as_slice());
    }

    #[test]
    fn empty_empirical_is_config_error() {
        let err = EnvSpec::new(
            2,
            ContextGenerator::Empirical { rows: vec![] },
            SparseParam::zeros(3),
            1.0,
            10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn block_layout() {
        let base: Vec<Vec<f64>> = (0..5).map(|i| (0..9).map(|j| 1.0 + (i * 9 + j) as f64).collect()).collect();
        let params: Vec<SparseParam> = (0..4).map(|i| unit(9, i, 1.0)).collect();
        let env = EnvSpec::block_treatment(base, params, 41, 1.0, 100).unwrap();
        assert_eq!(env.d(), 200);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in 1..=20 {
            let round = env.sample_round(t, &mut rng).unwrap();
            for (i, x) in round.arms().enumerate() {
                let blocks: Vec<usize> = (0..4)
                    .filter(|b| x[b * 50..(b + 1) * 50].iter().any(|v| *v != 0.0))
                    .collect();
                assert_eq!(blocks, vec![i]);
            }
            // arm i's mean is the base row against arm i's parameters
            let means = arm_means(&round, env.theta_star());
            for (i, m) in means.iter().enumerate() {
                assert_eq!(*m, round.arm(i)[i * 50 + i]);
            }
        }
    }

    #[test]
    fn period_out_of_range() {
        let env = EnvSpec::new(
            2,
            ContextGenerator::GaussianIid { scale: 1.0 },
            SparseParam::zeros(2),
            1.0,
            3,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(env.sample_round(0, &mut rng).is_err());
        assert!(env.sample_round(4, &mut rng).is_err());
    }

    #[test]
    fn trace_accumulates() {
        let mut trace = Trace::new();
        trace.push(1, 0, 0.0, 1.0, 0.5, 1, Stage::Explore, 0);
        trace.push(2, 1, 0.0, 1.0, 1.0, 1, Stage::Ucb, 0);
        trace.push(3, 1, 0.0, 2.0, 0.0, 1, Stage::Ucb, 0);
        assert_eq!(trace.cumulative(), vec![0.5, 0.5, 2.5]);
    }
}
