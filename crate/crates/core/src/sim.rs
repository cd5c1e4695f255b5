//! Drives a policy through an environment and records the trace.
//!
//! Each run owns three independent ChaCha streams derived from one seed:
//! contexts and noise, policy randomness, and problem generation. Context
//! and noise draws never depend on the policy, so runs of different policies
//! with the same seed see the same covariates and noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::environment::{arm_means, EnvSpec, Round, Stage, Trace};
use crate::error::{Error, Result};
use crate::slucb::EpochSummary;
use crate::ssucb::ScreenAudit;

pub type PolicyRng = ChaCha8Rng;

const ENV_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const PROBLEM_STREAM: u64 = 2;

pub fn env_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, ENV_STREAM)
}

pub fn policy_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, POLICY_STREAM)
}

/// Stream reserved for drawing problem instances (e.g. `theta*`).
pub fn problem_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, PROBLEM_STREAM)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Bookkeeping reported by a policy for the period it just chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodStatus {
    pub epoch: usize,
    pub stage: Stage,
    pub support_size: usize,
}

pub trait Policy {
    fn choose(&mut self, round: &Round, rng: &mut PolicyRng) -> Result<usize>;

    fn observe(&mut self, round: &Round, arm: usize, reward: f64, rng: &mut PolicyRng) -> Result<()>;

    /// Status of the most recent `choose`.
    fn status(&self) -> PeriodStatus;

    fn epochs(&self) -> &[EpochSummary] {
        &[]
    }

    fn take_screen_audits(&mut self) -> Vec<ScreenAudit> {
        Vec::new()
    }
}

/// Uniformly random arm every period.
#[derive(Debug, Default, Clone)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn choose(&mut self, round: &Round, rng: &mut PolicyRng) -> Result<usize> {
        use rand::Rng;
        Ok(rng.random_range(0..round.k()))
    }

    fn observe(&mut self, _: &Round, _: usize, _: f64, _: &mut PolicyRng) -> Result<()> {
        Ok(())
    }

    fn status(&self) -> PeriodStatus {
        PeriodStatus {
            epoch: 1,
            stage: Stage::Explore,
            support_size: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub trace: Trace,
    pub epochs: Vec<EpochSummary>,
    pub screening: Vec<ScreenAudit>,
}

/// Runs `policy` for the full horizon of `env`. Invariant violations raised
/// inside the policy are re-tagged with `seed`.
pub fn simulate<P: Policy + ?Sized>(env: &EnvSpec, policy: &mut P, seed: u64) -> Result<RunReport> {
    let mut erng = env_rng(seed);
    let mut prng = policy_rng(seed);
    let mut trace = Trace::new();
    let theta = env.theta_star();
    let retag = |e: Error| match e {
        Error::Invariant { message, .. } => Error::Invariant { seed, message },
        other => other,
    };
    for t in 1..=env.horizon() {
        let round = env.sample_round(t, &mut erng)?;
        let noise = env.draw_noise(&mut erng);
        let arm = policy.choose(&round, &mut prng).map_err(retag)?;
        if arm >= round.k() {
            return Err(Error::Invariant {
                seed,
                message: format!("policy chose arm {arm} of {}", round.k()),
            });
        }
        let status = policy.status();
        let means = arm_means(&round, theta);
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reward = means[arm] + noise;
        policy.observe(&round, arm, reward, &mut prng).map_err(retag)?;
        trace.push(
            t,
            arm,
            reward,
            best,
            means[arm],
            status.epoch,
            status.stage,
            status.support_size,
        );
    }
    Ok(RunReport {
        seed,
        trace,
        epochs: policy.epochs().to_vec(),
        screening: policy.take_screen_audits(),
    })
}
