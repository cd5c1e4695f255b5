//! Sparse-LinUCB: doubling epochs, each opened by `n0` periods of uniform
//! exploration, followed by a ridge UCB restricted to the support recovered
//! at the end of the previous epoch.

mod schedule;
mod shell;
mod tuning;

pub use schedule::{build_schedule, EpochSchedule};
pub use shell::{EpochSummary, SupportSelector};
pub(crate) use shell::{refresh_support, EpochClock};
pub use tuning::{
    alpha_formula, beta_formula, compute_ssucb_tuning, compute_tuning, gamma_formula, log_term,
    n0_formula, zeta_max, ModelConstants, SlucbParams, SsucbParams,
};

use rand::Rng;

use crate::environment::{EnvSpec, Round, Stage};
use crate::error::{Error, Result};
use crate::linops::{DesignBlock, GramState, SparseParam};
use crate::sim::{simulate, PeriodStatus, Policy, PolicyRng, RunReport};

/// Loop state of one epoch.
#[derive(Debug, Clone)]
pub struct EpochState {
    /// 1-based epoch index.
    pub epoch: usize,
    /// Support recovered at the end of the previous epoch.
    pub support: Vec<usize>,
    /// Regularized Gram over this epoch's rows restricted to `support`.
    pub gram: GramState,
    /// Current estimate: the ridge fit during the UCB stage, the previous
    /// epoch's selection estimate during exploration.
    pub theta_hat: SparseParam,
    /// Length of the previous epoch (`n0` before the first epoch ends).
    pub prev_epoch_len: usize,
    /// Every row collected so far in this epoch.
    pub collected: DesignBlock,
}

/// Optimistic score
/// `min(beta, <x, theta_hat> + alpha (sigma sqrt(L / |E_prev|) + |[x]_S|_{Gamma^-1}))`
/// with `L = ln(k T d / delta)`.
pub fn ucb_band(x: &[f64], state: &EpochState, p: &SlucbParams) -> Result<f64> {
    let norm = state.gram.weighted_norm(x)?;
    Ok(band_from_parts(state.theta_hat.dot(x), norm, state.prev_epoch_len, p))
}

fn band_from_parts(estimate: f64, norm: f64, prev_len: usize, p: &SlucbParams) -> f64 {
    let bias = p.sigma * (p.log_term() / prev_len as f64).sqrt();
    p.beta.min(estimate + p.alpha * (bias + norm))
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub struct Slucb {
    params: SlucbParams,
    selector: SupportSelector,
    clock: EpochClock,
    state: EpochState,
    stage: Stage,
    ucb_started: bool,
    logdet_start: f64,
    potential: f64,
    ucb_periods: usize,
    summaries: Vec<EpochSummary>,
}

impl Slucb {
    pub fn new(params: SlucbParams, selector: SupportSelector) -> Result<Self> {
        if params.n0 == 0 || !(params.lambda > 0.0) {
            return Err(Error::config("n0 must be positive and lambda > 0"));
        }
        let schedule = build_schedule(params.horizon, params.n0)?;
        let support = selector.initial_support();
        let gram = GramState::new(params.d, support.clone(), params.lambda)?;
        let state = EpochState {
            epoch: 1,
            theta_hat: SparseParam::zeros_on(params.d, support.clone())?,
            support,
            gram,
            prev_epoch_len: params.n0,
            collected: DesignBlock::new(params.d),
        };
        Ok(Self {
            clock: EpochClock::new(schedule, params.n0),
            params,
            selector,
            state,
            stage: Stage::Explore,
            ucb_started: false,
            logdet_start: 0.0,
            potential: 0.0,
            ucb_periods: 0,
            summaries: Vec::new(),
        })
    }

    pub fn params(&self) -> &SlucbParams {
        &self.params
    }

    pub fn state(&self) -> &EpochState {
        &self.state
    }

    pub fn schedule(&self) -> &EpochSchedule {
        &self.clock.schedule
    }

    /// Bands of every arm under the current state.
    pub fn bands(&self, round: &Round) -> Result<Vec<f64>> {
        round.arms().map(|x| ucb_band(x, &self.state, &self.params)).collect()
    }

    fn close_epoch(&mut self, rng: &mut PolicyRng) -> Result<()> {
        let logdet_gain = if self.ucb_started {
            self.state.gram.log_det() - self.logdet_start
        } else {
            0.0
        };
        let mut summary = EpochSummary {
            index: self.state.epoch,
            len: self.clock.epoch_len(),
            support: self.state.support.clone(),
            next_support: None,
            solver: None,
            ucb_periods: self.ucb_periods,
            potential_sum: self.potential,
            logdet_gain,
            groups: Vec::new(),
        };
        if self.clock.is_last_epoch() {
            self.summaries.push(summary);
            return Ok(());
        }
        let refresh = refresh_support(
            &self.selector,
            &self.state.collected,
            &self.state.support,
            self.clock.tau(),
            self.params.s,
            self.params.lambda,
            self.params.radius,
            rng,
        )?;
        summary.next_support = Some(refresh.support.clone());
        summary.solver = Some(refresh.solver);
        self.summaries.push(summary);

        self.clock.next_epoch();
        self.state = EpochState {
            epoch: self.clock.tau(),
            gram: GramState::new(self.params.d, refresh.support.clone(), self.params.lambda)?,
            support: refresh.support,
            theta_hat: refresh.estimate,
            prev_epoch_len: self.state.collected.count(),
            collected: DesignBlock::new(self.params.d),
        };
        self.ucb_started = false;
        self.potential = 0.0;
        self.ucb_periods = 0;
        Ok(())
    }
}

impl Policy for Slucb {
    fn choose(&mut self, round: &Round, rng: &mut PolicyRng) -> Result<usize> {
        if self.clock.exploring() {
            self.stage = Stage::Explore;
            return Ok(rng.random_range(0..round.k()));
        }
        self.stage = Stage::Ucb;
        if !self.ucb_started {
            self.ucb_started = true;
            self.logdet_start = self.state.gram.log_det();
        }
        self.state.theta_hat = self.state.gram.estimate();
        let bands = self.bands(round)?;
        debug_assert!(bands.iter().all(|b| *b <= self.params.beta));
        Ok(argmax(bands))
    }

    fn observe(&mut self, round: &Round, arm: usize, reward: f64, rng: &mut PolicyRng) -> Result<()> {
        let x = round.arm(arm);
        if self.stage == Stage::Ucb {
            let w2 = self.state.gram.weighted_norm_sq_unchecked(x);
            self.potential += w2.ln_1p();
            self.ucb_periods += 1;
        }
        self.state.collected.push(x, reward)?;
        self.state.gram.absorb_row(x, reward)?;
        if self.clock.tick() {
            self.close_epoch(rng)?;
        }
        Ok(())
    }

    fn status(&self) -> PeriodStatus {
        PeriodStatus {
            epoch: self.state.epoch,
            stage: self.stage,
            support_size: self.state.support.len(),
        }
    }

    fn epochs(&self) -> &[EpochSummary] {
        &self.summaries
    }
}

/// Runs Sparse-LinUCB on `env` with the given seed.
pub fn run_slucb(
    env: &EnvSpec,
    params: &SlucbParams,
    selector: &SupportSelector,
    seed: u64,
) -> Result<RunReport> {
    if params.d != env.d() || params.k != env.k() || params.horizon != env.horizon() {
        return Err(Error::config("policy parameters do not match the environment"));
    }
    let mut policy = Slucb::new(params.clone(), selector.clone())?;
    simulate(env, &mut policy, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64) -> SlucbParams {
        SlucbParams {
            n0: 4,
            alpha,
            beta,
            lambda: 1.0,
            s: 1,
            radius: 10.0,
            sigma: 1.0,
            nu: 1.0,
            rho: 1.0,
            delta: 0.1,
            c_scale: 1.0,
            k: 2,
            horizon: 20,
            d: 2,
            tau_tilde: 3,
        }
    }

    fn state(theta: Vec<f64>, lambda: f64, prev: usize) -> EpochState {
        EpochState {
            epoch: 2,
            support: vec![0, 1],
            gram: GramState::new(2, vec![0, 1], lambda).unwrap(),
            theta_hat: SparseParam::new(theta, vec![0, 1]).unwrap(),
            prev_epoch_len: prev,
            collected: DesignBlock::new(2),
        }
    }

    #[test]
    fn band_is_capped() {
        let p = params(1.0, 5.0);
        let st = state(vec![100.0, 0.0], 1.0, 10);
        assert_eq!(ucb_band(&[1.0, 0.0], &st, &p).unwrap(), 5.0);
    }

    #[test]
    fn band_closed_form_pieces() {
        let p = params(3.0, 1e9);
        let lambda = 2.0;
        let st = state(vec![0.0, 0.0], lambda, usize::MAX);
        let band = ucb_band(&[lambda.sqrt(), 0.0], &st, &p).unwrap();
        // the bias term vanishes as |E_prev| grows
        assert!((band - 3.0).abs() < 1e-8);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax([0.0, 0.0]), 0);
    }
}
