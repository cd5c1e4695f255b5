//! Sparse-SupLinUCB: the epoch shell of [`crate::slucb`] with per-period
//! arm screening over disjoint data groups.

use rand::Rng;

use crate::environment::{EnvSpec, Round, Stage};
use crate::error::{Error, Result};
use crate::linops::{DesignBlock, GramState};
use crate::sim::{simulate, PeriodStatus, Policy, PolicyRng, RunReport};
use crate::slucb::{
    argmax, build_schedule, refresh_support, EpochClock, EpochSchedule, EpochSummary, SsucbParams,
    SupportSelector,
};

/// Disjoint partition of the epoch's stored periods into `zeta_max` groups,
/// each with its own restricted Gram.
#[derive(Debug, Clone)]
pub struct GroupLedger {
    periods: Vec<Vec<usize>>,
    grams: Vec<GramState>,
    blocks: Vec<DesignBlock>,
}

impl GroupLedger {
    pub fn new(dim: usize, support: &[usize], lambda: f64, zeta_max: usize) -> Result<Self> {
        if zeta_max == 0 {
            return Err(Error::invalid("zeta_max must be at least 1"));
        }
        let gram = GramState::new(dim, support.to_vec(), lambda)?;
        Ok(Self {
            periods: vec![Vec::new(); zeta_max],
            grams: vec![gram; zeta_max],
            blocks: vec![DesignBlock::new(dim); zeta_max],
        })
    }

    pub fn zeta_max(&self) -> usize {
        self.periods.len()
    }

    /// Periods of group `zeta` (1-based).
    pub fn periods(&self, zeta: usize) -> &[usize] {
        &self.periods[zeta - 1]
    }

    pub fn gram(&self, zeta: usize) -> &GramState {
        &self.grams[zeta - 1]
    }

    pub fn block(&self, zeta: usize) -> &DesignBlock {
        &self.blocks[zeta - 1]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.periods
    }

    /// Adds period `t` with row `(x, y)` to group `zeta` (1-based).
    pub fn absorb(&mut self, zeta: usize, t: usize, x: &[f64], y: f64) -> Result<()> {
        if zeta == 0 || zeta > self.zeta_max() {
            return Err(Error::Invariant {
                seed: 0,
                message: format!("group {zeta} outside 1..={}", self.zeta_max()),
            });
        }
        if self.periods.iter().any(|g| g.contains(&t)) {
            return Err(Error::Invariant {
                seed: 0,
                message: format!("period {t} already stored in a group"),
            });
        }
        self.blocks[zeta - 1].push(x, y)?;
        self.grams[zeta - 1].absorb_row(x, y)?;
        self.periods[zeta - 1].push(t);
        Ok(())
    }

    /// Checks disjointness and that each incremental Gram matches a batch
    /// rebuild from the group's rows to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let mut seen: Vec<usize> = self.periods.iter().flatten().copied().collect();
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != total {
            return Err(Error::Invariant {
                seed: 0,
                message: "screening groups overlap".into(),
            });
        }
        for (zeta, (gram, block)) in self.grams.iter().zip(&self.blocks).enumerate() {
            let batch = GramState::from_block(block, gram.support().to_vec(), gram.lambda())?;
            let drift = gram
                .gram()
                .iter()
                .zip(batch.gram())
                .chain(gram.cross().iter().zip(batch.cross()))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if drift > tol {
                return Err(Error::Invariant {
                    seed: 0,
                    message: format!("group {} Gram drifted by {drift:e}", zeta + 1),
                });
            }
        }
        Ok(())
    }
}

/// `gamma (sqrt(s / |E_prev|) + |[x]_S|_{Gamma^-1})`.
pub fn width(x: &[f64], gram: &GramState, p: &SsucbParams, prev_epoch_len: usize) -> Result<f64> {
    Ok(width_from_norm(gram.weighted_norm(x)?, p, prev_epoch_len))
}

fn width_from_norm(norm: f64, p: &SsucbParams, prev_epoch_len: usize) -> f64 {
    p.gamma * ((p.s as f64 / prev_epoch_len as f64).sqrt() + norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenCase {
    /// All alive widths are below `1/sqrt(T)`: exploit, discard the row.
    Exploit,
    /// Some alive width exceeds `2^-zeta beta`: play it and keep the row.
    Explore,
}

/// Outcome of one screening pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenDecision {
    pub arm: usize,
    /// Group (1-based) that receives the period, if any.
    pub absorb_into: Option<usize>,
    pub case: ScreenCase,
    /// Final level reached.
    pub depth: usize,
    /// Alive arms at each visited level, starting with all arms at level 1.
    pub candidates: Vec<Vec<usize>>,
    /// Width of the played arm at the final level.
    pub chosen_width: f64,
    /// `2^-depth beta`.
    pub threshold: f64,
    /// Largest alive width at the final level.
    pub max_alive_width: f64,
}

/// Per-period screening record kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenAudit {
    pub t: usize,
    pub zeta_max: usize,
    pub decision: ScreenDecision,
}

/// Walks levels `zeta = 1, 2, ...` until a play decision is reached.
pub fn screen_and_select(
    round: &Round,
    ledger: &GroupLedger,
    p: &SsucbParams,
    prev_epoch_len: usize,
) -> Result<ScreenDecision> {
    let exploit_cut = 1.0 / (p.horizon as f64).sqrt();
    let mut alive: Vec<usize> = (0..round.k()).collect();
    let mut candidates = Vec::new();
    for zeta in 1..=ledger.zeta_max() {
        candidates.push(alive.clone());
        let gram = ledger.gram(zeta);
        let theta = gram.estimate();
        let threshold = p.beta * 0.5f64.powi(zeta as i32);
        let mut widths = Vec::with_capacity(alive.len());
        let mut estimates = Vec::with_capacity(alive.len());
        for &i in &alive {
            let x = round.arm(i);
            widths.push(width(x, gram, p, prev_epoch_len)?);
            estimates.push(theta.dot(x));
        }
        let max_alive_width = widths.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        if max_alive_width <= exploit_cut {
            let pick = argmax(
                estimates
                    .iter()
                    .zip(&widths)
                    .map(|(e, w)| p.beta.min(e + w)),
            );
            return Ok(ScreenDecision {
                arm: alive[pick],
                absorb_into: None,
                case: ScreenCase::Exploit,
                depth: zeta,
                candidates,
                chosen_width: widths[pick],
                threshold,
                max_alive_width,
            });
        }
        if max_alive_width > threshold {
            let pick = argmax(widths.iter().copied());
            return Ok(ScreenDecision {
                arm: alive[pick],
                absorb_into: Some(zeta),
                case: ScreenCase::Explore,
                depth: zeta,
                candidates,
                chosen_width: widths[pick],
                threshold,
                max_alive_width,
            });
        }
        let best = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = best - 2.0 * threshold;
        alive = alive
            .iter()
            .zip(&estimates)
            .filter(|(_, e)| **e >= cut)
            .map(|(i, _)| *i)
            .collect();
    }
    Err(Error::Invariant {
        seed: 0,
        message: format!("screening passed zeta_max = {}", ledger.zeta_max()),
    })
}

pub struct Ssucb {
    params: SsucbParams,
    selector: SupportSelector,
    clock: EpochClock,
    epoch: usize,
    support: Vec<usize>,
    ledger: GroupLedger,
    collected: DesignBlock,
    prev_epoch_len: usize,
    stage: Stage,
    pending: Option<ScreenDecision>,
    t: usize,
    ucb_started: bool,
    logdet_start: Vec<f64>,
    potential: f64,
    ucb_periods: usize,
    summaries: Vec<EpochSummary>,
    audits: Vec<ScreenAudit>,
}

impl Ssucb {
    pub fn new(params: SsucbParams, selector: SupportSelector) -> Result<Self> {
        if params.n0 == 0 || !(params.lambda > 0.0) || params.zeta_max == 0 {
            return Err(Error::config("n0, zeta_max and lambda must be positive"));
        }
        let schedule = build_schedule(params.horizon, params.n0)?;
        let support = selector.initial_support();
        let ledger = GroupLedger::new(params.d, &support, params.lambda, params.zeta_max)?;
        Ok(Self {
            clock: EpochClock::new(schedule, params.n0),
            epoch: 1,
            collected: DesignBlock::new(params.d),
            prev_epoch_len: params.n0,
            support,
            ledger,
            selector,
            stage: Stage::Explore,
            pending: None,
            t: 0,
            ucb_started: false,
            logdet_start: Vec::new(),
            potential: 0.0,
            ucb_periods: 0,
            summaries: Vec::new(),
            audits: Vec::new(),
            params,
        })
    }

    pub fn params(&self) -> &SsucbParams {
        &self.params
    }

    pub fn ledger(&self) -> &GroupLedger {
        &self.ledger
    }

    pub fn schedule(&self) -> &EpochSchedule {
        &self.clock.schedule
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    fn logdet_gain(&self) -> f64 {
        if !self.ucb_started {
            return 0.0;
        }
        (1..=self.ledger.zeta_max())
            .map(|z| self.ledger.gram(z).log_det() - self.logdet_start[z - 1])
            .sum()
    }

    fn close_epoch(&mut self, rng: &mut PolicyRng) -> Result<()> {
        let mut summary = EpochSummary {
            index: self.epoch,
            len: self.clock.epoch_len(),
            support: self.support.clone(),
            next_support: None,
            solver: None,
            ucb_periods: self.ucb_periods,
            potential_sum: self.potential,
            logdet_gain: self.logdet_gain(),
            groups: self.ledger.groups().to_vec(),
        };
        if self.clock.is_last_epoch() {
            self.summaries.push(summary);
            return Ok(());
        }
        let refresh = refresh_support(
            &self.selector,
            &self.collected,
            &self.support,
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
        self.epoch = self.clock.tau();
        self.support = refresh.support;
        self.ledger = GroupLedger::new(
            self.params.d,
            &self.support,
            self.params.lambda,
            self.params.zeta_max,
        )?;
        self.prev_epoch_len = self.collected.count();
        self.collected = DesignBlock::new(self.params.d);
        self.ucb_started = false;
        self.potential = 0.0;
        self.ucb_periods = 0;
        Ok(())
    }
}

impl Policy for Ssucb {
    fn choose(&mut self, round: &Round, rng: &mut PolicyRng) -> Result<usize> {
        self.t = round.t;
        if self.clock.exploring() {
            self.stage = Stage::Explore;
            self.pending = None;
            return Ok(rng.random_range(0..round.k()));
        }
        self.stage = Stage::Ucb;
        if !self.ucb_started {
            self.ucb_started = true;
            self.logdet_start = (1..=self.ledger.zeta_max())
                .map(|z| self.ledger.gram(z).log_det())
                .collect();
        }
        let decision = screen_and_select(round, &self.ledger, &self.params, self.prev_epoch_len)?;
        let arm = decision.arm;
        self.pending = Some(decision);
        Ok(arm)
    }

    fn observe(&mut self, round: &Round, arm: usize, reward: f64, rng: &mut PolicyRng) -> Result<()> {
        let x = round.arm(arm);
        match self.pending.take() {
            None => {
                let zeta = self.clock.pos % self.ledger.zeta_max() + 1;
                self.ledger.absorb(zeta, round.t, x, reward)?;
            }
            Some(decision) => {
                if let Some(zeta) = decision.absorb_into {
                    let w2 = self.ledger.gram(zeta).weighted_norm_sq_unchecked(x);
                    self.potential += w2.ln_1p();
                    self.ledger.absorb(zeta, round.t, x, reward)?;
                }
                self.ucb_periods += 1;
                self.audits.push(ScreenAudit {
                    t: round.t,
                    zeta_max: self.ledger.zeta_max(),
                    decision,
                });
            }
        }
        self.collected.push(x, reward)?;
        if self.clock.tick() {
            self.close_epoch(rng)?;
        }
        Ok(())
    }

    fn status(&self) -> PeriodStatus {
        PeriodStatus {
            epoch: self.epoch,
            stage: self.stage,
            support_size: self.support.len(),
        }
    }

    fn epochs(&self) -> &[EpochSummary] {
        &self.summaries
    }

    fn take_screen_audits(&mut self) -> Vec<ScreenAudit> {
        std::mem::take(&mut self.audits)
    }
}

pub fn run_ssucb(
    env: &EnvSpec,
    params: &SsucbParams,
    selector: &SupportSelector,
    seed: u64,
) -> Result<RunReport> {
    if params.d != env.d() || params.k != env.k() || params.horizon != env.horizon() {
        return Err(Error::config("policy parameters do not match the environment"));
    }
    let mut policy = Ssucb::new(params.clone(), selector.clone())?;
    simulate(env, &mut policy, seed)
}
