//! Epoch machinery shared by both policies: the period clock and the
//! end-of-epoch support refresh.

use rand::RngCore;

use super::schedule::EpochSchedule;
use crate::error::{Error, Result};
use crate::linops::{project_l2, DesignBlock, GramState, SparseParam};
use crate::selectors::{
    bss_exact, bss_heuristic, count_candidates, iht, tune_lasso_for_sparsity, HeuristicOptions,
    IhtOptions, SelectionProblem, SelectionResult, SolverTag,
};

/// How the support is refreshed at the end of an epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportSelector {
    /// Exhaustive enumeration; errors when the budget is exceeded.
    Exact { budget: u128 },
    Heuristic { restarts: usize },
    /// Exact when the budget admits, heuristic otherwise.
    Auto { budget: u128, restarts: usize },
    /// Lasso tuned to roughly `s` coordinates; not nested across epochs.
    Lasso,
    /// IHT with threshold `s`; not nested across epochs.
    Iht { iters: usize },
    /// The true support, fixed from the first epoch.
    Oracle { support: Vec<usize> },
}

impl SupportSelector {
    pub fn initial_support(&self) -> Vec<usize> {
        match self {
            SupportSelector::Oracle { support } => support.clone(),
            _ => Vec::new(),
        }
    }

    /// Whether supports must nest across epochs with `|S_tau| <= tau s`.
    pub fn is_nested(&self) -> bool {
        matches!(
            self,
            SupportSelector::Exact { .. } | SupportSelector::Heuristic { .. } | SupportSelector::Auto { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    /// 1-based epoch index.
    pub index: usize,
    pub len: usize,
    pub support: Vec<usize>,
    /// Support chosen at the end of the epoch; `None` for the final epoch.
    pub next_support: Option<Vec<usize>>,
    pub solver: Option<SolverTag>,
    pub ucb_periods: usize,
    /// Sum over absorbed UCB-stage rows of `ln(1 + |x|^2_{Gamma^{-1}})`.
    pub potential_sum: f64,
    /// `ln det Gamma_end - ln det Gamma_start` over the same rows.
    pub logdet_gain: f64,
    /// Screening groups at epoch end (period indices); empty for SLUCB.
    pub groups: Vec<Vec<usize>>,
}

/// Position within the epoch schedule.
#[derive(Debug, Clone)]
pub(crate) struct EpochClock {
    pub schedule: EpochSchedule,
    /// 0-based epoch index.
    pub epoch: usize,
    /// Periods already completed in the current epoch.
    pub pos: usize,
    pub n0: usize,
}

impl EpochClock {
    pub fn new(schedule: EpochSchedule, n0: usize) -> Self {
        Self {
            schedule,
            epoch: 0,
            pos: 0,
            n0,
        }
    }

    pub fn tau(&self) -> usize {
        self.epoch + 1
    }

    pub fn epoch_len(&self) -> usize {
        self.schedule.lengths().get(self.epoch).copied().unwrap_or(0)
    }

    pub fn exploring(&self) -> bool {
        self.pos < self.n0
    }

    pub fn is_last_epoch(&self) -> bool {
        self.epoch + 1 >= self.schedule.len()
    }

    /// Marks the current period done; returns true when it closed the epoch.
    pub fn tick(&mut self) -> bool {
        self.pos += 1;
        self.pos >= self.epoch_len()
    }

    pub fn next_epoch(&mut self) {
        self.epoch += 1;
        self.pos = 0;
    }
}

pub(crate) struct Refresh {
    pub support: Vec<usize>,
    pub estimate: SparseParam,
    pub solver: SolverTag,
}

/// End-of-epoch support refresh on all of the epoch's rows.
#[allow(clippy::too_many_arguments)]
pub(crate) fn refresh_support(
    selector: &SupportSelector,
    data: &DesignBlock,
    previous: &[usize],
    tau: usize,
    s: usize,
    lambda: f64,
    radius: f64,
    rng: &mut dyn RngCore,
) -> Result<Refresh> {
    let k_max = (tau * s).min(data.dim()).max(previous.len()).max(1);
    let nested = || SelectionProblem::new(data, k_max, previous.to_vec(), lambda, radius);
    let result: SelectionResult = match selector {
        SupportSelector::Exact { budget } => bss_exact(&nested()?, *budget)?,
        SupportSelector::Heuristic { restarts } => bss_heuristic(
            &nested()?,
            HeuristicOptions {
                restarts: *restarts,
                seed: rng.next_u64(),
            },
        )?,
        SupportSelector::Auto { budget, restarts } => {
            let problem = nested()?;
            let candidates = count_candidates(data.dim(), previous.len(), problem.effective_k());
            if candidates <= *budget {
                bss_exact(&problem, *budget)?
            } else {
                bss_heuristic(
                    &problem,
                    HeuristicOptions {
                        restarts: *restarts,
                        seed: rng.next_u64(),
                    },
                )?
            }
        }
        SupportSelector::Lasso => {
            let tuned = tune_lasso_for_sparsity(data, s.min(data.dim()))?;
            let support = tuned.estimate.nonzero();
            let fit = GramState::from_block(data, support.clone(), lambda)?.estimate();
            return Ok(Refresh {
                support,
                estimate: project_l2(&fit, radius)?,
                solver: SolverTag::Lasso,
            });
        }
        SupportSelector::Iht { iters } => iht(
            data,
            &IhtOptions {
                s: s.min(data.dim()),
                step: None,
                iters: *iters,
                lambda,
                radius,
            },
        )?,
        SupportSelector::Oracle { support } => {
            let fit = GramState::from_block(data, support.clone(), lambda)?.estimate();
            return Ok(Refresh {
                support: support.clone(),
                estimate: project_l2(&fit, radius)?,
                solver: SolverTag::Oracle,
            });
        }
    };
    if selector.is_nested() {
        let nested_ok = previous.iter().all(|j| result.support.binary_search(j).is_ok());
        if !nested_ok || result.support.len() > tau * s {
            return Err(Error::Invariant {
                seed: 0,
                message: format!(
                    "epoch {tau}: support {:?} does not extend {:?} within size {}",
                    result.support,
                    previous,
                    tau * s
                ),
            });
        }
    }
    Ok(Refresh {
        support: result.support,
        estimate: result.estimate,
        solver: result.solver,
    })
}
