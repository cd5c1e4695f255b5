use crate::error::{Error, Result};

/// Partition of `[1, T]` into consecutive epochs with
/// `|E_tau| = max(2^tau, n0)`; the last epoch is truncated to fit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    lengths: Vec<usize>,
    /// `boundaries[i]` is the last period (1-based) of epoch `i + 1`.
    boundaries: Vec<usize>,
}

impl EpochSchedule {
    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Number of epochs.
    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.boundaries.last().copied().unwrap_or(0)
    }

    /// 1-based epoch containing period `t`.
    pub fn epoch_of(&self, t: usize) -> Option<usize> {
        if t == 0 {
            return None;
        }
        let idx = self.boundaries.partition_point(|&b| b < t);
        (idx < self.lengths.len()).then_some(idx + 1)
    }
}

pub fn build_schedule(horizon: usize, n0: usize) -> Result<EpochSchedule> {
    if horizon == 0 || n0 == 0 {
        return Err(Error::invalid("horizon and n0 must both be at least 1"));
    }
    let mut lengths = Vec::new();
    let mut boundaries = Vec::new();
    let mut used = 0usize;
    let mut tau = 1u32;
    while used < horizon {
        let doubling = 1usize.checked_shl(tau).unwrap_or(usize::MAX);
        let len = doubling.max(n0).min(horizon - used);
        used += len;
        lengths.push(len);
        boundaries.push(used);
        tau = tau.saturating_add(1);
    }
    Ok(EpochSchedule { lengths, boundaries })
}
