//! Sparse linear contextual bandits.
//!
//! Two epoch-based policies, [`slucb::Slucb`] and [`ssucb::Ssucb`], explore
//! uniformly at the start of each doubling epoch, then run a UCB rule on the
//! support recovered by best subset selection on the previous epoch's data.

// `!(x > 0.0)` is the intended NaN-rejecting form throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod harness;
pub mod linops;
pub mod selectors;
pub mod sim;
pub mod slucb;
pub mod ssucb;

pub use error::{Error, Result};
