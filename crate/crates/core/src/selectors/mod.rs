//! Support-recovery engines: best subset selection (exact and heuristic)
//! under a nesting constraint, plus the IHT and Lasso baselines.

mod bss;
mod iht;
mod lasso;

pub use bss::{bss_exact, bss_heuristic, count_candidates, HeuristicOptions, DEFAULT_BUDGET};
pub use iht::{iht, power_iteration_step, IhtOptions};
pub use lasso::{lasso_cd, lasso_max_penalty, tune_lasso_for_sparsity, LassoFit, LassoTuning};

use std::fmt;

use crate::error::{Error, Result};
use crate::linops::{dense, project_l2, validate_support, DesignBlock, GramState, SparseParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    Exact,
    LocalSwap,
    Iht,
    Lasso,
    Oracle,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverTag::Exact => "exact",
            SolverTag::LocalSwap => "local_swap",
            SolverTag::Iht => "iht",
            SolverTag::Lasso => "lasso",
            SolverTag::Oracle => "oracle",
        })
    }
}

/// Best-subset problem: minimize `RSS + lambda |theta|^2` over coefficient
/// vectors whose generalized support contains `must_include` and has at most
/// `k_max` entries, then project onto the `radius` ball.
#[derive(Debug, Clone)]
pub struct SelectionProblem<'a> {
    pub data: &'a DesignBlock,
    pub k_max: usize,
    pub must_include: Vec<usize>,
    pub lambda: f64,
    pub radius: f64,
}

impl<'a> SelectionProblem<'a> {
    pub fn new(
        data: &'a DesignBlock,
        k_max: usize,
        must_include: Vec<usize>,
        lambda: f64,
        radius: f64,
    ) -> Result<Self> {
        let problem = Self {
            data,
            k_max,
            must_include,
            lambda,
            radius,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        validate_support(&self.must_include, self.data.dim())?;
        if self.k_max == 0 {
            return Err(Error::Infeasible("k_max must be positive".into()));
        }
        if self.must_include.len() > self.k_max {
            return Err(Error::Infeasible(format!(
                "{} forced coordinates exceed the cardinality cap {}",
                self.must_include.len(),
                self.k_max
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::invalid("ridge penalty must be positive"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::invalid("projection radius must be positive"));
        }
        Ok(())
    }

    /// Cardinality cap clipped to the ambient dimension.
    pub fn effective_k(&self) -> usize {
        self.k_max.min(self.data.dim())
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub estimate: SparseParam,
    pub support: Vec<usize>,
    /// Penalized RSS of the ridge fit on `support`, before projection.
    pub objective: f64,
    pub solver: SolverTag,
    /// False when an iterative solver stopped before its convergence test
    /// was met.
    pub converged: bool,
}

impl SelectionResult {
    /// Ridge refit on `support`, objective evaluation and projection. Panics
    /// if the support violates the problem's constraints.
    pub(crate) fn refit(
        problem: &SelectionProblem<'_>,
        moments: &Moments,
        mut support: Vec<usize>,
        solver: SolverTag,
        converged: bool,
    ) -> Result<Self> {
        support.sort_unstable();
        assert!(
            problem.must_include.iter().all(|j| support.binary_search(j).is_ok()),
            "selected support drops a forced coordinate"
        );
        assert!(
            support.len() <= problem.k_max,
            "selected support exceeds the cardinality cap"
        );
        let fit = GramState::from_block(problem.data, support.clone(), problem.lambda)?.estimate();
        let objective = moments.objective(&support, problem.lambda);
        let estimate = project_l2(&fit, problem.radius)?;
        debug_assert!(estimate.norm() <= problem.radius * (1.0 + 1e-12));
        Ok(Self {
            estimate,
            support,
            objective,
            solver,
            converged,
        })
    }
}

/// Sufficient statistics `X^T X`, `X^T y`, `y^T y` of a design block.
#[derive(Debug, Clone)]
pub struct Moments {
    dim: usize,
    xtx: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
}

impl Moments {
    pub fn from_block(data: &DesignBlock) -> Self {
        let d = data.dim();
        let mut xtx = vec![0.0; d * d];
        let mut xty = vec![0.0; d];
        let mut yty = 0.0;
        for (x, y) in data.rows() {
            yty += y * y;
            for i in 0..d {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                xty[i] += xi * y;
                let row = &mut xtx[i * d..(i + 1) * d];
                for (g, xj) in row.iter_mut().zip(x) {
                    *g += xi * xj;
                }
            }
        }
        Self { dim: d, xtx, xty, yty }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub(crate) fn g(&self, i: usize, j: usize) -> f64 {
        self.xtx[i * self.dim + j]
    }

    pub(crate) fn xty(&self) -> &[f64] {
        &self.xty
    }

    pub(crate) fn yty(&self) -> f64 {
        self.yty
    }

    pub(crate) fn xtx_row(&self, i: usize) -> &[f64] {
        &self.xtx[i * self.dim..(i + 1) * self.dim]
    }

    /// Minimal penalized RSS over coefficients supported on `support`:
    /// `y^T y - b_S^T (G_SS + lambda I)^{-1} b_S`.
    pub fn objective(&self, support: &[usize], lambda: f64) -> f64 {
        let m = support.len();
        if m == 0 {
            return self.yty;
        }
        let mut a = vec![0.0; m * m];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[r * m + c] = self.g(i, j);
            }
            a[r * m + r] += lambda;
        }
        let ok = dense::cholesky_in_place(&mut a, m);
        assert!(ok, "regularized Gram matrix must be positive definite");
        let mut z: Vec<f64> = support.iter().map(|&j| self.xty[j]).collect();
        dense::solve_lower(&a, m, &mut z);
        self.yty - z.iter().map(|v| v * v).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::penalized_rss;
    use crate::linops::ridge_restricted;

    #[test]
    fn moments_objective_matches_direct_rss() {
        let rows: Vec<(Vec<f64>, f64)> = (0..12)
            .map(|i| {
                let f = i as f64;
                (vec![f.sin(), (1.3 * f).cos(), 0.1 * f, 1.0], f.cos() + 0.5)
            })
            .collect();
        let data = DesignBlock::from_rows(4, &rows).unwrap();
        let m = Moments::from_block(&data);
        for support in [vec![], vec![1], vec![0, 2], vec![0, 1, 2, 3]] {
            let theta = ridge_restricted(&data, &support, 0.7).unwrap();
            let direct = penalized_rss(&data, &theta, 0.7);
            let fast = m.objective(&support, 0.7);
            assert!((direct - fast).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn problem_validation() {
        let data = DesignBlock::new(4);
        assert!(SelectionProblem::new(&data, 1, vec![0, 1], 1.0, 1.0).is_err());
        assert!(SelectionProblem::new(&data, 0, vec![], 1.0, 1.0).is_err());
        assert!(SelectionProblem::new(&data, 2, vec![5], 1.0, 1.0).is_err());
        assert!(SelectionProblem::new(&data, 2, vec![1], 0.0, 1.0).is_err());
        let p = SelectionProblem::new(&data, 9, vec![1], 1.0, 1.0).unwrap();
        assert_eq!(p.effective_k(), 4);
    }
}
