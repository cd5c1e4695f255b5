//! Support-restricted ridge regression and the incremental Gram kernel shared
//! by every policy and selector.
//!
//! Coordinates are 0-based throughout the crate. A *support* is a strictly
//! increasing list of coordinate indices; it is a generalized support, so it
//! may contain coordinates whose value happens to be zero.

pub(crate) mod dense;

use crate::error::{Error, Result};

/// Full refactorization cadence for [`GramState`]; bounds drift of the
/// rank-one updated Cholesky factor.
pub const REFACTOR_EVERY: usize = 256;

/// A `d`-dimensional coefficient vector paired with a generalized support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseParam {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl SparseParam {
    /// Validates the support ordering and that every off-support coordinate
    /// is exactly zero.
    pub fn new(values: Vec<f64>, support: Vec<usize>) -> Result<Self> {
        validate_support(&support, values.len())?;
        let mut on = vec![false; values.len()];
        for &j in &support {
            on[j] = true;
        }
        if values.iter().zip(&on).any(|(v, &inside)| !inside && *v != 0.0) {
            return Err(Error::invalid("nonzero value outside the declared support"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter values"));
        }
        Ok(Self { values, support })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            support: Vec::new(),
        }
    }

    /// Zero vector carrying `support` as its generalized support.
    pub fn zeros_on(dim: usize, support: Vec<usize>) -> Result<Self> {
        validate_support(&support, dim)?;
        Ok(Self {
            values: vec![0.0; dim],
            support,
        })
    }

    /// Support taken as the exact nonzero set.
    pub fn from_dense(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self { values, support }
    }

    /// Scatters `coefs[i]` into coordinate `support[i]`.
    pub fn scatter(dim: usize, support: Vec<usize>, coefs: &[f64]) -> Result<Self> {
        validate_support(&support, dim)?;
        if coefs.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: coefs.len(),
            });
        }
        let mut values = vec![0.0; dim];
        for (&j, &c) in support.iter().zip(coefs) {
            values[j] = c;
        }
        Ok(Self { values, support })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Indices whose value is nonzero.
    pub fn nonzero(&self) -> Vec<usize> {
        self.support
            .iter()
            .copied()
            .filter(|&j| self.values[j] != 0.0)
            .collect()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.values.len());
        self.support.iter().map(|&j| self.values[j] * x[j]).sum()
    }

    /// Coefficients on the support, in support order.
    pub fn restricted(&self) -> Vec<f64> {
        self.support.iter().map(|&j| self.values[j]).collect()
    }
}

/// Checks that `support` is strictly increasing with every entry `< dim`.
pub fn validate_support(support: &[usize], dim: usize) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("support indices must be strictly increasing"));
    }
    if let Some(&last) = support.last() {
        if last >= dim {
            return Err(Error::invalid(format!(
                "support index {last} out of range for dimension {dim}"
            )));
        }
    }
    Ok(())
}

/// A block of `(covariate, response)` rows sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBlock {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl DesignBlock {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut block = Self::new(dim);
        for (x, y) in rows {
            block.push(x, *y)?;
        }
        Ok(block)
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design row"));
        }
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.xs[i * self.dim..(i + 1) * self.dim], self.ys[i])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs
            .chunks_exact(self.dim.max(1))
            .zip(self.ys.iter().copied())
    }

    pub fn responses(&self) -> &[f64] {
        &self.ys
    }

    pub fn clear(&mut self) {
        self.xs.clear();
        self.ys.clear();
    }
}

/// Regularized Gram matrix `lambda I + sum [x]_S [x]_S^T` over a fixed
/// support, with its Cholesky factor and the cross moment `sum [x]_S y`.
#[derive(Debug, Clone)]
pub struct GramState {
    dim: usize,
    support: Vec<usize>,
    lambda: f64,
    gram: Vec<f64>,
    chol: Vec<f64>,
    cross: Vec<f64>,
    n: usize,
    since_refactor: usize,
    scratch: Vec<f64>,
}

impl GramState {
    pub fn new(dim: usize, support: Vec<usize>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "ridge penalty must be positive and finite, got {lambda}"
            )));
        }
        validate_support(&support, dim)?;
        let m = support.len();
        let mut gram = vec![0.0; m * m];
        let mut chol = vec![0.0; m * m];
        let root = lambda.sqrt();
        for i in 0..m {
            gram[i * m + i] = lambda;
            chol[i * m + i] = root;
        }
        Ok(Self {
            dim,
            support,
            lambda,
            gram,
            chol,
            cross: vec![0.0; m],
            n: 0,
            since_refactor: 0,
            scratch: vec![0.0; m],
        })
    }

    /// Batch construction from every row of `data`.
    pub fn from_block(data: &DesignBlock, support: Vec<usize>, lambda: f64) -> Result<Self> {
        let mut state = Self::new(data.dim(), support, lambda)?;
        let m = state.size();
        let mut xs = vec![0.0; m];
        for (x, y) in data.rows() {
            gather_into(x, &state.support, &mut xs);
            for i in 0..m {
                state.cross[i] += xs[i] * y;
                for j in 0..m {
                    state.gram[i * m + j] += xs[i] * xs[j];
                }
            }
        }
        state.n = data.count();
        state.refactor();
        Ok(state)
    }

    /// Absorbs a covariate without a response (the cross moment is unchanged).
    pub fn absorb(&mut self, x: &[f64]) -> Result<()> {
        self.check_row(x)?;
        self.absorb_unchecked(x, None);
        Ok(())
    }

    /// Absorbs a covariate together with its response.
    pub fn absorb_row(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_row(x)?;
        if !y.is_finite() {
            return Err(Error::NonFinite("response"));
        }
        self.absorb_unchecked(x, Some(y));
        Ok(())
    }

    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariate"));
        }
        Ok(())
    }

    fn absorb_unchecked(&mut self, x: &[f64], y: Option<f64>) {
        let m = self.size();
        self.n += 1;
        if m == 0 {
            return;
        }
        gather_into(x, &self.support, &mut self.scratch);
        for i in 0..m {
            let xi = self.scratch[i];
            if let Some(y) = y {
                self.cross[i] += xi * y;
            }
            let row = &mut self.gram[i * m..(i + 1) * m];
            for (g, xj) in row.iter_mut().zip(&self.scratch) {
                *g += xi * xj;
            }
        }
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        } else {
            dense::cholesky_rank_one_update(&mut self.chol, m, &mut self.scratch);
        }
    }

    fn refactor(&mut self) {
        let m = self.size();
        self.chol.copy_from_slice(&self.gram);
        let ok = dense::cholesky_in_place(&mut self.chol, m);
        // lambda > 0 keeps the smallest eigenvalue at or above lambda.
        assert!(ok, "regularized Gram matrix lost positive definiteness");
        self.since_refactor = 0;
    }

    /// `sqrt([x]_S^T gram^{-1} [x]_S)`; zero on an empty support.
    pub fn weighted_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.weighted_norm_sq_unchecked(x).sqrt())
    }

    pub(crate) fn weighted_norm_sq_unchecked(&self, x: &[f64]) -> f64 {
        let m = self.size();
        if m == 0 {
            return 0.0;
        }
        let mut z = gather(x, &self.support);
        dense::solve_lower(&self.chol, m, &mut z);
        z.iter().map(|v| v * v).sum()
    }

    /// Ridge solution `gram^{-1} cross`, scattered onto the support.
    pub fn estimate(&self) -> SparseParam {
        let m = self.size();
        let mut w = self.cross.clone();
        dense::cholesky_solve(&self.chol, m, &mut w);
        let mut values = vec![0.0; self.dim];
        for (&j, &c) in self.support.iter().zip(&w) {
            values[j] = c;
        }
        SparseParam {
            values,
            support: self.support.clone(),
        }
    }

    pub fn log_det(&self) -> f64 {
        dense::log_det_from_cholesky(&self.chol, self.size())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Row-major `|S| x |S|` regularized Gram matrix.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn cross(&self) -> &[f64] {
        &self.cross
    }

    /// Number of absorbed rows.
    pub fn count(&self) -> usize {
        self.n
    }
}

pub fn gather(x: &[f64], support: &[usize]) -> Vec<f64> {
    support.iter().map(|&j| x[j]).collect()
}

fn gather_into(x: &[f64], support: &[usize], out: &mut [f64]) {
    for (o, &j) in out.iter_mut().zip(support) {
        *o = x[j];
    }
}

/// Ridge regression with the coefficient vector constrained to `support`.
///
/// Solves `(lambda I + sum [x]_S [x]_S^T) phi = sum [x]_S y` and scatters
/// `phi` onto `support`; every other coordinate is exactly zero. An empty
/// support yields the zero vector.
pub fn ridge_restricted(data: &DesignBlock, support: &[usize], lambda: f64) -> Result<SparseParam> {
    Ok(GramState::from_block(data, support.to_vec(), lambda)?.estimate())
}

/// Free-function form of [`GramState::weighted_norm`].
pub fn weighted_norm(x: &[f64], state: &GramState) -> Result<f64> {
    state.weighted_norm(x)
}

/// Projection onto the centered l2 ball of radius `r`; the support is kept.
pub fn project_l2(theta: &SparseParam, r: f64) -> Result<SparseParam> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("projection radius must be positive, got {r}")));
    }
    let norm = theta.norm();
    if norm <= r {
        return Ok(theta.clone());
    }
    let scale = r / norm;
    let values = theta.values.iter().map(|v| v * scale).collect();
    Ok(SparseParam {
        values,
        support: theta.support.clone(),
    })
}

/// Penalized residual sum of squares `sum (y - <x, theta>)^2 + lambda |theta|^2`.
pub fn penalized_rss(data: &DesignBlock, theta: &SparseParam, lambda: f64) -> f64 {
    let rss: f64 = data
        .rows()
        .map(|(x, y)| {
            let r = y - theta.dot(x);
            r * r
        })
        .sum();
    rss + lambda * theta.values.iter().map(|v| v * v).sum::<f64>()
}
