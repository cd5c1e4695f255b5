use super::{Moments, SelectionProblem, SelectionResult, SolverTag};
use crate::error::{Error, Result};
use crate::linops::DesignBlock;

#[derive(Debug, Clone, Copy)]
pub struct IhtOptions {
    /// Hard-threshold level.
    pub s: usize,
    /// Gradient step; `None` uses `1 / L` with `L` from 20 power iterations.
    pub step: Option<f64>,
    pub iters: usize,
    pub lambda: f64,
    /// Projection radius applied after the final ridge refit.
    pub radius: f64,
}

/// `1 / L` where `L` estimates the largest eigenvalue of `X^T X + lambda I`
/// from 20 power iterations started at the all-ones vector.
pub fn power_iteration_step(moments: &Moments, lambda: f64) -> f64 {
    let d = moments.dim();
    if d == 0 {
        return 1.0 / lambda;
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut estimate = lambda;
    for _ in 0..20 {
        let mut next: Vec<f64> = (0..d)
            .map(|i| super::dense::dot(moments.xtx_row(i), &v) + lambda * v[i])
            .collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        estimate = norm;
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
    }
    1.0 / estimate
}

/// Iterative hard thresholding on `1/2 RSS + lambda/2 |theta|^2`: a gradient
/// step followed by keeping the `s` largest-magnitude coordinates (lowest
/// index on ties). The recovered support is refit by restricted ridge.
/// `converged` is false when the support changed in the last iteration.
pub fn iht(data: &DesignBlock, opts: &IhtOptions) -> Result<SelectionResult> {
    let d = data.dim();
    if opts.s > d {
        return Err(Error::invalid(format!("threshold {} exceeds dimension {d}", opts.s)));
    }
    let moments = Moments::from_block(data);
    let step = match opts.step {
        Some(step) if step > 0.0 => step,
        Some(step) => return Err(Error::invalid(format!("step must be positive, got {step}"))),
        None => power_iteration_step(&moments, opts.lambda),
    };
    let mut theta = vec![0.0; d];
    let mut support: Vec<usize> = Vec::new();
    let mut converged = true;
    let mut order: Vec<usize> = (0..d).collect();
    for iteration in 1..=opts.iters {
        let grad: Vec<f64> = (0..d)
            .map(|i| {
                super::dense::dot(moments.xtx_row(i), &theta) + opts.lambda * theta[i]
                    - moments.xty()[i]
            })
            .collect();
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= step * g;
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Divergence { iteration });
        }
        order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()).then(a.cmp(&b)));
        let mut next: Vec<usize> = order[..opts.s].to_vec();
        next.sort_unstable();
        let mut keep = vec![false; d];
        for &j in &next {
            keep[j] = true;
        }
        for (j, t) in theta.iter_mut().enumerate() {
            if !keep[j] {
                *t = 0.0;
            }
        }
        converged = next == support;
        support = next;
    }
    let problem = SelectionProblem {
        data,
        k_max: opts.s.max(1),
        must_include: Vec::new(),
        lambda: opts.lambda,
        radius: opts.radius,
    };
    SelectionResult::refit(&problem, &moments, support, SolverTag::Iht, converged)
}
