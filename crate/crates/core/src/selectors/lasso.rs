use super::Moments;
use crate::error::{Error, Result};
use crate::linops::{DesignBlock, SparseParam};

const TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 10_000;
const BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub estimate: SparseParam,
    pub converged: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct LassoTuning {
    pub l1: f64,
    pub estimate: SparseParam,
    pub converged: bool,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[cfg(debug_assertions)]
fn objective(m: &Moments, theta: &[f64], gtheta: &[f64], l1: f64) -> f64 {
    let quad: f64 = theta.iter().zip(gtheta).map(|(t, g)| t * g).sum();
    let lin: f64 = theta.iter().zip(m.xty()).map(|(t, b)| t * b).sum();
    let pen: f64 = theta.iter().map(|t| t.abs()).sum();
    0.5 * (m.yty() - 2.0 * lin + quad) + l1 * pen
}

/// Cyclic coordinate descent on `1/2 RSS + l1 |theta|_1`, warm-started from
/// `theta`. Stops once the largest coordinate change in a sweep is below
/// `1e-8` or after `10^4` sweeps.
fn coordinate_descent(m: &Moments, l1: f64, theta: &mut [f64]) -> (bool, usize) {
    let d = m.dim();
    let mut gtheta: Vec<f64> = (0..d).map(|i| super::dense::dot(m.xtx_row(i), theta)).collect();
    #[cfg(debug_assertions)]
    let mut last = objective(m, theta, &gtheta, l1);
    for sweep in 1..=MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            let gjj = m.g(j, j);
            if gjj <= 0.0 {
                if theta[j] != 0.0 {
                    let delta = -theta[j];
                    theta[j] = 0.0;
                    for (gt, gr) in gtheta.iter_mut().zip(m.xtx_row(j)) {
                        *gt += delta * gr;
                    }
                }
                continue;
            }
            let partial = m.xty()[j] - gtheta[j] + gjj * theta[j];
            let next = soft_threshold(partial, l1) / gjj;
            let delta = next - theta[j];
            if delta != 0.0 {
                theta[j] = next;
                for (gt, gr) in gtheta.iter_mut().zip(m.xtx_row(j)) {
                    *gt += delta * gr;
                }
                max_delta = max_delta.max(delta.abs());
            }
        }
        #[cfg(debug_assertions)]
        {
            let now = objective(m, theta, &gtheta, l1);
            debug_assert!(
                now <= last + 1e-9 * last.abs().max(1.0),
                "lasso objective increased: {last} -> {now}"
            );
            last = now;
        }
        if max_delta < TOL {
            return (true, sweep);
        }
    }
    (false, MAX_SWEEPS)
}

/// Lasso by cyclic coordinate descent. The returned support is the exact
/// nonzero set.
pub fn lasso_cd(data: &DesignBlock, l1: f64) -> Result<LassoFit> {
    if !(l1 > 0.0) {
        return Err(Error::invalid(format!("l1 penalty must be positive, got {l1}")));
    }
    let m = Moments::from_block(data);
    let mut theta = vec![0.0; data.dim()];
    let (converged, sweeps) = coordinate_descent(&m, l1, &mut theta);
    Ok(LassoFit {
        estimate: SparseParam::from_dense(theta),
        converged,
        sweeps,
    })
}

/// `|X^T y|_inf`, the smallest penalty with an all-zero solution.
pub fn lasso_max_penalty(data: &DesignBlock) -> f64 {
    Moments::from_block(data)
        .xty()
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Bisects the penalty on a log scale over `[1e-6 l_max, l_max]` for the
/// largest value whose support has at least `target_s` coordinates (40
/// steps). When even the smallest penalty falls short, that fit is returned.
pub fn tune_lasso_for_sparsity(data: &DesignBlock, target_s: usize) -> Result<LassoTuning> {
    let d = data.dim();
    if target_s > d {
        return Err(Error::invalid(format!("target sparsity {target_s} exceeds dimension {d}")));
    }
    let m = Moments::from_block(data);
    let l_max = m.xty().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if target_s == 0 || l_max == 0.0 {
        return Ok(LassoTuning {
            l1: l_max,
            estimate: SparseParam::zeros(d),
            converged: true,
        });
    }
    let fit = |l1: f64, warm: &[f64]| {
        let mut theta = warm.to_vec();
        let (converged, _) = coordinate_descent(&m, l1, &mut theta);
        let size = theta.iter().filter(|t| **t != 0.0).count();
        (theta, converged, size)
    };

    let mut lo = 1e-6 * l_max;
    let (mut lo_theta, mut lo_conv, lo_size) = fit(lo, &vec![0.0; d]);
    if lo_size < target_s {
        return Ok(LassoTuning {
            l1: lo,
            estimate: SparseParam::from_dense(lo_theta),
            converged: lo_conv,
        });
    }
    let mut hi = l_max;
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        let (theta, conv, size) = fit(mid, &lo_theta);
        if size >= target_s {
            lo = mid;
            lo_theta = theta;
            lo_conv = conv;
        } else {
            hi = mid;
        }
    }
    Ok(LassoTuning {
        l1: lo,
        estimate: SparseParam::from_dense(lo_theta),
        converged: lo_conv,
    })
}
