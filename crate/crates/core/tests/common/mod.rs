#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_ucb::environment::{ContextGenerator, EnvSpec};
use sparse_ucb::linops::{DesignBlock, SparseParam};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_row(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `n` Gaussian rows with `y = <x, theta> + noise * N(0, 1)`.
pub fn linear_block(rng: &mut ChaCha8Rng, n: usize, theta: &[f64], noise: f64) -> DesignBlock {
    let d = theta.len();
    let mut block = DesignBlock::new(d);
    for _ in 0..n {
        let x = gaussian_row(rng, d);
        let y: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()
            + noise * rng.sample::<f64, _>(StandardNormal);
        block.push(&x, y).unwrap();
    }
    block
}

pub fn random_support(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Vec<usize> {
    let mut s = sample(rng, d, m).into_vec();
    s.sort_unstable();
    s
}

/// Design restricted to `support` as an `n x |S|` matrix.
pub fn design_matrix(data: &DesignBlock, support: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(data.count(), support.len(), |i, j| data.row(i).0[support[j]])
}

pub fn responses(data: &DesignBlock) -> DVector<f64> {
    DVector::from_column_slice(data.responses())
}

/// Ridge solution on `support` via nalgebra LU on the normal equations,
/// scattered into a dense d-vector.
pub fn ridge_oracle(data: &DesignBlock, support: &[usize], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; data.dim()];
    if support.is_empty() {
        return out;
    }
    let x = design_matrix(data, support);
    let y = responses(data);
    let a = x.transpose() * &x + DMatrix::identity(support.len(), support.len()) * lambda;
    let b = x.transpose() * y;
    let sol = a.lu().solve(&b).expect("nonsingular");
    for (j, &c) in support.iter().enumerate() {
        out[c] = sol[j];
    }
    out
}

/// `|y - X theta|^2 + lambda |theta|^2` for a dense theta.
pub fn penalized_rss_oracle(data: &DesignBlock, theta: &[f64], lambda: f64) -> f64 {
    let rss: f64 = data
        .rows()
        .map(|(x, y)| {
            let r = y - x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>();
            r * r
        })
        .sum();
    rss + lambda * theta.iter().map(|v| v * v).sum::<f64>()
}

/// Every subset of `0..d` of size in `lo..=hi` containing `forced`.
pub fn subsets(d: usize, forced: &[usize], lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << d) {
        let size = mask.count_ones() as usize;
        if size < lo || size > hi {
            continue;
        }
        if forced.iter().any(|&f| mask & (1 << f) == 0) {
            continue;
        }
        out.push((0..d).filter(|&j| mask & (1 << j) != 0).collect());
    }
    out
}

/// Full enumeration oracle: minimal objective and the winning support under
/// the (size, lexicographic) tie rule.
pub fn enumerate_bss(
    data: &DesignBlock,
    forced: &[usize],
    k_max: usize,
    lambda: f64,
) -> (f64, Vec<usize>) {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in subsets(data.dim(), forced, forced.len(), k_max) {
        let theta = ridge_oracle(data, &s, lambda);
        let obj = penalized_rss_oracle(data, &theta, lambda);
        let better = match &best {
            None => true,
            Some((b, bs)) => obj < *b || (obj == *b && (s.len(), &s) < (bs.len(), bs)),
        };
        if better {
            best = Some((obj, s));
        }
    }
    best.unwrap()
}

/// Gaussian-context world with unit coefficients of alternating sign on
/// `support`.
pub fn gaussian_env(d: usize, k: usize, horizon: usize, support: &[usize], noise: f64) -> EnvSpec {
    let mut theta = vec![0.0; d];
    for (i, &j) in support.iter().enumerate() {
        theta[j] = if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    EnvSpec::new(
        k,
        ContextGenerator::GaussianIid { scale: 1.0 },
        SparseParam::from_dense(theta),
        noise,
        horizon,
    )
    .unwrap()
}

/// `sqrt(x_S^T (lambda I + X_S^T X_S)^{-1} x_S)` from scratch.
pub fn weighted_norm_oracle(data: &DesignBlock, support: &[usize], lambda: f64, x: &[f64]) -> f64 {
    if support.is_empty() {
        return 0.0;
    }
    let xs = design_matrix(data, support);
    let g = xs.transpose() * &xs + DMatrix::identity(support.len(), support.len()) * lambda;
    let v = DVector::from_iterator(support.len(), support.iter().map(|&j| x[j]));
    let sol = g.lu().solve(&v).expect("nonsingular");
    v.dot(&sol).sqrt()
}
