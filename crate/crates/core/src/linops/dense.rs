//! Small row-major dense kernels. Matrices are `n * n` slices; only the
//! lower triangle of a Cholesky factor is meaningful.

/// In-place Cholesky factorization `a = L L^T`. On success the lower
/// triangle of `a` holds `L` and the strict upper triangle is zeroed.
/// Returns `false` when a pivot is not strictly positive.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / ljj;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Updates `L` so that `L L^T` becomes `L L^T + x x^T`. `x` is consumed as
/// scratch space.
pub(crate) fn cholesky_rank_one_update(l: &mut [f64], n: usize, x: &mut [f64]) {
    for k in 0..n {
        let lkk = l[k * n + k];
        let r = lkk.hypot(x[k]);
        let c = r / lkk;
        let s = x[k] / lkk;
        l[k * n + k] = r;
        for i in (k + 1)..n {
            let lik = (l[i * n + k] + s * x[i]) / c;
            x[i] = c * x[i] - s * lik;
            l[i * n + k] = lik;
        }
    }
}

/// Solves `L z = b` in place.
pub(crate) fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut v = b[i];
        for (lij, bj) in row.iter().zip(b.iter()) {
            v -= lij * bj;
        }
        b[i] = v / l[i * n + i];
    }
}

/// Solves `L^T z = b` in place.
pub(crate) fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut v = b[i];
        for j in (i + 1)..n {
            v -= l[j * n + i] * b[j];
        }
        b[i] = v / l[i * n + i];
    }
}

/// Solves `(L L^T) z = b` in place.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    solve_lower(l, n, b);
    solve_lower_transpose(l, n, b);
}

pub(crate) fn log_det_from_cholesky(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(l: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
            }
        }
        out
    }

    #[test]
    fn factor_and_update() {
        let n = 3;
        let a = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let mut l = a.clone();
        assert!(cholesky_in_place(&mut l, n));
        for (x, y) in reconstruct(&l, n).iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        let x = [1.0, -2.0, 0.5];
        let mut scratch = x.to_vec();
        cholesky_rank_one_update(&mut l, n, &mut scratch);
        let rebuilt = reconstruct(&l, n);
        for i in 0..n {
            for j in 0..n {
                let want = a[i * n + j] + x[i] * x[j];
                assert!((rebuilt[i * n + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky_in_place(&mut a, 2));
    }

    #[test]
    fn solve_round_trip() {
        let n = 2;
        let mut l = vec![4.0, 1.0, 1.0, 3.0];
        assert!(cholesky_in_place(&mut l, n));
        let mut b = vec![1.0, 2.0];
        cholesky_solve(&l, n, &mut b);
        assert!((4.0 * b[0] + b[1] - 1.0).abs() < 1e-14);
        assert!((b[0] + 3.0 * b[1] - 2.0).abs() < 1e-14);
        assert!((log_det_from_cholesky(&l, n) - 11f64.ln()).abs() < 1e-14);
    }
}
