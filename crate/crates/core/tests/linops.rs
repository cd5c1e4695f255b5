mod common;

use approx::assert_relative_eq;
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sparse_ucb::linops::{
    gather, penalized_rss, project_l2, ridge_restricted, weighted_norm, DesignBlock, GramState,
    SparseParam,
};
use sparse_ucb::Error;

fn gram_oracle(data: &DesignBlock, support: &[usize], lambda: f64) -> DMatrix<f64> {
    let x = design_matrix(data, support);
    x.transpose() * &x + DMatrix::identity(support.len(), support.len()) * lambda
}

#[test]
fn ridge_matches_normal_equations() {
    let mut r = rng(11);
    for trial in 0..100 {
        let d = 2 + trial % 19;
        let m = 1 + trial % d.min(8);
        let n = 5 + trial % 40;
        let theta: Vec<f64> = gaussian_row(&mut r, d);
        let data = linear_block(&mut r, n, &theta, 0.5);
        let support = random_support(&mut r, d, m);
        let lambda = 0.1 + (trial % 7) as f64;
        let got = ridge_restricted(&data, &support, lambda).unwrap();
        let want = ridge_oracle(&data, &support, lambda);
        for (g, w) in got.values().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8, "trial {trial}: {g} vs {w}");
        }
        assert_eq!(got.support(), &support[..]);
    }
}

#[test]
fn ridge_on_empty_data_is_zero() {
    let data = DesignBlock::new(4);
    let theta = ridge_restricted(&data, &[0, 1], 1.0).unwrap();
    assert!(theta.values().iter().all(|v| *v == 0.0));
}

#[test]
fn ridge_rejects_out_of_range_support() {
    let data = DesignBlock::new(3);
    assert!(ridge_restricted(&data, &[3], 1.0).is_err());
    assert!(ridge_restricted(&data, &[0], 0.0).is_err());
}

#[test]
fn push_rejects_wrong_width_and_nan() {
    let mut data = DesignBlock::new(3);
    assert!(matches!(
        data.push(&[1.0, 2.0], 0.0),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));
    assert!(data.push(&[1.0, f64::NAN, 0.0], 0.0).is_err());
    assert!(data.push(&[1.0, 0.0, 0.0], f64::INFINITY).is_err());
    assert!(data.is_empty());
}

#[test]
fn incremental_gram_matches_batch_across_refactorizations() {
    let mut r = rng(3);
    let d = 12;
    let support = vec![0, 3, 4, 7, 11];
    let theta = gaussian_row(&mut r, d);
    let data = linear_block(&mut r, 700, &theta, 1.0);
    let mut state = GramState::new(d, support.clone(), 0.7).unwrap();
    for (x, y) in data.rows() {
        state.absorb_row(x, y).unwrap();
    }
    let batch = GramState::from_block(&data, support.clone(), 0.7).unwrap();
    let oracle = gram_oracle(&data, &support, 0.7);
    let m = support.len();
    for i in 0..m {
        for j in 0..m {
            let want = oracle[(i, j)];
            assert_relative_eq!(state.gram()[i * m + j], want, max_relative = 1e-9);
            assert_relative_eq!(batch.gram()[i * m + j], want, max_relative = 1e-9);
        }
    }
    assert_eq!(state.count(), 700);
    let est = state.estimate();
    let want = ridge_oracle(&data, &support, 0.7);
    for (g, w) in est.values().iter().zip(&want) {
        assert!((g - w).abs() < 1e-9);
    }
}

#[test]
fn weighted_norm_and_log_det_match_oracle() {
    let mut r = rng(5);
    for trial in 0..30 {
        let d = 10;
        let support = random_support(&mut r, d, 1 + trial % 6);
        let data = linear_block(&mut r, 3 + trial, &vec![0.0; d], 1.0);
        let state = GramState::from_block(&data, support.clone(), 1.3).unwrap();
        let g = gram_oracle(&data, &support, 1.3);
        let x = gaussian_row(&mut r, d);
        let xs = DVector::from_vec(gather(&x, &support));
        let inv = g.clone().try_inverse().unwrap();
        let want = (xs.transpose() * inv * &xs)[(0, 0)].sqrt();
        assert_relative_eq!(weighted_norm(&x, &state).unwrap(), want, max_relative = 1e-10);
        assert_relative_eq!(state.log_det(), g.determinant().ln(), max_relative = 1e-10);
    }
}

#[test]
fn weighted_norm_scaled_identity_and_empty_support() {
    let state = GramState::new(3, vec![0, 2], 4.0).unwrap();
    assert_relative_eq!(state.weighted_norm(&[2.0, 9.0, 0.0]).unwrap(), 1.0, epsilon = 1e-15);
    let empty = GramState::new(3, vec![], 1.0).unwrap();
    assert_eq!(empty.weighted_norm(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    assert_eq!(empty.size(), 0);
}

#[test]
fn projection_examples() {
    let theta = SparseParam::new(vec![3.0, 4.0], vec![0, 1]).unwrap();
    let p = project_l2(&theta, 1.0).unwrap();
    assert_relative_eq!(p.values()[0], 0.6, epsilon = 1e-15);
    assert_relative_eq!(p.values()[1], 0.8, epsilon = 1e-15);
    let inside = project_l2(&theta, 10.0).unwrap();
    assert_eq!(inside, theta);
    assert!(project_l2(&theta, 0.0).is_err());
}

#[test]
fn sparse_param_rejects_values_off_support() {
    assert!(SparseParam::new(vec![1.0, 2.0], vec![0]).is_err());
    assert!(SparseParam::new(vec![1.0, 0.0], vec![1, 1]).is_err());
    let p = SparseParam::new(vec![0.0, 2.0, 0.0], vec![1, 2]).unwrap();
    assert_eq!(p.nonzero(), vec![1]);
}

#[test]
fn penalized_rss_matches_oracle() {
    let mut r = rng(9);
    let data = linear_block(&mut r, 25, &[1.0, -2.0, 0.0, 0.5], 0.3);
    let theta = SparseParam::from_dense(vec![0.9, -1.8, 0.1, 0.0]);
    assert_relative_eq!(
        penalized_rss(&data, &theta, 0.4),
        penalized_rss_oracle(&data, theta.values(), 0.4),
        max_relative = 1e-12
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_never_leaves_the_ball(values in prop::collection::vec(-50.0f64..50.0, 1..12), r in 0.01f64..20.0) {
        let theta = SparseParam::from_dense(values);
        let p = project_l2(&theta, r).unwrap();
        prop_assert!(p.norm() <= r * (1.0 + 1e-12));
        prop_assert_eq!(p.support(), theta.support());
    }

    #[test]
    fn gram_stays_batch_equivalent(seed in 0u64..1000, n in 0usize..300, m in 0usize..6) {
        let mut r = rng(seed);
        let d = 8;
        let support = random_support(&mut r, d, m);
        let data = linear_block(&mut r, n, &vec![0.3; d], 1.0);
        let mut state = GramState::new(d, support.clone(), 1.0).unwrap();
        for (x, y) in data.rows() {
            state.absorb_row(x, y).unwrap();
        }
        let batch = GramState::from_block(&data, support, 1.0).unwrap();
        for (a, b) in state.gram().iter().zip(batch.gram()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let (e1, e2) = (state.estimate(), batch.estimate());
        for (a, b) in e1.values().iter().zip(e2.values()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
