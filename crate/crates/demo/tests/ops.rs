use sparse_ucb_demo::{compare_policies, epoch_schedule, recover_support};

#[test]
fn comparison_curves_are_thinned_and_monotone() {
    let res = compare_policies(30, 10, 500, 3, 1.0, 4).unwrap();
    assert_eq!(res.curves.len(), 4);
    assert_eq!(*res.t.last().unwrap(), 500);
    assert!(res.t.len() <= 261);
    for c in &res.curves {
        assert_eq!(c.cum_regret.len(), res.t.len());
        assert!(c.cum_regret.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*c.cum_regret.last().unwrap(), c.final_regret);
    }
    let finals: Vec<f64> = res.curves.iter().map(|c| c.final_regret).collect();
    // slucb, ssucb and oracle all beat random play
    assert!(finals[..3].iter().all(|f| *f < finals[3]));
    assert_eq!(res.support.len(), 3);
    assert_eq!(*res.epoch_ends.last().unwrap(), 500);
}

#[test]
fn schedule_splits_exploration() {
    let s = epoch_schedule(40, 6).unwrap();
    assert_eq!(s.lengths, vec![6, 6, 8, 16, 4]);
    assert_eq!(s.explore, vec![6, 6, 6, 6, 4]);
    assert_eq!(*s.boundaries.last().unwrap(), 40);
    assert!(epoch_schedule(0, 1).is_err());
}

#[test]
fn recovery_finds_a_clean_support() {
    let r = recover_support(100, 20, 3, 0.0, 2).unwrap();
    assert_eq!(r.truth, r.recovered);
    assert_eq!(r.solver, "exact");
    assert_eq!(r.candidates, 1140);
    assert!(r.coefficients.iter().all(|c| c.abs() > 0.5));
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"recovered\""));
    assert!(recover_support(10, 5, 6, 0.0, 1).is_err());
}
