//! Browser bindings. Each exported function takes plain numbers and returns
//! a JSON string; the Rust-side functions are public for native testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use sparse_ucb::harness::{synthetic_problem, tune, EnvironmentSection, TuningSection};
use sparse_ucb::linops::DesignBlock;
use sparse_ucb::selectors::{
    bss_exact, bss_heuristic, count_candidates, HeuristicOptions, SelectionProblem, DEFAULT_BUDGET,
};
use sparse_ucb::sim::{simulate, RandomPolicy, RunReport};
use sparse_ucb::slucb::{build_schedule, run_slucb, SupportSelector};
use sparse_ucb::ssucb::run_ssucb;
use sparse_ucb::Result;
use wasm_bindgen::prelude::*;

/// Cap on the number of points per curve handed to the page.
const MAX_POINTS: usize = 260;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub name: String,
    pub cum_regret: Vec<f64>,
    pub final_regret: f64,
}

#[derive(Debug, Serialize)]
pub struct RegretComparison {
    pub t: Vec<usize>,
    pub curves: Vec<Curve>,
    pub support: Vec<usize>,
    pub n0: usize,
    pub epoch_ends: Vec<usize>,
}

fn thin(report: &RunReport, ts: &[usize]) -> Vec<f64> {
    let cum = report.trace.cumulative();
    ts.iter().map(|&t| cum[t - 1]).collect()
}

/// SLUCB, SSUCB, the true-support oracle and uniform random play on one
/// synthetic instance with shared contexts and noise.
pub fn compare_policies(
    d: usize,
    k: usize,
    horizon: usize,
    s: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<RegretComparison> {
    let env_cfg = EnvironmentSection {
        d,
        k,
        horizon,
        s,
        noise_sd,
        ..EnvironmentSection::default()
    };
    let tuning = TuningSection {
        n0: Some(10),
        alpha_scale: 0.005,
        gamma_scale: 0.001,
        ..TuningSection::default()
    };
    let problem = synthetic_problem(&env_cfg, s, seed)?;
    let (slucb, ssucb) = tune(&problem, &tuning)?;
    let selector = SupportSelector::Heuristic { restarts: 4 };
    let oracle = SupportSelector::Oracle {
        support: problem.support.clone(),
    };
    let env = &problem.env;
    let runs = [
        ("slucb", run_slucb(env, &slucb, &selector, seed)?),
        ("ssucb", run_ssucb(env, &ssucb, &selector, seed)?),
        ("oracle", run_slucb(env, &slucb, &oracle, seed)?),
        ("random", simulate(env, &mut RandomPolicy, seed)?),
    ];
    let step = horizon.div_ceil(MAX_POINTS).max(1);
    let mut t: Vec<usize> = (step..=horizon).step_by(step).collect();
    if t.last() != Some(&horizon) {
        t.push(horizon);
    }
    let curves = runs
        .iter()
        .map(|(name, r)| Curve {
            name: name.to_string(),
            cum_regret: thin(r, &t),
            final_regret: r.trace.final_regret(),
        })
        .collect();
    let schedule = build_schedule(horizon, slucb.n0)?;
    Ok(RegretComparison {
        t,
        curves,
        support: problem.support,
        n0: slucb.n0,
        epoch_ends: schedule.boundaries().to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct Schedule {
    pub lengths: Vec<usize>,
    pub boundaries: Vec<usize>,
    /// Exploration periods per epoch, `min(n0, length)`.
    pub explore: Vec<usize>,
}

pub fn epoch_schedule(horizon: usize, n0: usize) -> Result<Schedule> {
    let s = build_schedule(horizon, n0)?;
    Ok(Schedule {
        explore: s.lengths().iter().map(|&l| l.min(n0)).collect(),
        lengths: s.lengths().to_vec(),
        boundaries: s.boundaries().to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct Recovery {
    pub truth: Vec<usize>,
    pub recovered: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub solver: String,
    pub candidates: u128,
}

/// Draws `n` Gaussian rows from an `s`-sparse model with unit signals and
/// runs best subset selection with cardinality `s`.
pub fn recover_support(n: usize, d: usize, s: usize, noise_sd: f64, seed: u64) -> Result<Recovery> {
    if s == 0 || s > d {
        return Err(sparse_ucb::Error::Config(format!("sparsity {s} outside 1..={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = rand::seq::index::sample(&mut rng, d, s).into_vec();
    truth.sort_unstable();
    let mut theta = vec![0.0; d];
    for &j in &truth {
        theta[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let mut data = DesignBlock::new(d);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let mean: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
        let eps: f64 = rng.sample(StandardNormal);
        data.push(&x, mean + noise_sd * eps)?;
    }
    let problem = SelectionProblem::new(&data, s, Vec::new(), 1.0, (s as f64).sqrt() * 10.0)?;
    let candidates = count_candidates(d, 0, s);
    let result = if candidates <= DEFAULT_BUDGET {
        bss_exact(&problem, DEFAULT_BUDGET)?
    } else {
        bss_heuristic(&problem, HeuristicOptions { restarts: 8, seed })?
    };
    Ok(Recovery {
        truth,
        recovered: result.support.clone(),
        coefficients: result.support.iter().map(|&j| result.estimate.values()[j]).collect(),
        objective: result.objective,
        solver: result.solver.to_string(),
        candidates,
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = comparePolicies)]
pub fn compare_policies_js(
    d: usize,
    k: usize,
    horizon: usize,
    s: usize,
    noise_sd: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(compare_policies(d, k, horizon, s, noise_sd, seed.into()))
}

#[wasm_bindgen(js_name = epochSchedule)]
pub fn epoch_schedule_js(horizon: usize, n0: usize) -> std::result::Result<String, JsError> {
    to_js(epoch_schedule(horizon, n0))
}

#[wasm_bindgen(js_name = recoverSupport)]
pub fn recover_support_js(
    n: usize,
    d: usize,
    s: usize,
    noise_sd: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(recover_support(n, d, s, noise_sd, seed.into()))
}
