use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Moments, SelectionProblem, SelectionResult, SolverTag};
use crate::error::{Error, Result};
use crate::linops::dense;

/// Default cap on the number of supports `bss_exact` will enumerate.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// Number of maximal-size candidate supports: `C(d - |must|, k - |must|)`.
pub fn count_candidates(dim: usize, forced: usize, k: usize) -> u128 {
    let n = dim.saturating_sub(forced) as u128;
    let r = k.saturating_sub(forced).min(dim.saturating_sub(forced)) as u128;
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Cholesky factor of `G_SS + lambda I` grown one variable at a time, along
/// with `z = L^{-1} b_S` so that the objective is `y^T y - |z|^2`.
struct Factor<'m> {
    moments: &'m Moments,
    lambda: f64,
    vars: Vec<usize>,
    // packed lower triangle, row r at offset r(r+1)/2
    rows: Vec<f64>,
    z: Vec<f64>,
    explained: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'m> Factor<'m> {
    fn new(moments: &'m Moments, lambda: f64) -> Self {
        Self {
            moments,
            lambda,
            vars: Vec::new(),
            rows: Vec::new(),
            z: Vec::new(),
            explained: vec![0.0],
            scratch: Vec::new(),
        }
    }

    fn objective(&self) -> f64 {
        self.moments.yty() - self.explained.last().copied().unwrap_or(0.0)
    }

    /// Fills `scratch` with the candidate row and returns `(diag, z_new)`.
    fn trial(&mut self, j: usize) -> (f64, f64) {
        let m = self.vars.len();
        self.scratch.clear();
        let mut sq = 0.0;
        let mut proj = 0.0;
        for r in 0..m {
            let off = r * (r + 1) / 2;
            let row = &self.rows[off..off + r + 1];
            let mut v = self.moments.g(self.vars[r], j);
            for (c, lc) in self.scratch.iter().enumerate() {
                v -= row[c] * lc;
            }
            let lr = v / row[r];
            sq += lr * lr;
            proj += lr * self.z[r];
            self.scratch.push(lr);
        }
        let schur = self.moments.g(j, j) + self.lambda - sq;
        assert!(schur > 0.0, "regularized Gram matrix must be positive definite");
        let diag = schur.sqrt();
        (diag, (self.moments.xty()[j] - proj) / diag)
    }

    fn push(&mut self, j: usize) {
        let (diag, znew) = self.trial(j);
        self.rows.extend_from_slice(&self.scratch);
        self.rows.push(diag);
        self.vars.push(j);
        self.z.push(znew);
        let total = self.explained.last().copied().unwrap_or(0.0) + znew * znew;
        self.explained.push(total);
    }

    fn pop(&mut self) {
        let m = self.vars.len();
        self.rows.truncate((m - 1) * m / 2);
        self.vars.pop();
        self.z.pop();
        self.explained.pop();
    }

    fn sorted_vars(&self) -> Vec<usize> {
        let mut v = self.vars.clone();
        v.sort_unstable();
        v
    }
}

struct Best {
    objective: f64,
    support: Vec<usize>,
}

impl Best {
    fn offer(&mut self, objective: f64, support: Vec<usize>) {
        if objective < self.objective
            || (objective == self.objective
                && (support.len(), &support) < (self.support.len(), &self.support))
        {
            self.objective = objective;
            self.support = support;
        }
    }
}

/// Exact best subset selection by enumerating every support `S` with
/// `must_include ⊆ S` and `|S| <= k_max`. Equal objectives resolve to the
/// smallest support, then the lexicographically smallest.
pub fn bss_exact(problem: &SelectionProblem<'_>, budget: u128) -> Result<SelectionResult> {
    problem.validate()?;
    let d = problem.data.dim();
    let k = problem.effective_k();
    let candidates = count_candidates(d, problem.must_include.len(), k);
    if candidates > budget {
        return Err(Error::CombinatorialBudget { candidates, budget });
    }
    let moments = Moments::from_block(problem.data);
    let mut factor = Factor::new(&moments, problem.lambda);
    for &j in &problem.must_include {
        factor.push(j);
    }
    let free: Vec<usize> = (0..d)
        .filter(|j| problem.must_include.binary_search(j).is_err())
        .collect();
    let mut best = Best {
        objective: factor.objective(),
        support: factor.sorted_vars(),
    };
    enumerate(&mut factor, &free, 0, k, &mut best);
    SelectionResult::refit(problem, &moments, best.support, SolverTag::Exact, true)
}

fn enumerate(factor: &mut Factor<'_>, free: &[usize], start: usize, k: usize, best: &mut Best) {
    if factor.vars.len() == k {
        return;
    }
    for pos in start..free.len() {
        factor.push(free[pos]);
        best.offer(factor.objective(), factor.sorted_vars());
        enumerate(factor, free, pos + 1, k, best);
        factor.pop();
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeuristicOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0 }
    }
}

/// Greedy forward selection to `k_max` followed by best-improvement
/// single-swap local search. Restart 0 starts from the greedy support, the
/// others from random feasible supports; the best result by
/// `(objective, support)` wins.
pub fn bss_heuristic(problem: &SelectionProblem<'_>, opts: HeuristicOptions) -> Result<SelectionResult> {
    problem.validate()?;
    let d = problem.data.dim();
    let k = problem.effective_k();
    let moments = Moments::from_block(problem.data);
    let must = &problem.must_include;
    let free: Vec<usize> = (0..d).filter(|j| must.binary_search(j).is_err()).collect();

    if must.len() == k || k == d {
        let support = if k == d { (0..d).collect() } else { must.clone() };
        return SelectionResult::refit(problem, &moments, support, SolverTag::LocalSwap, true);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = Best {
        objective: f64::INFINITY,
        support: Vec::new(),
    };
    for restart in 0..opts.restarts.max(1) {
        let start = if restart == 0 {
            greedy(&moments, problem.lambda, must, &free, k)
        } else {
            let mut pool = free.clone();
            pool.shuffle(&mut rng);
            let mut s = must.clone();
            s.extend_from_slice(&pool[..k - must.len()]);
            s
        };
        let mut local = local_search(&moments, problem.lambda, must, start, d);
        local.sort_unstable();
        best.offer(moments.objective(&local, problem.lambda), local);
    }
    SelectionResult::refit(problem, &moments, best.support, SolverTag::LocalSwap, true)
}

/// Forward selection: repeatedly add the coordinate with the largest drop in
/// penalized RSS (lowest index on ties).
fn greedy(moments: &Moments, lambda: f64, must: &[usize], free: &[usize], k: usize) -> Vec<usize> {
    let mut factor = Factor::new(moments, lambda);
    for &j in must {
        factor.push(j);
    }
    let mut used = vec![false; moments.dim()];
    for &j in must {
        used[j] = true;
    }
    while factor.vars.len() < k {
        let mut pick: Option<(usize, f64)> = None;
        for &j in free {
            if used[j] {
                continue;
            }
            let (_, z) = factor.trial(j);
            let gain = z * z;
            if pick.is_none_or(|(_, g)| gain > g) {
                pick = Some((j, gain));
            }
        }
        let Some((j, _)) = pick else { break };
        used[j] = true;
        factor.push(j);
    }
    factor.vars
}

/// Explicit inverse of `G_SS + lambda I` for a working support, used to
/// price single swaps by rank-one downdate and Schur complement.
struct SwapModel {
    vars: Vec<usize>,
    inv: Vec<f64>,
    w: Vec<f64>,
    objective: f64,
}

impl SwapModel {
    fn build(moments: &Moments, lambda: f64, vars: Vec<usize>) -> Self {
        let m = vars.len();
        let mut l = vec![0.0; m * m];
        for (r, &i) in vars.iter().enumerate() {
            for (c, &j) in vars.iter().enumerate() {
                l[r * m + c] = moments.g(i, j);
            }
            l[r * m + r] += lambda;
        }
        assert!(dense::cholesky_in_place(&mut l, m));
        let mut inv = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for c in 0..m {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[c] = 1.0;
            dense::cholesky_solve(&l, m, &mut col);
            for r in 0..m {
                inv[r * m + c] = col[r];
            }
        }
        let b: Vec<f64> = vars.iter().map(|&j| moments.xty()[j]).collect();
        let w: Vec<f64> = (0..m).map(|r| dense::dot(&inv[r * m..(r + 1) * m], &b)).collect();
        let objective = moments.yty() - dense::dot(&b, &w);
        Self {
            vars,
            inv,
            w,
            objective,
        }
    }
}

fn local_search(
    moments: &Moments,
    lambda: f64,
    must: &[usize],
    start: Vec<usize>,
    d: usize,
) -> Vec<usize> {
    let mut model = SwapModel::build(moments, lambda, start);
    let mut in_set = vec![false; d];
    let mut inv_minus = Vec::new();
    let mut w_minus = Vec::new();
    let mut g = Vec::new();
    let mut u = Vec::new();
    loop {
        for v in in_set.iter_mut() {
            *v = false;
        }
        for &j in &model.vars {
            in_set[j] = true;
        }
        let m = model.vars.len();
        let tol = 1e-12 * model.objective.abs().max(1.0);
        let mut best: Option<(f64, usize, usize)> = None;
        for p in 0..m {
            let out = model.vars[p];
            if must.binary_search(&out).is_ok() {
                continue;
            }
            // Remove position p: downdate the inverse.
            let mpp = model.inv[p * m + p];
            let removed_obj = model.objective + model.w[p] * model.w[p] / mpp;
            let keep: Vec<usize> = (0..m).filter(|&r| r != p).collect();
            let mm = m - 1;
            inv_minus.clear();
            inv_minus.resize(mm * mm, 0.0);
            w_minus.clear();
            for (ri, &r) in keep.iter().enumerate() {
                let mrp = model.inv[r * m + p];
                for (ci, &c) in keep.iter().enumerate() {
                    inv_minus[ri * mm + ci] = model.inv[r * m + c] - mrp * model.inv[p * m + c] / mpp;
                }
                w_minus.push(model.w[r] - mrp * model.w[p] / mpp);
            }
            for (cand, _) in in_set.iter().enumerate().filter(|(_, taken)| !**taken) {
                let row = moments.xtx_row(cand);
                g.clear();
                g.extend(keep.iter().map(|&r| row[model.vars[r]]));
                u.clear();
                u.extend((0..mm).map(|r| dense::dot(&inv_minus[r * mm..(r + 1) * mm], &g)));
                let schur = moments.g(cand, cand) + lambda - dense::dot(&g, &u);
                let resid = moments.xty()[cand] - dense::dot(&g, &w_minus);
                let obj = removed_obj - resid * resid / schur;
                if obj < model.objective - tol && best.is_none_or(|(b, _, _)| obj < b) {
                    best = Some((obj, p, cand));
                }
            }
        }
        match best {
            Some((_, p, cand)) => {
                let mut vars = model.vars.clone();
                vars[p] = cand;
                model = SwapModel::build(moments, lambda, vars);
            }
            None => return model.vars,
        }
    }
}
