use super::{CsvTable, EnvSpec};
use crate::error::{Error, Result};
use crate::linops::{dense, SparseParam};

/// Per-arm least-squares fit of the outcome on the feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmFit {
    pub label: String,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModels {
    pub features: Vec<String>,
    /// In first-appearance order of the arm labels (or the requested order).
    pub arms: Vec<ArmFit>,
    /// Rows dropped for a missing or non-numeric outcome/feature cell.
    pub dropped_rows: usize,
}

impl ArmModels {
    /// Parameters for a block embedding whose base rows carry an always-one
    /// coordinate after the features, so the intercept becomes an ordinary
    /// coefficient.
    pub fn block_params(&self) -> Vec<SparseParam> {
        self.arms
            .iter()
            .map(|a| {
                let mut v = a.coefficients.clone();
                v.push(a.intercept);
                SparseParam::from_dense(v)
            })
            .collect()
    }
}

struct Extracted {
    labels: Vec<String>,
    features: Vec<Vec<f64>>,
    outcome: Vec<f64>,
    dropped: usize,
}

fn extract(
    table: &CsvTable,
    arm_column: &str,
    outcome_column: &str,
    feature_columns: &[String],
) -> Result<Extracted> {
    let arm_idx = table.column(arm_column)?;
    let y_idx = table.column(outcome_column)?;
    let f_idx = feature_columns
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Extracted {
        labels: Vec::new(),
        features: Vec::new(),
        outcome: Vec::new(),
        dropped: 0,
    };
    for row in &table.rows {
        let cell = |j: usize| row.get(j).map(String::as_str).unwrap_or("");
        let label = cell(arm_idx);
        let y = CsvTable::numeric(cell(y_idx));
        let x: Option<Vec<f64>> = f_idx.iter().map(|&j| CsvTable::numeric(cell(j))).collect();
        match (label.is_empty(), y, x) {
            (false, Some(y), Some(x)) => {
                out.labels.push(label.to_owned());
                out.features.push(x);
                out.outcome.push(y);
            }
            _ => out.dropped += 1,
        }
    }
    Ok(out)
}

fn arm_order(labels: &[String], expected: Option<&[String]>) -> Result<Vec<String>> {
    let mut seen: Vec<String> = Vec::new();
    for l in labels {
        if !seen.contains(l) {
            seen.push(l.clone());
        }
    }
    match expected {
        None => Ok(seen),
        Some(want) => {
            if let Some(missing) = want.iter().find(|w| !seen.contains(w)) {
                return Err(Error::MissingArm { arm: missing.clone() });
            }
            Ok(want.to_vec())
        }
    }
}

/// Ordinary least squares with an intercept, via the normal equations.
fn ols(label: &str, xs: &[&[f64]], ys: &[f64]) -> Result<ArmFit> {
    let p = xs.first().map(|x| x.len()).unwrap_or(0) + 1;
    if xs.len() < p {
        return Err(Error::SingularDesign { arm: label.to_owned() });
    }
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut row = vec![0.0; p];
    for (x, y) in xs.iter().zip(ys) {
        row[..p - 1].copy_from_slice(x);
        row[p - 1] = 1.0;
        for i in 0..p {
            b[i] += row[i] * y;
            for j in 0..p {
                a[i * p + j] += row[i] * row[j];
            }
        }
    }
    let scale = (0..p).map(|i| a[i * p + i]).fold(0.0f64, f64::max);
    if !dense::cholesky_in_place(&mut a, p) {
        return Err(Error::SingularDesign { arm: label.to_owned() });
    }
    let min_pivot = (0..p).map(|i| a[i * p + i] * a[i * p + i]).fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-12 * scale {
        return Err(Error::SingularDesign { arm: label.to_owned() });
    }
    dense::cholesky_solve(&a, p, &mut b);
    let intercept = b.pop().unwrap_or(0.0);
    Ok(ArmFit {
        label: label.to_owned(),
        coefficients: b,
        intercept,
        rows: xs.len(),
    })
}

fn fit_groups(
    ex: &Extracted,
    features: &[Vec<f64>],
    expected: Option<&[String]>,
    names: &[String],
) -> Result<ArmModels> {
    let order = arm_order(&ex.labels, expected)?;
    let mut arms = Vec::with_capacity(order.len());
    for label in &order {
        let (xs, ys): (Vec<&[f64]>, Vec<f64>) = ex
            .labels
            .iter()
            .zip(features)
            .zip(&ex.outcome)
            .filter(|((l, _), _)| *l == label)
            .map(|((_, x), y)| (x.as_slice(), *y))
            .unzip();
        arms.push(ols(label, &xs, &ys)?);
    }
    Ok(ArmModels {
        features: names.to_vec(),
        arms,
        dropped_rows: ex.dropped,
    })
}

/// Fits one linear outcome model per arm label. Rows with a missing
/// outcome or feature are dropped and counted; an arm named in
/// `expected_arms` without rows is an error.
pub fn fit_arm_models(
    table: &CsvTable,
    arm_column: &str,
    outcome_column: &str,
    feature_columns: &[String],
    expected_arms: Option<&[String]>,
) -> Result<ArmModels> {
    let ex = extract(table, arm_column, outcome_column, feature_columns)?;
    fit_groups(&ex, &ex.features, expected_arms, feature_columns)
}

/// Per-column centering and scaling to unit (population) standard
/// deviation. Constant columns are only centered. Returns the means and sds.
pub fn standardize_columns(rows: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let p = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    if rows.is_empty() {
        return (means, sds);
    }
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        means[j] = mean;
        sds[j] = var.sqrt();
        for r in rows.iter_mut() {
            r[j] -= mean;
            if sds[j] > 0.0 {
                r[j] /= sds[j];
            }
        }
    }
    (means, sds)
}

#[derive(Debug, Clone)]
pub struct SemiRealOptions {
    pub arm_column: String,
    pub outcome_column: String,
    /// `None` selects every numeric column other than the arm and outcome.
    pub features: Option<Vec<String>>,
    pub arms: Option<Vec<String>>,
    pub noise_dims: usize,
    pub standardize: bool,
    pub noise_sd: f64,
    pub horizon: usize,
}

/// Semi-synthetic multi-treatment world: per-arm models fitted on the
/// (optionally standardized) features become the ground truth, and each
/// period's base row is drawn from the table's empirical distribution.
pub fn semi_real_env(table: &CsvTable, opts: &SemiRealOptions) -> Result<(EnvSpec, ArmModels)> {
    let features = match &opts.features {
        Some(f) => f.clone(),
        None => table.numeric_columns(&[&opts.arm_column, &opts.outcome_column]),
    };
    if features.is_empty() {
        return Err(Error::config("no numeric feature columns"));
    }
    let ex = extract(table, &opts.arm_column, &opts.outcome_column, &features)?;
    let mut base = ex.features.clone();
    if opts.standardize {
        standardize_columns(&mut base);
    }
    let models = fit_groups(&ex, &base, opts.arms.as_deref(), &features)?;
    for row in base.iter_mut() {
        row.push(1.0);
    }
    let env = EnvSpec::block_treatment(
        base,
        models.block_params(),
        opts.noise_dims,
        opts.noise_sd,
        opts.horizon,
    )?;
    Ok((env, models))
}
