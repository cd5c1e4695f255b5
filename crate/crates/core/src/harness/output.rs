use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentKind, ExperimentReport};
use crate::error::{Error, Result};

pub const LONG_HEADER: [&str; 7] = ["rep", "t", "algo", "cum_regret", "epoch", "stage", "support_size"];
pub const SUMMARY_HEADER: [&str; 4] = ["t", "mean", "q05", "q95"];

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the per-group long and summary CSVs, the kind-specific tables and
/// `timing.json` under `dir`. Returns the paths written, CSVs first.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for g in &report.groups {
        let label = g.label();
        let path = dir.join(format!("regret_{label}.csv"));
        let mut w = csv_writer(&path)?;
        w.write_record(LONG_HEADER).map_err(csv_err(&path))?;
        for (rep, run) in g.runs.iter().enumerate() {
            for r in run.trace.records() {
                w.write_record([
                    rep.to_string(),
                    r.t.to_string(),
                    g.method.to_string(),
                    format_float(r.cum_regret),
                    r.epoch.to_string(),
                    r.stage.to_string(),
                    r.support_size.to_string(),
                ])
                .map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);

        let path = dir.join(format!("summary_{label}.csv"));
        let mut w = csv_writer(&path)?;
        w.write_record(SUMMARY_HEADER).map_err(csv_err(&path))?;
        let b = &g.band;
        for t in 0..b.len() {
            w.write_record([
                (t + 1).to_string(),
                format_float(b.mean[t]),
                format_float(b.q05[t]),
                format_float(b.q95[t]),
            ])
            .map_err(csv_err(&path))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }

    if report.kind == ExperimentKind::SparsitySweep {
        let path = dir.join("sweep.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["algo", "s", "sqrt_s", "mean_final", "q05", "q95"])
            .map_err(csv_err(&path))?;
        for g in &report.groups {
            let (mean, lo, hi) = g.band.last();
            w.write_record([
                g.method.to_string(),
                g.s.to_string(),
                format_float((g.s as f64).sqrt()),
                format_float(mean),
                format_float(lo),
                format_float(hi),
            ])
            .map_err(csv_err(&path))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }

    if matches!(report.kind, ExperimentKind::MethodCompare | ExperimentKind::SemiReal) {
        let path = dir.join("ranking.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["rank", "algo", "s", "mean_final", "q05", "q95"])
            .map_err(csv_err(&path))?;
        for (i, g) in report.ranking().into_iter().enumerate() {
            let (mean, lo, hi) = g.band.last();
            w.write_record([
                (i + 1).to_string(),
                g.method.to_string(),
                g.s.to_string(),
                format_float(mean),
                format_float(lo),
                format_float(hi),
            ])
            .map_err(csv_err(&path))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }

    // wall-clock numbers change between runs, so they stay out of the CSVs
    let path = dir.join("timing.json");
    let mut json = String::from("{\n");
    for (i, g) in report.groups.iter().enumerate() {
        let sep = if i + 1 == report.groups.len() { "" } else { "," };
        json.push_str(&format!(
            "  \"{}\": {{\"total_seconds\": {}, \"mean_seconds\": {}}}{sep}\n",
            g.label(),
            g.seconds,
            g.mean_seconds()
        ));
    }
    json.push_str("}\n");
    fs::write(&path, json).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}
