use std::fs;
use std::path::Path;

use approx::assert_relative_eq;
use sparse_ucb::harness::{
    compare_methods, parse_methods, quantile_sorted, run_experiment, run_method, synthetic_problem,
    write_outputs, ExperimentConfig, ExperimentKind, Method, RegretBand, LONG_HEADER,
    SUMMARY_HEADER,
};
use sparse_ucb::Error;

fn small(kind: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
[experiment]
kind = "{kind}"
replications = 3
base_seed = 40
{extra}

[environment]
d = 12
k = 4
horizon = 60
s = 2

[tuning]
n0 = 6
alpha_scale = 0.005
gamma_scale = 0.001
"#
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (headers, rows)
}

fn is_17_digit_float(cell: &str) -> bool {
    let body = cell.strip_prefix('-').unwrap_or(cell);
    let Some((mantissa, exp)) = body.split_once('e') else {
        return false;
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    mantissa.as_bytes().get(1) == Some(&b'.')
        && digits.len() == 17
        && digits.chars().all(|c| c.is_ascii_digit())
        && exp.trim_start_matches('-').parse::<u32>().is_ok()
}

#[test]
fn type7_quantiles() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert_relative_eq!(quantile_sorted(&xs, 0.05), 1.15, epsilon = 1e-12);
    assert_relative_eq!(quantile_sorted(&xs, 0.95), 3.85, epsilon = 1e-12);
    assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
    assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
    assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);

    let band = RegretBand::from_curves(&[vec![0.0, 4.0], vec![1.0, 2.0], vec![2.0, 0.0]]).unwrap();
    assert_eq!(band.mean, vec![1.0, 2.0]);
    assert_relative_eq!(band.q05[1], 0.2, epsilon = 1e-12);
    assert_relative_eq!(band.q95[1], 3.8, epsilon = 1e-12);
    assert!(RegretBand::from_curves(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    assert!(RegretBand::from_curves(&[]).is_err());
}

#[test]
fn method_names_and_aliases() {
    let m = parse_methods("slucb, lasso_variant,iht,oracle,random,bss,ssucb").unwrap();
    assert_eq!(
        m,
        vec![
            Method::Slucb,
            Method::Lasso,
            Method::Iht,
            Method::Oracle,
            Method::Random,
            Method::Slucb,
            Method::Ssucb
        ]
    );
    assert!(matches!(parse_methods("slucb,thompson"), Err(Error::Config(_))));
    assert_eq!(Method::Ssucb.to_string(), "ssucb");
}

#[test]
fn config_errors_map_to_exit_code_one() {
    let unknown = "[experiment]\nkind = \"regret_growth\"\nbogus = 1\n";
    let e = ExperimentConfig::from_toml(unknown).unwrap_err();
    assert!(matches!(e, Error::Config(_)));
    assert_eq!(e.exit_code(), 1);
    assert!(ExperimentConfig::from_toml("[experiment]\nkind = \"nope\"\n").is_err());

    let mut cfg = small("regret_growth", "");
    cfg.experiment.replications = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = small("regret_growth", "sparsities = [2, 13]");
    assert!(cfg.validate().is_err());
    cfg.experiment.sparsities = vec![2];
    cfg.validate().unwrap();
    cfg.tuning.lambda = 0.0;
    assert!(run_experiment(&cfg).is_err());

    let semi = ExperimentConfig::from_toml(
        "[experiment]\nkind = \"semi_real\"\n[semi_real]\ndata = \"/no/such.csv\"\narm_col = \"a\"\noutcome_col = \"y\"\n",
    )
    .unwrap();
    assert!(matches!(semi.validate(), Err(Error::Config(_))));

    let inv = Error::Invariant {
        seed: 3,
        message: "x".into(),
    };
    assert_eq!(inv.exit_code(), 2);
}

#[test]
fn synthetic_problems_are_seeded() {
    let cfg = small("regret_growth", "");
    let a = synthetic_problem(&cfg.environment, 3, 5).unwrap();
    let b = synthetic_problem(&cfg.environment, 3, 5).unwrap();
    assert_eq!(a.support, b.support);
    assert_eq!(a.env.theta_star(), b.env.theta_star());
    assert_eq!(a.support.len(), 3);
    assert_eq!(a.env.theta_star().nonzero(), a.support);
    assert!(a.support.iter().all(|&j| a.env.theta_star().values()[j].abs() == 1.0));
    assert_relative_eq!(a.env.radius(), 3f64.sqrt(), epsilon = 1e-12);
    let differ = (6..20).any(|seed| synthetic_problem(&cfg.environment, 3, seed).unwrap().support != a.support);
    assert!(differ);
    assert!(synthetic_problem(&cfg.environment, 0, 1).is_err());
}

#[test]
fn random_policy_short_horizon() {
    let mut cfg = small("regret_growth", "");
    cfg.environment.horizon = 10;
    let problem = synthetic_problem(&cfg.environment, 2, 1).unwrap();
    let report = run_method(Method::Random, &problem, &cfg, 1).unwrap();
    assert_eq!(report.trace.len(), 10);
    let curve = report.trace.cumulative();
    assert!(curve.windows(2).all(|w| w[1] >= w[0]));
    assert!(curve[0] >= 0.0);
}

#[test]
fn outputs_have_expected_shape_and_agree() {
    let cfg = small("regret_growth", "algorithm = \"slucb\"");
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.groups.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&report, dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"regret_slucb_s2.csv".to_string()));
    assert!(names.contains(&"summary_slucb_s2.csv".to_string()));
    assert!(names.contains(&"timing.json".to_string()));

    let (h, long) = read_csv(&dir.path().join("regret_slucb_s2.csv"));
    assert_eq!(h, LONG_HEADER);
    assert_eq!(long.len(), 3 * 60);
    let (h, summary) = read_csv(&dir.path().join("summary_slucb_s2.csv"));
    assert_eq!(h, SUMMARY_HEADER);
    assert_eq!(summary.len(), 60);

    for (t, row) in summary.iter().enumerate() {
        let vals: Vec<f64> = long
            .iter()
            .filter(|r| r[1] == (t + 1).to_string())
            .map(|r| r[3].parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 3);
        let mean = vals.iter().sum::<f64>() / 3.0;
        assert_relative_eq!(row[1].parse::<f64>().unwrap(), mean, max_relative = 1e-14);
        assert!(row[1..].iter().all(|c| is_17_digit_float(c)), "{row:?}");
    }
    assert!(long.iter().all(|r| is_17_digit_float(&r[3])));
    assert!(long.iter().all(|r| r[5] == "explore" || r[5] == "ucb"));

    let json = fs::read_to_string(dir.path().join("timing.json")).unwrap();
    assert!(json.contains("slucb_s2"));
}

#[test]
fn csv_outputs_are_byte_identical_across_runs() {
    let cfg = small("method_compare", "methods = [\"slucb\", \"ssucb\", \"random\"]");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let wa = write_outputs(&run_experiment(&cfg).unwrap(), a.path()).unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    let mut compared = 0;
    for p in wa.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(p).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
        compared += 1;
    }
    assert_eq!(compared, 3 * 2 + 1);
}

#[test]
fn sweep_and_ranking_tables() {
    let cfg = small("sparsity_sweep", "sparsities = [1, 2, 4]");
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(h, ["algo", "s", "sqrt_s", "mean_final", "q05", "q95"]);
    let s: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(s, ["1", "2", "4"]);

    let cfg = small("regret_growth", "");
    let report = compare_methods(&cfg, &[Method::Random, Method::Oracle, Method::Slucb]).unwrap();
    assert_eq!(report.kind, ExperimentKind::MethodCompare);
    write_outputs(&report, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("ranking.csv"));
    assert_eq!(h, ["rank", "algo", "s", "mean_final", "q05", "q95"]);
    assert_eq!(rows.len(), 3);
    let finals: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(finals.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rows[0][0], "1");
}

#[test]
fn semi_real_experiment_runs_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("arm,age,dose,y\n");
    for i in 0..90 {
        let (age, dose) = ((i % 13) as f64, ((i * 7) % 5) as f64);
        let arm = ["a", "b", "c"][i % 3];
        let y = match arm {
            "a" => 0.5 * age - dose,
            "b" => 2.0 - 0.2 * age + 0.1 * dose,
            _ => dose,
        };
        csv.push_str(&format!("{arm},{age},{dose},{y}\n"));
    }
    fs::write(dir.path().join("t.csv"), csv).unwrap();
    let toml = r#"
[experiment]
kind = "semi_real"
methods = ["oracle", "slucb"]
replications = 2

[tuning]
n0 = 8
alpha_scale = 0.005

[semi_real]
data = "t.csv"
arm_col = "arm"
outcome_col = "y"
noise_dims = 4
horizon = 80
"#;
    let path = dir.path().join("semi.toml");
    fs::write(&path, toml).unwrap();
    let cfg = ExperimentConfig::from_path(&path).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.groups.len(), 2);
    // 3 arms x (2 features + intercept + 4 noise)
    let d = 3 * 7;
    for g in &report.groups {
        assert_eq!(g.runs.len(), 2);
        assert_eq!(g.runs[0].trace.len(), 80);
        assert!(g.runs.iter().flat_map(|r| r.trace.records()).all(|r| r.support_size <= d));
    }
}
