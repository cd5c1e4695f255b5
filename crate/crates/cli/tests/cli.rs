use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-ucb"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

const TINY: &str = r#"
[experiment]
kind = "regret_growth"
replications = 2

[environment]
d = 10
k = 4
horizon = 40
s = 2

[tuning]
n0 = 5
alpha_scale = 0.005
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("c.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--reps",
        "3",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
        "--algo",
        "ssucb",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let long = fs::read_to_string(out.join("regret_ssucb_s2.csv")).unwrap();
    let mut lines = long.lines();
    assert_eq!(lines.next(), Some("rep,t,algo,cum_regret,epoch,stage,support_size"));
    assert_eq!(lines.count(), 3 * 40);
    assert!(out.join("summary_ssucb_s2.csv").is_file());
}

#[test]
fn compare_ranks_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("cmp");
    let o = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "oracle,slucb,random",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ranking = fs::read_to_string(out.join("ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 4);

    let bad = run(&["compare", "--config", cfg.to_str().unwrap(), "--methods", "slucb,greedy"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn semireal_runs_on_the_bundled_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = repo_file("configs/data/treatment.csv");
    let o = run(&[
        "semireal",
        "--data",
        data.to_str().unwrap(),
        "--arm-col",
        "arm",
        "--outcome-col",
        "cd820",
        "--noise-dims",
        "3",
        "--horizon",
        "120",
        "--reps",
        "2",
        "--methods",
        "oracle,iht",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("ranking.csv").is_file());

    let missing = run(&[
        "semireal",
        "--data",
        data.to_str().unwrap(),
        "--arm-col",
        "treatment",
        "--outcome-col",
        "cd820",
        "--noise-dims",
        "3",
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn tune_prints_parameters() {
    let o = run(&["tune", "--print", "--config", repo_file("configs/exp1_regret_growth.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let doc: toml::Table = text.parse().unwrap();
    for s in ["s5", "s10", "s15"] {
        let entry = doc[s].as_table().unwrap();
        assert_eq!(entry["slucb"]["n0"].as_integer(), Some(10));
        assert!(entry["ssucb"]["zeta_max"].as_integer().unwrap() >= 1);
    }
    assert!(run(&["tune", "--print"]).status.success());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nkind = \"regret_growth\"\nreplicas = 3\n");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicas"));

    assert_eq!(run(&["simulate", "--config", "/no/such/file.toml"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
