use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparse_ucb::harness::{
    compare_methods, parse_methods, run_experiment, semi_real_problem, synthetic_problem, tune,
    write_outputs, ExperimentConfig, ExperimentKind, ExperimentReport, ExperimentSection,
    SemiRealSection,
};
use sparse_ucb::{Error, Result};

#[derive(Parser)]
#[command(name = "sparse-ucb", version, about = "Sparse linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `experiment.algorithm` and clears `experiment.methods`.
        #[arg(long)]
        algo: Option<String>,
    },
    /// Run several methods on matched seeds and rank them by final regret.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        methods: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semi-synthetic treatment assignment from a CSV table.
    Semireal {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "arm-col")]
        arm_col: String,
        #[arg(long = "outcome-col")]
        outcome_col: String,
        #[arg(long = "noise-dims")]
        noise_dims: usize,
        /// Optional config supplying tuning and selector sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "lasso,iht,slucb,oracle")]
        methods: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the tuned policy parameters for a config.
    Tune {
        #[arg(long)]
        print: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => ExperimentConfig::from_toml("[experiment]\nkind = \"regret_growth\"\n"),
    }
}

fn apply(cfg: &mut ExperimentConfig, reps: Option<usize>, seed: Option<u64>, out: Option<PathBuf>) {
    let e: &mut ExperimentSection = &mut cfg.experiment;
    if let Some(r) = reps {
        e.replications = r;
    }
    if let Some(s) = seed {
        e.base_seed = s;
    }
    if out.is_some() {
        e.output = out;
    }
}

fn report(cfg: &ExperimentConfig, rep: &ExperimentReport) -> Result<()> {
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let rows = match rep.kind {
        ExperimentKind::MethodCompare | ExperimentKind::SemiReal => rep.ranking(),
        _ => rep.groups.iter().collect(),
    };
    println!("{:<14} {:>14} {:>14} {:>14} {:>12}", "group", "mean_final", "q05", "q95", "sec/rep");
    for g in rows {
        let (mean, lo, hi) = g.band.last();
        println!(
            "{:<14} {:>14.4} {:>14.4} {:>14.4} {:>12.3}",
            g.label(),
            mean,
            lo,
            hi,
            g.mean_seconds()
        );
    }
    for path in write_outputs(rep, &cfg.output_dir())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_tuning(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let problems = if cfg.experiment.kind == ExperimentKind::SemiReal {
        let sr = cfg
            .semi_real
            .as_ref()
            .ok_or_else(|| Error::Config("missing [semi_real] section".into()))?;
        vec![semi_real_problem(sr)?]
    } else {
        cfg.sparsities()
            .into_iter()
            .map(|s| synthetic_problem(&cfg.environment, s, cfg.experiment.base_seed))
            .collect::<Result<Vec<_>>>()?
    };
    let mut doc = toml::Table::new();
    for problem in &problems {
        let (slucb, ssucb) = tune(problem, &cfg.tuning)?;
        let mut entry = toml::Table::new();
        let ser = |e: toml::ser::Error| Error::Config(e.to_string());
        entry.insert("slucb".into(), toml::Value::try_from(&slucb).map_err(ser)?);
        entry.insert("ssucb".into(), toml::Value::try_from(&ssucb).map_err(ser)?);
        doc.insert(format!("s{}", problem.s), toml::Value::Table(entry));
    }
    print!("{doc}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            reps,
            seed,
            out,
            algo,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            apply(&mut cfg, reps, seed, out);
            if let Some(a) = algo {
                cfg.experiment.algorithm = a;
                cfg.experiment.methods.clear();
            }
            let rep = run_experiment(&cfg)?;
            report(&cfg, &rep)
        }
        Command::Compare {
            config,
            methods,
            reps,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            apply(&mut cfg, reps, seed, out);
            let methods = parse_methods(&methods)?;
            let rep = compare_methods(&cfg, &methods)?;
            report(&cfg, &rep)
        }
        Command::Semireal {
            data,
            arm_col,
            outcome_col,
            noise_dims,
            config,
            methods,
            horizon,
            reps,
            seed,
            out,
        } => {
            let mut cfg = load(config.as_ref())?;
            apply(&mut cfg, reps, seed, out);
            let base = cfg.semi_real.take();
            cfg.semi_real = Some(SemiRealSection {
                data,
                arm_col,
                outcome_col,
                noise_dims,
                horizon: horizon.or(base.as_ref().map(|b| b.horizon)).unwrap_or(2600),
                features: base.as_ref().and_then(|b| b.features.clone()),
                arms: base.as_ref().and_then(|b| b.arms.clone()),
                standardize: base.as_ref().is_none_or(|b| b.standardize),
                noise_sd: base.as_ref().map_or(1.0, |b| b.noise_sd),
                s: base.as_ref().and_then(|b| b.s),
            });
            cfg.experiment.kind = ExperimentKind::SemiReal;
            let methods = parse_methods(&methods)?;
            let rep = compare_methods(&cfg, &methods)?;
            report(&cfg, &rep)
        }
        Command::Tune { print, config } => {
            let cfg = load(config.as_ref())?;
            if print {
                print_tuning(&cfg)
            } else {
                cfg.validate()
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
