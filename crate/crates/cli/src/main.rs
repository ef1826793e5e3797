use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infotl::experiments::parts::PartsOverrides;
use infotl::experiments::{emit_csv, evaluate_parts, run, write_csv, Experiment, ExperimentConfig, Preset, ResultRow};
use infotl::experiments::output::write_reports_csv;
use infotl::mi::write_trials_csv;

#[derive(Parser)]
#[command(name = "infotl", version, about = "Information-theoretic transfer-learning bounds: experiments and bound evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian mean estimation from source samples, evaluated on a shifted target.
    Gaussian(RunArgs),
    /// Logistic-regression transfer between truncated Gaussian domains.
    Logistic(RunArgs),
    /// Noisy gradient descent against the information-budget bound.
    NoisyGd(RunArgs),
    /// Evaluate one bound from a key-value parts file.
    BoundEval(BoundEvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base parameter set the config file and flags are applied to.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; defaults to the config's `output`, then stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Print each row's bound breakdown.
    #[arg(long)]
    summary: bool,
    /// Directory for per-trial CSV records, one file per grid point.
    #[arg(long, value_name = "DIR")]
    trials_out: Option<PathBuf>,
    /// Noisy GD only: CSV of the first trial's iterates.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BoundEvalArgs {
    /// Parts file naming the theorem and its inputs.
    parts: PathBuf,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write the report as a one-row CSV instead of printing it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// With `--out`, also print the breakdown.
    #[arg(long)]
    summary: bool,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()).into())
}

fn build_config(experiment: Experiment, a: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::parse_with_preset(&read(p)?, Some(experiment), a.preset)
            .map_err(|e| format!("{}: {e}", p.display()))?,
        None => ExperimentConfig::defaults(experiment, a.preset.unwrap_or_default()),
    };
    let c = &mut cfg.common;
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.trials {
        c.trials = v;
    }
    if let Some(v) = a.mc_samples {
        c.mc_samples = v;
    }
    if let Some(v) = a.delta {
        c.delta = v;
    }
    if let Some(v) = a.epsilon {
        c.epsilon = v;
    }
    if let Some(p) = &a.out {
        c.output = Some(p.clone());
    }
    c.keep_records |= a.trials_out.is_some() || a.trace.is_some();
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(experiment: Experiment, a: RunArgs) -> CliResult<()> {
    if a.trace.is_some() && experiment != Experiment::NoisyGd {
        return Err("--trace only applies to noisy-gd".into());
    }
    let cfg = build_config(experiment, &a)?;
    let rows = run(&cfg)?;

    let to_stdout = cfg.common.output.is_none();
    match &cfg.common.output {
        Some(p) => emit_csv(&rows, p)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if a.summary {
        let text = summaries(&rows);
        if to_stdout {
            eprint!("{text}");
        } else {
            print!("{text}");
        }
    }
    if let Some(dir) = &a.trials_out {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        for r in rows.iter().filter(|r| !r.trial_records.is_empty()) {
            let path = dir.join(format!("trials_{}_{}_{}.csv", r.experiment, r.grid_key, r.grid_value));
            write_trials_csv(&r.trial_records, &path)?;
        }
    }
    if let Some(path) = &a.trace {
        let trace = rows.iter().find_map(|r| r.trace.as_ref()).ok_or("no trace was recorded")?;
        trace.write_csv(path)?;
    }
    Ok(())
}

fn summaries(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&r.summary());
        s.push_str("\n\n");
    }
    s
}

fn bound_eval(a: BoundEvalArgs) -> CliResult<()> {
    let text = read(&a.parts)?;
    let overrides = PartsOverrides {
        delta: a.delta,
        epsilon: a.epsilon,
    };
    let report = evaluate_parts(&text, overrides).map_err(|e| format!("{}: {e}", a.parts.display()))?;
    match &a.out {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| format!("cannot create {}: {e}", p.display()))?;
            write_reports_csv(std::slice::from_ref(&report), file)?;
            if a.summary {
                println!("{report}");
            }
        }
        None => println!("{report}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gaussian(a) => run_experiment(Experiment::GaussianMean, a),
        Command::Logistic(a) => run_experiment(Experiment::LogisticTransfer, a),
        Command::NoisyGd(a) => run_experiment(Experiment::NoisyGd, a),
        Command::BoundEval(a) => bound_eval(a),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
