//! `cocol` command line: run, sweep and compare experiments.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 divergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cocol_core::algorithms::Precision;
use cocol_core::harness::{compare, run_experiment, sweep_local_steps, ExperimentConfig, Metric, RunResult, Target};
use cocol_core::{Error, Execution};

#[derive(Parser)]
#[command(name = "cocol", version, about = "Decentralized learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one experiment per value of a hyperparameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Swept parameter; only `T` (local steps) is supported.
        #[arg(long, default_value = "T")]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare configs on rounds and bytes to target.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        /// Target metric; defaults to accuracy for classifiers, loss otherwise.
        #[arg(long)]
        metric: Option<String>,
        /// Seeds to aggregate over; defaults to each config's own seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecutionArg {
    Sequential,
    Parallel,
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long, value_enum)]
    execution: Option<ExecutionArg>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
        if let Some(p) = self.precision {
            cfg.hyperparams.precision = match p {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            };
        }
        if let Some(e) = self.eval_interval {
            cfg.eval_interval = e;
        }
        if let Some(e) = self.execution {
            cfg.execution = match e {
                ExecutionArg::Sequential => Execution::Sequential,
                ExecutionArg::Parallel => Execution::Parallel,
            };
        }
    }
}

enum Failure {
    Config(String),
    Diverged(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) => Failure::Config(e.to_string()),
            Error::Divergence { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("{}: {io}", path.display())),
        other => Failure::from(other),
    })?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn describe(r: &RunResult) -> String {
    let s = &r.summary;
    let Some(f) = r.final_record() else {
        return format!("{}: no evaluations", s.label);
    };
    let acc = f.accuracy_mean.map(|a| format!(" accuracy {a:.4}")).unwrap_or_default();
    format!(
        "{}: rounds {} loss {:.6}{acc} consensus {:.3e} bytes {} iterations {}",
        s.label, f.round, f.loss_mean, f.consensus_error, f.bytes, f.iterations
    )
}

fn run(config: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let cfg = load(config, overrides)?;
    let r = run_experiment(&cfg)?;
    println!("{}", describe(&r));
    for t in &r.summary.targets {
        match t.hit {
            Some(h) => println!("target {} {}: round {} bytes {}", t.target.metric.name(), t.target.threshold, h.round, h.bytes),
            None => println!("target {} {}: not reached", t.target.metric.name(), t.target.threshold),
        }
    }
    if r.diverged() {
        return Err(Failure::Diverged(format!("{} diverged after {} rounds", cfg.label(), r.summary.rounds_completed)));
    }
    Ok(())
}

fn sweep(config: &Path, param: &str, values: &[usize], overrides: &Overrides) -> Result<(), Failure> {
    if !matches!(param, "T" | "local_steps") {
        return Err(Failure::Config(format!("unsupported sweep parameter {param:?}; use T")));
    }
    let cfg = load(config, overrides)?;
    let mut diverged = Vec::new();
    for entry in sweep_local_steps(&cfg, values)? {
        match &entry.result {
            Ok(r) => {
                println!("T={} {}", entry.local_steps, describe(r));
                if r.diverged() {
                    diverged.push(entry.local_steps);
                }
            }
            Err(e) => println!("T={} failed: {e}", entry.local_steps),
        }
    }
    if !diverged.is_empty() {
        return Err(Failure::Diverged(format!("diverged for T in {diverged:?}")));
    }
    Ok(())
}

fn compare_cmd(configs: &[PathBuf], thresholds: &[f64], metric: Option<&str>, seeds: &[u64], overrides: &Overrides) -> Result<(), Failure> {
    let cfgs = configs.iter().map(|p| load(p, overrides)).collect::<Result<Vec<_>, _>>()?;
    let metric = match metric {
        Some(m) => m.parse::<Metric>()?,
        None if cfgs[0].problem.is_classification() => Metric::Accuracy,
        None => Metric::Loss,
    };
    let targets: Vec<Target> = thresholds.iter().map(|&threshold| Target { metric, threshold }).collect();
    let mut probe = cfgs.clone();
    for c in &mut probe {
        c.out_dir = None;
    }
    let table = compare(&probe, &targets, seeds)?;
    println!("label,metric,threshold,reached,median_rounds,median_bytes");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "not reached".into());
    for row in &table.rows {
        println!(
            "{},{},{},{}/{},{},{}",
            row.label,
            row.target.metric.name(),
            row.target.threshold,
            row.rounds.reached,
            row.rounds.seeds,
            cell(row.rounds.median),
            cell(row.bytes.median)
        );
    }
    if let Some(dir) = &overrides.out_dir {
        table.write(dir)?;
    }
    let diverged: usize = table.finals.iter().map(|f| f.diverged).sum();
    if diverged > 0 {
        return Err(Failure::Diverged(format!("{diverged} run(s) diverged")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, overrides } => run(config, overrides),
        Command::Sweep { config, param, values, overrides } => sweep(config, param, values, overrides),
        Command::Compare { configs, targets, metric, seeds, overrides } => compare_cmd(configs, targets, metric.as_deref(), seeds, overrides),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Diverged(m)) => {
            eprintln!("diverged: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
