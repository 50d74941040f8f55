use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopretx::analytic::{AnalyticReport, BatchConfig, LossMatrix};
use coopretx::experiments::{self, validation, ExperimentConfig, Mode};
use coopretx::Result;

/// Cooperative retransmission through collisions: closed forms and slotted simulation.
#[derive(Debug, Parser)]
#[command(name = "coopretx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every closed-form quantity for one parameter point.
    Analytic(Options),
    /// Retransmission gain against loss rate, analytic and simulated.
    SweepLoss(Options),
    /// Probabilities of reception states 2 and 4 against loss rate.
    SweepStates(Options),
    /// Network retransmission gain against AP separation.
    SweepOverlap(Options),
    /// Run every validation criterion and report pass/fail.
    Validate,
}

/// Flags override values from `--config`; both override the defaults.
#[derive(Debug, Args)]
struct Options {
    /// Loss rate for single-point runs [default: 0.2]
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated loss rates [default: 0.05,0.1,...,0.5]
    #[arg(long)]
    p_grid: Option<String>,
    /// Comma-separated batch sizes B [default: 100,1000]
    #[arg(long)]
    batch: Option<String>,
    /// Replications per parameter point [default: 100]
    #[arg(long)]
    reps: Option<String>,
    /// Base RNG seed, recorded in every CSV header [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated AP separations [default: rt for analytic, 0,0.25rt,...,2rt for sweep-overlap]
    #[arg(long)]
    d_ap: Option<String>,
    /// Transmission radius [default: 1]
    #[arg(long)]
    rt: Option<String>,
    /// Receivers per AP [default: 10]
    #[arg(long)]
    n: Option<String>,
    /// Output directory [default: results]
    #[arg(long)]
    out: Option<String>,
    /// Plain-text `key = value` file using the flag names as keys
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Options {
    fn resolve(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(mode);
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        let flags = [
            ("p", &self.p),
            ("p-grid", &self.p_grid),
            ("batch", &self.batch),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("d-ap", &self.d_ap),
            ("rt", &self.rt),
            ("n", &self.n),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                config.set(key, value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn analytic(config: &ExperimentConfig) -> Result<()> {
    let loss = LossMatrix::symmetric(config.p)?;
    for &b in &config.batches {
        for d_ap in config.d_ap_grid() {
            let report = AnalyticReport::evaluate(&loss, BatchConfig::new(b)?, config.n, d_ap, config.r_t)?;
            println!("# p = {}, B = {b}, N = {}, d_ap = {d_ap}, r_t = {}", config.p, config.n, config.r_t);
            print!("{}", report.to_kv_string());
        }
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig) -> Result<()> {
    let (rows, name) = match config.mode {
        Mode::SweepLoss => (experiments::sweep_loss(config)?, "sweep_loss"),
        Mode::SweepStates => (experiments::sweep_states(config)?, "sweep_states"),
        Mode::SweepOverlap => (experiments::sweep_overlap(config)?, "sweep_overlap"),
        _ => unreachable!("not a sweep mode"),
    };
    let (csv, script) = experiments::emit_outputs(&rows, config, name)?;
    println!("wrote {} and {}", csv.display(), script.display());
    Ok(())
}

fn validate() -> bool {
    let mut all = true;
    for criterion in &validation::CRITERIA {
        let report = validation::run_criterion(criterion);
        println!("{report}");
        all &= report.passed;
    }
    all
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analytic(o) => o.resolve(Mode::Analytic).and_then(|c| analytic(&c)),
        Command::SweepLoss(o) => o.resolve(Mode::SweepLoss).and_then(|c| sweep(&c)),
        Command::SweepStates(o) => o.resolve(Mode::SweepStates).and_then(|c| sweep(&c)),
        Command::SweepOverlap(o) => o.resolve(Mode::SweepOverlap).and_then(|c| sweep(&c)),
        Command::Validate => {
            return if validate() { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
