//! Command-line front end.
//!
//! Settings are layered: experiment defaults, then `--config FILE`, then flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{Experiment, ExperimentConfig};
use super::experiments::run_experiment;
use super::records::{write_csv, write_csv_to};
use crate::error::{Error, Result};
use crate::observation::SubspaceCase;

#[derive(Parser, Debug)]
#[command(
    name = "frechet-subspace",
    version,
    about = "Streaming Fréchet-mean subspace experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fréchet mean of three lines in the plane.
    Toy(Flags),
    /// Streaming bias curves per subspace case.
    Convergence(Flags),
    /// Final bias as a function of the observation probability.
    #[command(name = "p-sweep")]
    PSweep(Flags),
    /// Monte-Carlo study of the single-block spectral bound.
    #[command(name = "lemma1-mc")]
    Lemma1Mc(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` file applied before the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    /// Observation probability; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Blocks per trial.
    #[arg(long)]
    blocks: Option<usize>,
    /// identity, gaussian or pathological; repeatable.
    #[arg(long)]
    case: Vec<SubspaceCase>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Monte-Carlo draws per p.
    #[arg(long)]
    draws: Option<usize>,
}

impl Flags {
    fn into_config(self, experiment: Experiment) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::defaults(experiment);
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        over!(n, r, b, blocks, trials, seed, epsilon, grid_step, draws);
        if let Some(out) = self.out {
            c.output_path = Some(out);
        }
        if !self.p.is_empty() {
            c.p = self.p;
        }
        if !self.case.is_empty() {
            c.cases = self.case;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments (including the program name) into a validated config.
/// Help and version requests come back as `Error::Usage` carrying the text;
/// use [`run`] for the full exit-code behaviour.
pub fn parse_cli<I, T>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    let (experiment, flags) = match cli.command {
        Command::Toy(f) => (Experiment::Toy, f),
        Command::Convergence(f) => (Experiment::Convergence, f),
        Command::PSweep(f) => (Experiment::PSweep, f),
        Command::Lemma1Mc(f) => (Experiment::Lemma1Mc, f),
    };
    flags.into_config(experiment)
}

/// Runs the CLI. Exit codes: 0 success (or help), 2 usage error, 1 runtime failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        let code = if e.use_stderr() { 2 } else { 0 };
        let _ = e.print();
        return code;
    }
    let config = match parse_cli(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Usage(_) => 2,
                _ => 1,
            };
        }
    };
    match execute(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(config: &ExperimentConfig) -> Result<()> {
    let outcome = run_experiment(config)?;
    let records = outcome.records();
    match &config.output_path {
        Some(path) => write_csv(&records, path)?,
        None => write_csv_to(&records, std::io::stdout().lock())?,
    }
    let mut err = std::io::stderr().lock();
    for line in outcome.summary() {
        let _ = writeln!(err, "{line}");
    }
    Ok(())
}
