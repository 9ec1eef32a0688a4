//! Experiment configuration: per-experiment defaults, flat `key = value`
//! override files, and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::observation::SubspaceCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Toy,
    Convergence,
    PSweep,
    Lemma1Mc,
}

impl Experiment {
    /// Tag written to the `experiment` CSV column.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Toy => "toy",
            Self::Convergence => "convergence",
            Self::PSweep => "p_sweep",
            Self::Lemma1Mc => "lemma1_mc",
        }
    }

    /// Subcommand name.
    pub fn command(&self) -> &'static str {
        match self {
            Self::Toy => "toy",
            Self::Convergence => "convergence",
            Self::PSweep => "p-sweep",
            Self::Lemma1Mc => "lemma1-mc",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Everything an experiment run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub r: usize,
    pub b: usize,
    /// Observation probabilities; experiments other than the sweeps use the first.
    pub p: Vec<f64>,
    /// Number of blocks K per trial.
    pub blocks: usize,
    pub cases: Vec<SubspaceCase>,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub epsilon: f64,
    pub grid_step: f64,
    /// Monte-Carlo draws per p level (spectral-bound study only).
    pub draws: usize,
}

pub const DEFAULT_SEED: u64 = 2017;

impl ExperimentConfig {
    /// Defaults for each experiment; the streaming runs use n = 50, r = 2,
    /// p = 3r/n and b = 5r.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            n: 50,
            r: 2,
            b: 10,
            p: vec![0.12],
            blocks: 400,
            cases: SubspaceCase::ALL.to_vec(),
            trials: 10,
            seed: DEFAULT_SEED,
            output_path: None,
            epsilon: 1e-3,
            grid_step: 1e-3,
            draws: 500,
        };
        match experiment {
            Experiment::Toy => Self {
                n: 2,
                r: 1,
                b: 1,
                p: vec![0.5],
                blocks: 1,
                trials: 1,
                cases: vec![],
                ..base
            },
            Experiment::Convergence => base,
            Experiment::PSweep => Self {
                p: vec![0.12, 0.3, 0.6, 1.0],
                cases: vec![SubspaceCase::Gaussian],
                ..base
            },
            Experiment::Lemma1Mc => Self {
                b: 50,
                p: vec![0.125, 0.25, 0.5, 1.0],
                cases: vec![SubspaceCase::Gaussian],
                trials: 1,
                ..base
            },
        }
    }

    /// Applies one `key = value` setting; keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("invalid value `{value}` for `{key}`")))
        }
        match key.trim() {
            "n" => self.n = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "b" => self.b = num(key, value)?,
            "p" => {
                self.p = value
                    .split(',')
                    .map(|v| num(key, v))
                    .collect::<Result<Vec<f64>>>()?
            }
            "blocks" => self.blocks = num(key, value)?,
            "case" => self.cases = vec![value.trim().parse()?],
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.output_path = Some(PathBuf::from(value.trim())),
            "epsilon" => self.epsilon = num(key, value)?,
            "grid-step" | "grid_step" => self.grid_step = num(key, value)?,
            "draws" => self.draws = num(key, value)?,
            other => return Err(Error::Usage(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |msg: String| Err(Error::Usage(msg));
        if self.r == 0 || self.r >= self.n {
            return usage(format!(
                "need 1 <= r < n, got n = {}, r = {}",
                self.n, self.r
            ));
        }
        if self.r > self.b {
            return usage(format!("need r <= b, got r = {}, b = {}", self.r, self.b));
        }
        if self.p.is_empty() {
            return usage("at least one p is required".into());
        }
        if let Some(bad) = self.p.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return usage(format!("p = {bad} outside (0, 1]"));
        }
        if self.blocks == 0 || self.trials == 0 || self.draws == 0 {
            return usage("blocks, trials and draws must be positive".into());
        }
        match self.experiment {
            Experiment::Toy => {
                if !(0.0..=0.1).contains(&self.epsilon) {
                    return usage(format!("epsilon = {} outside [0, 0.1]", self.epsilon));
                }
                if !(self.grid_step > 0.0 && self.grid_step <= 1e-3) {
                    return usage(format!("grid step {} outside (0, 1e-3]", self.grid_step));
                }
            }
            Experiment::Convergence | Experiment::PSweep => {
                if self.cases.is_empty() {
                    return usage("no subspace case selected".into());
                }
                if self.cases.contains(&SubspaceCase::Pathological) && (self.r != 2 || self.n < 5) {
                    return usage("the pathological case needs r = 2 and n >= 5".into());
                }
                if self.experiment == Experiment::PSweep && self.p.windows(2).any(|w| w[0] > w[1]) {
                    return usage("p values must be sorted ascending".into());
                }
            }
            Experiment::Lemma1Mc => {
                if self.cases != [SubspaceCase::Gaussian] {
                    return usage("the spectral-bound study uses the gaussian case only".into());
                }
                if !self
                    .p
                    .contains(&crate::harness::experiments::LEMMA1_CALIBRATION_P)
                {
                    return usage(
                        "the spectral-bound study calibrates at p = 0.5, include it".into(),
                    );
                }
            }
        }
        Ok(())
    }
}
