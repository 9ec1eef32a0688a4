//! The seeded experiments: the two-dimensional toy distribution, streaming
//! convergence, the p sweep and the spectral-bound Monte-Carlo study.
//!
//! Every trial (or draw) owns its random streams, so running trials in
//! parallel yields exactly the same records as running them in order.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::records::{case_tag, Metric, TrialRecord};
use crate::error::{Error, Result};
use crate::estimator::{
    batch_frechet_discrete, block_span, init_state, streaming_update, BlockSpanOptions,
    FrechetMethod, RunningMeanState,
};
use crate::grassmann::{distance_geodesic, distance_spectral, Subspace};
use crate::observation::{
    coherence_mu, coherence_nu, condition_number, generate_block, rowspace_coherence,
    sample_gaussian_coefficients, sample_mask, SubspaceCase,
};
use crate::rng::{Purpose, SeedStreams};
use crate::theory::{lemma1_spectral_bound, Lemma1Params};

/// Number of trailing blocks averaged into the plateau (final) bias.
pub const PLATEAU_WINDOW: usize = 50;
/// The spectral-bound constant is calibrated at this p.
pub const LEMMA1_CALIBRATION_P: f64 = 0.5;
/// Failure probability `e^{−α}` of the spectral bound is 1%.
pub const LEMMA1_ALPHA: f64 = std::f64::consts::LN_10 * 2.0;
pub const LEMMA1_PERCENTILE: f64 = 99.0;

/// Angle between the Fréchet mean of {span(e1), span(e2), span(S_ε)}, each with
/// probability 1/3, and `S_ε = [√(1−ε²), ε]`. The mean is found by grid search.
pub fn run_toy_example(epsilon: f64, grid_step: f64) -> Result<f64> {
    if !(0.0..=0.1).contains(&epsilon) {
        return Err(Error::BadParams(format!(
            "epsilon = {epsilon} outside [0, 0.1]"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(Error::BadParams(format!(
            "grid step {grid_step} outside (0, 1e-3]"
        )));
    }
    let truth = Subspace::line_at_angle(epsilon.asin());
    let atoms = [
        Subspace::line_at_angle(0.0),
        Subspace::line_at_angle(FRAC_PI_2),
        truth.clone(),
    ];
    let mean = batch_frechet_discrete(
        &atoms,
        &[1.0 / 3.0; 3],
        FrechetMethod::Grid1d { step: grid_step },
    )?;
    distance_geodesic(&mean, &truth)
}

/// One streaming run against a fixed ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTrial {
    pub case: SubspaceCase,
    pub p: f64,
    pub trial: u64,
    pub seed: u64,
    /// `d_G(F_k, S)` after block k (index k − 1); `None` until a block is accepted.
    pub distances: Vec<Option<f64>>,
    /// Cumulative rejected blocks after block k.
    pub discarded: Vec<usize>,
}

impl ConvergenceTrial {
    fn recorded(&self) -> Vec<f64> {
        self.distances.iter().flatten().copied().collect()
    }

    /// Mean distance over the last `PLATEAU_WINDOW` blocks with an estimate.
    pub fn final_bias(&self) -> Option<f64> {
        self.plateau().map(|(mean, _)| mean)
    }

    /// Mean and population standard deviation over the plateau window.
    pub fn plateau(&self) -> Option<(f64, f64)> {
        let d = self.recorded();
        if d.is_empty() {
            return None;
        }
        let tail = &d[d.len().saturating_sub(PLATEAU_WINDOW)..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let var = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / tail.len() as f64;
        Some((mean, var.sqrt()))
    }

    /// The curve and discard counts as CSV rows.
    pub fn records(&self, experiment: Experiment, case: &str) -> Vec<TrialRecord> {
        let mut out = Vec::with_capacity(2 * self.distances.len());
        for (i, (d, disc)) in self.distances.iter().zip(&self.discarded).enumerate() {
            let row = |metric, value| TrialRecord {
                experiment: experiment.tag().to_owned(),
                case: case.to_owned(),
                trial: self.trial,
                k: i as u64 + 1,
                metric,
                value,
                seed: self.seed,
            };
            if let Some(d) = d {
                out.push(row(Metric::DGeodesic, *d));
            }
            out.push(row(Metric::Discarded, *disc as f64));
        }
        out
    }

    fn final_bias_record(&self, experiment: Experiment, case: &str) -> Option<TrialRecord> {
        self.final_bias().map(|value| TrialRecord {
            experiment: experiment.tag().to_owned(),
            case: case.to_owned(),
            trial: self.trial,
            k: self.distances.len() as u64,
            metric: Metric::FinalBias,
            value,
            seed: self.seed,
        })
    }
}

/// Streams `config.blocks` blocks at observation probability `p` through the
/// running Fréchet mean. The ground truth comes from the trial's subspace
/// stream; block k uses coefficient and mask streams with index k.
pub fn run_convergence_trial(
    config: &ExperimentConfig,
    case: SubspaceCase,
    p: f64,
    trial: u64,
    trial_seed: u64,
) -> Result<ConvergenceTrial> {
    let (n, r, b) = (config.n, config.r, config.b);
    let streams = SeedStreams::new(trial_seed);
    let truth = case.build(n, r, &mut streams.stream(Purpose::Subspace, 0))?;
    let options = BlockSpanOptions::default();

    let mut state: Option<RunningMeanState> = None;
    let mut discarded_before_start = 0;
    let mut distances = Vec::with_capacity(config.blocks);
    let mut discarded = Vec::with_capacity(config.blocks);
    for k in 0..config.blocks as u64 {
        let q = sample_gaussian_coefficients(r, b, &mut streams.stream(Purpose::Coefficients, k))?;
        let mask = sample_mask(n, b, p, &mut streams.stream(Purpose::Mask, k))?;
        let block = generate_block(&truth, &q, &mask)?;
        let span = block_span(&block, r, options)?;
        state = match state {
            Some(st) => Some(streaming_update(st, &span)?),
            None => match span.into_span() {
                Some(first) => Some(init_state(first)),
                None => {
                    discarded_before_start += 1;
                    None
                }
            },
        };
        match &state {
            Some(st) => {
                distances.push(Some(distance_geodesic(st.current(), &truth)?));
                discarded.push(discarded_before_start + st.discarded());
            }
            None => {
                distances.push(None);
                discarded.push(discarded_before_start);
            }
        }
    }
    Ok(ConvergenceTrial {
        case,
        p,
        trial,
        seed: trial_seed,
        distances,
        discarded,
    })
}

fn run_trials(
    config: &ExperimentConfig,
    case: SubspaceCase,
    p: f64,
) -> Result<Vec<ConvergenceTrial>> {
    let root = SeedStreams::new(config.seed);
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_convergence_trial(config, case, p, t, root.child_seed(t)))
        .collect()
}

/// Same as the parallel runner, one trial after another.
pub fn run_trials_sequential(
    config: &ExperimentConfig,
    case: SubspaceCase,
    p: f64,
) -> Result<Vec<ConvergenceTrial>> {
    let root = SeedStreams::new(config.seed);
    (0..config.trials as u64)
        .map(|t| run_convergence_trial(config, case, p, t, root.child_seed(t)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub p: f64,
    /// Trials grouped by case, in `config.cases` order.
    pub by_case: Vec<(SubspaceCase, Vec<ConvergenceTrial>)>,
}

impl ConvergenceRun {
    pub fn trials(&self, case: SubspaceCase) -> &[ConvergenceTrial] {
        self.by_case
            .iter()
            .find(|(c, _)| *c == case)
            .map(|(_, t)| t.as_slice())
            .unwrap_or(&[])
    }

    /// Mean over trials of the plateau bias; trials with no estimate are skipped.
    pub fn mean_final_bias(&self, case: SubspaceCase) -> Option<f64> {
        mean(
            self.trials(case)
                .iter()
                .filter_map(ConvergenceTrial::final_bias),
        )
    }

    pub fn records(&self) -> Vec<TrialRecord> {
        let mut out = Vec::new();
        for (case, trials) in &self.by_case {
            for t in trials {
                out.extend(t.records(Experiment::Convergence, case.as_str()));
                out.extend(t.final_bias_record(Experiment::Convergence, case.as_str()));
            }
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Streaming convergence for every configured case at the first configured p.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceRun> {
    config.validate()?;
    let p = config.p[0];
    let by_case = config
        .cases
        .iter()
        .map(|&case| Ok((case, run_trials(config, case, p)?)))
        .collect::<Result<_>>()?;
    Ok(ConvergenceRun { p, by_case })
}

#[derive(Clone, Debug)]
pub struct SweepLevel {
    pub p: f64,
    pub case: SubspaceCase,
    pub trials: Vec<ConvergenceTrial>,
}

impl SweepLevel {
    pub fn mean_final_bias(&self) -> Option<f64> {
        mean(self.trials.iter().filter_map(ConvergenceTrial::final_bias))
    }
}

#[derive(Clone, Debug)]
pub struct PSweepRun {
    pub levels: Vec<SweepLevel>,
}

impl PSweepRun {
    pub fn level(&self, case: SubspaceCase, p: f64) -> Option<&SweepLevel> {
        self.levels.iter().find(|l| l.case == case && l.p == p)
    }

    /// One `final_bias` row per (case, p, trial).
    pub fn records(&self) -> Vec<TrialRecord> {
        self.levels
            .iter()
            .flat_map(|level| {
                let tag = case_tag(level.case.as_str(), level.p);
                level
                    .trials
                    .iter()
                    .filter_map(move |t| t.final_bias_record(Experiment::PSweep, &tag))
            })
            .collect()
    }
}

/// Convergence trials at every configured p. Trial seeds do not depend on p,
/// so each level sees the same ground truths and coefficient draws.
pub fn run_p_sweep(config: &ExperimentConfig) -> Result<PSweepRun> {
    config.validate()?;
    let mut levels = Vec::new();
    for &case in &config.cases {
        for &p in &config.p {
            levels.push(SweepLevel {
                p,
                case,
                trials: run_trials(config, case, p)?,
            });
        }
    }
    Ok(PSweepRun { levels })
}

/// One Monte-Carlo draw of the spectral-bound study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDraw {
    /// `‖P_{S⊥} P_Y‖`
    pub distance: f64,
    /// The bound evaluated with constant 1 and this draw's κ(Q), μ(Q), ν(S), μ(S).
    pub unit_bound: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralLevel {
    pub p: f64,
    /// Accepted draws, in draw order.
    pub draws: Vec<SpectralDraw>,
    /// Draw indices (into `0..config.draws`) of rejected blocks.
    pub rejected: Vec<u64>,
}

impl SpectralLevel {
    pub fn distances(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.distance).collect()
    }

    pub fn percentile(&self, q: f64) -> f64 {
        percentile(&self.distances(), q)
    }
}

#[derive(Clone, Debug)]
pub struct Lemma1Study {
    pub levels: Vec<SpectralLevel>,
    /// Constant making the bound equal the 99th percentile of `distance / unit_bound`
    /// at the calibration p.
    pub constant: f64,
    pub seed: u64,
}

impl Lemma1Study {
    pub fn level(&self, p: f64) -> Option<&SpectralLevel> {
        self.levels.iter().find(|l| l.p == p)
    }

    /// Fraction of accepted draws at `p` lying under the calibrated bound.
    pub fn coverage(&self, p: f64) -> Option<f64> {
        let level = self.level(p)?;
        if level.draws.is_empty() {
            return None;
        }
        let covered = level
            .draws
            .iter()
            .filter(|d| d.distance <= self.constant * d.unit_bound)
            .count();
        Some(covered as f64 / level.draws.len() as f64)
    }

    /// `percentile_99(low) / percentile_99(high)`.
    pub fn percentile_ratio(&self, low: f64, high: f64) -> Option<f64> {
        let a = self.level(low)?.percentile(LEMMA1_PERCENTILE);
        let b = self.level(high)?.percentile(LEMMA1_PERCENTILE);
        Some(a / b)
    }

    pub fn records(&self) -> Vec<TrialRecord> {
        let mut out = Vec::new();
        for level in &self.levels {
            let tag = case_tag(SubspaceCase::Gaussian.as_str(), level.p);
            let row = |k: u64, metric, value| TrialRecord {
                experiment: Experiment::Lemma1Mc.tag().to_owned(),
                case: tag.clone(),
                trial: 0,
                k,
                metric,
                value,
                seed: self.seed,
            };
            let mut accepted = level.draws.iter();
            let total = level.draws.len() + level.rejected.len();
            let mut rejected = level.rejected.iter().peekable();
            for k in 0..total as u64 {
                if rejected.peek() == Some(&&k) {
                    rejected.next();
                    continue;
                }
                if let Some(d) = accepted.next() {
                    out.push(row(k, Metric::SpectralGap, d.distance));
                }
            }
            out.push(row(
                total as u64,
                Metric::Discarded,
                level.rejected.len() as f64,
            ));
            out.push(row(
                total as u64,
                Metric::Percentile99,
                level.percentile(LEMMA1_PERCENTILE),
            ));
        }
        out
    }
}

fn spectral_draw(
    config: &ExperimentConfig,
    root: &SeedStreams,
    p: f64,
    draw: u64,
) -> Result<Option<SpectralDraw>> {
    let (n, r, b) = (config.n, config.r, config.b);
    let truth = SubspaceCase::Gaussian.build(n, r, &mut root.stream(Purpose::Subspace, draw))?;
    let q = sample_gaussian_coefficients(r, b, &mut root.stream(Purpose::Coefficients, draw))?;
    // the same mask stream at every p couples the levels: masks are nested in p
    let mask = sample_mask(n, b, p, &mut root.stream(Purpose::Mask, draw))?;
    let span = block_span(
        &generate_block(&truth, &q, &mask)?,
        r,
        BlockSpanOptions::default(),
    )?;
    let Some(span) = span.span() else {
        return Ok(None);
    };
    let bound = lemma1_spectral_bound(&Lemma1Params {
        alpha: LEMMA1_ALPHA,
        kappa_q: condition_number(&q)?,
        n,
        b,
        r,
        p,
        nu_s: coherence_nu(&truth),
        mu_s: coherence_mu(&truth),
        mu_q: rowspace_coherence(&q)?,
        constant: 1.0,
    })?;
    Ok(Some(SpectralDraw {
        distance: distance_spectral(&truth, span)?,
        unit_bound: bound.value,
    }))
}

/// Draws `config.draws` independent (S, Q, mask) triples per p, measures the
/// largest angle between S and the block span, and calibrates the bound's
/// constant at p = 0.5.
pub fn run_lemma1_mc(config: &ExperimentConfig) -> Result<Lemma1Study> {
    config.validate()?;
    let root = SeedStreams::new(config.seed);
    let mut levels = Vec::with_capacity(config.p.len());
    for &p in &config.p {
        let outcomes: Vec<Option<SpectralDraw>> = (0..config.draws as u64)
            .into_par_iter()
            .map(|d| spectral_draw(config, &root, p, d))
            .collect::<Result<_>>()?;
        let mut draws = Vec::new();
        let mut rejected = Vec::new();
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Some(d) => draws.push(d),
                None => rejected.push(i as u64),
            }
        }
        levels.push(SpectralLevel { p, draws, rejected });
    }
    let calibration = levels
        .iter()
        .find(|l| l.p == LEMMA1_CALIBRATION_P)
        .ok_or_else(|| Error::BadParams("calibration level missing".into()))?;
    let ratios: Vec<f64> = calibration
        .draws
        .iter()
        .map(|d| d.distance / d.unit_bound)
        .collect();
    if ratios.is_empty() {
        return Err(Error::BadParams(
            "every calibration draw was rejected".into(),
        ));
    }
    let constant = percentile(&ratios, LEMMA1_PERCENTILE);
    Ok(Lemma1Study {
        levels,
        constant,
        seed: config.seed,
    })
}

/// Linear-interpolation percentile (`q` in [0, 100]) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 100.0) / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Output of any experiment, ready to be written.
#[derive(Clone, Debug)]
pub enum Outcome {
    Toy { angle: f64, seed: u64 },
    Convergence(ConvergenceRun),
    PSweep(PSweepRun),
    Lemma1(Lemma1Study),
}

impl Outcome {
    pub fn records(&self) -> Vec<TrialRecord> {
        match self {
            Outcome::Toy { angle, seed } => vec![TrialRecord {
                experiment: Experiment::Toy.tag().to_owned(),
                case: "toy".to_owned(),
                trial: 0,
                k: 0,
                metric: Metric::FinalBias,
                value: *angle,
                seed: *seed,
            }],
            Outcome::Convergence(run) => run.records(),
            Outcome::PSweep(run) => run.records(),
            Outcome::Lemma1(study) => study.records(),
        }
    }

    /// Human-readable summary lines.
    pub fn summary(&self) -> Vec<String> {
        match self {
            Outcome::Toy { angle, .. } => vec![format!("toy: angle to truth = {angle:.6} rad")],
            Outcome::Convergence(run) => run
                .by_case
                .iter()
                .map(|(case, _)| {
                    format!(
                        "convergence p={}: {case} mean final bias = {}",
                        run.p,
                        fmt_opt(run.mean_final_bias(*case))
                    )
                })
                .collect(),
            Outcome::PSweep(run) => run
                .levels
                .iter()
                .map(|l| {
                    format!(
                        "p-sweep {} p={}: mean final bias = {}",
                        l.case,
                        l.p,
                        fmt_opt(l.mean_final_bias())
                    )
                })
                .collect(),
            Outcome::Lemma1(study) => {
                let mut lines = vec![format!(
                    "lemma1-mc: calibrated constant = {:.6}",
                    study.constant
                )];
                for l in &study.levels {
                    lines.push(format!(
                        "lemma1-mc p={}: 99th percentile = {:.6}, coverage = {}, rejected = {}",
                        l.p,
                        l.percentile(LEMMA1_PERCENTILE),
                        fmt_opt(study.coverage(l.p)),
                        l.rejected.len()
                    ));
                }
                lines
            }
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.6}"))
}

/// Runs whatever `config.experiment` names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::Toy => Outcome::Toy {
            angle: run_toy_example(config.epsilon, config.grid_step)?,
            seed: config.seed,
        },
        Experiment::Convergence => Outcome::Convergence(run_convergence(config)?),
        Experiment::PSweep => Outcome::PSweep(run_p_sweep(config)?),
        Experiment::Lemma1Mc => Outcome::Lemma1(run_lemma1_mc(config)?),
    })
}
