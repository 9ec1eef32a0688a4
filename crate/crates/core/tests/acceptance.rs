//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is pinned below.

use std::f64::consts::FRAC_PI_6;
use std::time::{Duration, Instant};

use frechet_subspace::grassmann::{
    distance_geodesic, exp_map, geodesic_point, log_map, principal_angles,
};
use frechet_subspace::harness::experiments::{
    run_convergence, run_lemma1_mc, run_p_sweep, run_toy_example, ConvergenceRun, PLATEAU_WINDOW,
};
use frechet_subspace::harness::records::write_csv_to;
use frechet_subspace::harness::{run_experiment, Experiment, ExperimentConfig};
use frechet_subspace::observation::{
    coherence_mu, coherence_nu, condition_number, rowspace_coherence, sample_gaussian_coefficients,
    subspace_gaussian, subspace_identity_columns, subspace_pathological_sparse, SubspaceCase,
};
use frechet_subspace::rng::{Purpose, SeedStreams};
use frechet_subspace::theory::gaussian_q_predictions;
use rand::Rng;

const SEED: u64 = 2017;

// 1
const TOY_TOL: f64 = 0.02;
const TOY_EPSILON: f64 = 1e-3;
const TOY_GRID: f64 = 1e-3;
// 2
const EXACT_TOL: f64 = 1e-8;
const EXACT_BLOCKS: usize = 50;
// 3
const GEOMETRY_SAMPLES: u64 = 200;
const SYMMETRY_TOL: f64 = 1e-12;
const TRIANGLE_SLACK: f64 = -1e-9;
const PROPORTION_TOL: f64 = 1e-8;
const ROUND_TRIP_TOL: f64 = 1e-9;
const SINE_TOL: f64 = 1e-9;
// 4
const NU_ZERO_TOL: f64 = 1e-12;
const NU_PATHOLOGICAL: f64 = 12.5;
const NU_PATHOLOGICAL_TOL: f64 = 1e-9;
const COHERENCE_SAMPLES: u64 = 100;
// 5: 10th percentile of the pathological/gaussian ratio over 100 pilot seed sets (1..=100)
const FIG1_RATIO_THRESHOLD: f64 = 1.3;
const PLATEAU_REL_STD: f64 = 0.2;
/// A curve whose plateau mean is below this is identically zero and counts as flat.
const PLATEAU_ZERO: f64 = 1e-12;
// 6
const MONOTONE_SLACK: f64 = 1.05;
const SWEEP_RATIO_PAIR: (f64, f64) = (0.12, 0.48);
const SWEEP_RATIO_RANGE: (f64, f64) = (1.4, 2.9);
// 7
const COVERAGE_MIN: f64 = 0.99;
const COVERAGE_LEVELS: [f64; 2] = [0.25, 1.0];
const SPECTRAL_RATIO_PAIR: (f64, f64) = (0.125, 0.5);
const SPECTRAL_RATIO_RANGE: (f64, f64) = (1.6, 2.4);
// 8
const GAUSSIAN_Q_R: usize = 2;
const GAUSSIAN_Q_B: usize = 200;
const GAUSSIAN_Q_SEEDS: u64 = 100;
const GAUSSIAN_Q_MIN_OK: usize = 99;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run(id: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = v.pass && in_time;
    println!(
        "criterion {id}: {} | {} | {:.2}s (limit {}s{})",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn toy() -> Verdict {
    let angle = run_toy_example(TOY_EPSILON, TOY_GRID).unwrap();
    verdict(
        (angle - FRAC_PI_6).abs() <= TOY_TOL,
        format!("angle {angle:.6} vs pi/6 {FRAC_PI_6:.6}, tol {TOY_TOL}"),
    )
}

fn exactness() -> Verdict {
    let config = ExperimentConfig {
        p: vec![1.0],
        blocks: EXACT_BLOCKS,
        ..ExperimentConfig::defaults(Experiment::Convergence)
    };
    let run = run_convergence(&config).unwrap();
    let mut worst = 0.0f64;
    let mut missing = 0;
    for (_, trials) in &run.by_case {
        for t in trials {
            for d in &t.distances {
                match d {
                    Some(d) => worst = worst.max(*d),
                    None => missing += 1,
                }
            }
        }
    }
    verdict(
        worst < EXACT_TOL && missing == 0,
        format!("max d_G {worst:.3e} over 3 cases, {missing} blocks without estimate, tol {EXACT_TOL:e}"),
    )
}

fn geometry() -> Verdict {
    let streams = SeedStreams::new(SEED);
    let (mut sym, mut tri, mut prop, mut trip, mut sine) =
        (0.0f64, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..GEOMETRY_SAMPLES {
        let mut g = streams.stream(Purpose::Subspace, i);
        let a = subspace_gaussian(8, 2, &mut g).unwrap();
        let b = subspace_gaussian(8, 2, &mut g).unwrap();
        let c = subspace_gaussian(8, 2, &mut g).unwrap();
        let rho: f64 = g.random();

        let ab = distance_geodesic(&a, &b).unwrap();
        sym = sym.max((ab - distance_geodesic(&b, &a).unwrap()).abs());
        tri = tri.min(distance_geodesic(&a, &c).unwrap() + distance_geodesic(&c, &b).unwrap() - ab);
        let m = geodesic_point(&a, &b, rho).unwrap();
        prop = prop.max((distance_geodesic(&a, &m).unwrap() - rho * ab).abs());
        let back = exp_map(&a, &log_map(&a, &b).unwrap()).unwrap();
        trip = trip.max(distance_geodesic(&back, &b).unwrap());

        let mut sines = principal_angles(&a, &b).unwrap().sines();
        sines.sort_by(|x, y| x.total_cmp(y));
        let mut eig: Vec<f64> = (a.projector() - b.projector())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .filter(|x| *x > 1e-12)
            .collect();
        eig.sort_by(|x, y| x.total_cmp(y));
        if eig.len() != sines.len() {
            sine = f64::INFINITY;
        }
        for (s, e) in sines.iter().zip(&eig) {
            sine = sine.max((s - e).abs());
        }
    }
    verdict(
        sym <= SYMMETRY_TOL
            && tri >= TRIANGLE_SLACK
            && prop <= PROPORTION_TOL
            && trip <= ROUND_TRIP_TOL
            && sine <= SINE_TOL,
        format!(
            "{GEOMETRY_SAMPLES} triples in G(8,2): symmetry {sym:.1e}, min triangle slack {tri:.1e}, \
             proportionality {prop:.1e}, round trip {trip:.1e}, sines vs projector {sine:.1e}"
        ),
    )
}

fn coherence() -> Verdict {
    let n = 50;
    let id = subspace_identity_columns(n, 2).unwrap();
    let (mu_id, nu_id) = (coherence_mu(&id), coherence_nu(&id));
    let nu_path = coherence_nu(&subspace_pathological_sparse(n).unwrap());
    let streams = SeedStreams::new(SEED);
    let mut violations = 0;
    for i in 0..COHERENCE_SAMPLES {
        let s = subspace_gaussian(n, 2, &mut streams.stream(Purpose::Subspace, i)).unwrap();
        if coherence_nu(&s) > coherence_mu(&s) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    verdict(
        mu_id == n as f64 / 2.0
            && nu_id < NU_ZERO_TOL
            && (nu_path - NU_PATHOLOGICAL).abs() <= NU_PATHOLOGICAL_TOL
            && violations == 0,
        format!(
            "mu(identity) = {mu_id}, nu(identity) = {nu_id:.1e}, nu(pathological) = {nu_path:.12}, \
             nu > mu in {violations}/{COHERENCE_SAMPLES}"
        ),
    )
}

/// Relative std of the trial-averaged curve over the plateau window.
fn plateau(run: &ConvergenceRun, case: SubspaceCase) -> (f64, f64) {
    let trials = run.trials(case);
    let k = trials[0].distances.len();
    let curve: Vec<f64> = (k - PLATEAU_WINDOW..k)
        .map(|i| {
            let d: Vec<f64> = trials.iter().filter_map(|t| t.distances[i]).collect();
            d.iter().sum::<f64>() / d.len() as f64
        })
        .collect();
    let mean = curve.iter().sum::<f64>() / curve.len() as f64;
    let std = (curve.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / curve.len() as f64).sqrt();
    (mean, std)
}

fn csv_bytes(config: &ExperimentConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv_to(&run_experiment(config).unwrap().records(), &mut buf).unwrap();
    buf
}

fn convergence_ordering() -> Verdict {
    let config = ExperimentConfig::defaults(Experiment::Convergence);
    let run = run_convergence(&config).unwrap();
    let bias = |c| run.mean_final_bias(c).unwrap_or(f64::NAN);
    let (path, gauss, ident) = (
        bias(SubspaceCase::Pathological),
        bias(SubspaceCase::Gaussian),
        bias(SubspaceCase::Identity),
    );
    let ordered = path >= FIG1_RATIO_THRESHOLD * gauss
        && path >= FIG1_RATIO_THRESHOLD * ident
        && path > ident;
    let mut flat = true;
    let mut notes = Vec::new();
    for case in [SubspaceCase::Gaussian, SubspaceCase::Identity] {
        let (mean, std) = plateau(&run, case);
        let ok = std < PLATEAU_REL_STD * mean || mean < PLATEAU_ZERO;
        flat &= ok;
        notes.push(format!("{case} plateau std/mean {std:.2e}/{mean:.2e}"));
    }
    verdict(
        ordered && flat,
        format!(
            "final bias pathological {path:.4}, gaussian {gauss:.4}, identity {ident:.2e}; \
             ratio path/gauss {:.3} (threshold {FIG1_RATIO_THRESHOLD}); {}",
            path / gauss,
            notes.join(", ")
        ),
    )
}

fn p_sweep() -> Verdict {
    let config = ExperimentConfig::defaults(Experiment::PSweep);
    let sweep = run_p_sweep(&config).unwrap();
    let means: Vec<f64> = config
        .p
        .iter()
        .map(|&p| {
            sweep
                .level(SubspaceCase::Gaussian, p)
                .unwrap()
                .mean_final_bias()
                .unwrap()
        })
        .collect();
    let monotone = means.windows(2).all(|w| w[1] <= MONOTONE_SLACK * w[0]);

    let pair = ExperimentConfig {
        p: vec![SWEEP_RATIO_PAIR.0, SWEEP_RATIO_PAIR.1],
        ..config.clone()
    };
    let pair_run = run_p_sweep(&pair).unwrap();
    let at = |p| {
        pair_run
            .level(SubspaceCase::Gaussian, p)
            .unwrap()
            .mean_final_bias()
            .unwrap()
    };
    let ratio = at(SWEEP_RATIO_PAIR.0) / at(SWEEP_RATIO_PAIR.1);
    let in_range = (SWEEP_RATIO_RANGE.0..=SWEEP_RATIO_RANGE.1).contains(&ratio);
    verdict(
        monotone && in_range,
        format!(
            "means {:?} at p {:?} (monotone: {monotone}); bias({})/bias({}) = {ratio:.3}, range {:?}",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            config.p,
            SWEEP_RATIO_PAIR.0,
            SWEEP_RATIO_PAIR.1,
            SWEEP_RATIO_RANGE
        ),
    )
}

fn spectral_mc() -> Verdict {
    let config = ExperimentConfig::defaults(Experiment::Lemma1Mc);
    let study = run_lemma1_mc(&config).unwrap();
    let coverage: Vec<f64> = COVERAGE_LEVELS
        .iter()
        .map(|&p| study.coverage(p).unwrap_or(0.0))
        .collect();
    let covered = coverage.iter().all(|c| *c >= COVERAGE_MIN);
    let ratio = study
        .percentile_ratio(SPECTRAL_RATIO_PAIR.0, SPECTRAL_RATIO_PAIR.1)
        .unwrap_or(f64::NAN);
    let in_range = (SPECTRAL_RATIO_RANGE.0..=SPECTRAL_RATIO_RANGE.1).contains(&ratio);
    verdict(
        covered && in_range,
        format!(
            "constant {:.4}; coverage {:?} at p {:?} (min {COVERAGE_MIN}); \
             p99({})/p99({}) = {ratio:.3}, range {:?}",
            study.constant,
            coverage
                .iter()
                .map(|c| format!("{c:.3}"))
                .collect::<Vec<_>>(),
            COVERAGE_LEVELS,
            SPECTRAL_RATIO_PAIR.0,
            SPECTRAL_RATIO_PAIR.1,
            SPECTRAL_RATIO_RANGE
        ),
    )
}

fn gaussian_q() -> Verdict {
    let (mu_max, kappa_max) = gaussian_q_predictions(GAUSSIAN_Q_R, GAUSSIAN_Q_B).unwrap();
    let streams = SeedStreams::new(SEED);
    let ok = (0..GAUSSIAN_Q_SEEDS)
        .filter(|&i| {
            let q = sample_gaussian_coefficients(
                GAUSSIAN_Q_R,
                GAUSSIAN_Q_B,
                &mut streams.stream(Purpose::Coefficients, i),
            )
            .unwrap();
            condition_number(&q).unwrap() <= kappa_max && rowspace_coherence(&q).unwrap() <= mu_max
        })
        .count();
    verdict(
        ok >= GAUSSIAN_Q_MIN_OK,
        format!("{ok}/{GAUSSIAN_Q_SEEDS} seeds within kappa <= {kappa_max:.4}, mu <= {mu_max:.4}"),
    )
}

fn determinism() -> Verdict {
    let mut same = Vec::new();
    for e in [
        Experiment::Toy,
        Experiment::Convergence,
        Experiment::PSweep,
        Experiment::Lemma1Mc,
    ] {
        let config = ExperimentConfig::defaults(e);
        same.push((e, csv_bytes(&config) == csv_bytes(&config)));
    }
    verdict(
        same.iter().all(|(_, s)| *s),
        format!(
            "byte-identical reruns: {}",
            same.iter()
                .map(|(e, s)| format!("{e}={s}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() {
    // `cargo test -- --list` and friends must not run the suite
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let secs = Duration::from_secs;
    let results = [
        run("1 toy bias", secs(1), toy),
        run("2 exactness at p=1", secs(5), exactness),
        run("3 metric/geodesic suite", secs(10), geometry),
        run("4 coherence identities", secs(5), coherence),
        run("5 convergence ordering and plateau", secs(120), convergence_ordering),
        run("6 p monotonicity and scaling", secs(240), p_sweep),
        run("7 spectral bound Monte-Carlo", secs(120), spectral_mc),
        run("8 gaussian Q predictions", secs(30), gaussian_q),
        run("9 determinism", secs(240), determinism),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
