mod common;

use common::random_subspace;
use frechet_subspace::estimator::{
    batch_frechet_discrete, block_span, init_state, line_angle, line_distance, streaming_update,
    BlockSpanOptions, FrechetMethod,
};
use frechet_subspace::grassmann::{distance_geodesic, KarcherOptions};
use frechet_subspace::harness::experiments::run_convergence_trial;
use frechet_subspace::harness::{Experiment, ExperimentConfig};
use frechet_subspace::observation::{apply_erasure, ErasureMask, SubspaceCase};
use frechet_subspace::Subspace;
use proptest::prelude::*;

fn span_of(line: &Subspace) -> frechet_subspace::estimator::BlockSpanResult {
    let block = apply_erasure(line.basis(), &ErasureMask::full(2, 1)).unwrap();
    block_span(&block, 1, BlockSpanOptions::default()).unwrap()
}

fn clustered(center: f64, offsets: &[f64]) -> Vec<Subspace> {
    offsets
        .iter()
        .map(|o| Subspace::line_at_angle(center + o))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    /// Inside an arc shorter than π/2 the recursion is a running average of angles.
    #[test]
    fn streaming_lines_average_their_angles(
        center in 0.0f64..std::f64::consts::PI,
        offsets in proptest::collection::vec(-0.7f64..0.7, 1..30),
    ) {
        let lines = clustered(center, &offsets);
        let mut state = init_state(lines[0].clone());
        for line in &lines[1..] {
            state = streaming_update(state, &span_of(line)).unwrap();
        }
        let mean_offset = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let got = line_angle(state.current()).unwrap();
        prop_assert!(line_distance(got, center + mean_offset) < 1e-9);
        prop_assert_eq!(state.count(), offsets.len());
    }

    #[test]
    fn grid_agrees_with_karcher(
        center in 0.0f64..std::f64::consts::PI,
        offsets in proptest::collection::vec(-0.6f64..0.6, 2..8),
        raw in proptest::collection::vec(0.1f64..1.0, 8),
    ) {
        let atoms = clustered(center, &offsets);
        let w = &raw[..atoms.len()];
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let grid = batch_frechet_discrete(&atoms, &probs, FrechetMethod::grid()).unwrap();
        let karcher = batch_frechet_discrete(&atoms, &probs, FrechetMethod::Karcher(KarcherOptions::default())).unwrap();
        prop_assert!(distance_geodesic(&grid, &karcher).unwrap() <= 2e-3);
    }

    #[test]
    fn karcher_ignores_input_order(seeds in proptest::collection::vec(any::<u64>(), 3..6), shift in 1usize..5) {
        let base = random_subspace(6, 2, seeds[0]);
        // keep the inputs well inside a convex ball around one point
        let atoms: Vec<Subspace> = seeds
            .iter()
            .map(|s| {
                let far = random_subspace(6, 2, *s);
                frechet_subspace::grassmann::geodesic_point(&base, &far, 0.3).unwrap()
            })
            .collect();
        let probs = vec![1.0 / atoms.len() as f64; atoms.len()];
        let mut rotated = atoms.clone();
        rotated.rotate_left(shift % atoms.len());
        let m = KarcherOptions::default();
        let a = batch_frechet_discrete(&atoms, &probs, FrechetMethod::Karcher(m)).unwrap();
        let b = batch_frechet_discrete(&rotated, &probs, FrechetMethod::Karcher(m)).unwrap();
        prop_assert!(distance_geodesic(&a, &b).unwrap() < 1e-8);
    }
}

#[test]
fn spread_across_trials_shrinks_with_k() {
    let config = ExperimentConfig {
        trials: 12,
        blocks: 200,
        ..ExperimentConfig::defaults(Experiment::Convergence)
    };
    let trials: Vec<_> = (0..12)
        .map(|t| run_convergence_trial(&config, SubspaceCase::Gaussian, 0.3, t, 100 + t).unwrap())
        .collect();
    let spread = |k: usize| {
        let d: Vec<f64> = trials.iter().map(|t| t.distances[k - 1].unwrap()).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64).sqrt()
    };
    let (s5, s50, s200) = (spread(5), spread(50), spread(200));
    assert!(s5 > s50 && s50 > s200, "{s5} {s50} {s200}");
}
