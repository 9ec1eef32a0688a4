#![allow(dead_code)]

use frechet_subspace::observation::subspace_gaussian;
use frechet_subspace::Subspace;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_subspace(n: usize, r: usize, seed: u64) -> Subspace {
    subspace_gaussian(n, r, &mut rng(seed)).unwrap()
}

/// A random r×r orthogonal matrix.
pub fn random_rotation(r: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let m = DMatrix::from_fn(r, r, |_, _| g.sample::<f64, _>(StandardNormal));
    m.qr().q()
}
