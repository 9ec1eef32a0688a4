//! Ground-truth subspaces, coefficient blocks, Bernoulli erasures and the
//! coherence quantities that govern how much erasure hurts.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grassmann::{self, orthonormalize, Subspace, DEFAULT_RANK_TOL};

/// An r×b coefficient matrix whose columns are independent coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientBlock {
    q: DMatrix<f64>,
}

impl CoefficientBlock {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let (r, b) = q.shape();
        if r == 0 || r > b {
            return Err(Error::BadDimensions(format!(
                "coefficient block must satisfy 1 <= r <= b, got {r}x{b}"
            )));
        }
        Ok(Self { q })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// r
    pub fn rank_dim(&self) -> usize {
        self.q.nrows()
    }

    /// b
    pub fn block_size(&self) -> usize {
        self.q.ncols()
    }
}

/// Which entries of an n×b block were observed.
#[derive(Clone, Debug, PartialEq)]
pub struct ErasureMask {
    kept: DMatrix<bool>,
    p: f64,
}

impl ErasureMask {
    pub fn from_kept(kept: DMatrix<bool>, p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self { kept, p })
    }

    /// Everything observed.
    pub fn full(n: usize, b: usize) -> Self {
        Self {
            kept: DMatrix::from_element(n, b, true),
            p: 1.0,
        }
    }

    pub fn kept(&self) -> &DMatrix<bool> {
        &self.kept
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    pub fn shape(&self) -> (usize, usize) {
        self.kept.shape()
    }

    /// Fraction of observed entries.
    pub fn density(&self) -> f64 {
        let kept = self.kept.iter().filter(|&&k| k).count();
        kept as f64 / self.kept.len().max(1) as f64
    }
}

/// A zero-filled measurement block together with its mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedBlock {
    data: DMatrix<f64>,
    mask: ErasureMask,
}

impl MaskedBlock {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mask(&self) -> &ErasureMask {
        &self.mask
    }
}

/// Coherence of the signal subspace and of the coefficient row space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceReport {
    pub mu_s: f64,
    pub nu_s: f64,
    pub mu_q: f64,
    pub kappa_q: f64,
}

impl CoherenceReport {
    pub fn compute(s: &Subspace, q: &CoefficientBlock) -> Result<Self> {
        Ok(Self {
            mu_s: coherence_mu(s),
            nu_s: coherence_nu(s),
            mu_q: rowspace_coherence(q)?,
            kappa_q: condition_number(q)?,
        })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadProbability(p))
    }
}

/// Standard normal r×b coefficient block.
pub fn sample_gaussian_coefficients<R: Rng + ?Sized>(
    r: usize,
    b: usize,
    rng: &mut R,
) -> Result<CoefficientBlock> {
    if r == 0 || r > b {
        return Err(Error::BadDimensions(format!(
            "coefficient block must satisfy 1 <= r <= b, got {r}x{b}"
        )));
    }
    let q = DMatrix::from_fn(r, b, |_, _| rng.sample::<f64, _>(StandardNormal));
    CoefficientBlock::new(q)
}

/// i.i.d. Bernoulli(p) observation pattern.
pub fn sample_mask<R: Rng + ?Sized>(
    n: usize,
    b: usize,
    p: f64,
    rng: &mut R,
) -> Result<ErasureMask> {
    check_probability(p)?;
    let kept = DMatrix::from_fn(n, b, |_, _| rng.random_bool(p));
    Ok(ErasureMask { kept, p })
}

/// Zeroes the entries of `m` that `mask` marks unobserved.
pub fn apply_erasure(m: &DMatrix<f64>, mask: &ErasureMask) -> Result<MaskedBlock> {
    if m.shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {:?}, mask is {:?}",
            m.shape(),
            mask.shape()
        )));
    }
    let data = m.zip_map(&mask.kept, |x, keep| if keep { x } else { 0.0 });
    Ok(MaskedBlock {
        data,
        mask: mask.clone(),
    })
}

/// The partially observed block `P_p(S·Q)`.
pub fn generate_block(
    s: &Subspace,
    q: &CoefficientBlock,
    mask: &ErasureMask,
) -> Result<MaskedBlock> {
    if s.dim() != q.rank_dim() {
        return Err(Error::ShapeMismatch(format!(
            "subspace dim {} but coefficient rows {}",
            s.dim(),
            q.rank_dim()
        )));
    }
    apply_erasure(&(s.basis() * q.matrix()), mask)
}

fn squared_row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|row| row.norm_squared()).collect()
}

/// `(n/r)·max_i ‖S[i,:]‖²`, in `[1, n/r]`.
pub fn coherence_mu(s: &Subspace) -> f64 {
    let n = s.ambient_dim() as f64;
    let r = s.dim() as f64;
    let peak = squared_row_norms(s.basis()).into_iter().fold(0.0, f64::max);
    n / r * peak
}

/// `(n/r)·‖diag(‖S[i,:]‖)·S⊥‖²` with `S⊥` an orthonormal completion.
pub fn coherence_nu(s: &Subspace) -> f64 {
    let n = s.ambient_dim() as f64;
    let r = s.dim() as f64;
    let complement = s.complement_basis();
    let norms = squared_row_norms(s.basis());
    let mut scaled = complement;
    for (mut row, w) in scaled.row_iter_mut().zip(norms) {
        row *= w.sqrt();
    }
    let top = grassmann::singular_values(&scaled)
        .map(|sv| sv.max())
        .unwrap_or(0.0);
    n / r * top * top
}

/// Coherence of the row space of `Q`, as a subspace of b-space.
pub fn rowspace_coherence(q: &CoefficientBlock) -> Result<f64> {
    let (r, b) = q.matrix().shape();
    if r == b {
        condition_number(q)?;
        return Ok(1.0);
    }
    let rows = orthonormalize(&q.matrix().transpose(), DEFAULT_RANK_TOL)?;
    Ok(coherence_mu(&rows))
}

/// `σ_1(Q)/σ_r(Q)`.
pub fn condition_number(q: &CoefficientBlock) -> Result<f64> {
    let sv = grassmann::singular_values(q.matrix())?;
    let top = sv.max();
    let bottom = sv.min();
    let (r, b) = q.matrix().shape();
    if !(bottom > f64::EPSILON * top * r.max(b) as f64) {
        return Err(Error::RankDeficient(format!(
            "σ_r = {bottom:.3e}, σ_1 = {top:.3e}"
        )));
    }
    Ok(top / bottom)
}

/// The first r canonical basis vectors of n-space.
pub fn subspace_identity_columns(n: usize, r: usize) -> Result<Subspace> {
    if r == 0 || r >= n {
        return Err(Error::BadDimensions(format!(
            "need 1 <= r < n, got n = {n}, r = {r}"
        )));
    }
    Subspace::from_orthonormal(DMatrix::identity(n, r))
}

/// Span of an n×r standard Gaussian matrix.
pub fn subspace_gaussian<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Subspace> {
    if r == 0 || r >= n {
        return Err(Error::BadDimensions(format!(
            "need 1 <= r < n, got n = {n}, r = {r}"
        )));
    }
    let m = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthonormalize(&m, DEFAULT_RANK_TOL)
}

/// The two-dimensional subspace spanned by `(e1 + e2)/√2` and `(e3 + e4)/√2`:
/// coherent, and with ν(S) = μ(S) = n/4.
pub fn subspace_pathological_sparse(n: usize) -> Result<Subspace> {
    if n < 5 {
        return Err(Error::BadDimensions(format!(
            "pathological subspace needs n >= 5, got {n}"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = DMatrix::zeros(n, 2);
    basis[(0, 0)] = h;
    basis[(1, 0)] = h;
    basis[(2, 1)] = h;
    basis[(3, 1)] = h;
    Subspace::from_orthonormal(basis)
}

/// The three ground-truth families used by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubspaceCase {
    Identity,
    Gaussian,
    Pathological,
}

impl SubspaceCase {
    pub const ALL: [SubspaceCase; 3] = [Self::Identity, Self::Gaussian, Self::Pathological];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Gaussian => "gaussian",
            Self::Pathological => "pathological",
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, n: usize, r: usize, rng: &mut R) -> Result<Subspace> {
        match self {
            Self::Identity => subspace_identity_columns(n, r),
            Self::Gaussian => subspace_gaussian(n, r, rng),
            Self::Pathological if r == 2 => subspace_pathological_sparse(n),
            Self::Pathological => Err(Error::BadDimensions(format!(
                "pathological subspace has r = 2, requested r = {r}"
            ))),
        }
    }
}

impl fmt::Display for SubspaceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubspaceCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "gaussian" => Ok(Self::Gaussian),
            "pathological" => Ok(Self::Pathological),
            other => Err(Error::Usage(format!("unknown case `{other}`"))),
        }
    }
}
