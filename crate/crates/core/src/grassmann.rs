//! Geometry of the Grassmannian G(n, r).
//!
//! Points are represented by column-orthonormal bases. Every function here
//! depends only on the spanned subspace, never on the particular basis, except
//! where a [`TangentVector`] is involved: tangent vectors are expressed with
//! respect to the basis of their base point.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Entrywise tolerance on `basisᵀ·basis − I`.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;
/// Logarithms are refused once the largest principal angle reaches
/// `π/2 − CUT_LOCUS_MARGIN`.
pub const CUT_LOCUS_MARGIN: f64 = 1e-8;
/// Relative singular-value floor used when orthonormalizing internally.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// An r-dimensional subspace of n-space, stored as an n×r orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis that is already column-orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        check_shape(basis.nrows(), basis.ncols())?;
        let gram = basis.transpose() * &basis;
        let r = basis.ncols();
        let err = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if err > ORTHONORMALITY_TOL {
            return Err(Error::BadParams(format!(
                "basis is not orthonormal (max |BᵀB − I| = {err:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns of `m`; see [`orthonormalize`].
    pub fn from_matrix(m: &DMatrix<f64>, tol: f64) -> Result<Self> {
        orthonormalize(m, tol)
    }

    /// The line through `(cos φ, sin φ)` in the plane.
    pub fn line_at_angle(phi: f64) -> Self {
        Self {
            basis: DMatrix::from_column_slice(2, 1, &[phi.cos(), phi.sin()]),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_basis(self) -> DMatrix<f64> {
        self.basis
    }

    /// n
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// r
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// The orthogonal projector `B·Bᵀ`, built on demand.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Same subspace, basis right-multiplied by `rotation` (must be r×r orthogonal).
    pub fn rebased(&self, rotation: &DMatrix<f64>) -> Result<Self> {
        if rotation.nrows() != self.dim() || rotation.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rotation is {}x{}, subspace dim is {}",
                rotation.nrows(),
                rotation.ncols(),
                self.dim()
            )));
        }
        Self::from_orthonormal(&self.basis * rotation)
    }

    /// An n×(n−r) orthonormal basis of the orthogonal complement.
    ///
    /// Taken from the eigenvectors of `I − B·Bᵀ` with eigenvalue one. Any
    /// completion works for the quantities computed in this crate.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let r = self.dim();
        let perp = DMatrix::<f64>::identity(n, n) - self.projector();
        let eig = nalgebra::SymmetricEigen::new(perp);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let cols: Vec<_> = order[..n - r]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let raw = DMatrix::from_columns(&cols);
        // eigenvectors of a clustered spectrum can drift slightly off orthonormal
        qr_orthonormal(&raw)
    }
}

fn check_shape(n: usize, r: usize) -> Result<()> {
    if r == 0 || r >= n {
        return Err(Error::BadDimensions(format!(
            "need 1 <= r < n, got n = {n}, r = {r}"
        )));
    }
    Ok(())
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn svd_failed(e: faer::linalg::svd::SvdError) -> Error {
    Error::ComputationFailed(format!("SVD did not converge: {e:?}"))
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let mut sv = to_faer(m).singular_values().map_err(svd_failed)?;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(sv))
}

/// Thin SVD `m = U·diag(σ)·Vᵀ` with σ descending; returns `(U, σ, Vᵀ)`.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok((
            DMatrix::zeros(rows, 0),
            DVector::zeros(0),
            DMatrix::zeros(0, cols),
        ));
    }
    let svd = to_faer(m).thin_svd().map_err(svd_failed)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Ok((
        DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        DVector::from_fn(k, |j, _| s[order[j]]),
        DMatrix::from_fn(k, cols, |j, i| v[(i, order[j])]),
    ))
}

/// Householder QR, with column signs fixed so that diag(R) ≥ 0.
fn qr_orthonormal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Returns an orthonormal basis for the column space of the n×r matrix `m`.
///
/// Fails with `RankDeficient` unless `σ_r(m) > tol·σ_1(m)` and `σ_1(m) > 0`.
/// Input that is already orthonormal comes back unchanged up to rounding.
pub fn orthonormalize(m: &DMatrix<f64>, tol: f64) -> Result<Subspace> {
    let (n, r) = m.shape();
    check_shape(n, r)?;
    if !(tol >= 0.0) {
        return Err(Error::BadParams(format!(
            "tolerance {tol} must be nonnegative"
        )));
    }
    let sv = singular_values(m)?;
    let top = sv.max();
    let bottom = sv.min();
    if !(top > 0.0) || !(bottom > tol * top) {
        return Err(Error::RankDeficient(format!(
            "σ_r = {bottom:.3e}, σ_1 = {top:.3e}, tol = {tol:.1e}"
        )));
    }
    Subspace::from_orthonormal(qr_orthonormal(m))
}

/// Principal angles between two subspaces, in radians, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAngleSet {
    angles: Vec<f64>,
}

impl PrincipalAngleSet {
    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Largest angle.
    pub fn max(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    pub fn sines(&self) -> Vec<f64> {
        self.angles.iter().map(|t| t.sin()).collect()
    }
}

/// A horizontal tangent vector at `base`, in the coordinates of `base`'s basis.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: Subspace,
    delta: DMatrix<f64>,
}

impl TangentVector {
    /// Checks `baseᵀ·delta ≈ 0` (relative to ‖delta‖, floor 1e-10).
    pub fn new(base: Subspace, delta: DMatrix<f64>) -> Result<Self> {
        if delta.shape() != base.basis.shape() {
            return Err(Error::DimensionMismatch(format!(
                "tangent is {:?}, base basis is {:?}",
                delta.shape(),
                base.basis.shape()
            )));
        }
        let vertical = (base.basis.transpose() * &delta).amax();
        if vertical > 1e-10 * delta.norm().max(1.0) {
            return Err(Error::BadParams(format!(
                "tangent is not horizontal (|baseᵀ·delta| = {vertical:.3e})"
            )));
        }
        Ok(Self { base, delta })
    }

    pub fn zero(base: Subspace) -> Self {
        let delta = DMatrix::zeros(base.ambient_dim(), base.dim());
        Self { base, delta }
    }

    pub fn base(&self) -> &Subspace {
        &self.base
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// Frobenius norm; equals √r times the geodesic length it generates.
    pub fn norm(&self) -> f64 {
        self.delta.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base: self.base.clone(),
            delta: &self.delta * factor,
        }
    }
}

fn check_pair(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "G({}, {}) vs G({}, {})",
            a.ambient_dim(),
            a.dim(),
            b.ambient_dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `(I − A·Aᵀ)·B`, whose singular values are the sines of the principal angles.
fn residual_of(a: &Subspace, b: &Subspace) -> DMatrix<f64> {
    let coeffs = a.basis.transpose() * &b.basis;
    &b.basis - &a.basis * coeffs
}

/// Principal angles between `a` and `b`.
///
/// Cosines come from the singular values of `AᵀB`, sines from those of
/// `(I − AAᵀ)B`. Angles below π/4 are read off the sines and the rest off the
/// cosines, so neither `acos` near 1 nor `asin` near 1 is ever evaluated.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<PrincipalAngleSet> {
    check_pair(a, b)?;
    let mut cosines: Vec<f64> = singular_values(&(a.basis.transpose() * &b.basis))?
        .iter()
        .copied()
        .collect();
    let mut sines: Vec<f64> = singular_values(&residual_of(a, b))?
        .iter()
        .copied()
        .collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    sines.sort_by(|x, y| x.total_cmp(y));

    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            if c >= FRAC_1_SQRT_2 {
                s.clamp(0.0, 1.0).asin()
            } else {
                c.clamp(0.0, 1.0).acos()
            }
        })
        .collect();
    angles.sort_by(|x, y| x.total_cmp(y));
    Ok(PrincipalAngleSet { angles })
}

/// Root-mean-square principal angle, in `[0, π/2]`.
pub fn distance_geodesic(a: &Subspace, b: &Subspace) -> Result<f64> {
    let angles = principal_angles(a, b)?;
    let r = angles.len() as f64;
    Ok((angles.angles.iter().map(|t| t * t).sum::<f64>() / r).sqrt())
}

/// `‖P_{A⊥} P_B‖_F`, i.e. the root-sum-square of the principal-angle sines.
pub fn distance_projection_frobenius(a: &Subspace, b: &Subspace) -> Result<f64> {
    check_pair(a, b)?;
    Ok(residual_of(a, b).norm())
}

/// `‖P_{A⊥} P_B‖`, the sine of the largest principal angle.
pub fn distance_spectral(a: &Subspace, b: &Subspace) -> Result<f64> {
    check_pair(a, b)?;
    Ok(singular_values(&residual_of(a, b))?.max().min(1.0))
}

/// Riemannian logarithm: the tangent at `a` whose geodesic reaches `b` at unit time.
///
/// Computed as `U·atan(Σ)·Vᵀ` from the thin SVD of `(I − AAᵀ)·B·(AᵀB)⁻¹`.
pub fn log_map(a: &Subspace, b: &Subspace) -> Result<TangentVector> {
    let angles = principal_angles(a, b)?;
    if angles.max() >= FRAC_PI_2 - CUT_LOCUS_MARGIN {
        return Err(Error::CutLocus {
            angle: angles.max(),
        });
    }
    let cross = a.basis.transpose() * &b.basis;
    let inv = cross.try_inverse().ok_or(Error::CutLocus {
        angle: angles.max(),
    })?;
    let m = residual_of(a, b) * inv;
    let (u, sigma, v_t) = thin_svd(&m)?;
    let atan = DMatrix::from_diagonal(&sigma.map(f64::atan));
    let delta = horizontal_part(&a.basis, u * atan * v_t);
    Ok(TangentVector {
        base: a.clone(),
        delta,
    })
}

/// A logarithm that also works on the cut locus, where it returns one of the
/// several minimizing directions. Agrees with [`log_map`] elsewhere.
pub(crate) fn log_map_any(a: &Subspace, b: &Subspace) -> Result<TangentVector> {
    check_pair(a, b)?;
    let cross = a.basis.transpose() * &b.basis;
    let (psi, _, r_t) = thin_svd(&cross)?;
    // align b's basis with a's principal vectors
    let aligned = &b.basis * r_t.transpose() * psi.transpose();
    let resid = &aligned - &a.basis * (a.basis.transpose() * &aligned);
    let (q, s, rr_t) = thin_svd(&resid)?;
    let asin = DMatrix::from_diagonal(&s.map(|x| x.clamp(0.0, 1.0).asin()));
    let delta = horizontal_part(&a.basis, q * asin * rr_t);
    Ok(TangentVector {
        base: a.clone(),
        delta,
    })
}

fn horizontal_part(basis: &DMatrix<f64>, delta: DMatrix<f64>) -> DMatrix<f64> {
    let vertical = basis * (basis.transpose() * &delta);
    delta - vertical
}

/// Riemannian exponential: follows the geodesic from `a` with initial velocity `t`
/// for unit time.
pub fn exp_map(a: &Subspace, t: &TangentVector) -> Result<Subspace> {
    if t.base.basis.shape() != a.basis.shape()
        || (&t.base.basis - &a.basis).amax() > ORTHONORMALITY_TOL
    {
        return Err(Error::BaseMismatch);
    }
    let (u, sigma, v_t) = thin_svd(&t.delta)?;
    let v = v_t.transpose();
    let cos = DMatrix::from_diagonal(&sigma.map(f64::cos));
    let sin = DMatrix::from_diagonal(&sigma.map(f64::sin));
    let moved = &a.basis * &v * cos * &v_t + u * sin * &v_t;
    Subspace::from_orthonormal(qr_orthonormal(&moved))
}

/// The point `A #_ρ B` on the geodesic from `a` (ρ = 0) to `b` (ρ = 1).
pub fn geodesic_point(a: &Subspace, b: &Subspace, rho: f64) -> Result<Subspace> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::BadParams(format!("rho = {rho} outside [0, 1]")));
    }
    let tangent = log_map(a, b)?;
    exp_map(a, &tangent.scaled(rho))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KarcherOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KarcherResult {
    pub mean: Subspace,
    pub converged: bool,
    /// Frobenius norm of the weighted tangent average at `mean`.
    pub residual: f64,
    pub iterations: usize,
    /// Some input lies π/4 or further from the initial iterate.
    pub outside_ball: bool,
}

/// Weighted Karcher (Fréchet) mean by fixed-point iteration on averaged logarithms.
///
/// Starts at the highest-weight input (lowest index on ties). Inputs on the cut
/// locus of the current iterate contribute one of their minimizing directions.
/// Non-convergence is reported through `converged`, not as an error.
pub fn karcher_mean(
    subspaces: &[Subspace],
    weights: &[f64],
    options: KarcherOptions,
) -> Result<KarcherResult> {
    let first = subspaces.first().ok_or(Error::EmptyInput)?;
    if weights.len() != subspaces.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} subspaces but {} weights",
            subspaces.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::BadParams("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::BadParams(format!("weights sum to {total}, not 1")));
    }
    for s in subspaces {
        check_pair(first, s)?;
    }

    let start = weights
        .iter()
        .enumerate()
        .fold(0, |best, (i, w)| if *w > weights[best] { i } else { best });
    let mut mean = subspaces[start].clone();
    let mut outside_ball = false;
    for s in subspaces {
        if distance_geodesic(&mean, s)? >= FRAC_PI_4 {
            outside_ball = true;
        }
    }

    let mut iterations = 0;
    loop {
        let step = weighted_log_average(&mean, subspaces, weights)?;
        let residual = step.norm();
        if residual < options.tol {
            return Ok(KarcherResult {
                mean,
                converged: true,
                residual,
                iterations,
                outside_ball,
            });
        }
        if iterations == options.max_iter {
            return Ok(KarcherResult {
                mean,
                converged: false,
                residual,
                iterations,
                outside_ball,
            });
        }
        mean = exp_map(&mean, &step)?;
        iterations += 1;
    }
}

fn weighted_log_average(
    at: &Subspace,
    subspaces: &[Subspace],
    weights: &[f64],
) -> Result<TangentVector> {
    let mut acc = DMatrix::zeros(at.ambient_dim(), at.dim());
    for (s, &w) in subspaces.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let log = match log_map(at, s) {
            Ok(t) => t,
            Err(Error::CutLocus { .. }) => log_map_any(at, s)?,
            Err(e) => return Err(e),
        };
        acc += log.delta * w;
    }
    Ok(TangentVector {
        base: at.clone(),
        delta: acc,
    })
}
