//! Block span estimation and the streaming Fréchet-mean recursion.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grassmann::{self, karcher_mean, KarcherOptions, Subspace};
use crate::observation::MaskedBlock;

/// Numerical-rank rule for accepting a block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSpanOptions {
    /// Relative floor: accept only if `σ_r > gap_tol·σ_1`.
    pub gap_tol: f64,
    /// Absolute floor: accept only if `σ_r > abs_tol`.
    pub abs_tol: f64,
}

impl Default for BlockSpanOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            abs_tol: 1e-12,
        }
    }
}

/// Span of the rank-r truncation of one block, or a rejection.
#[derive(Clone, Debug)]
pub struct BlockSpanResult {
    span: Option<Subspace>,
    singular_values: Vec<f64>,
}

impl BlockSpanResult {
    pub fn accepted(&self) -> bool {
        self.span.is_some()
    }

    pub fn span(&self) -> Option<&Subspace> {
        self.span.as_ref()
    }

    pub fn into_span(self) -> Option<Subspace> {
        self.span
    }

    /// All min(n, b) singular values of the block, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }
}

/// Estimates the subspace spanned by the top `r` left singular vectors of `y`.
///
/// Blocks whose r-th singular value falls below either floor in `options` are
/// rejected and carry no span.
pub fn block_span(y: &MaskedBlock, r: usize, options: BlockSpanOptions) -> Result<BlockSpanResult> {
    let (n, b) = y.data().shape();
    let max = n.min(b);
    if r == 0 || r > max || r >= n {
        return Err(Error::BadRank { rank: r, max });
    }
    let (u, sigma, _) = grassmann::thin_svd(y.data())?;
    let singular_values: Vec<f64> = sigma.iter().copied().collect();
    let top = singular_values[0];
    let rth = singular_values[r - 1];
    let span = if rth > options.gap_tol * top && rth > options.abs_tol {
        Some(Subspace::from_matrix(&u.columns(0, r).into_owned(), 0.0)?)
    } else {
        None
    };
    Ok(BlockSpanResult {
        span,
        singular_values,
    })
}

/// The running Fréchet-mean iterate `F_k`.
#[derive(Clone, Debug)]
pub struct RunningMeanState {
    current: Subspace,
    count: usize,
    discarded: usize,
}

impl RunningMeanState {
    pub fn current(&self) -> &Subspace {
        &self.current
    }

    /// Number of accepted blocks folded in (k).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Blocks rejected since initialization.
    pub fn discarded(&self) -> usize {
        self.discarded
    }
}

/// `F_1 = Y_1`.
pub fn init_state(first: Subspace) -> RunningMeanState {
    RunningMeanState {
        current: first,
        count: 1,
        discarded: 0,
    }
}

/// One step of `F_k = F_{k−1} #_{1/k} Y_k`.
///
/// Rejected blocks, and blocks on the cut locus of the current iterate, only
/// bump the discard counter.
pub fn streaming_update(
    state: RunningMeanState,
    incoming: &BlockSpanResult,
) -> Result<RunningMeanState> {
    let Some(span) = incoming.span() else {
        return Ok(RunningMeanState {
            discarded: state.discarded + 1,
            ..state
        });
    };
    let k = state.count + 1;
    match grassmann::geodesic_point(&state.current, span, 1.0 / k as f64) {
        Ok(current) => Ok(RunningMeanState {
            current,
            count: k,
            discarded: state.discarded,
        }),
        Err(Error::CutLocus { .. }) => Ok(RunningMeanState {
            discarded: state.discarded + 1,
            ..state
        }),
        Err(e) => Err(e),
    }
}

/// How to minimize the weighted squared-distance objective over a finite
/// distribution of subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrechetMethod {
    /// Exhaustive search over lines in the plane at angles `0, step, 2·step, … < π`.
    Grid1d {
        step: f64,
    },
    Karcher(KarcherOptions),
}

impl FrechetMethod {
    pub fn grid() -> Self {
        Self::Grid1d { step: 1e-3 }
    }
}

/// Angle in `[0, π)` of a line in the plane.
pub fn line_angle(line: &Subspace) -> Result<f64> {
    if line.ambient_dim() != 2 || line.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a line in the plane, got G({}, {})",
            line.ambient_dim(),
            line.dim()
        )));
    }
    let b = line.basis();
    Ok(b[(1, 0)].atan2(b[(0, 0)]).rem_euclid(PI))
}

/// Distance between lines at angles `a` and `b`, accounting for the π period.
pub fn line_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// A minimizer of `Σ probs_i · d_G(F, atoms_i)²`.
pub fn batch_frechet_discrete(
    atoms: &[Subspace],
    probs: &[f64],
    method: FrechetMethod,
) -> Result<Subspace> {
    let first = atoms.first().ok_or(Error::EmptyInput)?;
    if probs.len() != atoms.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} atoms but {} probabilities",
            atoms.len(),
            probs.len()
        )));
    }
    if atoms
        .iter()
        .any(|a| a.ambient_dim() != first.ambient_dim() || a.dim() != first.dim())
    {
        return Err(Error::DimensionMismatch(
            "atoms live on different Grassmannians".into(),
        ));
    }
    match method {
        FrechetMethod::Karcher(options) => Ok(karcher_mean(atoms, probs, options)?.mean),
        FrechetMethod::Grid1d { step } => {
            if first.ambient_dim() != 2 || first.dim() != 1 {
                return Err(Error::BadMethod(format!(
                    "grid search needs lines in the plane, got G({}, {})",
                    first.ambient_dim(),
                    first.dim()
                )));
            }
            if !(step > 0.0 && step < PI) {
                return Err(Error::BadParams(format!(
                    "grid step {step} must lie in (0, π)"
                )));
            }
            let angles: Vec<f64> = atoms.iter().map(line_angle).collect::<Result<_>>()?;
            let objective = |phi: f64| -> f64 {
                angles
                    .iter()
                    .zip(probs)
                    .map(|(&psi, &w)| w * line_distance(phi, psi).powi(2))
                    .sum()
            };
            let points = (PI / step).ceil() as usize;
            let mut best = (0.0, objective(0.0));
            for j in 1..points {
                let phi = j as f64 * step;
                let value = objective(phi);
                if value < best.1 {
                    best = (phi, value);
                }
            }
            Ok(Subspace::line_at_angle(best.0))
        }
    }
}
