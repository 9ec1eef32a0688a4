//! Subspace estimation from zero-filled, Bernoulli-erased measurement blocks
//! by averaging block spans on the Grassmannian.
//!
//! - [`grassmann`]: principal angles, distances, log/exp maps, geodesics, Karcher means.
//! - [`observation`]: ground-truth subspaces, coefficient blocks, erasure masks, coherence.
//! - [`estimator`]: per-block rank-r spans and the streaming Fréchet-mean recursion.
//! - [`theory`]: closed-form bias and perturbation bounds.
//! - [`harness`]: seeded experiments, CSV output, and the command-line front end.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod grassmann;
pub mod harness;
pub mod observation;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use grassmann::{PrincipalAngleSet, Subspace, TangentVector};
