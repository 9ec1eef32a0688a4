//! Closed-form evaluators for the bias bound, its sampling condition, the
//! spectral perturbation bound, and the Gaussian-coefficient predictions.
//!
//! The bounds hold up to unspecified universal factors. Each evaluator takes a
//! single multiplicative `constant` (default 1) standing in for all of them, so
//! that a Monte-Carlo study can calibrate it once and then predict.

use crate::error::{Error, Result};

/// Inputs to the bias bound and its sampling condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub alpha: f64,
    /// Threshold on κ(Q).
    pub kappa_tilde: f64,
    /// Threshold on μ(span(Qᵀ)).
    pub mu_q_tilde: f64,
    pub n: usize,
    pub b: usize,
    pub r: usize,
    pub p: f64,
    pub nu_s: f64,
    pub mu_s: f64,
    /// `Pr[κ(Q) > kappa_tilde]`
    pub tail_kappa: f64,
    /// `Pr[μ(Q) > mu_q_tilde]`
    pub tail_mu: f64,
    pub constant: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::BadParams(what.to_string()));
        if !(self.alpha >= 1.0) {
            return bad("alpha must be >= 1");
        }
        if !(self.kappa_tilde >= 1.0) || !(self.mu_q_tilde >= 1.0) {
            return bad("kappa_tilde and mu_q_tilde must be >= 1");
        }
        check_dims(self.n, self.b, self.r)?;
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("p must lie in (0, 1]");
        }
        if !(self.nu_s >= 0.0) || !(self.mu_s >= 1.0) {
            return bad("need nu_s >= 0 and mu_s >= 1");
        }
        if !(0.0..=1.0).contains(&self.tail_kappa) || !(0.0..=1.0).contains(&self.tail_mu) {
            return bad("tail probabilities must lie in [0, 1]");
        }
        if !(self.constant > 0.0) || !self.constant.is_finite() {
            return bad("constant must be positive");
        }
        Ok(())
    }
}

fn check_dims(n: usize, b: usize, r: usize) -> Result<()> {
    if n == 0 || b == 0 || r == 0 || r > n.min(b) {
        return Err(Error::BadParams(format!(
            "need positive n, b, r with r <= min(n, b); got n = {n}, b = {b}, r = {r}"
        )));
    }
    Ok(())
}

/// `max(1, n/b) · r · log(max(n, b)) / n`, the dimension factor shared by every bound.
fn dimension_factor(n: usize, b: usize, r: usize) -> f64 {
    let (nf, bf, rf) = (n as f64, b as f64, r as f64);
    (nf / bf).max(1.0) * rf * (n.max(b) as f64).ln() / nf
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// Upper bound on `d_G(F, S)²`.
    pub value: f64,
    /// The `α²κ̃²…/(pn)` part of `value`, without the additive tails.
    pub leading: f64,
    pub condition_satisfied: bool,
    /// Smallest p for which the sampling condition holds; may exceed 1.
    pub minimal_p: f64,
}

/// Upper bound on the squared geodesic bias of the Fréchet expectation.
pub fn theorem1_bias_bound(params: &BoundParams) -> Result<BoundReport> {
    params.validate()?;
    let leading = params.constant
        * params.alpha.powi(2)
        * params.kappa_tilde.powi(2)
        * params.nu_s.max(params.mu_q_tilde)
        * dimension_factor(params.n, params.b, params.r)
        / params.p;
    let value = leading + (-params.alpha).exp() + params.tail_kappa + params.tail_mu;
    let minimal_p = sampling_condition_p(params)?;
    Ok(BoundReport {
        value,
        leading,
        condition_satisfied: params.p >= minimal_p,
        minimal_p,
    })
}

/// Smallest p satisfying the bias bound's sampling condition.
pub fn sampling_condition_p(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    Ok(params.constant
        * params.alpha.powi(2)
        * params.kappa_tilde.powi(2)
        * params.mu_s.max(params.mu_q_tilde)
        * dimension_factor(params.n, params.b, params.r))
}

/// Inputs to the spectral bound on `‖P_{S⊥} P_Y‖` for a fixed coefficient block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma1Params {
    pub alpha: f64,
    pub kappa_q: f64,
    pub n: usize,
    pub b: usize,
    pub r: usize,
    pub p: f64,
    pub nu_s: f64,
    /// Only enters the applicability condition.
    pub mu_s: f64,
    pub mu_q: f64,
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma1Bound {
    pub value: f64,
    /// Whether p clears the bound's own sampling condition.
    pub applicable: bool,
    pub minimal_p: f64,
}

/// Bound on the sine of the largest angle between S and a single block span,
/// valid except with probability `e^{−α}` when `applicable` is set.
pub fn lemma1_spectral_bound(params: &Lemma1Params) -> Result<Lemma1Bound> {
    let Lemma1Params {
        alpha,
        kappa_q,
        n,
        b,
        r,
        p,
        nu_s,
        mu_s,
        mu_q,
        constant,
    } = *params;
    if !(alpha >= 1.0) || !(kappa_q >= 1.0) || !(mu_q >= 1.0) || !(mu_s >= 1.0) || !(nu_s >= 0.0) {
        return Err(Error::BadParams(
            "need alpha, kappa_q, mu_q, mu_s >= 1 and nu_s >= 0".into(),
        ));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadParams(format!("p = {p} outside (0, 1]")));
    }
    if !(constant > 0.0) || !constant.is_finite() {
        return Err(Error::BadParams("constant must be positive".into()));
    }
    check_dims(n, b, r)?;
    let factor = dimension_factor(n, b, r);
    let value = constant * alpha * kappa_q * (nu_s.max(mu_q) * factor / p).sqrt();
    let minimal_p = constant * alpha.powi(2) * kappa_q.powi(2) * mu_s.max(mu_q) * factor;
    Ok(Lemma1Bound {
        value,
        applicable: p >= minimal_p,
        minimal_p,
    })
}

pub const GAUSSIAN_MU_MULTIPLIER: f64 = 3.0;
pub const GAUSSIAN_KAPPA_MULTIPLIER: f64 = 2.0;

/// High-probability ceilings on `μ(Q)` and `κ(Q)` for a standard Gaussian r×b block.
pub fn gaussian_q_predictions(r: usize, b: usize) -> Result<(f64, f64)> {
    gaussian_q_predictions_with(r, b, GAUSSIAN_MU_MULTIPLIER, GAUSSIAN_KAPPA_MULTIPLIER)
}

/// [`gaussian_q_predictions`] with explicit multipliers.
pub fn gaussian_q_predictions_with(
    r: usize,
    b: usize,
    c_mu: f64,
    c_kappa: f64,
) -> Result<(f64, f64)> {
    if r == 0 || b <= r {
        return Err(Error::BadDimensions(format!(
            "need 1 <= r < b, got r = {r}, b = {b}"
        )));
    }
    let (sb, sr) = ((b as f64).sqrt(), (r as f64).sqrt());
    Ok((c_mu * (b as f64).ln(), c_kappa * (sb + sr) / (sb - sr)))
}
