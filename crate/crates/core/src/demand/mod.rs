//! Closed-form diffusion mathematics for the piecewise-diffusion demand model.
//!
//! Demand over a planning horizon is approximated as normal. Its mean is the
//! Bass adoption curve of the re-specified prospect pool and its variance is
//! the central-limit variance of the stochastic Bass model plus an exogenous
//! disturbance term that grows linearly with the horizon.

mod sbm;

pub use sbm::{sbm_replications, simulate_sbm, simulate_sbm_with};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameterization of the demand model.
///
/// Market quantities (`m`, `a0`, `adopters`) are in thousands of units,
/// prices in dollars and advertising in millions of dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmParams {
    pub m: f64,
    pub a0: f64,
    pub pi_p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub eta: f64,
    pub pi_m: f64,
    pub gamma_p: f64,
    pub gamma_b: f64,
    pub p_ref: f64,
    pub v0: f64,
    pub t: f64,
    /// Cumulative adopters at planning time; defaults to `a0`.
    pub adopters: f64,
}

pub const DEFAULT_P_REF: f64 = 410.0;
pub const DEFAULT_V0: f64 = 0.0;
pub const DEFAULT_HORIZON: f64 = 1.0;

impl PdmParams {
    /// The room air conditioner "actual history" parameterization with the
    /// default calibration constants.
    pub fn bundled() -> Self {
        PdmParams {
            m: 53_291.0,
            a0: 744.0,
            pi_p: 0.005191,
            alpha: 0.0,
            beta: 19.14,
            delta: 39.52,
            eta: 6.218,
            pi_m: 0.04195,
            gamma_p: 0.009746,
            gamma_b: 0.3704,
            p_ref: DEFAULT_P_REF,
            v0: DEFAULT_V0,
            t: DEFAULT_HORIZON,
            adopters: 744.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.m,
            self.a0,
            self.pi_p,
            self.alpha,
            self.beta,
            self.delta,
            self.eta,
            self.pi_m,
            self.gamma_p,
            self.gamma_b,
            self.p_ref,
            self.v0,
            self.t,
            self.adopters,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("all fields must be finite".into()));
        }
        let checks: [(bool, &str); 11] = [
            (self.pi_p > 0.0, "pi_p must be positive"),
            (self.pi_p <= self.pi_m, "pi_p must not exceed pi_m"),
            (self.pi_m < 1.0, "pi_m must be below 1"),
            (self.alpha >= 0.0, "alpha must be non-negative"),
            (self.beta >= 0.0, "beta must be non-negative"),
            (self.delta >= 0.0, "delta must be non-negative"),
            (self.eta > 0.0, "eta must be positive"),
            (
                self.gamma_p >= 0.0 && self.gamma_b >= 0.0,
                "gamma_p and gamma_b must be non-negative",
            ),
            (
                self.m > self.a0 && self.a0 >= 0.0,
                "market size must exceed a0 >= 0",
            ),
            (
                self.m > self.adopters && self.adopters >= 0.0,
                "market size must exceed current adopters >= 0",
            ),
            (
                self.p_ref > 0.0 && self.t > 0.0 && self.v0 >= 0.0,
                "p_ref and t must be positive and v0 non-negative",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidParams((*msg).to_string())),
            None => Ok(()),
        }
    }
}

/// A stochastic Bass specification `{m_hat, alpha_hat, beta_hat}` of the
/// true-prospect pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSpec {
    pub m_hat: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
}

/// Mean and standard deviation of horizon demand (thousands of units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandMoments {
    pub mu: f64,
    pub sigma: f64,
}

fn check_bass_inputs(t: f64, m: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(t >= 0.0 && m >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bass inputs need t >= 0, m >= 0, beta >= 0 (t = {t}, m = {m}, beta = {beta})"
        )));
    }
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::DegenerateSpec);
    }
    Ok(())
}

/// Bass adoption curve `N(t, m, alpha, beta)`.
pub fn bass_mean(t: f64, m: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_bass_inputs(t, m, alpha, beta)?;
    let x = (alpha + beta) * t;
    let ratio = beta / alpha;
    // 1 - e^{-x} through expm1 keeps small-t values accurate
    Ok(m * -(-x).exp_m1() / (1.0 + ratio * (-x).exp()))
}

/// Central-limit variance `psi(t, m, alpha, beta)` of the stochastic Bass model.
///
/// Evaluated in a factored form that only needs `e^{-x}`, so it stays finite
/// for long horizons.
pub fn bass_variance(t: f64, m: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_bass_inputs(t, m, alpha, beta)?;
    let x = (alpha + beta) * t;
    let r = beta / alpha;
    let decay = (-x).exp();
    let one_minus = -(-x).exp_m1();
    let denom = (1.0 + r * decay).powi(4);
    let braces = decay * one_minus + decay * decay * (2.0 * r * x + r * r * one_minus);
    Ok((m * (1.0 + r) * braces / denom).max(0.0))
}

fn respecify(m: f64, alpha: f64, beta: f64, a: f64, pi: f64) -> Result<EffectiveSpec> {
    if !(0.0..m).contains(&a) || !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "re-specification needs 0 <= a < m and 0 < pi <= 1 (a = {a}, pi = {pi})"
        )));
    }
    let m_hat = (m - a) * pi;
    if m_hat <= 1.0 {
        return Err(Error::DegeneratePool(m_hat));
    }
    Ok(EffectiveSpec {
        m_hat,
        alpha_hat: alpha + beta * a / (m - 1.0),
        beta_hat: (m_hat - 1.0) / (m - 1.0) * beta,
    })
}

/// Re-specify the model on the `(m - a) * pi` true prospects that remain after
/// `a` adoptions.
pub fn effective_spec(params: &PdmParams, a: f64, pi: f64) -> Result<EffectiveSpec> {
    respecify(params.m, params.alpha, params.beta, a, pi)
}

/// Participation fraction as a function of price `p` and advertising `v`.
///
/// Equals `pi_p` at the reference price with no advertising and approaches
/// `pi_m` as advertising grows.
pub fn participation_fraction(p: f64, v: f64, params: &PdmParams) -> Result<f64> {
    if !(p > 0.0 && v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "participation needs p > 0 and v >= 0 (p = {p}, v = {v})"
        )));
    }
    let log_base = (1.0 - params.pi_p / params.pi_m).ln() - params.gamma_p * v;
    let exponent = (p / params.p_ref).powf(-params.eta);
    Ok(params.pi_m * -(exponent * log_base).exp_m1())
}

/// Induction rate under cumulative advertising `v0 + v`.
pub fn advertised_beta(v: f64, params: &PdmParams) -> f64 {
    params.beta * (1.0 + params.gamma_b * (params.v0 + v))
}

/// Re-specification used by [`demand_moments`]: participation and advertised
/// induction at `(p, v)`, then the prospect-pool re-specification.
pub fn effective_spec_at(p: f64, v: f64, params: &PdmParams) -> Result<EffectiveSpec> {
    let pi = participation_fraction(p, v, params)?;
    let beta = advertised_beta(v, params);
    respecify(params.m, params.alpha, beta, params.adopters, pi)
}

/// Normal approximation of horizon demand at price `p` and advertising `v`.
pub fn demand_moments(p: f64, v: f64, params: &PdmParams) -> Result<DemandMoments> {
    let spec = effective_spec_at(p, v, params)?;
    let t = params.t;
    let mu = bass_mean(t, spec.m_hat, spec.alpha_hat, spec.beta_hat)?;
    let psi = bass_variance(t, spec.m_hat, spec.alpha_hat, spec.beta_hat)?;
    Ok(DemandMoments {
        mu,
        sigma: (psi + params.delta * params.delta * t).sqrt(),
    })
}
