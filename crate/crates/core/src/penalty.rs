//! Clipped-L1 sparsity penalty.
//!
//! `J(theta) = lambda * sum_j min(|theta_j| / tau, 1)`. Small weights are penalized like
//! L1 scaled by `1/tau`; weights beyond `tau` cost a flat `lambda` each, like L0.

use crate::error::{Error, Result};

/// Tolerance used when counting "effectively nonzero" parameters of a trained network.
pub const EFFECTIVE_SPARSITY_TOL: f64 = 1e-6;

/// Penalty weight `lambda >= 0` and clipping threshold `tau > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    lambda: f64,
    tau: f64,
}

impl PenaltyParams {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self { lambda, tau })
    }

    /// No penalty (`lambda = 0`); `tau` is irrelevant and set to 1.
    pub fn none() -> Self {
        Self {
            lambda: 0.0,
            tau: 1.0,
        }
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    pub fn is_active(&self) -> bool {
        self.lambda > 0.0
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

/// `sum_j min(|theta_j| / tau, 1)`.
pub fn clipped_norm(theta: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(theta.iter().map(|t| (t.abs() / tau).min(1.0)).sum())
}

/// `lambda * clipped_norm(theta, tau)`.
pub fn penalty_value(theta: &[f64], params: &PenaltyParams) -> f64 {
    if params.lambda == 0.0 {
        return 0.0;
    }
    let norm: f64 = theta.iter().map(|t| (t.abs() / params.tau).min(1.0)).sum();
    params.lambda * norm
}

/// Coordinate-wise subgradient of [`penalty_value`]: `lambda sign(theta_j) / tau` on the
/// linear branch `|theta_j| < tau`, zero on the saturated branch and at `|theta_j| = tau`.
pub fn penalty_subgradient(theta: &[f64], params: &PenaltyParams) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    add_penalty_subgradient(theta, params, &mut out);
    out
}

/// Adds the penalty subgradient into `grad`.
pub fn add_penalty_subgradient(theta: &[f64], params: &PenaltyParams, grad: &mut [f64]) {
    debug_assert_eq!(theta.len(), grad.len());
    if params.lambda == 0.0 {
        return;
    }
    let slope = params.lambda / params.tau;
    for (g, &t) in grad.iter_mut().zip(theta) {
        if t.abs() < params.tau {
            // f64::signum(0.0) is 1.0; the subgradient at zero is 0.
            if t > 0.0 {
                *g += slope;
            } else if t < 0.0 {
                *g -= slope;
            }
        }
    }
}

/// Number of nonzero coordinates.
pub fn l0_norm(theta: &[f64]) -> usize {
    theta.iter().filter(|&&t| t != 0.0).count()
}

/// Number of coordinates with `|theta_j| > eps`.
pub fn effective_l0(theta: &[f64], eps: f64) -> usize {
    theta.iter().filter(|t| t.abs() > eps).count()
}
