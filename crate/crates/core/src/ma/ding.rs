//! The discretized Ding functional
//! `D(phi) = -(1/m) log ∫ exp(-m phi) ds + (1/V) Σ_j w_j phi*(q_j)`.

use serde::{Deserialize, Serialize};

use super::lp::legendre;
use super::pwa::PiecewiseAffineConvex;
use super::quadrature::Quadrature;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DingValue {
    pub total: f64,
    pub log_term: f64,
    pub energy_term: f64,
    /// `(1/V) Σ w_j phi*(q_j) + sup(phi - h_Q)`, with `sup(phi - h_Q) = phi(0)`.
    pub j_value: f64,
}

pub(crate) fn check_weights(slopes: &[Vec<f64>], weights: &[f64]) -> Result<f64> {
    if slopes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if weights.len() != slopes.len() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: slopes.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("slope weights must be finite and >= 0".into()));
    }
    let volume: f64 = weights.iter().sum();
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter("slope weights sum to zero".into()));
    }
    Ok(volume)
}

pub(crate) fn assemble(log_z: f64, m: usize, weights: &[f64], c: &[f64], phi_at_zero: f64) -> DingValue {
    let volume: f64 = weights.iter().sum();
    let log_term = -log_z / m as f64;
    let energy_term = weights.iter().zip(c).map(|(w, c)| w * c).sum::<f64>() / volume;
    DingValue {
        total: log_term + energy_term,
        log_term,
        energy_term,
        j_value: energy_term + phi_at_zero,
    }
}

/// `D` at `phi`, after replacing every intercept by `phi*(q_j)`.
pub fn ding_functional(phi: &PiecewiseAffineConvex, weights: &[f64], m: usize) -> Result<DingValue> {
    check_weights(&phi.slopes, weights)?;
    if m != phi.n + 1 {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: phi.n + 1,
            found: m,
        });
    }
    let mut quad = Quadrature::new(&phi.slopes, m, None, 200_000, 0)?;
    // tightening leaves phi, hence the integral, unchanged
    let ev = quad.evaluate(&phi.intercepts)?;
    // a piece owning a cell of positive mass is already tight
    let intercepts = phi
        .slopes
        .iter()
        .zip(&phi.intercepts)
        .zip(&ev.prob)
        .map(|((q, &c), &p)| if p > 0.0 { Ok(c) } else { legendre(phi, q).map(|v| v.min(c)) })
        .collect::<Result<Vec<f64>>>()?;
    let origin = vec![0.0; phi.n];
    Ok(assemble(ev.log_z, m, weights, &intercepts, phi.eval(&origin)))
}

/// `c -> D` without the convexification pass (the objective the solver
/// minimizes; it agrees with `ding_functional` when every piece is tight).
pub fn discrete_ding(slopes: &[Vec<f64>], weights: &[f64], m: usize, c: &[f64]) -> Result<f64> {
    check_weights(slopes, weights)?;
    let mut quad = Quadrature::new(slopes, m, None, 200_000, 0)?;
    let ev = quad.evaluate(c)?;
    Ok(assemble(ev.log_z, m, weights, c, 0.0).total)
}
