//! Divergence certificate for slopes whose weighted barycenter is not zero.
//!
//! Translating `phi_0` by `t a` shifts every intercept by `t <q_j, a>`, so the
//! energy term changes by `t <b, a>` while `∫ exp(-m phi)` is unchanged. With
//! `a = -b / |b|` the functional decreases at rate `|b|`.

use serde::{Deserialize, Serialize};

use super::ding::{check_weights, ding_functional, DingValue};
use super::pwa::{dot, PiecewiseAffineConvex};
use super::slopes::weighted_barycenter;
use crate::error::{Error, Result};

pub const UNBOUNDED_STEPS: [f64; 4] = [0.0, 5.0, 10.0, 20.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnboundedCertificate {
    pub barycenter: Vec<f64>,
    /// Unit vector `a = -b / |b|`; `phi_t(s) = phi_0(s - t a)`.
    pub direction: Vec<f64>,
    pub t: Vec<f64>,
    pub values: Vec<DingValue>,
    pub strictly_decreasing: bool,
    /// `<b, a> = -|b|`, the predicted change of `D` per unit `t`.
    pub predicted_slope: f64,
    /// `(D(t_last) - D(t_first)) / (t_last - t_first)`.
    pub observed_slope: f64,
}

pub fn detect_unbounded(
    slopes: &[Vec<f64>],
    weights: &[f64],
    m: usize,
    ts: &[f64],
) -> Result<UnboundedCertificate> {
    check_weights(slopes, weights)?;
    if ts.len() < 2 {
        return Err(Error::InvalidParameter("need at least two translation steps".into()));
    }
    let scale = slopes.iter().map(|q| dot(q, q).sqrt()).fold(1.0f64, f64::max);
    let b = weighted_barycenter(slopes, weights);
    let b_norm = dot(&b, &b).sqrt();
    if b_norm <= 1e-8 * scale {
        return Err(Error::BarycenterZero);
    }
    let direction: Vec<f64> = b.iter().map(|x| -x / b_norm).collect();
    let base: Vec<f64> = slopes.iter().map(|q| dot(q, q) / 2.0).collect();
    let values = ts
        .iter()
        .map(|&t| {
            let c = slopes
                .iter()
                .zip(&base)
                .map(|(q, c)| c + t * dot(q, &direction))
                .collect();
            ding_functional(&PiecewiseAffineConvex::new(slopes.to_vec(), c)?, weights, m)
        })
        .collect::<Result<Vec<DingValue>>>()?;
    let strictly_decreasing = values.windows(2).all(|w| w[1].total < w[0].total);
    let first = &values[0];
    let last = &values[values.len() - 1];
    Ok(UnboundedCertificate {
        predicted_slope: dot(&b, &direction),
        observed_slope: (last.total - first.total) / (ts[ts.len() - 1] - ts[0]),
        barycenter: b,
        direction,
        t: ts.to_vec(),
        values,
        strictly_decreasing,
    })
}
