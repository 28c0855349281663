//! The volume functional `V(xi) = vol(C* ∩ {<xi, .> <= 1})` on the Reeb cone.
//!
//! Over a simplicial decomposition of `C*` with generators `v_1, ..., v_m`
//! and integer determinant `d_σ`,
//!
//! ```text
//! V(xi) = (1/m!) Σ_σ d_σ / Π_i <xi, v_i>,
//! ```
//!
//! which is also `(1/m!) ∫_{C*} exp(-<xi, p>) dp`. Every term is a product of
//! reciprocals of linear forms, so `log V` can be differentiated in closed
//! form.

mod lattice;
mod newton;

pub use lattice::{lattice_tail_fraction, volume_lattice_asymptotic, LatticeSum};
pub use newton::{minimize_volume, IterationRecord, MinimizeOptions, MinimizerResult};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cone::{cross_section, measure_barycenter_moments, ProperCone, ReebVector};
use crate::error::{Error, Result};

/// Value and, when requested, first and second derivatives of `log V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEvaluation {
    /// Euclidean volume of the truncated dual cone.
    pub v_vol: f64,
    /// Character-count normalization `m! * v_vol = ∫ exp(-<xi, p>) dp`.
    pub v_char: f64,
    pub log_v: f64,
    pub grad_log_v: Option<Vec<f64>>,
    pub hessian_log_v: Option<Vec<Vec<f64>>>,
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_interior(cone: &ProperCone, xi: &[f64]) -> Result<()> {
    if xi.len() != cone.dim() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: cone.dim(),
            found: xi.len(),
        });
    }
    let min_pairing = cone.min_dual_pairing(xi);
    if !(min_pairing > 0.0) {
        return Err(Error::NotInteriorReeb { min_pairing });
    }
    Ok(())
}

fn pairings(cone: &ProperCone, xi: &[f64]) -> Vec<f64> {
    cone.dual_rays_f64()
        .iter()
        .map(|v| v.iter().zip(xi).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Σ_σ |det(v_i / <xi, v_i>)| / m!` with floating-point determinants.
pub fn volume_triangulated(cone: &ProperCone, xi: &[f64]) -> Result<f64> {
    check_interior(cone, xi)?;
    let m = cone.dim();
    let rays = cone.dual_rays_f64();
    let h = pairings(cone, xi);
    let total: f64 = cone
        .simplices()
        .iter()
        .map(|s| {
            let a = DMatrix::from_fn(m, m, |r, c| rays[s[c]][r] / h[s[c]]);
            a.determinant().abs()
        })
        .sum();
    Ok(total / factorial(m))
}

/// `(1/m!) Σ_σ d_σ / Π <xi, v_i>` with the exact simplex determinants.
pub fn volume_laplace(cone: &ProperCone, xi: &[f64]) -> Result<f64> {
    check_interior(cone, xi)?;
    let h = pairings(cone, xi);
    let dets = cone.simplex_dets_f64();
    let total: f64 = cone
        .simplices()
        .iter()
        .zip(&dets)
        .map(|(s, d)| d / s.iter().map(|&i| h[i]).product::<f64>())
        .sum();
    Ok(total / factorial(cone.dim()))
}

/// Volume by both routes; they must agree to `1e-10` relative.
pub fn volume(cone: &ProperCone, xi: &[f64]) -> Result<VolumeEvaluation> {
    let triangulated = volume_triangulated(cone, xi)?;
    let laplace = volume_laplace(cone, xi)?;
    if !((triangulated - laplace).abs() <= 1e-10 * laplace.abs()) {
        return Err(Error::VolumeMismatch {
            triangulated,
            laplace,
        });
    }
    Ok(VolumeEvaluation {
        v_vol: laplace,
        v_char: laplace * factorial(cone.dim()),
        log_v: laplace.ln(),
        grad_log_v: None,
        hessian_log_v: None,
    })
}

pub fn log_volume(cone: &ProperCone, xi: &[f64]) -> Result<f64> {
    Ok(volume_laplace(cone, xi)?.ln())
}

/// `(L, ∇L, ∇²L)` of the Laplace sum `L = Σ_σ d_σ / Π <xi, v_i>`.
fn laplace_derivatives(cone: &ProperCone, xi: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let m = cone.dim();
    let rays = cone.dual_rays_f64();
    let h = pairings(cone, xi);
    let dets = cone.simplex_dets_f64();
    let mut value = 0.0;
    let mut grad = vec![0.0; m];
    let mut hess = vec![vec![0.0; m]; m];
    for (s, d) in cone.simplices().iter().zip(&dets) {
        let w = d / s.iter().map(|&i| h[i]).product::<f64>();
        // ∂w = w g with g = -Σ v_i / a_i; ∂²w = w (g g^T + Σ v_i v_i^T / a_i²)
        let mut g = vec![0.0; m];
        for &i in s {
            for r in 0..m {
                g[r] -= rays[i][r] / h[i];
            }
        }
        value += w;
        for r in 0..m {
            grad[r] += w * g[r];
            for c in 0..m {
                let vv: f64 = s
                    .iter()
                    .map(|&i| rays[i][r] * rays[i][c] / (h[i] * h[i]))
                    .sum();
                hess[r][c] += w * (g[r] * g[c] + vv);
            }
        }
    }
    (value, grad, hess)
}

/// Barycenter of `P_xi` from the Laplace sum alone, `-∇L / (m L)`.
///
/// Independent of the cross-section geometry; used to cross-check the
/// barycenter identity.
pub fn laplace_barycenter(cone: &ProperCone, xi: &[f64]) -> Result<Vec<f64>> {
    check_interior(cone, xi)?;
    let m = cone.dim() as f64;
    let (value, grad, _) = laplace_derivatives(cone, xi);
    Ok(grad.iter().map(|g| -g / (m * value)).collect())
}

/// Full evaluation: `∇ log V = -m b_{P_xi}` from the cross-section moments,
/// and the Hessian by differentiating the Laplace sum twice.
pub fn grad_hess_log_volume(cone: &ProperCone, xi: &[f64]) -> Result<VolumeEvaluation> {
    let mut eval = volume(cone, xi)?;
    let m = cone.dim();
    let reeb = ReebVector::new(cone, xi.to_vec(), None)?;
    let section = cross_section(cone, &reeb)?;
    let moments = measure_barycenter_moments(&section, None)?;
    eval.grad_log_v = Some(moments.barycenter.iter().map(|b| -(m as f64) * b).collect());

    let (value, grad, hess) = laplace_derivatives(cone, xi);
    let hessian = (0..m)
        .map(|r| {
            (0..m)
                .map(|c| hess[r][c] / value - grad[r] * grad[c] / (value * value))
                .collect()
        })
        .collect();
    eval.hessian_log_v = Some(hessian);
    Ok(eval)
}
