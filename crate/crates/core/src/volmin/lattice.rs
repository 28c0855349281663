//! Weighted lattice-point count `t^m Σ_{p ∈ C* ∩ Z^m} exp(-t <xi, p>)`.
//!
//! As `t -> 0` this tends to `∫_{C*} exp(-<xi, p>) dp = m! V(xi)`. The sum is
//! truncated at `<xi, p> <= cutoff`; the first `m - 1` coordinates (except the
//! one with the largest `|xi_k|`) are enumerated and the remaining coordinate
//! is summed as a finite geometric series.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_interior, volume_laplace};
use crate::cone::ProperCone;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub value: f64,
    pub cutoff: f64,
    /// Continuum estimate of the omitted part `<xi, p> > cutoff`.
    pub tail: f64,
}

/// `Γ(m, x) / Γ(m) = exp(-x) Σ_{k<m} x^k / k!`: the fraction of
/// `∫ exp(-<xi, p>)` over `C*` coming from `<xi, p> > x`.
pub fn lattice_tail_fraction(m: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..m {
        if k > 0 {
            term *= x / k as f64;
        }
        sum += term;
    }
    (-x).exp() * sum
}

/// Smallest `t * cutoff` whose continuum tail fraction is below `1e-4`.
fn auto_cutoff(m: usize, t: f64) -> f64 {
    let mut x = m as f64;
    while lattice_tail_fraction(m, x) > 1e-4 {
        x += 0.5;
    }
    x / t
}

/// `t^m` times the truncated exponential lattice sum over `C* ∩ Z^m`.
///
/// `cutoff = None` picks the truncation so that the estimated tail is below
/// `1e-4` of the total. Fails with `CutoffTooSmall` when the tail estimate
/// exceeds 10% of the computed sum.
pub fn volume_lattice_asymptotic(
    cone: &ProperCone,
    xi: &[f64],
    t: f64,
    cutoff: Option<f64>,
) -> Result<LatticeSum> {
    if !(t > 0.0 && t <= 0.1) {
        return Err(Error::InvalidParameter(format!("t = {t} must lie in (0, 0.1]")));
    }
    check_interior(cone, xi)?;
    let m = cone.dim();
    let cutoff = cutoff.unwrap_or_else(|| auto_cutoff(m, t));
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff = {cutoff} must be positive")));
    }

    let inner = (0..m)
        .max_by(|&a, &b| xi[a].abs().partial_cmp(&xi[b].abs()).unwrap().then(b.cmp(&a)))
        .unwrap();
    let outer: Vec<usize> = (0..m).filter(|&k| k != inner).collect();

    // conv(0, P_xi) scaled by the cutoff bounds the enumerated region
    let rays = cone.dual_rays_f64();
    let mut lo = vec![0i64; m];
    let mut hi = vec![0i64; m];
    for v in &rays {
        let h: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum();
        for k in 0..m {
            let x = v[k] / h * cutoff;
            lo[k] = lo[k].min(x.floor() as i64);
            hi[k] = hi[k].max(x.ceil() as i64);
        }
    }

    let normals: Vec<Vec<i64>> = cone
        .primal_rays()
        .iter()
        .map(|r| r.iter().map(|x| x.to_i64().expect("ray entry fits in i64")).collect())
        .collect();

    // exp(-t xi_k p) tabulated over the bounding box, so rows need no exp
    let tables: Vec<Vec<f64>> = (0..m)
        .map(|k| (lo[k]..=hi[k]).map(|p| (-t * xi[k] * p as f64).exp()).collect())
        .collect();
    let step = t * xi[inner];
    let powers: Vec<f64> = (0..=(hi[inner] - lo[inner] + 1))
        .map(|n| -(-step * n as f64).exp_m1())
        .collect();
    let ratio = -(-step).exp_m1();

    let row_sum = |prefix: &[i64]| -> f64 {
        // prefix holds the outer coordinates in order
        let mut lower = lo[inner];
        let mut upper = hi[inner];
        for a in &normals {
            let rest: i64 = outer.iter().zip(prefix).map(|(&k, &p)| a[k] * p).sum();
            let c = a[inner];
            if c > 0 {
                lower = lower.max((-rest).div_euclid(c) + i64::from((-rest).rem_euclid(c) != 0));
            } else if c < 0 {
                upper = upper.min(rest.div_euclid(-c));
            } else if rest < 0 {
                return 0.0;
            }
        }
        let base: f64 = outer
            .iter()
            .zip(prefix)
            .map(|(&k, &p)| xi[k] * p as f64)
            .sum();
        let bound = (cutoff - base) / xi[inner];
        if xi[inner] > 0.0 {
            upper = upper.min(bound.floor() as i64);
        } else {
            lower = lower.max(bound.ceil() as i64);
        }
        if lower > upper {
            return 0.0;
        }
        let weight: f64 = outer
            .iter()
            .zip(prefix)
            .map(|(&k, &p)| tables[k][(p - lo[k]) as usize])
            .product();
        let first = weight * tables[inner][(lower - lo[inner]) as usize];
        // Σ_{j<n} exp(-step j)
        first * powers[(upper - lower + 1) as usize] / ratio
    };

    let first_axis = outer.first().copied();
    let total: f64 = match first_axis {
        None => row_sum(&[]),
        Some(k0) => {
            let rows: Vec<f64> = (lo[k0]..=hi[k0])
                .into_par_iter()
                .map(|p0| {
                    let mut acc = 0.0;
                    let mut prefix = vec![0i64; outer.len()];
                    prefix[0] = p0;
                    enumerate(&outer, &lo, &hi, 1, &mut prefix, &mut |p| acc += row_sum(p));
                    acc
                })
                .collect();
            rows.iter().sum()
        }
    };
    let value = total * t.powi(m as i32);
    let v_char = volume_laplace(cone, xi)? * super::factorial(m);
    let tail = v_char * lattice_tail_fraction(m, t * cutoff);
    if tail > 0.1 * value {
        return Err(Error::CutoffTooSmall { tail, sum: value });
    }
    Ok(LatticeSum {
        value,
        cutoff,
        tail,
    })
}

fn enumerate(
    outer: &[usize],
    lo: &[i64],
    hi: &[i64],
    depth: usize,
    prefix: &mut Vec<i64>,
    visit: &mut dyn FnMut(&[i64]),
) {
    if depth == outer.len() {
        visit(prefix);
        return;
    }
    let k = outer[depth];
    for p in lo[k]..=hi[k] {
        prefix[depth] = p;
        enumerate(outer, lo, hi, depth + 1, prefix, visit);
    }
}
