//! Sup-norm certificate
//! `sup |phi - h_P| <= (d/V) ∫|s| dmu + C_{n,q} d^{1 + n(1 - 1/q)} / V (∫|s|^q dmu)^{1/q}`
//! with `mu` the density `exp(-m phi)` scaled to total mass `V = V(P)`,
//! `d = diam P`, and `phi` normalized by `sup(phi - h_P) = 0`.

use serde::{Deserialize, Serialize};

use crate::cone::Polytope;
use crate::error::{Error, Result};
use crate::ma::{test_grid, MASolution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinfCertificate {
    pub lhs: f64,
    /// `sup(phi - h_P)` on the grid after normalization (zero up to roundoff).
    pub normalization: f64,
    pub diameter_d: f64,
    pub volume_v: f64,
    pub moment1: f64,
    pub momentq: f64,
    pub q: f64,
    pub c_nq: f64,
    pub first_term: f64,
    pub second_term: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// `q = None` uses `n + 1`. The grid defaults to `[-5, 5]^n`.
pub fn linf_certificate(
    solution: &MASolution,
    p: &Polytope,
    q: Option<f64>,
    c_nq: f64,
    grid: Option<&[Vec<f64>]>,
) -> Result<LinfCertificate> {
    let n = solution.phi.n;
    if p.dim != n {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: n,
            found: p.dim,
        });
    }
    let q = q.unwrap_or(n as f64 + 1.0);
    if !(q > n as f64) {
        return Err(Error::QTooSmall { q, n });
    }
    if !(c_nq >= 0.0 && c_nq.is_finite()) {
        return Err(Error::InvalidParameter(format!("C_nq = {c_nq} must be >= 0")));
    }
    let default;
    let grid = match grid {
        Some(g) => g,
        None => {
            default = test_grid(n, 5.0, if n == 1 { 1001 } else { 81 });
            &default
        }
    };
    let gaps: Vec<f64> = grid.iter().map(|s| solution.phi.eval(s) - p.support(s)).collect();
    let hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let normalized: Vec<f64> = gaps.iter().map(|g| g - hi).collect();
    let normalization = normalized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lhs = hi - lo;

    let volume_v = p.volume();
    let d = p.diameter();
    let norm = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let moment1 = volume_v * solution.expectation(&|s| norm(s))?;
    let momentq = (volume_v * solution.expectation(&|s| norm(s).powf(q))?).powf(1.0 / q);
    let first_term = d / volume_v * moment1;
    let second_term = c_nq * d.powf(1.0 + n as f64 * (1.0 - 1.0 / q)) / volume_v * momentq;
    let rhs = first_term + second_term;
    Ok(LinfCertificate {
        lhs,
        normalization,
        diameter_d: d,
        volume_v,
        moment1,
        momentq,
        q,
        c_nq,
        first_term,
        second_term,
        rhs,
        passed: lhs <= rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub radii: Vec<f64>,
    /// `mu(|s| > R) / mu(R^n)`.
    pub tails: Vec<f64>,
    /// Smallest `A` with `tail(R) <= A exp(-R / A)` at every radius.
    pub a: f64,
}

pub fn fit_exponential_decay(solution: &MASolution, radii: &[f64]) -> Result<DecayFit> {
    let tails = radii
        .iter()
        .map(|&r| {
            solution.expectation(&move |s: &[f64]| {
                f64::from(u8::from(s.iter().map(|x| x * x).sum::<f64>() > r * r))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    // A exp(-R/A) increases with A, so each radius gives a lower bound
    let needed = |r: f64, t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (1e-12, 1.0);
        while hi * (-r / hi).exp() < t {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (-r / mid).exp() >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let a = radii
        .iter()
        .zip(&tails)
        .map(|(&r, &t)| needed(r, t))
        .fold(0.0, f64::max);
    Ok(DecayFit {
        radii: radii.to_vec(),
        tails,
        a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ma::{minimize_ding, sample_slopes, SolverOptions};

    fn interval_solution() -> (MASolution, Polytope) {
        let p = Polytope::interval(-1.0, 1.0).unwrap();
        let s = sample_slopes(&p, 400, false).unwrap();
        (minimize_ding(&s.slopes, &s.weights, 2, &SolverOptions::default()).unwrap(), p)
    }

    #[test]
    fn interval_certificate() {
        let (sol, p) = interval_solution();
        let cert = linf_certificate(&sol, &p, None, 0.0, None).unwrap();
        assert!((cert.lhs - 2f64.ln()).abs() < 5e-3, "{}", cert.lhs);
        // ∫|s| sech^2 s ds = 2 log 2
        assert!((cert.moment1 - 2.0 * 2f64.ln()).abs() < 1e-2, "{}", cert.moment1);
        assert!(cert.passed);
        assert!(cert.normalization.abs() < 1e-9);
        assert_eq!(cert.q, 2.0);

        let one = linf_certificate(&sol, &p, None, 1.0, None).unwrap();
        let two = linf_certificate(&sol, &p, None, 2.0, None).unwrap();
        assert!((two.second_term - 2.0 * one.second_term).abs() < 1e-12);
        assert_eq!(one.first_term, two.first_term);

        assert!(matches!(
            linf_certificate(&sol, &p, Some(1.0), 1.0, None),
            Err(Error::QTooSmall { .. })
        ));
    }

    #[test]
    fn interval_decay() {
        let (sol, _) = interval_solution();
        let fit = fit_exponential_decay(&sol, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        // sech^2 tails: mu(|s| > R) / 2 = 1 - tanh R
        for (r, t) in fit.radii.iter().zip(&fit.tails) {
            assert!((t - (1.0 - r.tanh())).abs() < 1e-2);
        }
        assert!(fit.a.is_finite() && fit.a > 0.0);
        for (r, t) in fit.radii.iter().zip(&fit.tails) {
            assert!(*t <= fit.a * (-r / fit.a).exp() * (1.0 + 1e-9));
        }
    }
}
