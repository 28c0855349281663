//! Independent oracles (Monte Carlo volume, finite differences, the
//! one-dimensional closed-form solution) and the sup-norm certificate.

mod linf;

pub use linf::{fit_exponential_decay, linf_certificate, DecayFit, LinfCertificate};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::ProperCone;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub hits: usize,
}

const BATCH: usize = 1 << 16;

/// Rejection sampling of `C* ∩ {<xi, p> <= 1}` in the bounding box of
/// `conv(0, P_xi)`. Batch `b` draws from stream `b` of a ChaCha8 generator
/// seeded with `seed`, so the result does not depend on the thread count.
pub fn mc_volume(cone: &ProperCone, xi: &[f64], samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    let m = cone.dim();
    if xi.len() != m {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: m,
            found: xi.len(),
        });
    }
    let min_pairing = cone.min_dual_pairing(xi);
    if !(min_pairing > 0.0) {
        return Err(Error::NotInteriorReeb { min_pairing });
    }
    let normals = cone.primal_rays_f64();
    let mut lo = vec![0.0f64; m];
    let mut hi = vec![0.0f64; m];
    for v in cone.dual_rays_f64() {
        let h: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum();
        for k in 0..m {
            lo[k] = lo[k].min(v[k] / h);
            hi[k] = hi[k].max(v[k] / h);
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();

    let batches = samples.div_ceil(BATCH);
    let hits: usize = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(samples - b * BATCH);
            let mut p = vec![0.0; m];
            let mut hits = 0usize;
            for _ in 0..count {
                for k in 0..m {
                    p[k] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
                }
                let level: f64 = p.iter().zip(xi).map(|(a, b)| a * b).sum();
                if level <= 1.0
                    && normals
                        .iter()
                        .all(|r| r.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() >= 0.0)
                {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let f = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        estimate: box_volume * f,
        std_error: box_volume * (f * (1.0 - f) / samples as f64).sqrt(),
        samples,
        hits,
    })
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step {step} must be positive")));
    }
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            let plus = x[k] + step;
            let minus = x[k] - step;
            if plus == x[k] || minus == x[k] {
                return Err(Error::StepUnderflow(k));
            }
            y[k] = plus;
            let fp = f(&y);
            y[k] = minus;
            let fm = f(&y);
            y[k] = x[k];
            Ok((fp - fm) / (plus - minus))
        })
        .collect()
}

/// Central second differences; `H_kl` from four evaluations per pair.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let columns = (0..n)
        .map(|l| {
            let g = |y: &[f64]| -> Result<f64> { Ok(fd_gradient(f, y, step)?[l]) };
            let mut y = x.to_vec();
            (0..n)
                .map(|k| {
                    y[k] = x[k] + step;
                    let gp = g(&y)?;
                    y[k] = x[k] - step;
                    let gm = g(&y)?;
                    y[k] = x[k];
                    Ok((gp - gm) / (2.0 * step))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((0..n)
        .map(|k| (0..n).map(|l| 0.5 * (columns[l][k] + columns[k][l])).collect())
        .collect())
}

/// `log cosh x` without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `phi(s) = log(cosh(k s) / k)`, the solution of `phi'' = exp(-2 phi)` with
/// `phi'` ranging over `(-k, k)`.
pub fn ode_reference(k: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k = {k} must be positive")));
    }
    Ok(s_grid.iter().map(|&s| log_cosh(k * s) - k.ln()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::validate_cone_int;
    use crate::volmin::log_volume;

    #[test]
    fn quadrant_area_by_sampling() {
        let c = validate_cone_int(&[vec![1, 0], vec![0, 1]]).unwrap();
        let est = mc_volume(&c, &[1.0, 1.0], 1_000_000, 42).unwrap();
        assert!((est.estimate - 0.5).abs() < 3.0 * est.std_error);
        let again = mc_volume(&c, &[1.0, 1.0], 1_000_000, 42).unwrap();
        assert_eq!(est.estimate.to_bits(), again.estimate.to_bits());
        let other = mc_volume(&c, &[1.0, 1.0], 1_000_000, 43).unwrap();
        assert_ne!(est.hits, other.hits);
        assert!(matches!(mc_volume(&c, &[1.0, 0.0], 10, 0), Err(Error::NotInteriorReeb { .. })));
    }

    #[test]
    fn finite_differences() {
        let a = [0.3, -1.7, 2.5];
        let lin = |x: &[f64]| x.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>();
        let g = fd_gradient(&lin, &[1.0, 2.0, 3.0], 1e-3).unwrap();
        for (x, y) in g.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        assert_eq!(fd_gradient(&sq, &[0.0, 0.0], 1e-4).unwrap(), vec![0.0, 0.0]);
        let h = fd_hessian(&sq, &[0.5, -0.5], 1e-3).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-6 && h[0][1].abs() < 1e-6);
        assert_eq!(fd_gradient(&sq, &[1e20], 1e-4), Err(Error::StepUnderflow(0)));

        let c = validate_cone_int(&[vec![1, 0], vec![0, 1]]).unwrap();
        let lv = |x: &[f64]| log_volume(&c, x).unwrap();
        let g = fd_gradient(&lv, &[1.0, 1.0], 1e-5).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-7 && (g[1] + 1.0).abs() < 1e-7);
    }

    #[test]
    fn ode_reference_solves_the_equation() {
        assert_eq!(ode_reference(1.0, &[0.0]).unwrap(), vec![0.0]);
        let far = ode_reference(1.0, &[40.0]).unwrap()[0];
        assert!((far - 40.0 + std::f64::consts::LN_2).abs() < 1e-13);
        // phi' = k tanh(k s) -> ±k; phi'' = exp(-2 phi)
        let k = 2.0;
        let h = 1e-3;
        for s in [-1.3, 0.0, 0.4, 2.0] {
            let v = ode_reference(k, &[s - h, s, s + h]).unwrap();
            let d1 = (v[2] - v[0]) / (2.0 * h);
            let d2 = (v[2] - 2.0 * v[1] + v[0]) / (h * h);
            assert!((d1 - k * (k * s).tanh()).abs() < 1e-5);
            assert!((d2 - (-2.0 * v[1]).exp()).abs() < 1e-5);
        }
        let tail = ode_reference(k, &[30.0, -30.0]).unwrap();
        assert_eq!(tail[0], tail[1]);
        assert!(ode_reference(0.0, &[1.0]).is_err());
    }
}
