//! Damped Newton minimization of `log V` on the slice `<l, xi> = m`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{grad_hess_log_volume, log_volume};
use crate::cone::{orthonormal_complement, GorensteinVector, ProperCone, ReebVector};
use crate::error::{Error, Result};
use crate::rational::ivec_to_f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Stop once `|b_{P_xi} - l/m| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point (rescaled onto the slice); defaults to `m` times the
    /// average primal ray.
    pub start: Option<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-9,
            max_iter: 200,
            start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub xi: Vec<f64>,
    pub log_v: f64,
    pub barycenter_residual: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    pub xi_star: ReebVector,
    pub v_vol: f64,
    pub barycenter: Vec<f64>,
    /// `|b_{P_xi*} - l/m|`.
    pub barycenter_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns the best iterate with `converged = false` if the iteration cap is
/// reached or the line search stalls.
pub fn minimize_volume(
    cone: &ProperCone,
    l: &GorensteinVector,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult> {
    let m = cone.dim();
    let mf = m as f64;
    let lf = l.to_f64();
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be positive", opts.tol)));
    }

    let start = match &opts.start {
        Some(s) => s.clone(),
        None => {
            let mut avg = vec![0.0; m];
            for r in cone.primal_rays() {
                for (a, x) in avg.iter_mut().zip(ivec_to_f64(r)) {
                    *a += x;
                }
            }
            avg
        }
    };
    let mut xi = ReebVector::new(cone, start, None)?.normalize(l).xi;
    // orthonormal basis of l^perp spans the tangent space of the slice
    let basis = orthonormal_complement(&lf);
    let n = m - 1;
    let u = DMatrix::from_fn(m, n, |r, c| basis[c][r]);
    let target: Vec<f64> = lf.iter().map(|x| x / mf).collect();

    let mut trace = Vec::new();
    let mut step_taken = 0.0;
    let mut iterations = 0;
    loop {
        let eval = grad_hess_log_volume(cone, &xi)?;
        let grad = eval.grad_log_v.as_ref().expect("gradient requested");
        let barycenter: Vec<f64> = grad.iter().map(|g| -g / mf).collect();
        let residual = barycenter
            .iter()
            .zip(&target)
            .map(|(b, t)| (b - t) * (b - t))
            .sum::<f64>()
            .sqrt();
        trace.push(IterationRecord {
            iteration: iterations,
            xi: xi.clone(),
            log_v: eval.log_v,
            barycenter_residual: residual,
            step: step_taken,
        });
        let finish = |converged: bool, xi: Vec<f64>, trace: Vec<IterationRecord>| MinimizerResult {
            xi_star: ReebVector {
                xi,
                normalized: true,
            },
            v_vol: eval.v_vol,
            barycenter: barycenter.clone(),
            barycenter_residual: residual,
            iterations,
            converged,
            trace,
        };
        if residual <= opts.tol {
            return Ok(finish(true, xi, trace));
        }
        if iterations >= opts.max_iter {
            return Ok(finish(false, xi, trace));
        }

        let hess = eval.hessian_log_v.as_ref().expect("hessian requested");
        let g = u.transpose() * DVector::from_column_slice(grad);
        let h = u.transpose() * DMatrix::from_fn(m, m, |r, c| hess[r][c]) * &u;
        let dir = match h.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&dir);
        let dir_ambient = &u * &dir;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = xi
                .iter()
                .zip(dir_ambient.iter())
                .map(|(x, d)| x + alpha * d)
                .collect();
            if cone.min_dual_pairing(&trial) > 0.0 {
                let f = log_volume(cone, &trial)?;
                let armijo = f <= eval.log_v + 1e-4 * alpha * slope;
                // near the optimum log V differences drown in roundoff
                let flat = f <= eval.log_v + 1e-13 * (1.0 + eval.log_v.abs());
                if armijo || flat {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => {
                // re-project onto the slice to keep <l, xi> = m from drifting
                let c = mf / dot(&lf, &next);
                xi = next.into_iter().map(|x| x * c).collect();
                step_taken = alpha;
                iterations += 1;
            }
            None => return Ok(finish(false, xi, trace)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{gorenstein_vector, validate_cone_int};

    #[test]
    fn quadrant_minimizer_is_diagonal() {
        for m in [2usize, 3, 4] {
            let rays: Vec<Vec<i64>> = (0..m)
                .map(|i| (0..m).map(|j| i64::from(i == j)).collect())
                .collect();
            let c = validate_cone_int(&rays).unwrap();
            let l = gorenstein_vector(&c).unwrap();
            let opts = MinimizeOptions {
                start: Some((0..m).map(|i| 1.0 + i as f64).collect()),
                ..Default::default()
            };
            let r = minimize_volume(&c, &l, &opts).unwrap();
            assert!(r.converged);
            for x in &r.xi_star.xi {
                assert!((x - 1.0).abs() < 1e-8, "{:?}", r.xi_star.xi);
            }
        }
    }

    #[test]
    fn conifold_minimizer() {
        let c =
            validate_cone_int(&[vec![1, 0, 0], vec![0, 1, 0], vec![-1, 0, 1], vec![0, -1, 1]]).unwrap();
        let l = gorenstein_vector(&c).unwrap();
        let opts = MinimizeOptions {
            start: Some(vec![0.5, 0.5, 1.0]),
            ..Default::default()
        };
        let r = minimize_volume(&c, &l, &opts).unwrap();
        assert!(r.converged);
        let expected = [0.0, 0.0, 1.5];
        for (x, e) in r.xi_star.xi.iter().zip(expected) {
            assert!((x - e).abs() < 1e-8, "{:?}", r.xi_star.xi);
        }
        assert!((dot(&l.to_f64(), &r.xi_star.xi) - 3.0).abs() < 1e-12);
        // log V decreases monotonically along the trace
        for w in r.trace.windows(2) {
            assert!(w[1].log_v <= w[0].log_v + 1e-12);
        }
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let c = validate_cone_int(&[vec![1, 0], vec![0, 1]]).unwrap();
        let l = gorenstein_vector(&c).unwrap();
        let opts = MinimizeOptions {
            max_iter: 0,
            start: Some(vec![1.0, 3.0]),
            ..Default::default()
        };
        let r = minimize_volume(&c, &l, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 0);
        assert!((r.xi_star.xi[0] - 0.5).abs() < 1e-15);
    }
}
