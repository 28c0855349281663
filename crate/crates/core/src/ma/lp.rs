//! Legendre transform of a max-of-affine function by linear programming.
//!
//! `phi*(q) = min { Σ λ_j c_j : Σ λ_j q_j = q, Σ λ_j = 1, λ >= 0 }`, the lower
//! convex envelope of the points `(q_j, c_j)` evaluated at `q`. Solved with a
//! dense two-phase simplex method and Bland's rule; the systems have `n + 1`
//! rows, so the tableau stays small.

use super::pwa::PiecewiseAffineConvex;
use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for x in self.a[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[c] == 0.0 {
                continue;
            }
            let f = row[c];
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` over the columns `allowed`; Bland's rule.
    fn minimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        for _ in 0..50 * (self.cols + self.rows) {
            let dual: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
            let entering = (0..self.cols).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j] - (0..self.rows).map(|i| dual[i] * self.a[i][j]).sum::<f64>();
                reduced < -EPS
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.a[i][c];
                if aij > EPS {
                    let ratio = self.a[i][self.cols] / aij;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::LinearProgram("unbounded direction".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::LinearProgram("iteration limit".into()))
    }
}

/// Optimal value and weights of the envelope LP at `q`.
pub fn envelope_weights(points: &[Vec<f64>], values: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = points.len();
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    let n = q.len();
    let rows = n + 1;
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .chain(q)
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let cols = k + rows;
    let mut a = vec![vec![0.0; cols + 1]; rows];
    for i in 0..rows {
        let rhs = if i < n { q[i] / scale } else { 1.0 };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..k {
            let coef = if i < n { points[j][i] / scale } else { 1.0 };
            a[i][j] = sign * coef;
        }
        a[i][k + i] = 1.0;
        a[i][cols] = sign * rhs;
    }
    let mut t = Tableau {
        rows,
        cols,
        a,
        basis: (k..k + rows).collect(),
    };
    let phase1: Vec<f64> = (0..cols).map(|j| if j >= k { 1.0 } else { 0.0 }).collect();
    t.minimize(&phase1, &vec![true; cols])?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= k)
        .map(|(i, _)| t.a[i][cols])
        .sum();
    if infeasibility > 1e-9 {
        return Err(Error::Unbounded);
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..rows {
        if t.basis[r] >= k {
            if let Some(c) = (0..k).find(|&j| t.a[r][j].abs() > EPS && !t.basis.contains(&j)) {
                t.pivot(r, c);
            }
        }
    }
    let shift = values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let mut cost: Vec<f64> = values.iter().map(|v| v - shift).collect();
    cost.extend(std::iter::repeat(0.0).take(rows));
    let allowed: Vec<bool> = (0..cols).map(|j| j < k).collect();
    t.minimize(&cost, &allowed)?;
    let mut weights = vec![0.0; k];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < k {
            weights[b] = t.a[i][cols].max(0.0);
        }
    }
    let value = weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>();
    Ok((value, weights))
}

/// `phi*(q) = sup_s <q, s> - phi(s)`; `Unbounded` outside the slope hull.
pub fn legendre(phi: &PiecewiseAffineConvex, q: &[f64]) -> Result<f64> {
    if q.len() != phi.n {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: phi.n,
            found: q.len(),
        });
    }
    envelope_weights(&phi.slopes, &phi.intercepts, q).map(|(v, _)| v)
}

/// Replaces every intercept by `phi*(q_j) <= c_j`, which leaves `phi`
/// unchanged and makes every piece tight.
pub fn convexify(phi: &PiecewiseAffineConvex) -> Result<PiecewiseAffineConvex> {
    let intercepts = phi
        .slopes
        .iter()
        .zip(&phi.intercepts)
        .map(|(q, &c)| legendre(phi, q).map(|v| v.min(c)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PiecewiseAffineConvex {
        n: phi.n,
        slopes: phi.slopes.clone(),
        intercepts,
    })
}
