//! Max-of-affine convex functions `phi(s) = max_j (<q_j, s> - c_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffineConvex {
    pub n: usize,
    pub slopes: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PiecewiseAffineConvex {
    pub fn new(slopes: Vec<Vec<f64>>, intercepts: Vec<f64>) -> Result<Self> {
        let n = slopes.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if slopes.len() != intercepts.len() {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: slopes.len(),
                found: intercepts.len(),
            });
        }
        if let Some(i) = slopes.iter().position(|q| q.len() != n) {
            return Err(Error::DimensionMismatch {
                index: i,
                expected: n,
                found: slopes[i].len(),
            });
        }
        Ok(PiecewiseAffineConvex {
            n,
            slopes,
            intercepts,
        })
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn piece(&self, j: usize, s: &[f64]) -> f64 {
        dot(&self.slopes[j], s) - self.intercepts[j]
    }

    /// Index of the active piece (lowest index on ties) and the value.
    pub fn argmax(&self, s: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..self.len() {
            let v = self.piece(j, s);
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        self.argmax(s).1
    }

    /// A subgradient: the slope of the active piece.
    pub fn gradient(&self, s: &[f64]) -> &[f64] {
        &self.slopes[self.argmax(s).0]
    }

    /// `phi(s + a)`: intercepts become `c_j - <q_j, a>`.
    pub fn translated(&self, a: &[f64]) -> Self {
        let intercepts = self
            .slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(q, c)| c - dot(q, a))
            .collect();
        PiecewiseAffineConvex {
            n: self.n,
            slopes: self.slopes.clone(),
            intercepts,
        }
    }

    /// `phi + k`.
    pub fn shifted(&self, k: f64) -> Self {
        PiecewiseAffineConvex {
            n: self.n,
            slopes: self.slopes.clone(),
            intercepts: self.intercepts.iter().map(|c| c - k).collect(),
        }
    }
}
