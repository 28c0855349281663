//! Bounded convex polytopes in `R^n` carrying both descriptions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The half-space `{x : <normal, x> <= offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

/// A bounded convex polytope with vertices, facet half-spaces and a
/// triangulation into `n`-simplices over the vertex list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub halfspaces: Vec<HalfSpace>,
    pub simplices: Vec<Vec<usize>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `max_p <x, p>` over a finite vertex set; the empty set and `{0}` give 0.
pub fn support_function(vertices: &[Vec<f64>], x: &[f64]) -> f64 {
    if vertices.is_empty() {
        return 0.0;
    }
    vertices
        .iter()
        .map(|p| dot(p, x))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Polytope {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
        }
        Ok(Polytope {
            dim: 1,
            vertices: vec![vec![a], vec![b]],
            halfspaces: vec![
                HalfSpace {
                    normal: vec![-1.0],
                    offset: -a,
                },
                HalfSpace {
                    normal: vec![1.0],
                    offset: b,
                },
            ],
            simplices: vec![vec![0, 1]],
        })
    }

    /// Convex hull of planar points, vertices in counter-clockwise order.
    pub fn polygon(points: &[Vec<f64>]) -> Result<Self> {
        let hull = convex_hull_2d(points);
        if hull.len() < 3 {
            return Err(Error::InvalidParameter("polygon hull is degenerate".into()));
        }
        let k = hull.len();
        let halfspaces = (0..k)
            .map(|i| {
                let a = &hull[i];
                let b = &hull[(i + 1) % k];
                // outward normal of a CCW edge
                let normal = vec![b[1] - a[1], a[0] - b[0]];
                let offset = dot(&normal, a);
                HalfSpace { normal, offset }
            })
            .collect();
        let simplices = (1..k - 1).map(|i| vec![0, i, i + 1]).collect();
        Ok(Polytope {
            dim: 2,
            vertices: hull,
            halfspaces,
            simplices,
        })
    }

    pub fn translate(&self, shift: &[f64]) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| HalfSpace {
                normal: h.normal.clone(),
                offset: h.offset + dot(&h.normal, shift),
            })
            .collect();
        Polytope {
            dim: self.dim,
            vertices,
            halfspaces,
            simplices: self.simplices.clone(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -tol)
    }

    pub fn support(&self, x: &[f64]) -> f64 {
        support_function(&self.vertices, x)
    }

    fn simplex_volume(&self, s: &[usize]) -> f64 {
        let n = self.dim;
        let v0 = &self.vertices[s[0]];
        let m = DMatrix::from_fn(n, n, |r, c| self.vertices[s[c + 1]][r] - v0[r]);
        m.determinant().abs() / factorial(n)
    }

    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(|s| self.simplex_volume(s)).sum()
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut total = 0.0;
        for s in &self.simplices {
            let w = self.simplex_volume(s);
            total += w;
            for &i in s {
                for (a, x) in acc.iter_mut().zip(&self.vertices[i]) {
                    *a += w * x / (self.dim + 1) as f64;
                }
            }
        }
        acc.iter().map(|a| a / total).collect()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                let e: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                d = d.max(norm(&e));
            }
        }
        d
    }

    /// Distance from `x` to the boundary (negative outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.slack(x) / norm(&h.normal))
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear points.
pub fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts.iter().map(|p| p.to_vec()).collect();
    }
    let scale = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let eps = 1e-14 * scale * scale;
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.iter().map(|p| p.to_vec()).collect()
}
