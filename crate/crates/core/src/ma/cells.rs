//! Cells `S_j = {s : piece j is active}` of a max-of-affine function inside
//! the box `[-R, R]^n` (`n = 1, 2`), with exact integrals of
//! `exp(-m (phi - phi_min))` over cells and cell boundaries.

use rayon::prelude::*;

use super::expint::{
    segment_first_moments, segment_integral, triangle_first_moments, triangle_integral,
};
use super::geometry::LabeledPolygon;
use super::pwa::dot;

/// Exponent range beyond which the density counts as negligible at the box
/// boundary (`exp(-36) ≈ 2e-16`).
pub(crate) const BOUNDARY_DECAY: f64 = 36.0;

#[derive(Clone, Debug)]
pub(crate) enum Cell {
    Empty,
    /// `[a, b]` with the neighbouring pieces across each end.
    Interval {
        ends: [f64; 2],
        nbs: [Option<usize>; 2],
    },
    Polygon(LabeledPolygon<Option<usize>>),
}

#[derive(Clone, Debug)]
pub(crate) struct CellComplex {
    pub n: usize,
    pub radius: f64,
    pub cells: Vec<Cell>,
}

/// For each slope, the other slopes sorted by distance to it.
pub(crate) fn neighbor_order(slopes: &[Vec<f64>]) -> Vec<Vec<u32>> {
    slopes
        .par_iter()
        .enumerate()
        .map(|(j, qj)| {
            let mut others: Vec<(f64, u32)> = slopes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(k, qk)| {
                    let d: f64 = qj.iter().zip(qk).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, k as u32)
                })
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            others.into_iter().map(|(_, k)| k).collect()
        })
        .collect()
}

pub(crate) fn build_cells(
    slopes: &[Vec<f64>],
    c: &[f64],
    order: &[Vec<u32>],
    radius: f64,
) -> CellComplex {
    let n = slopes[0].len();
    let cells = (0..slopes.len())
        .into_par_iter()
        .map(|j| match n {
            1 => interval_cell(slopes, c, &order[j], j, radius),
            2 => polygon_cell(slopes, c, &order[j], j, radius),
            _ => unreachable!("cell complexes are built for n <= 2"),
        })
        .collect();
    CellComplex { n, radius, cells }
}

fn interval_cell(slopes: &[Vec<f64>], c: &[f64], order: &[u32], j: usize, r: f64) -> Cell {
    let mut ends = [-r, r];
    let mut nbs = [None, None];
    for &k in order {
        let k = k as usize;
        // piece j dominates piece k where (q_k - q_j) s <= c_k - c_j
        let a = slopes[k][0] - slopes[j][0];
        let b = c[k] - c[j];
        if a > 0.0 {
            let x = b / a;
            if x < ends[1] {
                ends[1] = x;
                nbs[1] = Some(k);
            }
        } else if a < 0.0 {
            let x = b / a;
            if x > ends[0] {
                ends[0] = x;
                nbs[0] = Some(k);
            }
        } else if b < 0.0 {
            return Cell::Empty;
        }
        if ends[0] >= ends[1] {
            return Cell::Empty;
        }
    }
    Cell::Interval { ends, nbs }
}

fn polygon_cell(slopes: &[Vec<f64>], c: &[f64], order: &[u32], j: usize, r: f64) -> Cell {
    let mut poly = LabeledPolygon::rectangle([-r, -r], [r, r], None);
    for &k in order {
        let k = k as usize;
        let a = [slopes[k][0] - slopes[j][0], slopes[k][1] - slopes[j][1]];
        let b = c[k] - c[j];
        let tol = 1e-13 * (b.abs() + (a[0].abs() + a[1].abs()) * r);
        poly.clip(a, b, Some(k), tol);
        if poly.is_empty() {
            return Cell::Empty;
        }
    }
    if poly.area() <= 0.0 {
        return Cell::Empty;
    }
    Cell::Polygon(poly)
}

/// Integrals of `exp(-m (phi - phi_min))`, scaled by `exp(m phi_min)`.
#[derive(Clone, Debug)]
pub(crate) struct CellIntegrals {
    pub phi_min: f64,
    pub mass: Vec<f64>,
    pub total: f64,
    /// `a_jk = ∫_{S_j ∩ S_k} exp(-m (phi - phi_min)) dσ / |q_j - q_k|`.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl CellIntegrals {
    /// `log ∫ exp(-m phi)`.
    pub fn log_z(&self, m: usize) -> f64 {
        self.total.ln() - m as f64 * self.phi_min
    }
}

impl CellComplex {
    fn for_each_vertex(&self, mut f: impl FnMut(usize, &[f64])) {
        for (j, cell) in self.cells.iter().enumerate() {
            match cell {
                Cell::Empty => {}
                Cell::Interval { ends, .. } => {
                    f(j, &[ends[0]]);
                    f(j, &[ends[1]]);
                }
                Cell::Polygon(p) => {
                    for v in &p.verts {
                        f(j, v);
                    }
                }
            }
        }
    }

    /// Minimum of `phi` over the box (attained at a cell vertex).
    pub fn phi_min(&self, slopes: &[Vec<f64>], c: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.for_each_vertex(|j, v| best = best.min(dot(&slopes[j], v) - c[j]));
        best
    }

    /// Largest value of `<q, s> - phi(s)` over the box, for a slope `q` that
    /// is not one of the pieces.
    pub fn max_gap(&self, slopes: &[Vec<f64>], c: &[f64], q: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        self.for_each_vertex(|j, v| best = best.max(dot(q, v) - dot(&slopes[j], v) + c[j]));
        best
    }

    /// Whether `m (phi - phi_min) >= BOUNDARY_DECAY` on the box boundary.
    pub fn boundary_decayed(&self, slopes: &[Vec<f64>], c: &[f64], m: usize, phi_min: f64) -> bool {
        let r = self.radius;
        let on_boundary = |v: &[f64]| v.iter().any(|x| x.abs() >= r * (1.0 - 1e-12));
        let mut ok = true;
        self.for_each_vertex(|j, v| {
            if on_boundary(v) && m as f64 * (dot(&slopes[j], v) - c[j] - phi_min) < BOUNDARY_DECAY {
                ok = false;
            }
        });
        ok
    }

    pub fn integrate(&self, slopes: &[Vec<f64>], c: &[f64], m: usize, phi_min: f64) -> CellIntegrals {
        let mf = m as f64;
        let alpha = |j: usize, v: &[f64]| -mf * (dot(&slopes[j], v) - c[j] - phi_min);
        let per_cell: Vec<(f64, Vec<(usize, f64)>)> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(j, cell)| match cell {
                Cell::Empty => (0.0, Vec::new()),
                Cell::Interval { ends, nbs } => {
                    let a = alpha(j, &[ends[0]]);
                    let b = alpha(j, &[ends[1]]);
                    let mass = segment_integral(ends[1] - ends[0], a, b);
                    let mut flux = Vec::new();
                    for (side, nb) in nbs.iter().enumerate() {
                        if let Some(k) = *nb {
                            let value = if side == 0 { a } else { b };
                            let dq = (slopes[j][0] - slopes[k][0]).abs();
                            flux.push((k, value.exp() / dq));
                        }
                    }
                    (mass, flux)
                }
                Cell::Polygon(p) => {
                    let vals: Vec<f64> = p.verts.iter().map(|v| alpha(j, v)).collect();
                    let mut mass = 0.0;
                    let o = p.verts[0];
                    for i in 1..p.verts.len() - 1 {
                        let (a, b) = (p.verts[i], p.verts[i + 1]);
                        let area =
                            0.5 * ((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]));
                        mass += triangle_integral(area, [vals[0], vals[i], vals[i + 1]]);
                    }
                    let k = p.verts.len();
                    let mut flux = Vec::new();
                    for i in 0..k {
                        if let Some(nb) = p.labels[i] {
                            let (a, b) = (p.verts[i], p.verts[(i + 1) % k]);
                            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                            if len == 0.0 {
                                continue;
                            }
                            let rho = segment_integral(len, vals[i], vals[(i + 1) % k]);
                            let dq = ((slopes[j][0] - slopes[nb][0]).powi(2)
                                + (slopes[j][1] - slopes[nb][1]).powi(2))
                            .sqrt();
                            flux.push((nb, rho / dq));
                        }
                    }
                    (mass, flux)
                }
            })
            .collect();

        let k = self.cells.len();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        let mut mass = Vec::with_capacity(k);
        for (j, (mj, flux)) in per_cell.into_iter().enumerate() {
            mass.push(mj);
            // each shared facet is seen from both sides; average them
            for (nb, a) in flux {
                adjacency[j].push((nb, 0.5 * a));
                adjacency[nb].push((j, 0.5 * a));
            }
        }
        for row in adjacency.iter_mut() {
            row.sort_by(|a, b| a.0.cmp(&b.0));
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(nb, a) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == nb => last.1 += a,
                    _ => merged.push((nb, a)),
                }
            }
            *row = merged;
        }
        let total = mass.iter().sum();
        CellIntegrals {
            phi_min,
            mass,
            total,
            adjacency,
        }
    }

    /// `∫ s exp(-m (phi - phi_min)) ds` over the box, closed form.
    pub fn first_moment(&self, slopes: &[Vec<f64>], c: &[f64], m: usize, phi_min: f64) -> Vec<f64> {
        let mf = m as f64;
        let alpha = |j: usize, v: &[f64]| -mf * (dot(&slopes[j], v) - c[j] - phi_min);
        let mut acc = vec![0.0; self.n];
        for (j, cell) in self.cells.iter().enumerate() {
            match cell {
                Cell::Empty => {}
                Cell::Interval { ends, .. } => {
                    let w = segment_first_moments(
                        ends[1] - ends[0],
                        alpha(j, &[ends[0]]),
                        alpha(j, &[ends[1]]),
                    );
                    acc[0] += w[0] * ends[0] + w[1] * ends[1];
                }
                Cell::Polygon(p) => {
                    let vals: Vec<f64> = p.verts.iter().map(|v| alpha(j, v)).collect();
                    let o = p.verts[0];
                    for i in 1..p.verts.len() - 1 {
                        let (a, b) = (p.verts[i], p.verts[i + 1]);
                        let area =
                            0.5 * ((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]));
                        let w = triangle_first_moments(area, [vals[0], vals[i], vals[i + 1]]);
                        for d in 0..2 {
                            acc[d] += w[0] * o[d] + w[1] * a[d] + w[2] * b[d];
                        }
                    }
                }
            }
        }
        acc
    }

    /// `∫ g(s) exp(-m (phi - phi_min)) ds` by Gauss-Legendre quadrature on
    /// pieces subdivided until the exponent varies by at most 1.
    pub fn quadrature(
        &self,
        slopes: &[Vec<f64>],
        c: &[f64],
        m: usize,
        phi_min: f64,
        g: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> f64 {
        let mf = m as f64;
        let (nodes, weights) = gauss_legendre(8);
        let parts: Vec<f64> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(j, cell)| {
                let alpha = |v: &[f64]| -mf * (dot(&slopes[j], v) - c[j] - phi_min);
                match cell {
                    Cell::Empty => 0.0,
                    Cell::Interval { ends, .. } => {
                        let spread = (alpha(&[ends[0]]) - alpha(&[ends[1]])).abs();
                        let pieces = (spread / 4.0).ceil().clamp(1.0, 4096.0) as usize;
                        let h = (ends[1] - ends[0]) / pieces as f64;
                        let mut sum = 0.0;
                        for p in 0..pieces {
                            let a = ends[0] + p as f64 * h;
                            for (x, w) in nodes.iter().zip(&weights) {
                                let s = [a + 0.5 * (x + 1.0) * h];
                                sum += 0.5 * h * w * g(&s) * alpha(&s).exp();
                            }
                        }
                        sum
                    }
                    Cell::Polygon(p) => {
                        let o = p.verts[0];
                        let mut sum = 0.0;
                        for i in 1..p.verts.len() - 1 {
                            sum += triangle_quadrature(
                                [o, p.verts[i], p.verts[i + 1]],
                                &alpha,
                                g,
                                &nodes,
                                &weights,
                                0,
                            );
                        }
                        sum
                    }
                }
            })
            .collect();
        parts.iter().sum()
    }
}

fn triangle_quadrature(
    t: [[f64; 2]; 3],
    alpha: &dyn Fn(&[f64]) -> f64,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    nodes: &[f64],
    weights: &[f64],
    depth: usize,
) -> f64 {
    let vals = [alpha(&t[0]), alpha(&t[1]), alpha(&t[2])];
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // alpha is affine, so the whole triangle lies below e^top
    if top < -80.0 {
        return 0.0;
    }
    let spread = top - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    // 8-point Gauss is accurate to ~1e-13 for exponents varying by 4
    if spread > 4.0 && depth < 10 {
        let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let (m01, m12, m20) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
        return [
            [t[0], m01, m20],
            [m01, t[1], m12],
            [m20, m12, t[2]],
            [m01, m12, m20],
        ]
        .iter()
        .map(|s| triangle_quadrature(*s, alpha, g, nodes, weights, depth + 1))
        .sum();
    }
    let area2 = ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])).abs();
    // Duffy map (u, v) -> λ = (1 - u, u (1 - v), u v), Jacobian u
    let mut sum = 0.0;
    for (xu, wu) in nodes.iter().zip(weights) {
        let u = 0.5 * (xu + 1.0);
        for (xv, wv) in nodes.iter().zip(weights) {
            let v = 0.5 * (xv + 1.0);
            let l = [1.0 - u, u * (1.0 - v), u * v];
            let s = [
                l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0],
                l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1],
            ];
            sum += 0.25 * wu * wv * u * g(&s) * alpha(&s).exp();
        }
    }
    sum * area2
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
