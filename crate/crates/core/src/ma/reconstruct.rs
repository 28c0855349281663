//! The toric potential `f(x) = exp(<l, x>/m + phi(B^T x))` on `W = R^m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pwa::{dot, PiecewiseAffineConvex};
use super::solver::MASolution;
use crate::cone::{ProperCone, ShiftedPolytope};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricPotential {
    pub m: usize,
    pub l: Vec<f64>,
    pub xi: Vec<f64>,
    /// Orthonormal basis `s_1, ..., s_n` of `xi^perp`.
    pub basis: Vec<Vec<f64>>,
    pub phi: PiecewiseAffineConvex,
}

impl ToricPotential {
    pub fn s_coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, x)).collect()
    }

    pub fn log_f(&self, x: &[f64]) -> f64 {
        dot(&self.l, x) / self.m as f64 + self.phi.eval(&self.s_coords(x))
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.log_f(x).exp()
    }

    /// `∇ log f = l/m + B q_j` for the active piece `j`; a point of `P_xi`.
    pub fn grad_log_f(&self, x: &[f64]) -> Vec<f64> {
        let q = self.phi.gradient(&self.s_coords(x));
        let mut p: Vec<f64> = self.l.iter().map(|v| v / self.m as f64).collect();
        for (qi, b) in q.iter().zip(&self.basis) {
            for (a, bk) in p.iter_mut().zip(b) {
                *a += qi * bk;
            }
        }
        p
    }

    pub fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        let f = self.f(x);
        self.grad_log_f(x).into_iter().map(|g| f * g).collect()
    }

    /// `C = exp(sup(phi - h_Q)) = exp(phi(0))`, so that
    /// `f <= C exp(h_{P_xi})` everywhere.
    pub fn bound_constant(&self) -> f64 {
        self.phi.eval(&vec![0.0; self.phi.n]).exp()
    }
}

pub fn reconstruct_potential(
    solution: &MASolution,
    shifted: &ShiftedPolytope,
    l: &[f64],
) -> Result<ToricPotential> {
    let m = solution.m;
    if shifted.basis.len() != solution.phi.n || l.len() != m || shifted.xi.len() != m {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: m,
            found: l.len(),
        });
    }
    Ok(ToricPotential {
        m,
        l: l.to_vec(),
        xi: shifted.xi.clone(),
        basis: shifted.basis.clone(),
        phi: solution.phi.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub samples: usize,
    pub half_width: f64,
    /// `max |log f(x + tau xi) - log f(x) - tau|`.
    pub homogeneity_error: f64,
    /// `min <xi_i, ∇f> / (|xi_i| |∇f|)` over primal rays and samples.
    pub min_dual_margin: f64,
    /// Largest distance from a vertex of `P_xi` to the sampled gradients of
    /// `log f`.
    pub hausdorff: f64,
    pub bound_constant: f64,
    /// `max f(x) / exp(h_{P_xi}(x))` over the samples; at most `bound_constant`.
    pub max_bound_ratio: f64,
}

/// Samples `x` uniformly in `[-half_width, half_width]^m`.
pub fn check_reconstruction(
    potential: &ToricPotential,
    cone: &ProperCone,
    section_vertices: &[Vec<f64>],
    samples: usize,
    half_width: f64,
    seed: u64,
) -> ReconstructionReport {
    let m = potential.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rays = cone.primal_rays_f64();
    let mut homogeneity_error: f64 = 0.0;
    let mut min_dual_margin = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut hit: Vec<usize> = Vec::new();
    for _ in 0..samples {
        let x: Vec<f64> = (0..m).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * half_width).collect();
        let tau = rng.gen::<f64>() * 4.0 - 2.0;
        let moved: Vec<f64> = x.iter().zip(&potential.xi).map(|(a, b)| a + tau * b).collect();
        let lf = potential.log_f(&x);
        homogeneity_error = homogeneity_error.max((potential.log_f(&moved) - lf - tau).abs());

        let g = potential.grad_f(&x);
        let g_norm = dot(&g, &g).sqrt();
        for r in &rays {
            min_dual_margin = min_dual_margin.min(dot(r, &g) / (dot(r, r).sqrt() * g_norm));
        }
        let (j, _) = potential.phi.argmax(&potential.s_coords(&x));
        hit.push(j);

        let h = section_vertices
            .iter()
            .map(|p| dot(p, &x))
            .fold(f64::NEG_INFINITY, f64::max);
        max_ratio = max_ratio.max((lf - h).exp());
    }
    hit.sort_unstable();
    hit.dedup();
    let hit_points: Vec<Vec<f64>> = hit
        .iter()
        .map(|&j| {
            let mut p: Vec<f64> = potential.l.iter().map(|v| v / m as f64).collect();
            for (qi, b) in potential.phi.slopes[j].iter().zip(&potential.basis) {
                for (a, bk) in p.iter_mut().zip(b) {
                    *a += qi * bk;
                }
            }
            p
        })
        .collect();
    let hausdorff = section_vertices
        .iter()
        .map(|v| {
            hit_points
                .iter()
                .map(|p| {
                    let d: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - b).collect();
                    dot(&d, &d).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    ReconstructionReport {
        samples,
        half_width,
        homogeneity_error,
        min_dual_margin,
        hausdorff,
        bound_constant: potential.bound_constant(),
        max_bound_ratio: max_ratio,
    }
}
