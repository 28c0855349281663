//! Integration of `exp(-m phi)` for a fixed slope set: exact cell integrals
//! for `n <= 2`, importance sampling with a fixed point set for `n >= 3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cells::{build_cells, neighbor_order, CellComplex};
use super::pwa::dot;
use crate::cone::convex_hull_2d;
use crate::error::{Error, Result};

/// Distance from the origin to the boundary of `conv(slopes)`; `<= 0` when
/// the origin is not interior. Exact for `n <= 2`, an upper bound over
/// sampled directions otherwise.
pub(crate) fn inradius(slopes: &[Vec<f64>]) -> f64 {
    let n = slopes[0].len();
    match n {
        1 => {
            let lo = slopes.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
            let hi = slopes.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
            (-lo).min(hi)
        }
        2 => {
            let hull = convex_hull_2d(slopes);
            if hull.len() < 3 {
                return 0.0;
            }
            let k = hull.len();
            (0..k)
                .map(|i| {
                    let a = &hull[i];
                    let b = &hull[(i + 1) % k];
                    // outward normal of a counter-clockwise edge
                    let nx = b[1] - a[1];
                    let ny = a[0] - b[0];
                    (nx * a[0] + ny * a[1]) / (nx * nx + ny * ny).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut dirs: Vec<Vec<f64>> = Vec::new();
            for k in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut u = vec![0.0; n];
                    u[k] = sign;
                    dirs.push(u);
                }
            }
            for _ in 0..500 {
                let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                let norm = dot(&u, &u).sqrt();
                dirs.push(u.into_iter().map(|x| x / norm).collect());
            }
            dirs.iter()
                .map(|u| slopes.iter().map(|q| dot(q, u)).fold(f64::NEG_INFINITY, f64::max))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub log_z: f64,
    pub phi_min: f64,
    /// `mu(S_j) / mu(R^n)`.
    pub prob: Vec<f64>,
    /// Facet weights `a_jk / Z` (empty for the sampled backend).
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub cells: Option<CellComplex>,
}

enum Backend {
    Exact { order: Vec<Vec<u32>> },
    /// Standard Laplace draws `u`; the sample is `s = radius * u`, with
    /// proposal density `Π exp(-|u_k|) / (2 radius)`.
    Sampled { unit_points: Vec<Vec<f64>> },
}

pub(crate) struct Quadrature {
    pub m: usize,
    pub n: usize,
    pub slopes: Vec<Vec<f64>>,
    pub radius: f64,
    fixed_radius: bool,
    backend: Backend,
}

impl Quadrature {
    pub fn new(
        slopes: &[Vec<f64>],
        m: usize,
        radius: Option<f64>,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if slopes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = slopes[0].len();
        let r_in = inradius(slopes);
        if !(r_in > 0.0) {
            return Err(Error::NonIntegrable);
        }
        let auto = if n <= 2 {
            40.0 / (m as f64 * r_in)
        } else {
            // proposal decays no faster than exp(-m r_in |s|)
            2.0 * (n as f64).sqrt() / (m as f64 * r_in)
        };
        let backend = if n <= 2 {
            Backend::Exact {
                order: neighbor_order(slopes),
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let unit_points = (0..samples)
                .map(|_| (0..n).map(|_| laplace(&mut rng)).collect())
                .collect();
            Backend::Sampled { unit_points }
        };
        Ok(Quadrature {
            m,
            n,
            slopes: slopes.to_vec(),
            radius: radius.unwrap_or(auto),
            fixed_radius: radius.is_some(),
            backend,
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact { .. })
    }

    /// Cells and integrals; doubles the box until the density has decayed
    /// on its boundary (unless the radius was fixed by the caller).
    pub fn evaluate(&mut self, c: &[f64]) -> Result<Evaluation> {
        match &self.backend {
            Backend::Exact { order } => {
                for _ in 0..60 {
                    let cells = build_cells(&self.slopes, c, order, self.radius);
                    let phi_min = cells.phi_min(&self.slopes, c);
                    if !self.fixed_radius
                        && !cells.boundary_decayed(&self.slopes, c, self.m, phi_min)
                    {
                        self.radius *= 2.0;
                        continue;
                    }
                    let it = cells.integrate(&self.slopes, c, self.m, phi_min);
                    if !(it.total > 0.0 && it.total.is_finite()) {
                        return Err(Error::NonIntegrable);
                    }
                    let log_z = it.log_z(self.m);
                    let prob = it.mass.iter().map(|x| x / it.total).collect();
                    let adjacency = it
                        .adjacency
                        .iter()
                        .map(|row| row.iter().map(|&(k, a)| (k, a / it.total)).collect())
                        .collect();
                    return Ok(Evaluation {
                        log_z,
                        phi_min,
                        prob,
                        adjacency,
                        cells: Some(cells),
                    });
                }
                Err(Error::NonIntegrable)
            }
            Backend::Sampled { unit_points } => {
                let samples = self.weighted_samples(unit_points, c);
                let phi_min = samples.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
                let top = samples.iter().map(|a| a.2).fold(f64::NEG_INFINITY, f64::max);
                let mut mass = vec![0.0; self.slopes.len()];
                for &(j, _, lw) in &samples {
                    mass[j] += (lw - top).exp();
                }
                let total: f64 = mass.iter().sum();
                let log_z = total.ln() + top - (unit_points.len() as f64).ln()
                    + self.n as f64 * (2.0 * self.radius).ln();
                Ok(Evaluation {
                    log_z,
                    phi_min,
                    prob: mass.iter().map(|x| x / total).collect(),
                    adjacency: Vec::new(),
                    cells: None,
                })
            }
        }
    }

    /// Sampled backend with `max` replaced by `tau log Σ exp(. / tau)`;
    /// `prob` holds the soft cell masses, `phi_min` the smoothed minimum.
    pub fn evaluate_smoothed(&self, c: &[f64], tau: f64) -> Result<Evaluation> {
        let Backend::Sampled { unit_points } = &self.backend else {
            return Err(Error::InvalidParameter("smoothing needs the sampled backend".into()));
        };
        let r = self.radius;
        let m = self.m as f64;
        let k = self.slopes.len();
        let per_point: Vec<(f64, f64, Vec<f64>)> = unit_points
            .par_iter()
            .map(|u| {
                let s: Vec<f64> = u.iter().map(|x| x * r).collect();
                let v: Vec<f64> = self.slopes.iter().zip(c).map(|(q, cj)| dot(q, &s) - cj).collect();
                let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = v.iter().map(|x| ((x - top) / tau).exp()).collect();
                let sum: f64 = e.iter().sum();
                let phi = top + tau * sum.ln();
                let l1: f64 = u.iter().map(|x| x.abs()).sum();
                (phi, -m * phi + l1, e.into_iter().map(|x| x / sum).collect())
            })
            .collect();
        let phi_min = per_point.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let top = per_point.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
        let mut mass = vec![0.0; k];
        for (_, lw, pi) in &per_point {
            let w = (lw - top).exp();
            for (a, b) in mass.iter_mut().zip(pi) {
                *a += w * b;
            }
        }
        let total: f64 = mass.iter().sum();
        let log_z = total.ln() + top - (unit_points.len() as f64).ln()
            + self.n as f64 * (2.0 * r).ln();
        Ok(Evaluation {
            log_z,
            phi_min,
            prob: mass.iter().map(|x| x / total).collect(),
            adjacency: Vec::new(),
            cells: None,
        })
    }

    /// `(piece, phi, log importance weight)` per sample point.
    fn weighted_samples(&self, unit_points: &[Vec<f64>], c: &[f64]) -> Vec<(usize, f64, f64)> {
        let r = self.radius;
        let m = self.m as f64;
        unit_points
            .par_iter()
            .map(|u| {
                let s: Vec<f64> = u.iter().map(|x| x * r).collect();
                let (j, v) = argmax(&self.slopes, c, &s);
                let l1: f64 = u.iter().map(|x| x.abs()).sum();
                (j, v, -m * v + l1)
            })
            .collect()
    }

    /// `∫ g exp(-m phi) / ∫ exp(-m phi)`.
    pub fn expectation(
        &mut self,
        c: &[f64],
        g: &(dyn Fn(&[f64]) -> f64 + Sync),
    ) -> Result<f64> {
        let ev = self.evaluate(c)?;
        match &self.backend {
            Backend::Exact { .. } => {
                let cells = ev.cells.as_ref().expect("exact backend has cells");
                let num = cells.quadrature(&self.slopes, c, self.m, ev.phi_min, g);
                let den = cells.quadrature(&self.slopes, c, self.m, ev.phi_min, &|_| 1.0);
                Ok(num / den)
            }
            Backend::Sampled { unit_points } => {
                let samples = self.weighted_samples(unit_points, c);
                let top = samples.iter().map(|a| a.2).fold(f64::NEG_INFINITY, f64::max);
                let r = self.radius;
                let (num, den) = unit_points
                    .iter()
                    .zip(&samples)
                    .map(|(u, &(_, _, lw))| {
                        let s: Vec<f64> = u.iter().map(|x| x * r).collect();
                        let w = (lw - top).exp();
                        (w * g(&s), w)
                    })
                    .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
                Ok(num / den)
            }
        }
    }

    /// `∫ s exp(-m phi) / ∫ exp(-m phi)`.
    pub fn mean(&mut self, c: &[f64]) -> Result<Vec<f64>> {
        if self.is_exact() {
            let ev = self.evaluate(c)?;
            let cells = ev.cells.as_ref().expect("exact backend has cells");
            let first = cells.first_moment(&self.slopes, c, self.m, ev.phi_min);
            let total = (ev.log_z + self.m as f64 * ev.phi_min).exp();
            Ok(first.iter().map(|x| x / total).collect())
        } else {
            (0..self.n)
                .map(|k| self.expectation(c, &move |s: &[f64]| s[k]))
                .collect()
        }
    }

    /// Largest `<q, s> - phi(s)` over the integration region.
    pub fn max_gap(&mut self, c: &[f64], q: &[f64]) -> Result<f64> {
        let ev = self.evaluate(c)?;
        match &ev.cells {
            Some(cells) => Ok(cells.max_gap(&self.slopes, c, q)),
            None => {
                let Backend::Sampled { unit_points } = &self.backend else {
                    unreachable!()
                };
                let r = self.radius;
                Ok(unit_points
                    .iter()
                    .map(|u| {
                        let s: Vec<f64> = u.iter().map(|x| x * r).collect();
                        dot(q, &s) - argmax(&self.slopes, c, &s).1
                    })
                    .fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }
}

fn laplace(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

pub(crate) fn argmax(slopes: &[Vec<f64>], c: &[f64], s: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, q) in slopes.iter().enumerate() {
        let v = dot(q, s) - c[j];
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inradius_of_simple_hulls() {
        assert_eq!(inradius(&[vec![-0.5], vec![2.0], vec![0.1]]), 0.5);
        let sq = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]];
        assert!((inradius(&sq) - 1.0).abs() < 1e-15);
        assert!(inradius(&[vec![0.5], vec![2.0]]) < 0.0);
    }

    #[test]
    fn log_cosh_normalizer() {
        // tangent lines of log cosh: ∫ e^{-2 phi} -> ∫ sech^2 = 2
        let ss: Vec<f64> = (-3000..=3000).map(|i| i as f64 * 0.004).collect();
        let slopes: Vec<Vec<f64>> = ss.iter().map(|s| vec![s.tanh()]).collect();
        let c: Vec<f64> = ss.iter().map(|s| s * s.tanh() - s.cosh().ln()).collect();
        let mut quad = Quadrature::new(&slopes, 2, None, 0, 0).unwrap();
        let ev = quad.evaluate(&c).unwrap();
        assert!((ev.log_z - 2f64.ln()).abs() < 1e-4, "{}", ev.log_z);
        let mean = quad.mean(&c).unwrap();
        assert!(mean[0].abs() < 1e-10);
        let abs_mean = quad.expectation(&c, &|s| s[0].abs()).unwrap();
        // ∫|s| sech^2 / 2 = log 2
        assert!((abs_mean - 2f64.ln()).abs() < 1e-4, "{abs_mean}");
    }

    #[test]
    fn sampled_backend_normalizer() {
        // phi = max |s_k| over the cube faces in R^3: ∫ e^{-phi} = 48
        let mut slopes = Vec::new();
        for k in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut q = vec![0.0; 3];
                q[k] = sign;
                slopes.push(q);
            }
        }
        let c = vec![0.0; 6];
        let mut quad = Quadrature::new(&slopes, 1, None, 200_000, 3).unwrap();
        let ev = quad.evaluate(&c).unwrap();
        assert!((ev.log_z.exp() / 48.0 - 1.0).abs() < 0.02, "{}", ev.log_z.exp());
        for p in &ev.prob {
            assert!((p - 1.0 / 6.0).abs() < 0.01);
        }
    }
}
