//! Minimization of the discretized Ding functional over the intercepts.
//!
//! With `p_j = mu(S_j) / mu(R^n)` the gradient is `w_j / V - p_j` and the
//! Hessian is `L / Z - m (diag p - p p^T)`, where `L` is the weighted graph
//! Laplacian of the cell adjacency with facet weights
//! `∫_{S_j ∩ S_k} exp(-m phi) / |q_j - q_k|`. Constant shifts of `c` form the
//! kernel; the gauge `c_{j0} = 0` removes it.

use serde::{Deserialize, Serialize};

use super::ding::{assemble, check_weights, DingValue};
use super::lp::convexify;
use super::pwa::{dot, PiecewiseAffineConvex};
use super::quadrature::{Evaluation, Quadrature};
use super::slopes::weighted_barycenter;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the mass residual `max_j |p_j - w_j / V|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed half-width of the integration box; `None` chooses it from the
    /// decay rate and enlarges it as needed.
    pub box_radius: Option<f64>,
    /// Initial intercepts for all slopes; default `|q_j|^2 / 2`.
    pub init: Option<Vec<f64>>,
    /// Monte Carlo points for `n >= 3`.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 100,
            box_radius: None,
            init: None,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverIterate {
    pub iteration: usize,
    pub ding: f64,
    pub mass_residual: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MASolution {
    pub phi: PiecewiseAffineConvex,
    pub weights: Vec<f64>,
    pub m: usize,
    /// `Σ w_j`, the volume of `Q`.
    pub volume: f64,
    pub ding: DingValue,
    pub mass_residual: f64,
    /// `sup - inf` of `phi - h_Q` over the test grid `[-5, 5]^n`.
    pub linf_vs_support: f64,
    pub iterations: usize,
    pub converged: bool,
    pub box_radius: f64,
    pub exact_quadrature: bool,
    pub seed: u64,
    pub trace: Vec<SolverIterate>,
}

impl MASolution {
    /// `∫ g dmu / mu(R^n)` for the solved `phi`.
    pub fn expectation(&self, g: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<f64> {
        let mut quad = self.quadrature()?;
        quad.expectation(&self.phi.intercepts, g)
    }

    /// `log ∫ exp(-m phi) ds`.
    pub fn log_normalizer(&self) -> Result<f64> {
        let mut quad = self.quadrature()?;
        Ok(quad.evaluate(&self.phi.intercepts)?.log_z)
    }

    fn quadrature(&self) -> Result<Quadrature> {
        Quadrature::new(&self.phi.slopes, self.m, None, 100_000, self.seed)
    }
}

/// Regular grid on `[-half_width, half_width]^n` with `per_axis` points.
pub fn test_grid(n: usize, half_width: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let coord = |i: usize| {
        if per_axis == 1 {
            0.0
        } else {
            -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    coord(i)
                })
                .collect()
        })
        .collect()
}

pub(crate) fn default_grid(n: usize) -> Vec<Vec<f64>> {
    let per_axis = match n {
        1 => 1001,
        2 => 81,
        _ => 11,
    };
    test_grid(n, 5.0, per_axis)
}

/// `sup - inf` of `phi - h` over the grid, where `h` is the support
/// function of the slope hull.
pub(crate) fn oscillation_vs_support(phi: &PiecewiseAffineConvex, grid: &[Vec<f64>]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in grid {
        let h = phi.slopes.iter().map(|q| dot(q, s)).fold(f64::NEG_INFINITY, f64::max);
        let d = phi.eval(s) - h;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if grid.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

struct Problem<'a> {
    quad: Quadrature,
    target: Vec<f64>,
    weights: &'a [f64],
    m: usize,
    gauge: usize,
}

impl Problem<'_> {
    fn value(&self, ev: &Evaluation, c: &[f64]) -> f64 {
        assemble(ev.log_z, self.m, self.weights, c, 0.0).total
    }

    fn gradient(&self, ev: &Evaluation) -> Vec<f64> {
        ev.prob.iter().zip(&self.target).map(|(p, t)| t - p).collect()
    }

    fn hess_apply(&self, ev: &Evaluation, v: &[f64], out: &mut [f64]) {
        let m = self.m as f64;
        let pv = dot(&ev.prob, v);
        for j in 0..v.len() {
            let lap: f64 = ev.adjacency[j].iter().map(|&(k, a)| a * (v[j] - v[k])).sum();
            out[j] = lap - m * ev.prob[j] * v[j] + m * ev.prob[j] * pv;
        }
        out[self.gauge] = 0.0;
    }

    /// Preconditioned conjugate gradients for `H d = -g` with `d_{j0} = 0`.
    fn newton_direction(&self, ev: &Evaluation, g: &[f64]) -> Vec<f64> {
        let k = g.len();
        let m = self.m as f64;
        let diag: Vec<f64> = (0..k)
            .map(|j| {
                let a: f64 = ev.adjacency[j].iter().map(|x| x.1).sum();
                a - m * ev.prob[j] + m * ev.prob[j] * ev.prob[j]
            })
            .collect();
        let shift = 1e-12 * diag.iter().fold(0.0f64, |a, b| a.max(*b));
        let precond: Vec<f64> = diag.iter().map(|d| 1.0 / (d + shift).max(1e-300)).collect();

        let mut x = vec![0.0; k];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        r[self.gauge] = 0.0;
        let b_norm = dot(&r, &r).sqrt();
        if b_norm == 0.0 {
            return x;
        }
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut hp = vec![0.0; k];
        for _ in 0..(4 * k).max(50) {
            self.hess_apply(ev, &p, &mut hp);
            for j in 0..k {
                hp[j] += shift * p[j];
            }
            hp[self.gauge] = 0.0;
            let php = dot(&p, &hp);
            if !(php > 0.0) {
                break;
            }
            let alpha = rz / php;
            for j in 0..k {
                x[j] += alpha * p[j];
                r[j] -= alpha * hp[j];
            }
            if dot(&r, &r).sqrt() <= 1e-12 * b_norm {
                break;
            }
            for j in 0..k {
                z[j] = r[j] * precond[j];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for j in 0..k {
                p[j] = z[j] + beta * p[j];
            }
            p[self.gauge] = 0.0;
        }
        x[self.gauge] = 0.0;
        x
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Minimizes `D` over the intercepts for fixed slopes and weights.
///
/// Slopes with zero weight (the vertices of `Q`) take no part in the
/// optimization; afterwards their intercepts are set so that they touch
/// `phi` at most on the boundary of the integration box.
pub fn minimize_ding(
    slopes: &[Vec<f64>],
    weights: &[f64],
    m: usize,
    opts: &SolverOptions,
) -> Result<MASolution> {
    let volume = check_weights(slopes, weights)?;
    let n = slopes[0].len();
    if m != n + 1 {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: n + 1,
            found: m,
        });
    }
    if let Some((index, q)) = slopes.iter().enumerate().find(|(_, q)| q.len() != n) {
        return Err(Error::DimensionMismatch {
            index,
            expected: n,
            found: q.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {} must be positive", opts.tol)));
    }
    let scale = slopes.iter().map(|q| dot(q, q).sqrt()).fold(1.0f64, f64::max);
    let b = weighted_barycenter(slopes, weights);
    let b_norm = dot(&b, &b).sqrt();
    if b_norm > 1e-8 * scale {
        return Err(Error::BarycenterNotZero { norm: b_norm });
    }

    let active: Vec<usize> = (0..slopes.len()).filter(|&j| weights[j] > 0.0).collect();
    let act_slopes: Vec<Vec<f64>> = active.iter().map(|&j| slopes[j].clone()).collect();
    let act_weights: Vec<f64> = active.iter().map(|&j| weights[j]).collect();
    let gauge = (0..active.len())
        .min_by(|&a, &b| {
            dot(&act_slopes[a], &act_slopes[a])
                .partial_cmp(&dot(&act_slopes[b], &act_slopes[b]))
                .unwrap()
        })
        .unwrap();

    let mut c: Vec<f64> = match &opts.init {
        Some(init) => {
            if init.len() != slopes.len() {
                return Err(Error::DimensionMismatch {
                    index: 0,
                    expected: slopes.len(),
                    found: init.len(),
                });
            }
            active.iter().map(|&j| init[j]).collect()
        }
        None => act_slopes.iter().map(|q| dot(q, q) / 2.0).collect(),
    };

    let quad = Quadrature::new(&act_slopes, m, opts.box_radius, opts.samples, opts.seed)?;
    let mut prob = Problem {
        quad,
        target: act_weights.iter().map(|w| w / volume).collect(),
        weights: &act_weights,
        m,
        gauge,
    };

    let mut ev = prob.quad.evaluate(&c)?;
    if ev.prob.iter().any(|&p| p == 0.0) {
        // empty cells: tighten, then add a strictly convex function of q so
        // every piece owns an open cell
        let phi = PiecewiseAffineConvex::new(act_slopes.clone(), c.clone())?;
        let tight = convexify(&phi)?;
        c = tight
            .intercepts
            .iter()
            .zip(&act_slopes)
            .map(|(c, q)| c + dot(q, q) / 2.0)
            .collect();
    }
    let shift = c[gauge];
    c.iter_mut().for_each(|x| *x -= shift);
    ev = prob.quad.evaluate(&c)?;

    let exact = prob.quad.is_exact();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    if exact {
        let floor = 0.5
            * ev.prob
                .iter()
                .chain(&prob.target)
                .fold(f64::INFINITY, |a, &b| a.min(b));
        loop {
            let g = prob.gradient(&ev);
            let residual = max_abs(&g);
            let value = prob.value(&ev, &c);
            trace.push(SolverIterate {
                iteration: iterations,
                ding: value,
                mass_residual: residual,
                step: 0.0,
            });
            if residual <= opts.tol {
                converged = true;
                break;
            }
            if iterations >= opts.max_iter {
                break;
            }
            let d = prob.newton_direction(&ev, &g);
            let slope = dot(&g, &d);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let trial: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                if let Ok(tev) = prob.quad.evaluate(&trial) {
                    let positive = tev.prob.iter().all(|&p| p >= floor);
                    let tres = max_abs(&prob.gradient(&tev));
                    let armijo = prob.value(&tev, &trial) <= value + 1e-4 * alpha * slope;
                    if positive && (tres <= (1.0 - alpha / 2.0) * residual || (armijo && tres < residual)) {
                        accepted = Some((trial, tev));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, tev)) = accepted else {
                return Err(Error::LineSearchFailure { iterations });
            };
            c = trial;
            ev = tev;
            iterations += 1;
            trace.last_mut().unwrap().step = alpha;
        }
    } else {
        for tau in SMOOTHING {
            let (c_new, it, ok) = lbfgs(&mut prob, c, tau, opts, &mut trace)?;
            c = c_new;
            iterations += it;
            converged = ok;
        }
        ev = prob.quad.evaluate(&c)?;
    }

    // gauge: mu-barycenter at the origin, then c_{j0} = 0
    let a = prob.quad.mean(&c)?;
    for (cj, q) in c.iter_mut().zip(&act_slopes) {
        *cj -= dot(q, &a);
    }
    let shift = c[gauge];
    c.iter_mut().for_each(|x| *x -= shift);
    let ev_final = prob.quad.evaluate(&c)?;
    let mass_residual = max_abs(&prob.gradient(&ev_final));
    drop(ev);

    let mut intercepts = vec![0.0; slopes.len()];
    for (&j, &cj) in active.iter().zip(&c) {
        intercepts[j] = cj;
    }
    for j in 0..slopes.len() {
        if weights[j] == 0.0 {
            intercepts[j] = prob.quad.max_gap(&c, &slopes[j])?;
        }
    }
    let phi = PiecewiseAffineConvex::new(slopes.to_vec(), intercepts)?;
    let origin = vec![0.0; n];
    let ding = assemble(ev_final.log_z, m, &act_weights, &c, phi.eval(&origin));
    let linf_vs_support = oscillation_vs_support(&phi, &default_grid(n));
    Ok(MASolution {
        phi,
        weights: weights.to_vec(),
        m,
        volume,
        ding,
        mass_residual,
        linf_vs_support,
        iterations,
        converged,
        box_radius: prob.quad.radius,
        exact_quadrature: exact,
        seed: opts.seed,
        trace,
    })
}

/// Orthonormal basis of the span of `1` and the coordinate columns of the
/// slopes, as vectors indexed by piece.
fn flat_directions(slopes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = slopes.len();
    let n = slopes[0].len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let columns = std::iter::once(vec![1.0; k])
        .chain((0..n).map(|i| slopes.iter().map(|q| q[i]).collect::<Vec<f64>>()));
    for mut v in columns {
        for e in &basis {
            let t = dot(&v, e);
            for (x, y) in v.iter_mut().zip(e) {
                *x -= t * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Temperatures for the smoothed sampled objective, coarse to fine.
const SMOOTHING: [f64; 4] = [0.1, 0.03, 0.01, 0.003];

/// Limited-memory BFGS with Armijo backtracking on the sampled objective
/// smoothed at temperature `tau`.
fn lbfgs(
    prob: &mut Problem<'_>,
    mut c: Vec<f64>,
    tau: f64,
    opts: &SolverOptions,
    trace: &mut Vec<SolverIterate>,
) -> Result<(Vec<f64>, usize, bool)> {
    const HISTORY: usize = 10;
    let start = trace.len();
    // the continuum objective is flat along constants and translations
    // c_j += <q_j, a>; the sampled one is not, so steps avoid those directions
    let flat = flat_directions(&prob.quad.slopes);
    let project = |v: &mut Vec<f64>| {
        for e in &flat {
            let t = dot(v, e);
            for (x, y) in v.iter_mut().zip(e) {
                *x -= t * y;
            }
        }
    };
    let mut ev = prob.quad.evaluate_smoothed(&c, tau)?;
    let mut g = prob.gradient(&ev);
    project(&mut g);
    let mut value = prob.value(&ev, &c);
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let max_iter = opts.max_iter;
    for it in 0..=max_iter {
        let residual = max_abs(&g);
        trace.push(SolverIterate {
            iteration: start + it,
            ding: value,
            mass_residual: residual,
            step: 0.0,
        });
        if residual <= opts.tol {
            return Ok((c, it, true));
        }
        if it == max_iter {
            return Ok((c, it, false));
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = mem
            .last()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0 / (prob.m as f64 * max_abs(&g).max(1e-12)).max(1.0));
        d.iter_mut().for_each(|x| *x *= gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - bcoef) * si;
            }
        }
        project(&mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().map(|x| -x).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let tev = prob.quad.evaluate_smoothed(&trial, tau)?;
            let tval = prob.value(&tev, &trial);
            if tval <= value + 1e-4 * step * slope {
                accepted = Some((trial, tev, tval));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tev, tval)) = accepted else {
            return Err(Error::LineSearchFailure { iterations: it });
        };
        let mut g_new = prob.gradient(&tev);
        project(&mut g_new);
        let s: Vec<f64> = trial.iter().zip(&c).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            mem.push((s, y, 1.0 / sy));
            if mem.len() > HISTORY {
                mem.remove(0);
            }
        }
        c = trial;
        ev = tev;
        g = g_new;
        value = tval;
        trace.last_mut().unwrap().step = step;
    }
    drop(ev);
    Ok((c, max_iter, false))
}
