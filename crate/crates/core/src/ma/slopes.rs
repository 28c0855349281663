//! Discretization of the measure `dq` on `Q` by weighted slopes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::LabeledPolygon;
use crate::cone::Polytope;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub slopes: Vec<Vec<f64>>,
    /// Lebesgue measure of each cell of `Q`; zero for the added vertices.
    pub weights: Vec<f64>,
    /// `V(Q)`.
    pub volume: f64,
    /// Barycenter of `Q` itself.
    pub barycenter: Vec<f64>,
    /// Grid spacing.
    pub spacing: f64,
}

impl SlopeSample {
    /// `Σ w_j q_j / V(Q)`.
    pub fn weighted_barycenter(&self) -> Vec<f64> {
        weighted_barycenter(&self.slopes, &self.weights)
    }
}

pub fn weighted_barycenter(slopes: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = slopes.first().map(Vec::len).unwrap_or(0);
    let total: f64 = weights.iter().sum();
    let mut b = vec![0.0; n];
    for (q, w) in slopes.iter().zip(weights) {
        for (x, y) in b.iter_mut().zip(q) {
            *x += w * y / total;
        }
    }
    b
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uniform grid of spacing `max extent / resolution` over the bounding box of
/// `Q`; each grid cell clipped to `Q` contributes its centroid with its
/// measure as weight. Cells of less than a quarter of a full cell are merged
/// into the nearest full cell. The vertices of `Q` are appended with weight 0.
///
/// Unless `force` is set, `Q` must have barycenter 0 (to `1e-8` of its
/// diameter), and the weighted slopes are then recentered so that
/// `Σ w_j q_j = 0` holds to roundoff.
pub fn sample_slopes(q: &Polytope, resolution: usize, force: bool) -> Result<SlopeSample> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let n = q.dim;
    let volume = q.volume();
    let barycenter = q.barycenter();
    let diam = q.diameter().max(1.0);
    let bnorm = norm(&barycenter);
    if !force && bnorm > 1e-8 * diam {
        return Err(Error::BarycenterNotZero { norm: bnorm });
    }
    let (lo, hi) = q.bounding_box();
    let extent = (0..n).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
    let h = extent / resolution as f64;

    let (mut slopes, mut weights) = match n {
        1 => grid_1d(lo[0], hi[0], resolution),
        2 => grid_2d(q, &lo, &hi, h),
        _ => grid_sampled(q, &lo, &hi, h, volume),
    };

    if !force {
        let b = weighted_barycenter(&slopes, &weights);
        for s in slopes.iter_mut() {
            for (x, y) in s.iter_mut().zip(&b) {
                *x -= y;
            }
        }
    }
    for v in &q.vertices {
        if slopes.iter().all(|s| norm(&diff(s, v)) > 1e-12 * diam) {
            slopes.push(v.clone());
            weights.push(0.0);
        }
    }
    Ok(SlopeSample {
        slopes,
        weights,
        volume,
        barycenter,
        spacing: h,
    })
}

/// Per-axis resolution giving roughly `count` grid cells inside `Q`.
pub fn resolution_for_count(q: &Polytope, count: usize) -> usize {
    let n = q.dim;
    if n == 1 {
        return count.max(1);
    }
    let (lo, hi) = q.bounding_box();
    let extent = (0..n).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
    let h = (q.volume() / count.max(1) as f64).powf(1.0 / n as f64);
    ((extent / h).round() as usize).max(1)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn grid_1d(a: f64, b: f64, r: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let h = (b - a) / r as f64;
    let slopes = (0..r).map(|i| vec![a + (i as f64 + 0.5) * h]).collect();
    (slopes, vec![h; r])
}

fn grid_2d(q: &Polytope, lo: &[f64], hi: &[f64], h: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let nx = ((hi[0] - lo[0]) / h).ceil().max(1.0) as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil().max(1.0) as usize;
    let mut cells: Vec<([f64; 2], f64)> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let a = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            let b = [a[0] + h, a[1] + h];
            let mut poly = LabeledPolygon::rectangle(a, b, ());
            for hs in &q.halfspaces {
                poly.clip([hs.normal[0], hs.normal[1]], hs.offset, (), 0.0);
                if poly.is_empty() {
                    break;
                }
            }
            if poly.is_empty() {
                continue;
            }
            let area = poly.area();
            if area > 1e-14 * h * h {
                cells.push((poly.centroid(), area));
            }
        }
    }
    merge_slivers(cells.into_iter().map(|(c, a)| (c.to_vec(), a)).collect(), 0.25 * h * h)
}

/// Sub-grid point sampling of each cube of side `h`, weights rescaled to `V(Q)`.
fn grid_sampled(
    q: &Polytope,
    lo: &[f64],
    hi: &[f64],
    h: f64,
    volume: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = q.dim;
    let counts: Vec<usize> = (0..n)
        .map(|k| ((hi[k] - lo[k]) / h).ceil().max(1.0) as usize)
        .collect();
    let sub = 6usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut cells: Vec<(Vec<f64>, f64)> = Vec::new();
    let total_cells: usize = counts.iter().product();
    let per_cell = sub.pow(n as u32);
    for idx in 0..total_cells {
        let mut rest = idx;
        let corner: Vec<f64> = (0..n)
            .map(|k| {
                let i = rest % counts[k];
                rest /= counts[k];
                lo[k] + i as f64 * h
            })
            .collect();
        let mut acc = vec![0.0; n];
        let mut inside = 0usize;
        for p in 0..per_cell {
            let mut r = p;
            let x: Vec<f64> = (0..n)
                .map(|k| {
                    let i = r % sub;
                    r /= sub;
                    corner[k] + (i as f64 + rng.gen::<f64>()) * h / sub as f64
                })
                .collect();
            if q.contains(&x, 0.0) {
                inside += 1;
                for (a, b) in acc.iter_mut().zip(&x) {
                    *a += b;
                }
            }
        }
        if inside > 0 {
            let c = acc.iter().map(|a| a / inside as f64).collect();
            cells.push((c, inside as f64 / per_cell as f64 * h.powi(n as i32)));
        }
    }
    let (slopes, mut weights) = merge_slivers(cells, 0.25 * h.powi(n as i32));
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w *= volume / total;
    }
    (slopes, weights)
}

/// Merges cells lighter than `min_weight` into the nearest heavy cell,
/// preserving total weight and first moment.
fn merge_slivers(cells: Vec<(Vec<f64>, f64)>, min_weight: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let heavy: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].1 >= min_weight).collect();
    if heavy.is_empty() {
        return cells.into_iter().unzip();
    }
    let mut acc: Vec<(Vec<f64>, f64)> = heavy
        .iter()
        .map(|&i| (cells[i].0.iter().map(|x| x * cells[i].1).collect(), cells[i].1))
        .collect();
    for (c, w) in &cells {
        if *w >= min_weight {
            continue;
        }
        let target = (0..heavy.len())
            .min_by(|&a, &b| {
                let da = norm(&diff(&cells[heavy[a]].0, c));
                let db = norm(&diff(&cells[heavy[b]].0, c));
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        for (x, y) in acc[target].0.iter_mut().zip(c) {
            *x += w * y;
        }
        acc[target].1 += w;
    }
    acc.into_iter()
        .map(|(m, w)| (m.into_iter().map(|x| x / w).collect(), w))
        .unzip()
}
