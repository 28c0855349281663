//! Double description method over exact integers.
//!
//! Computes the extreme rays of `{x : <a_i, x> >= 0}` for a constraint matrix
//! of full column rank. Each ray carries its zero set over the processed
//! constraints; adjacency of a positive/negative pair uses the combinatorial
//! test (no third ray's zero set contains the common zero set).

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::rational::{dot_i, inverse_columns_primitive, primitive_int, rank_int, IVec};

#[derive(Clone, Debug)]
struct DdRay {
    ray: IVec,
    zeros: Vec<bool>,
}

/// Extreme rays of the polyhedral cone cut out by `constraints`, as primitive
/// integer vectors sorted lexicographically.
///
/// Returns `None` when the constraint rows do not have full column rank (the
/// cone then contains a line and has no extreme rays).
pub fn extreme_rays(constraints: &[IVec]) -> Option<Vec<IVec>> {
    let dim = constraints.first()?.len();
    let initial = independent_rows(constraints, dim)?;
    let basis: Vec<IVec> = initial.iter().map(|&i| constraints[i].clone()).collect();
    let columns = inverse_columns_primitive(&basis)?;

    let k = constraints.len();
    let mut processed = vec![false; k];
    for &i in &initial {
        processed[i] = true;
    }
    let mut rays: Vec<DdRay> = columns
        .into_iter()
        .map(|ray| {
            let zeros = (0..k)
                .map(|i| processed[i] && dot_i(&constraints[i], &ray).is_zero())
                .collect();
            DdRay { ray, zeros }
        })
        .collect();

    for (idx, row) in constraints.iter().enumerate() {
        if processed[idx] {
            continue;
        }
        let values: Vec<BigInt> = rays.iter().map(|r| dot_i(row, &r.ray)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_negative()).collect();
        let zero: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_zero()).collect();

        let mut next: Vec<DdRay> = Vec::with_capacity(rays.len());
        for &i in pos.iter().chain(&zero) {
            let mut r = rays[i].clone();
            if values[i].is_zero() {
                r.zeros[idx] = true;
            }
            next.push(r);
        }
        for &p in &pos {
            for &n in &neg {
                if !adjacent(&rays, p, n, &processed, dim) {
                    continue;
                }
                let a = &values[p];
                let b = -&values[n];
                let combined: IVec = rays[p]
                    .ray
                    .iter()
                    .zip(&rays[n].ray)
                    .map(|(x, y)| &b * x + a * y)
                    .collect();
                let combined = primitive_int(&combined);
                let mut zeros: Vec<bool> = rays[p]
                    .zeros
                    .iter()
                    .zip(&rays[n].zeros)
                    .map(|(x, y)| *x && *y)
                    .collect();
                zeros[idx] = true;
                next.push(DdRay {
                    ray: combined,
                    zeros,
                });
            }
        }
        processed[idx] = true;
        rays = next;
    }

    let mut out: Vec<IVec> = rays.into_iter().map(|r| r.ray).collect();
    out.sort();
    out.dedup();
    Some(out)
}

fn adjacent(rays: &[DdRay], p: usize, n: usize, processed: &[bool], dim: usize) -> bool {
    let common: Vec<bool> = rays[p]
        .zeros
        .iter()
        .zip(&rays[n].zeros)
        .map(|(a, b)| *a && *b)
        .collect();
    let count = common
        .iter()
        .zip(processed)
        .filter(|(c, done)| **c && **done)
        .count();
    if count + 2 < dim {
        return false;
    }
    !rays.iter().enumerate().any(|(j, r)| {
        j != p
            && j != n
            && common
                .iter()
                .zip(&r.zeros)
                .all(|(c, z)| !*c || *z)
    })
}

/// Greedily selects `dim` linearly independent rows.
fn independent_rows(rows: &[IVec], dim: usize) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(dim);
    let mut picked: Vec<IVec> = Vec::with_capacity(dim);
    for (i, r) in rows.iter().enumerate() {
        picked.push(r.clone());
        if rank_int(&picked) == picked.len() {
            chosen.push(i);
            if chosen.len() == dim {
                return Some(chosen);
            }
        } else {
            picked.pop();
        }
    }
    None
}
