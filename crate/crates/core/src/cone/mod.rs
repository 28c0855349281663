//! Rational proper convex cones, their duals and cross-sections.
//!
//! A cone is given by its primal rays `xi_1, ..., xi_d` in `N (x) R`; the dual
//! cone `C* = {p : <xi_i, p> >= 0}` lives in `M (x) R`. All combinatorics
//! (dual rays, Gorenstein vector, triangulation of `C*`) is exact; the
//! float-valued geometry built on top of it lives in [`section`].

mod dd;
pub mod polytope;
pub mod section;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{
    abs_det_int, dot_i, dot_iq, int_to_f64, ivec_to_f64, ivec_to_q, primitive, rank_int,
    solve_exact, IVec, QVec,
};

pub use polytope::{convex_hull_2d, support_function, HalfSpace, Polytope};
pub use section::{
    cross_section, cross_section_exact, measure_barycenter_moments, orthonormal_complement,
    shifted_polytope, CrossSection, ReebVector, SectionMoments, ShiftedPolytope,
};

pub use dd::extreme_rays;

/// A full-dimensional pointed rational cone `C` together with its dual `C*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProperCone {
    dim: usize,
    primal_rays: Vec<IVec>,
    dual_rays: Vec<IVec>,
    redundant_rays: Vec<IVec>,
    /// Simplicial subcones of `C*` as index tuples into `dual_rays`.
    simplices: Vec<Vec<usize>>,
    simplex_dets: Vec<BigInt>,
}

impl ProperCone {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Primitive extreme generators of `C`, sorted lexicographically.
    pub fn primal_rays(&self) -> &[IVec] {
        &self.primal_rays
    }

    /// Primitive extreme generators of `C*`, sorted lexicographically.
    pub fn dual_rays(&self) -> &[IVec] {
        &self.dual_rays
    }

    /// The primal rays read as inward facet normals of `C*`.
    pub fn facet_normals_dual(&self) -> &[IVec] {
        &self.primal_rays
    }

    /// Input rays that were valid cone members but not extreme generators.
    pub fn redundant_rays(&self) -> &[IVec] {
        &self.redundant_rays
    }

    /// Triangulation of `C*` into simplicial cones (indices into `dual_rays`).
    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// `|det|` of each simplicial cone's generator matrix.
    pub fn simplex_dets(&self) -> &[BigInt] {
        &self.simplex_dets
    }

    pub fn primal_rays_f64(&self) -> Vec<Vec<f64>> {
        self.primal_rays.iter().map(|r| ivec_to_f64(r)).collect()
    }

    pub fn dual_rays_f64(&self) -> Vec<Vec<f64>> {
        self.dual_rays.iter().map(|r| ivec_to_f64(r)).collect()
    }

    pub fn simplex_dets_f64(&self) -> Vec<f64> {
        self.simplex_dets.iter().map(int_to_f64).collect()
    }

    /// Whether the rational point `p` lies in `C*`.
    pub fn dual_contains(&self, p: &[BigRational]) -> bool {
        self.primal_rays
            .iter()
            .all(|r| dot_iq(r, p) >= BigRational::zero())
    }

    /// Whether the rational point `x` lies in `C`.
    pub fn primal_contains(&self, x: &[BigRational]) -> bool {
        self.dual_rays
            .iter()
            .all(|v| dot_iq(v, x) >= BigRational::zero())
    }

    /// Smallest pairing `<xi, v>` over the dual rays; positive iff `xi` is a Reeb vector.
    pub fn min_dual_pairing(&self, xi: &[f64]) -> f64 {
        self.dual_rays
            .iter()
            .map(|v| v.iter().zip(xi).map(|(a, b)| int_to_f64(a) * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `self` and `other` describe the same set, by mutual ray membership.
    pub fn same_set(&self, other: &ProperCone) -> bool {
        self.dim == other.dim
            && other
                .primal_rays
                .iter()
                .all(|r| self.primal_contains(&ivec_to_q(r)))
            && self
                .primal_rays
                .iter()
                .all(|r| other.primal_contains(&ivec_to_q(r)))
    }
}

/// Validates the rays of `C` and computes the dual description.
///
/// Rays may be rational; each is replaced by its primitive integer
/// representative and duplicates are removed. Rays that are not extreme in the
/// resulting cone are dropped and reported via [`ProperCone::redundant_rays`].
pub fn validate_cone(rays: &[QVec]) -> Result<ProperCone> {
    if rays.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = rays[0].len();
    if dim == 0 {
        return Err(Error::EmptyInput);
    }
    let mut prim: Vec<IVec> = Vec::with_capacity(rays.len());
    for (i, r) in rays.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                index: i,
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().all(Zero::is_zero) {
            return Err(Error::ZeroRay(i));
        }
        prim.push(primitive(r));
    }
    prim.sort();
    prim.dedup();

    let rank = rank_int(&prim);
    if rank < dim {
        return Err(Error::NotFullDimensional { rank, dim });
    }
    let dual_rays = extreme_rays(&prim).unwrap_or_default();
    let dual_rank = rank_int(&dual_rays);
    if dual_rank < dim {
        return Err(Error::ContainsLine { dual_rank, dim });
    }

    // xi is extreme in C iff it is a facet normal of C*, i.e. the dual rays it
    // annihilates span a hyperplane.
    let (primal_rays, redundant_rays): (Vec<IVec>, Vec<IVec>) =
        prim.into_iter().partition(|xi| {
            let zeros: Vec<IVec> = dual_rays
                .iter()
                .filter(|v| dot_i(xi, v).is_zero())
                .cloned()
                .collect();
            rank_int(&zeros) == dim - 1
        });

    let simplices = triangulate(&primal_rays, &dual_rays, dim);
    let simplex_dets = simplices
        .iter()
        .map(|s| {
            let rows: Vec<IVec> = s.iter().map(|&i| dual_rays[i].clone()).collect();
            abs_det_int(&rows)
        })
        .collect();

    Ok(ProperCone {
        dim,
        primal_rays,
        dual_rays,
        redundant_rays,
        simplices,
        simplex_dets,
    })
}

/// Integer-ray convenience wrapper around [`validate_cone`].
pub fn validate_cone_int(rays: &[Vec<i64>]) -> Result<ProperCone> {
    let q: Vec<QVec> = rays
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
        .collect();
    validate_cone(&q)
}

/// The dual cone: its rays are the extreme rays of `C*`.
pub fn dual_cone(cone: &ProperCone) -> Result<ProperCone> {
    let rays: Vec<QVec> = cone.dual_rays.iter().map(|r| ivec_to_q(r)).collect();
    validate_cone(&rays)
}

/// The rational vector `l` with `<xi_i, l> = 1` for every primal ray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GorensteinVector {
    #[serde(with = "crate::pipeline::io::qvec_serde")]
    pub l: QVec,
}

impl GorensteinVector {
    pub fn to_f64(&self) -> Vec<f64> {
        crate::rational::qvec_to_f64(&self.l)
    }
}

pub fn gorenstein_vector(cone: &ProperCone) -> Result<GorensteinVector> {
    let a: Vec<QVec> = cone.primal_rays.iter().map(|r| ivec_to_q(r)).collect();
    let ones = vec![BigRational::one(); a.len()];
    let l = solve_exact(&a, &ones).ok_or(Error::NotGorenstein)?;
    debug_assert!(cone
        .primal_rays
        .iter()
        .all(|r| dot_iq(r, &l) == BigRational::one()));
    Ok(GorensteinVector { l })
}

/// Pulling triangulation of `C*`: cone from the first ray of each face over
/// the triangulations of the facets that avoid it.
fn triangulate(primal: &[IVec], dual: &[IVec], dim: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..dual.len()).collect();
    let mut out = Vec::new();
    triangulate_face(&all, dim, primal, dual, &mut out);
    for s in &mut out {
        s.sort_unstable();
    }
    out
}

fn triangulate_face(
    face: &[usize],
    face_dim: usize,
    primal: &[IVec],
    dual: &[IVec],
    out: &mut Vec<Vec<usize>>,
) {
    if face.len() == face_dim {
        out.push(face.to_vec());
        return;
    }
    let apex = face[0];
    let mut facets: Vec<Vec<usize>> = Vec::new();
    for xi in primal {
        let sub: Vec<usize> = face
            .iter()
            .copied()
            .filter(|&i| dot_i(xi, &dual[i]).is_zero())
            .collect();
        if sub.is_empty() || sub.len() == face.len() || sub.contains(&apex) {
            continue;
        }
        if facets.contains(&sub) {
            continue;
        }
        let rows: Vec<IVec> = sub.iter().map(|&i| dual[i].clone()).collect();
        if rank_int(&rows) + 1 == face_dim {
            facets.push(sub);
        }
    }
    for facet in facets {
        let mut sub_out = Vec::new();
        triangulate_face(&facet, face_dim - 1, primal, dual, &mut sub_out);
        for mut s in sub_out {
            s.insert(0, apex);
            out.push(s);
        }
    }
}

/// Exact check that every dual ray is supported by `m - 1` independent primal rays.
pub fn dual_rays_are_extreme(cone: &ProperCone) -> bool {
    cone.dual_rays.iter().all(|v| {
        let tight: Vec<IVec> = cone
            .primal_rays
            .iter()
            .filter(|xi| dot_i(xi, v).is_zero())
            .cloned()
            .collect();
        cone.primal_rays.iter().all(|xi| dot_i(xi, v) >= BigInt::zero())
            && rank_int(&tight) + 1 == cone.dim
    })
}
