//! Reeb vectors, cross-sections `P_xi = C* ∩ {<xi, .> = 1}` and the shifted
//! polytope `Q_xi = P_xi - l/m` in coordinates on `xi^perp`.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::polytope::{dot, norm, HalfSpace, Polytope};
use super::{GorensteinVector, ProperCone};
use crate::error::{Error, Result};
use crate::rational::{dot_iq, ivec_to_q, to_f64, QVec};

/// A point of the open cone `C`, optionally normalized by `<l, xi> = m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebVector {
    pub xi: Vec<f64>,
    pub normalized: bool,
}

impl ReebVector {
    /// Checks interiority; `normalized` is set when `l` is given and
    /// `|<l, xi> - m| <= 1e-12 m`.
    pub fn new(cone: &ProperCone, xi: Vec<f64>, l: Option<&GorensteinVector>) -> Result<Self> {
        if xi.len() != cone.dim() {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: cone.dim(),
                found: xi.len(),
            });
        }
        let min_pairing = cone.min_dual_pairing(&xi);
        if !(min_pairing > 0.0) {
            return Err(Error::NotInteriorReeb { min_pairing });
        }
        let m = cone.dim() as f64;
        let normalized = l
            .map(|l| (dot(&l.to_f64(), &xi) - m).abs() <= 1e-12 * m)
            .unwrap_or(false);
        Ok(ReebVector { xi, normalized })
    }

    /// Rescales so that `<l, xi> = m`.
    pub fn normalize(&self, l: &GorensteinVector) -> Self {
        let lf = l.to_f64();
        let m = self.xi.len() as f64;
        let c = m / dot(&lf, &self.xi);
        ReebVector {
            xi: self.xi.iter().map(|x| x * c).collect(),
            normalized: true,
        }
    }
}

/// The polytope `P_xi`; vertex `i` is `v_i / <xi, v_i>` for dual ray `v_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    pub xi: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
    /// `(m-1)`-simplices over `vertices`, inherited from the triangulation of `C*`.
    pub simplices: Vec<Vec<usize>>,
    /// Inward facet normals of `C*` (the primal rays).
    pub facet_normals: Vec<Vec<f64>>,
}

pub fn cross_section(cone: &ProperCone, xi: &ReebVector) -> Result<CrossSection> {
    let min_pairing = cone.min_dual_pairing(&xi.xi);
    if !(min_pairing > 0.0) {
        return Err(Error::NotInteriorReeb { min_pairing });
    }
    let vertices = cone
        .dual_rays_f64()
        .into_iter()
        .map(|v| {
            let h = dot(&v, &xi.xi);
            v.iter().map(|x| x / h).collect()
        })
        .collect();
    Ok(CrossSection {
        xi: xi.xi.clone(),
        vertices,
        simplices: cone.simplices().to_vec(),
        facet_normals: cone.primal_rays_f64(),
    })
}

/// Exact vertices of `P_xi` for a rational `xi`.
pub fn cross_section_exact(cone: &ProperCone, xi: &[BigRational]) -> Result<Vec<QVec>> {
    cone.dual_rays()
        .iter()
        .map(|v| {
            let h = dot_iq(v, xi);
            if h <= BigRational::zero() {
                return Err(Error::NotInteriorReeb {
                    min_pairing: to_f64(&h),
                });
            }
            Ok(ivec_to_q(v).into_iter().map(|x| x / &h).collect())
        })
        .collect()
}

/// Volume, barycenter and normalized second moments of a cross-section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionMoments {
    pub volume: f64,
    pub barycenter: Vec<f64>,
    /// `(1/vol) ∫ p p^T dλ`.
    pub second_moments: Vec<Vec<f64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact simplex formulas for Lebesgue measure on the hyperplane.
///
/// With `basis = None` the induced Euclidean measure is used (Gram
/// determinant of the edge vectors); otherwise the Lebesgue measure that gives
/// the parallelotope spanned by `basis` unit volume.
pub fn measure_barycenter_moments(
    section: &CrossSection,
    basis: Option<&[Vec<f64>]>,
) -> Result<SectionMoments> {
    let m = section.xi.len();
    let k = m - 1;
    let scale = section
        .vertices
        .iter()
        .map(|v| norm(v))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let basis_gram = basis.map(|b| {
        let bm = DMatrix::from_fn(m, k, |r, c| b[c][r]);
        let gram = bm.transpose() * &bm;
        (bm, gram)
    });
    let mut volume = 0.0;
    let mut first = vec![0.0; m];
    let mut second = vec![vec![0.0; m]; m];
    for s in &section.simplices {
        let p0 = &section.vertices[s[0]];
        let edges = DMatrix::from_fn(m, k, |r, c| section.vertices[s[c + 1]][r] - p0[r]);
        let measure = match &basis_gram {
            None => (edges.transpose() * &edges).determinant().max(0.0).sqrt() / factorial(k),
            Some((bm, gram)) => {
                let coords = gram
                    .clone()
                    .lu()
                    .solve(&(bm.transpose() * &edges))
                    .ok_or(Error::DegenerateBasis)?;
                coords.determinant().abs() / factorial(k)
            }
        };
        if !(measure > 1e-14 * scale.powi(k as i32)) {
            return Err(Error::DegenerateTriangulation { measure });
        }
        volume += measure;
        let mut sum = vec![0.0; m];
        for &i in s {
            for (a, x) in sum.iter_mut().zip(&section.vertices[i]) {
                *a += x;
            }
        }
        for r in 0..m {
            first[r] += measure * sum[r] / (k + 1) as f64;
        }
        // ∫_simplex x x^T = vol/((k+1)(k+2)) (Σ v v^T + (Σ v)(Σ v)^T)
        let denom = ((k + 1) * (k + 2)) as f64;
        for r in 0..m {
            for c in 0..m {
                let vv: f64 = s
                    .iter()
                    .map(|&i| section.vertices[i][r] * section.vertices[i][c])
                    .sum();
                second[r][c] += measure * (vv + sum[r] * sum[c]) / denom;
            }
        }
    }
    let barycenter = first.iter().map(|x| x / volume).collect();
    let second_moments = second
        .into_iter()
        .map(|row| row.into_iter().map(|x| x / volume).collect())
        .collect();
    Ok(SectionMoments {
        volume,
        barycenter,
        second_moments,
    })
}

/// Orthonormal basis of `xi^perp` by Gram-Schmidt on the seed vectors
/// `e_j - (xi_j / xi_k) e_k`, `k` the index of the largest `|xi_k|`.
pub fn orthonormal_complement(xi: &[f64]) -> Vec<Vec<f64>> {
    let m = xi.len();
    let k = (0..m)
        .max_by(|&a, &b| xi[a].abs().partial_cmp(&xi[b].abs()).unwrap().then(b.cmp(&a)))
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.saturating_sub(1));
    for j in (0..m).filter(|&j| j != k) {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        v[k] = -xi[j] / xi[k];
        for b in &basis {
            let c = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let n = norm(&v);
        basis.push(v.into_iter().map(|x| x / n).collect());
    }
    basis
}

/// `Q_xi = P_xi - l/m` in coordinates `q = Σ q_i s_i` with respect to a basis
/// `s_1, ..., s_{m-1}` of `xi^perp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPolytope {
    pub xi: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    /// `l/m` as an ambient vector.
    pub shift: Vec<f64>,
    pub polytope: Polytope,
}

impl ShiftedPolytope {
    /// Ambient point `l/m + Σ q_i s_i` of `P_xi`.
    pub fn to_ambient(&self, q: &[f64]) -> Vec<f64> {
        let mut p = self.shift.clone();
        for (qi, s) in q.iter().zip(&self.basis) {
            for (a, b) in p.iter_mut().zip(s) {
                *a += qi * b;
            }
        }
        p
    }

    /// The `s`-coordinates `(<s_1, x>, ..., <s_n, x>)` of a point `x` of `W`.
    pub fn s_coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|s| dot(s, x)).collect()
    }
}

pub fn shifted_polytope(
    section: &CrossSection,
    l: &GorensteinVector,
    basis: &[Vec<f64>],
) -> Result<ShiftedPolytope> {
    let m = section.xi.len();
    let n = m - 1;
    if basis.len() != n || basis.iter().any(|b| b.len() != m) {
        return Err(Error::DegenerateBasis);
    }
    let xi_norm = norm(&section.xi);
    for b in basis {
        if dot(b, &section.xi).abs() > 1e-12 * norm(b) * xi_norm {
            return Err(Error::DegenerateBasis);
        }
    }
    let bm = DMatrix::from_fn(m, n, |r, c| basis[c][r]);
    let gram = bm.transpose() * &bm;
    let lu = gram.clone().lu();
    if gram.determinant().abs() <= 1e-12 * basis.iter().map(|b| dot(b, b)).product::<f64>() {
        return Err(Error::DegenerateBasis);
    }
    let shift: Vec<f64> = l.to_f64().iter().map(|x| x / m as f64).collect();
    let coords = |p: &[f64]| -> Vec<f64> {
        let d = DVector::from_iterator(m, p.iter().zip(&shift).map(|(a, b)| a - b));
        let rhs = bm.transpose() * d;
        lu.solve(&rhs).map(|v| v.iter().copied().collect()).unwrap_or_default()
    };
    let vertices: Vec<Vec<f64>> = section.vertices.iter().map(|v| coords(v)).collect();
    // <xi_i, shift + B q> >= 0  <=>  -(B^T xi_i) . q <= <xi_i, shift>
    let halfspaces = section
        .facet_normals
        .iter()
        .map(|xi_i| HalfSpace {
            normal: basis.iter().map(|b| -dot(b, xi_i)).collect(),
            offset: dot(xi_i, &shift),
        })
        .collect();
    Ok(ShiftedPolytope {
        xi: section.xi.clone(),
        basis: basis.to_vec(),
        shift,
        polytope: Polytope {
            dim: n,
            vertices,
            halfspaces,
            simplices: section.simplices.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{gorenstein_vector, validate_cone_int};
    use crate::rational::parse_rational;

    fn conifold() -> ProperCone {
        validate_cone_int(&[vec![1, 0, 0], vec![0, 1, 0], vec![-1, 0, 1], vec![0, -1, 1]]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn quadrant_segment() {
        let c = validate_cone_int(&[vec![1, 0], vec![0, 1]]).unwrap();
        let xi = ReebVector::new(&c, vec![1.0, 1.0], None).unwrap();
        let p = cross_section(&c, &xi).unwrap();
        assert_eq!(p.vertices, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let mom = measure_barycenter_moments(&p, None).unwrap();
        assert!(close(&mom.barycenter, &[0.5, 0.5], 1e-15));
        assert!((mom.volume - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            ReebVector::new(&c, vec![1.0, 0.0], None),
            Err(Error::NotInteriorReeb { .. })
        ));
    }

    #[test]
    fn conifold_quadrilateral_exact_and_barycenter() {
        let c = conifold();
        let xi: Vec<BigRational> = ["1/2", "1/2", "1"]
            .iter()
            .map(|s| parse_rational(s).unwrap())
            .collect();
        let verts = cross_section_exact(&c, &xi).unwrap();
        let expect: Vec<Vec<BigRational>> = [
            ["0", "0", "1"],
            ["0", "2/3", "2/3"],
            ["2/3", "0", "2/3"],
            ["1/2", "1/2", "1/2"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| parse_rational(s).unwrap()).collect())
        .collect();
        assert_eq!(verts, expect);

        // kite with two congruent triangles: centroid (2A + B + C + 2D)/6
        let reeb = ReebVector::new(&c, vec![0.5, 0.5, 1.0], None).unwrap();
        let p = cross_section(&c, &reeb).unwrap();
        let mom = measure_barycenter_moments(&p, None).unwrap();
        assert!(close(&mom.barycenter, &[5.0 / 18.0, 5.0 / 18.0, 13.0 / 18.0], 1e-14));

        // at xi = (0, 0, 3/2) the section is the square with corners 2/3 (e_3 + {0, e_1, e_2, e_1 + e_2})
        let reeb = ReebVector::new(&c, vec![0.0, 0.0, 1.5], None).unwrap();
        let p = cross_section(&c, &reeb).unwrap();
        let mom = measure_barycenter_moments(&p, None).unwrap();
        assert!(close(&mom.barycenter, &[1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0], 1e-15));
        assert!((mom.volume - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn barycenter_does_not_depend_on_hyperplane_measure() {
        let c = conifold();
        let reeb = ReebVector::new(&c, vec![0.3, 0.7, 1.1], None).unwrap();
        let p = cross_section(&c, &reeb).unwrap();
        let euclid = measure_barycenter_moments(&p, None).unwrap();
        let ortho = orthonormal_complement(&reeb.xi);
        let skew: Vec<Vec<f64>> = vec![
            ortho[0].iter().zip(&ortho[1]).map(|(a, b)| 2.0 * a + 0.5 * b).collect(),
            ortho[1].iter().map(|b| 1.3 * b).collect(),
        ];
        let other = measure_barycenter_moments(&p, Some(&skew)).unwrap();
        assert!(close(&euclid.barycenter, &other.barycenter, 1e-12));
        assert!((euclid.volume - other.volume).abs() > 1e-6);
    }

    #[test]
    fn shifted_quadrant_interval() {
        let c = validate_cone_int(&[vec![1, 0], vec![0, 1]]).unwrap();
        let l = gorenstein_vector(&c).unwrap();
        let reeb = ReebVector::new(&c, vec![1.0, 1.0], Some(&l)).unwrap();
        assert!(reeb.normalized);
        let p = cross_section(&c, &reeb).unwrap();
        let q = shifted_polytope(&p, &l, &[vec![0.5, -0.5]]).unwrap();
        let mut xs: Vec<f64> = q.polytope.vertices.iter().map(|v| v[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(close(&xs, &[-1.0, 1.0], 1e-15));
        assert!(q.polytope.contains(&[0.99], 1e-12) && !q.polytope.contains(&[1.01], 1e-12));
        assert!(shifted_polytope(&p, &l, &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn shifted_conifold_has_zero_barycenter() {
        let c = conifold();
        let l = gorenstein_vector(&c).unwrap();
        let reeb = ReebVector::new(&c, vec![0.0, 0.0, 1.5], Some(&l)).unwrap();
        assert!(reeb.normalized);
        let p = cross_section(&c, &reeb).unwrap();
        let q = shifted_polytope(&p, &l, &orthonormal_complement(&reeb.xi)).unwrap();
        assert_eq!(q.polytope.vertices.len(), 4);
        assert!(q.polytope.barycenter().iter().all(|x| x.abs() < 1e-14));
        for v in &q.polytope.vertices {
            assert!(q.polytope.contains(v, 1e-12));
            let amb = q.to_ambient(v);
            assert!((dot(&amb, &reeb.xi) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_complement_is_orthonormal() {
        let xi = [0.3, -1.7, 2.2, 0.9];
        let b = orthonormal_complement(&xi);
        assert_eq!(b.len(), 3);
        for (i, u) in b.iter().enumerate() {
            assert!(dot(u, &xi).abs() < 1e-14);
            for (j, v) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).abs() < 1e-14);
            }
        }
    }
}
