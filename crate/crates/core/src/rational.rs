//! Exact rational helpers for the cone combinatorics.
//!
//! Rays are stored as primitive integer vectors; linear algebra runs over
//! `BigRational` so that pairing identities such as `<xi_i, l> = 1` hold
//! exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type IVec = Vec<BigInt>;
pub type QVec = Vec<BigRational>;

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.25"` / `"1e-3"`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| Error::BadRational(text.into()))?;
        let d: BigInt = den.trim().parse().map_err(|_| Error::BadRational(text.into()))?;
        if d.is_zero() {
            return Err(Error::BadRational(text.into()));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    let x: f64 = t.parse().map_err(|_| Error::BadRational(text.into()))?;
    from_f64(x).ok_or_else(|| Error::BadRational(text.into()))
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator may individually overflow f64
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn int_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn ivec_to_f64(v: &[BigInt]) -> Vec<f64> {
    v.iter().map(int_to_f64).collect()
}

pub fn qvec_to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub fn ivec_to_q(v: &[BigInt]) -> QVec {
    v.iter().cloned().map(BigRational::from_integer).collect()
}

/// Formats a rational as `"p/q"`, or `"p"` when integral.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn dot_q(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_i(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).fold(BigInt::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_iq(a: &[BigInt], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, y)| acc + y * x)
}

/// Positive rescaling of a nonzero rational vector to a primitive integer vector.
pub fn primitive(v: &[BigRational]) -> IVec {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: IVec = v
        .iter()
        .map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    primitive_int(&ints)
}

pub fn primitive_int(v: &[BigInt]) -> IVec {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

/// Row-reduces a copy of `rows` and returns the rank.
pub fn rank(rows: &[QVec]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut a: Vec<QVec> = rows.to_vec();
    let cols = a[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for i in (r + 1)..a.len() {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &pivot;
            for k in c..cols {
                let t = &f * &a[r][k];
                a[i][k] -= t;
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

pub fn rank_int(rows: &[IVec]) -> usize {
    let q: Vec<QVec> = rows.iter().map(|r| ivec_to_q(r)).collect();
    rank(&q)
}

/// Solves `A x = b` for a full-column-rank `A` (rows x cols, rows >= cols).
/// Returns `None` when the system is inconsistent or `A` is rank deficient.
pub fn solve_exact(a: &[QVec], b: &[BigRational]) -> Option<QVec> {
    let rows = a.len();
    if rows == 0 {
        return None;
    }
    let cols = a[0].len();
    let mut m: Vec<QVec> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::with_capacity(cols);
    let mut r = 0;
    for c in 0..cols {
        let p = (r..rows).find(|&i| !m[i][c].is_zero())?;
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for k in c..=cols {
            let t = &m[r][k] / &pivot;
            m[r][k] = t;
        }
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for k in c..=cols {
                let t = &f * &m[r][k];
                m[i][k] -= t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    // remaining rows must read 0 = 0
    if m[r..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    Some((0..cols).map(|c| m[c][cols].clone()).collect())
}

/// Determinant of a square integer matrix (fraction-free Bareiss elimination).
pub fn det_int(rows: &[IVec]) -> BigInt {
    let n = rows.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<IVec> = rows.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = ((k + 1)..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

pub fn abs_det_int(rows: &[IVec]) -> BigInt {
    det_int(rows).abs()
}

/// Columns of the inverse of an invertible square matrix, each rescaled to a
/// primitive integer vector.
pub fn inverse_columns_primitive(rows: &[IVec]) -> Option<Vec<IVec>> {
    let n = rows.len();
    let a: Vec<QVec> = rows.iter().map(|r| ivec_to_q(r)).collect();
    (0..n)
        .map(|j| {
            let e: QVec = (0..n)
                .map(|i| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect();
            solve_exact(&a, &e).map(|x| primitive(&x))
        })
        .collect()
}

pub fn int_vec(v: &[i64]) -> IVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_fraction_integer_and_float() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational(" -4 ").unwrap(), q(-4, 1));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn primitive_scales_to_coprime_integers() {
        let v = vec![q(2, 3), q(4, 3), q(0, 1)];
        assert_eq!(primitive(&v), int_vec(&[1, 2, 0]));
        assert_eq!(primitive_int(&int_vec(&[-6, 9])), int_vec(&[-2, 3]));
    }

    #[test]
    fn bareiss_determinant() {
        let m = vec![int_vec(&[2, 1, 0]), int_vec(&[1, 3, 1]), int_vec(&[0, 1, 4])];
        assert_eq!(det_int(&m), BigInt::from(18));
        let sing = vec![int_vec(&[1, 2]), int_vec(&[2, 4])];
        assert_eq!(det_int(&sing), BigInt::zero());
        let swap = vec![int_vec(&[0, 1]), int_vec(&[1, 0])];
        assert_eq!(det_int(&swap), BigInt::from(-1));
    }

    #[test]
    fn overdetermined_solve_detects_inconsistency() {
        let a: Vec<QVec> = [[1, 0], [0, 1], [1, 1]]
            .iter()
            .map(|r| r.iter().map(|&x| q(x, 1)).collect())
            .collect();
        let ok = solve_exact(&a, &[q(1, 1), q(2, 1), q(3, 1)]).unwrap();
        assert_eq!(ok, vec![q(1, 1), q(2, 1)]);
        assert!(solve_exact(&a, &[q(1, 1), q(2, 1), q(4, 1)]).is_none());
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![int_vec(&[1, 2, 3]), int_vec(&[2, 4, 6]), int_vec(&[0, 1, 1])];
        assert_eq!(rank_int(&rows), 2);
    }
}
