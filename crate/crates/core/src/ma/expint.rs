//! Exact integrals of `exp(affine)` over segments and triangles via divided
//! differences of the exponential.
//!
//! For a `k`-simplex `T` with vertex values `a_0, ..., a_k` of an affine
//! function `f`, `∫_T exp(f) = k! |T| exp[a_0, ..., a_k]`, and repeating a
//! vertex value `a_i` once more gives `∫_T λ_i exp(f)` with the extra factor
//! `1/(k+1)` absorbed: `∫_T λ_i exp(f) = k! |T| exp[a_0, ..., a_k, a_i]`.

/// Spread below which the Taylor expansion is used.
const TAYLOR_SPREAD: f64 = 0.05;

/// Divided difference `exp[x_0, ..., x_k]` (order-independent, repeated nodes
/// allowed).
pub fn exp_divided_difference(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted_dd(&v)
}

fn sorted_dd(v: &[f64]) -> f64 {
    let k = v.len() - 1;
    if k == 0 {
        return v[0].exp();
    }
    let spread = v[k] - v[0];
    if spread < TAYLOR_SPREAD {
        return taylor_dd(v);
    }
    if k == 1 {
        // exp(a) (exp(b - a) - 1) / (b - a)
        return v[0].exp() * (spread.exp_m1() / spread);
    }
    (sorted_dd(&v[1..]) - sorted_dd(&v[..k])) / spread
}

/// `exp(c) Σ_{j>=0} h_j(x - c) / (j + k)!` with `h_j` the complete
/// homogeneous symmetric polynomials of the centered nodes.
fn taylor_dd(v: &[f64]) -> f64 {
    let k = v.len() - 1;
    let c = v.iter().sum::<f64>() / v.len() as f64;
    let y: Vec<f64> = v.iter().map(|x| x - c).collect();
    // h_j over the first i variables, updated in place: h_j += y_i h_{j-1}
    const TERMS: usize = 14;
    let mut h = [0.0f64; TERMS];
    h[0] = 1.0;
    for &yi in &y {
        for j in 1..TERMS {
            h[j] += yi * h[j - 1];
        }
    }
    let mut fact: f64 = (1..=k).map(|i| i as f64).product();
    let mut sum = 0.0;
    for (j, hj) in h.iter().enumerate() {
        if j > 0 {
            fact *= (j + k) as f64;
        }
        sum += hj / fact;
    }
    c.exp() * sum
}

/// `∫ exp(f)` over a segment of length `len` with endpoint values `a`, `b`.
pub fn segment_integral(len: f64, a: f64, b: f64) -> f64 {
    len * exp_divided_difference(&[a, b])
}

/// `∫ exp(f)` over a triangle of area `area`.
pub fn triangle_integral(area: f64, a: [f64; 3]) -> f64 {
    2.0 * area * exp_divided_difference(&a)
}

/// `∫ λ_i exp(f)` over the triangle for each barycentric coordinate `λ_i`.
pub fn triangle_first_moments(area: f64, a: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = 2.0 * area * exp_divided_difference(&[a[0], a[1], a[2], a[i]]);
    }
    out
}

/// `∫ λ_i exp(f)` over the segment for both endpoints.
pub fn segment_first_moments(len: f64, a: f64, b: f64) -> [f64; 2] {
    [
        len * exp_divided_difference(&[a, b, a]),
        len * exp_divided_difference(&[a, b, b]),
    ]
}
