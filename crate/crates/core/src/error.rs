use thiserror::Error;

/// Errors raised by the cone, volume, Monge-Ampère and certificate stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no rays given")]
    EmptyInput,
    #[error("ray {index} has {found} entries, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("ray {0} is zero")]
    ZeroRay(usize),
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error("rays span a subspace of dimension {rank} < {dim}")]
    NotFullDimensional { rank: usize, dim: usize },
    #[error("cone contains a line (dual cone has dimension {dual_rank} < {dim})")]
    ContainsLine { dual_rank: usize, dim: usize },
    #[error("rays do not lie on a common affine hyperplane <xi_i, l> = 1")]
    NotGorenstein,
    #[error("vector is not in the interior of the Reeb cone (min pairing with a dual ray is {min_pairing:e})")]
    NotInteriorReeb { min_pairing: f64 },
    #[error("basis vectors are not a basis of the orthogonal complement of xi")]
    DegenerateBasis,
    #[error("triangulation contains a degenerate simplex (measure {measure:e})")]
    DegenerateTriangulation { measure: f64 },
    #[error("volume routes disagree: triangulated {triangulated}, laplace {laplace}")]
    VolumeMismatch { triangulated: f64, laplace: f64 },
    #[error("lattice cutoff too small: estimated tail {tail:e} exceeds 10% of partial sum {sum:e}")]
    CutoffTooSmall { tail: f64, sum: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("slope barycenter {norm:e} is not zero")]
    BarycenterNotZero { norm: f64 },
    #[error("slope barycenter is zero, nothing to certify")]
    BarycenterZero,
    #[error("point lies outside the convex hull of the slopes")]
    Unbounded,
    #[error("exp(-m phi) is not integrable: origin is not interior to the slope hull")]
    NonIntegrable,
    #[error("line search failed after {iterations} iterations")]
    LineSearchFailure { iterations: usize },
    #[error("finite-difference step underflows at coordinate {0}")]
    StepUnderflow(usize),
    #[error("q = {q} must exceed the dimension n = {n}")]
    QTooSmall { q: f64, n: usize },
    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

impl Error {
    /// Structural errors are properties of the input cone rather than of the numerics.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput
                | Error::DimensionMismatch { .. }
                | Error::ZeroRay(_)
                | Error::BadRational(_)
                | Error::NotFullDimensional { .. }
                | Error::ContainsLine { .. }
                | Error::NotGorenstein
                | Error::NotInteriorReeb { .. }
                | Error::DegenerateBasis
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
