//! Semi-discrete solver for `det D^2 phi = exp(-m phi)` on `R^n`, `n = m - 1`,
//! with gradient image `Q`.

mod cells;
mod ding;
mod expint;
mod geometry;
mod lp;
mod pwa;
mod quadrature;
mod reconstruct;
mod slopes;
mod solver;
mod unbounded;

pub use ding::{ding_functional, discrete_ding, DingValue};
pub use expint::{exp_divided_difference, segment_integral, triangle_integral};
pub use lp::{convexify, legendre};
pub use pwa::PiecewiseAffineConvex;
pub use slopes::{resolution_for_count, sample_slopes, weighted_barycenter, SlopeSample};
pub use reconstruct::{check_reconstruction, reconstruct_potential, ReconstructionReport, ToricPotential};
pub use solver::{minimize_ding, test_grid, MASolution, SolverIterate, SolverOptions};
pub use unbounded::{detect_unbounded, UnboundedCertificate, UNBOUNDED_STEPS};
