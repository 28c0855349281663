//! Volume-minimizing Reeb vectors and conical Calabi-Yau potentials on toric
//! cones.
//!
//! The crate is organised as a pipeline:
//!
//! - [`cone`]: exact dual cones, Gorenstein vector, cross-sections `P_xi`
//!   and the shifted polytope `Q_xi`;
//! - [`volmin`]: the volume functional `V(xi)` of the truncated dual cone,
//!   its log-derivatives and a damped Newton minimizer on `<l, xi> = m`;
//! - [`ma`]: a semi-discrete solver for `det D^2 phi = exp(-m phi)` with
//!   gradient image `Q_xi`, by minimizing the discretized Ding functional;
//! - [`certify`]: Monte Carlo, finite-difference and closed-form oracles and
//!   the sup-norm certificate;
//! - [`pipeline`]: configuration, JSON reports and CSV output used by the CLI.

pub mod certify;
pub mod cone;
pub mod error;
pub mod ma;
pub mod pipeline;
pub mod rational;
pub mod volmin;

pub use error::{Error, Result};
