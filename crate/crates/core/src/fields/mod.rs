//! Sampled fields on a punctured disk: grids, numerical Wirtinger
//! derivatives, a disk Poisson solver, path integrals and jet fitting.
//!
//! The origin is never a node; quantities at the branch point itself come
//! exclusively from jets. Polar grids carry a full set of rings so that
//! angular derivatives are spectral; radial derivatives use finite-difference
//! stencils on the actual node set.

mod deriv;
mod fit;
mod grid;
mod integral;
mod numerics;
mod poisson;

pub use deriv::{dz_grid, dz_grid_with, dzbar_grid, dzbar_grid_with, laplacian, DEFAULT_RADIAL_ORDER};
pub use fit::{fit_jet, fit_jets, sample_jet, sample_jets, FitReport};
pub use grid::{DiskGrid, GridField, GridKind, RadialSpacing};
pub use integral::{gauss_legendre, line_integral, Closedness, ComplexField1, GridInterp, JetField, LineIntegral};
pub use numerics::fornberg_weights;
pub use poisson::{iterated_poisson, poisson_residual, poisson_solve};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("operation requires a polar grid")]
    PolarOnly,
    #[error("component count mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("integrand is not closed to tolerance: two-path discrepancy {gap:.3e} > {tol:.3e}")]
    NotClosedForm { gap: f64, tol: f64 },
    #[error("Poisson solver diverged: residual {residual:.3e} after {iterations} defect sweeps")]
    SolverDiverged { residual: f64, iterations: usize },
    #[error("radial fit ill-conditioned: condition number {cond:.3e}")]
    IllConditionedFit { cond: f64 },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("jet error: {0}")]
    Jet(#[from] crate::jets::JetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Parse(String),
}
