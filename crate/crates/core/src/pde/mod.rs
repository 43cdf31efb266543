//! Conservative grid solver for `∂_t u = ε Δ_t u` on a rectangle with
//! homogeneous Neumann boundary.
//!
//! The rectangle stands in for the plane: families are Euclidean outside a
//! ball, and the grid must leave a margin of `5·√(2ε)` around it.

mod checks;
mod evolve;
mod grid;
mod operator;

pub use checks::{
    averaging_order_check, heat_content_from_indicator, heat_content_pde, localisation_check, log_log_slope, prepare_indicator,
    self_adjoint_identity_check, AveragingOrderReport, HeatContentPde, LocalisationReport, PdeOptions,
    SelfAdjointReport,
    ROUNDING_FLOOR,
};
pub use evolve::{evolve, EvolveOptions, SolveDiagnostics, SolveReport, TimeSampling, DEFAULT_CFL};
pub use grid::{discretize_indicator, discretize_indicator_with, FieldHeader, Grid, GridField, INDICATOR_SUBSAMPLES, MIN_CELLS};
pub use operator::selling_decomposition;
