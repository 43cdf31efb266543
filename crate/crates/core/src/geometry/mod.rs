//! Metric families, regions, the averaged geometry and its boundary area.
//!
//! Conventions: a family is stored through its inverse metric `G = g_t⁻¹`
//! because every consumer (PDE flux, SDE diffusion) needs `G`. The generator
//! `Δ_t = div_ω g_t⁻¹ d` expands in coordinates to
//! `Σ G_ij ∂_ij + Σ b_j ∂_j` with `b_j = ρ⁻¹ Σ_i ∂_i(ρ G_ij)`, so writing it as
//! `½ Σ a_ij ∂_ij + Σ b_j ∂_j` gives `a = 2G`.

mod area;
mod averaging;
mod coefficients;
mod cutoff;
mod family;
mod region;

pub use area::{mixing_area, mixing_area_of_family, ClosedCurve, MixingAreaOptions};
pub use averaging::{averaged_inverse_metric, averaged_metric, DEFAULT_TIME_NODES};
pub use coefficients::{
    AveragedCoefficients, CoefficientField, Coefficients, FamilyCoefficients, SeparableTensor,
    DEFAULT_FD_STEP,
};
pub use cutoff::{Cutoff, Density};
pub use family::{
    pullback_family, Euclidean, FlowPullback, MetricFamily, RotatingGyre, Schedule,
    ScheduledFamily, SteadyShear, VelocityField, Vortex, DEFAULT_FLOW_STEPS,
};
pub use region::{Rect, Region, Shape};
