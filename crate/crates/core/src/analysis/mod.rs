//! Post-processing: asymptotic fits of heat-content measurements against the
//! geometric prediction, and coherence ratios.

mod coherence;
mod fit;
mod pipeline;

pub use coherence::{coherence_ratio, CoherenceBackend, CoherenceReport};
pub use fit::{
    default_eps_grid, fit_asymptotics, geometric_eps_grid, AsymptoticsReport, FitRow, Measurement, CI_WIDTH,
    MIN_FIT_POINTS,
};
pub use pipeline::{mc_measurements, measure_mc, measure_pde, PdeSeries};
