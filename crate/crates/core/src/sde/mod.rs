//! Monte Carlo side: the backward SDE `dX = εb(1−t, X)dt + √ε σ(1−t, X)dW`
//! whose endpoint law represents the heat semigroup, its frozen Gaussian
//! approximants, and the estimators built on them.

mod estimators;
mod rng;
mod simulate;
mod stats;

pub use estimators::{
    escape_probability, heat_content_mc, heat_content_mc_weighted, law_equality_check, strong_error,
    strong_error_frozen, CheckpointGap, LawReport, McEstimate, ProjectionTest, StrongErrorReport, Verdict,
    KS_THRESHOLD, PROJECTION_ANGLES,
};
pub use rng::{derive_seed, NoiseTag, StreamFamily};
pub use simulate::{
    euler_maruyama, EnsembleSummary, FnCoefficients, InitialLaw, PathEnsemble, SdeCoefficients, SdeSpec, Weight,
    DEFAULT_CHECKPOINTS, DEFAULT_STEPS,
};
pub use stats::{kolmogorov_survival, ks_one_sample, ks_two_sample, KsResult, Moments};
