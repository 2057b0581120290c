//! Seeded Monte Carlo for killed walks: survival, local probabilities,
//! occupation-based Green estimates and empirical meander laws.

mod estimators;
mod meander;
mod rng;
mod sampler;

pub use estimators::{
    estimate_green_cube, estimate_green_cubes, estimate_pn_cube, estimate_positivity, estimate_survival, Estimate,
    GreenCubeEstimate,
};
pub use meander::{meander_histogram, tv_distance, tv_distance_with_error, Binning, MeanderHistogram, BATCHES};
pub use rng::{path_rng, PathRng};
pub use sampler::HeavyStepSampler;
