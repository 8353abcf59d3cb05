//! Equilibrium-measure estimators and the metrics used to compare them.

mod measure;
mod mixing;
mod sampler;

pub use measure::{
    grid_density, measure_distance, moments, Atom, BBox, GridDensity, MeasureDistance, MomentVector, PgmSidecar,
    PointMeasure, MOMENT_ORDER,
};
pub use mixing::{
    commuting_check, correlation, fit_decay, lambda_pow, mixing_in, mixing_series, Correlation, DecayFit, DecayKind,
    MixingReport, Observable, MIXING_LIMIT,
};
pub use sampler::{
    brolin_sample, brolin_sample_with_stats, preimage_tree, pullback_step, SamplerConfig, SamplerStats,
    DEFAULT_ATOM_CAP, MAX_RESTARTS, TREE_LIMIT,
};
