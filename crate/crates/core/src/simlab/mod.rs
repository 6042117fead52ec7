//! Simulation lab: seeded data generators and the Monte Carlo experiments used
//! to check the p-value approximation, detection power and tree recovery.

mod experiments;
mod generators;
mod rng;

pub use experiments::{
    detection_csv, empirical_quantile, experiment_cv_contrast, experiment_detection, experiment_neufeld,
    experiment_null_cdf, neufeld_replicate, neufeld_study, neufeld_study_csv, Amplitude, CvConfig, CvContrastReport,
    CvReplicate, DetectionPoint, NeufeldReport, NullCdfResult, SequenceRow, Sidecar, DEFAULT_N_GRID,
    DEFAULT_QUANTILE_LEVELS, STUDY_GROW,
};
pub use generators::{
    gen_alt, gen_neufeld, gen_null, neufeld_mean, sample_alt, sample_neufeld, sample_null, stepsize_amplitude,
    AltConfig, NeufeldConfig, NullConfig,
};
pub use rng::{Purpose, SimRng};
