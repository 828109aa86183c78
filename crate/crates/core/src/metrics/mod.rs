//! Objective metrics: reconstruction error, multi-scale spectral distance,
//! NDB/k, inception score, KID and FAD.

mod frechet;
mod inception;
mod kid;
pub mod ndb;
mod reconstruction;
pub mod report;
mod types;

pub use frechet::{fad, fit_gaussian, frechet_distance, psd_sqrt, GaussianStats};
pub use inception::{inception_score, inception_score_splits, kl_divergence, SplitScore};
pub use kid::{kid, kid_blocked, polynomial_kernel, KidBlocks, KidEstimate};
pub use ndb::{fit_ndb, ndb_score, NdbModel, NdbScore};
pub use reconstruction::{
    mse_mae, multi_scale_distance, multi_scale_distance_with, waveform_mse_mae, MultiScaleConfig,
    ReconstructionError, DEFAULT_FFT_SIZES, DEFAULT_LOG_EPSILON,
};
pub use report::MetricReport;
pub use types::{EmbeddingSet, ProbabilityMatrix, ROW_SUM_TOLERANCE};
