//! Evaluation workbench for neural audio synthesis.
//!
//! * [`audio`]: WAV I/O, STFT, listening-test anchors.
//! * [`metrics`]: reconstruction, diversity and distribution-distance metrics.
//! * [`data_io`]: the AEMB matrix container and the study manifest.
//! * [`study`]: the MUSHRA-style listening study HTTP service.
//! * [`stats`]: rater screening, significance tests, agreement and correlation.
//! * [`cli`]: subcommand implementations behind the `naseval` binary.

pub mod audio;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod metrics;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
