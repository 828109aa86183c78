//! Audio primitives: mono clips, WAV I/O, short-time spectra and the
//! degraded anchor used in listening tests.

mod anchor;
mod stft;
mod wav;

pub use anchor::{lowpass, lowpass_taps, make_anchor, quantize, ANCHOR_BITS, ANCHOR_CUTOFF_HZ, LOWPASS_TAPS};
pub use stft::{stft, Spectrogram, StftParams, Window};
pub use wav::{decode_wav, encode_wav16, read_wav, write_wav16};

use crate::error::{Error, Result};

/// Mono sample buffer. Samples are finite and lie in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        if let Some(i) = samples.iter().position(|s| s.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sample {i} outside [-1, 1]: {}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a clip, clamping every sample into `[-1, 1]`.
    pub fn clamped(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// First `len` samples (or the whole clip if shorter).
    pub fn truncated(&self, len: usize) -> AudioClip {
        AudioClip {
            samples: self.samples[..len.min(self.samples.len())].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
