use serde::{Deserialize, Serialize};

use crate::audio::{stft, AudioClip, Spectrogram, StftParams, Window};
use crate::error::{Error, Result};

pub const DEFAULT_FFT_SIZES: [usize; 6] = [2048, 1024, 512, 256, 128, 64];
pub const DEFAULT_LOG_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionError {
    pub mse: f64,
    pub mae: f64,
}

fn mse_mae_slices(a: &[f64], b: &[f64]) -> ReconstructionError {
    let n = a.len() as f64;
    let (sq, abs) = a.iter().zip(b).fold((0.0, 0.0), |(sq, abs), (x, y)| {
        let d = x - y;
        (sq + d * d, abs + d.abs())
    });
    ReconstructionError {
        mse: sq / n,
        mae: abs / n,
    }
}

/// Element-wise MSE and MAE between two magnitude spectrograms.
pub fn mse_mae(reference: &Spectrogram, generated: &Spectrogram) -> Result<ReconstructionError> {
    if reference.params() != generated.params() {
        return Err(Error::ShapeMismatch("spectrograms use different STFT parameters".into()));
    }
    if reference.frames() != generated.frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames vs {} frames",
            reference.frames(),
            generated.frames()
        )));
    }
    if reference.frames() == 0 {
        return Err(Error::InsufficientData("empty spectrogram".into()));
    }
    Ok(mse_mae_slices(reference.magnitudes(), generated.magnitudes()))
}

/// MSE and MAE computed directly on waveform samples.
pub fn waveform_mse_mae(reference: &AudioClip, generated: &AudioClip) -> Result<ReconstructionError> {
    if reference.len() != generated.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples vs {} samples",
            reference.len(),
            generated.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::EmptyAudio);
    }
    Ok(mse_mae_slices(reference.samples(), generated.samples()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiScaleConfig {
    pub fft_sizes: Vec<usize>,
    pub log_epsilon: f64,
}

impl Default for MultiScaleConfig {
    fn default() -> Self {
        Self {
            fft_sizes: DEFAULT_FFT_SIZES.to_vec(),
            log_epsilon: DEFAULT_LOG_EPSILON,
        }
    }
}

/// Multi-scale spectral distance with the default log epsilon.
pub fn multi_scale_distance(x: &AudioClip, y: &AudioClip, fft_sizes: &[usize]) -> Result<f64> {
    multi_scale_distance_with(
        x,
        y,
        &MultiScaleConfig {
            fft_sizes: fft_sizes.to_vec(),
            log_epsilon: DEFAULT_LOG_EPSILON,
        },
    )
}

/// Σ over FFT sizes of `mean|S_x − S_y| + mean|log(S_x + ε) − log(S_y + ε)|`,
/// with Hann-windowed frames and a hop of a quarter of the FFT size.
pub fn multi_scale_distance_with(x: &AudioClip, y: &AudioClip, config: &MultiScaleConfig) -> Result<f64> {
    if config.fft_sizes.is_empty() {
        return Err(Error::InvalidParameter("empty FFT size list".into()));
    }
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples vs {} samples",
            x.len(),
            y.len()
        )));
    }
    if x.sample_rate() != y.sample_rate() {
        return Err(Error::ShapeMismatch(format!(
            "{} Hz vs {} Hz",
            x.sample_rate(),
            y.sample_rate()
        )));
    }
    if !(config.log_epsilon > 0.0) {
        return Err(Error::InvalidParameter("log epsilon must be positive".into()));
    }

    let eps = config.log_epsilon;
    let mut total = 0.0;
    for &size in &config.fft_sizes {
        let params = StftParams::new(size, (size / 4).max(1), Window::Hann)?;
        let sx = stft(x, params)?;
        let sy = stft(y, params)?;
        let n = sx.magnitudes().len() as f64;
        let (lin, log) = sx
            .magnitudes()
            .iter()
            .zip(sy.magnitudes())
            .fold((0.0, 0.0), |(lin, log), (a, b)| {
                (lin + (a - b).abs(), log + ((a + eps).ln() - (b + eps).ln()).abs())
            });
        total += lin / n + log / n;
    }
    Ok(total)
}
