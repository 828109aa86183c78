use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann window, `0.5 - 0.5 cos(2πn/N)`.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub fft_size: usize,
    pub hop_size: usize,
    pub window: Window,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop_size: 256,
            window: Window::Hann,
        }
    }
}

impl StftParams {
    pub fn new(fft_size: usize, hop_size: usize, window: Window) -> Result<Self> {
        let params = Self {
            fft_size,
            hop_size,
            window,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.fft_size {
            return Err(Error::InvalidParameter(format!(
                "hop_size {} must be in 1..={}",
                self.hop_size, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of frames for a signal of `len` samples.
    ///
    /// Full frames are `floor((len - fft) / hop) + 1`; any samples left past the
    /// last full frame get one extra zero-padded frame, and a signal shorter than
    /// `fft_size` yields a single padded frame.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.fft_size {
            return 1;
        }
        1 + (len - self.fft_size).div_ceil(self.hop_size)
    }
}

/// Magnitude spectrogram, `frames × (fft_size / 2 + 1)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    magnitudes: Vec<f64>,
    frames: usize,
    params: StftParams,
    sample_rate: u32,
}

impl Spectrogram {
    /// Wraps a precomputed magnitude matrix given as rows of bins.
    pub fn from_rows(rows: Vec<Vec<f64>>, params: StftParams, sample_rate: u32) -> Result<Self> {
        params.validate()?;
        let bins = params.bins();
        let frames = rows.len();
        let mut magnitudes = Vec::with_capacity(frames * bins);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != bins {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} bins, expected {bins}",
                    row.len()
                )));
            }
            if row.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has negative or non-finite magnitudes"
                )));
            }
            magnitudes.extend(row);
        }
        Ok(Self {
            magnitudes,
            frames,
            params,
            sample_rate,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.params.bins()
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// All magnitudes in frame-major order.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let bins = self.bins();
        &self.magnitudes[i * bins..(i + 1) * bins]
    }
}

pub fn stft(clip: &AudioClip, params: StftParams) -> Result<Spectrogram> {
    params.validate()?;
    if clip.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let n = params.fft_size;
    let bins = params.bins();
    let frames = params.frame_count(clip.len());
    let window = params.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let samples = clip.samples();

    let mut buffer = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut magnitudes = Vec::with_capacity(frames * bins);
    for f in 0..frames {
        let start = f * params.hop_size;
        for (i, slot) in buffer.iter_mut().enumerate() {
            let s = samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        magnitudes.extend(buffer[..bins].iter().map(|c| c.norm()));
    }

    Ok(Spectrogram {
        magnitudes,
        frames,
        params,
        sample_rate: clip.sample_rate(),
    })
}
