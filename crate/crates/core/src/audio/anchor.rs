use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

pub const ANCHOR_CUTOFF_HZ: f64 = 1000.0;
pub const ANCHOR_BITS: u32 = 8;
pub const LOWPASS_TAPS: usize = 511;

/// Linear-phase windowed-sinc low-pass (Hamming window), normalized to unit DC gain.
pub fn lowpass_taps(cutoff_hz: f64, sample_rate: u32, taps: usize) -> Result<Vec<f64>> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff_hz} Hz not representable at {sample_rate} Hz"
        )));
    }
    if taps % 2 == 0 {
        return Err(Error::InvalidParameter("tap count must be odd".into()));
    }
    let fc = cutoff_hz / f64::from(sample_rate);
    let mid = (taps / 2) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            // written in |n - mid| so mirrored taps are bit-identical
            let x = (n as f64 - mid).abs();
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            let hamming = 0.54 + 0.46 * (PI * x / mid).cos();
            sinc * hamming
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    Ok(h)
}

/// Zero-phase FIR filtering: the `taps / 2` sample group delay is trimmed so
/// output sample `n` lines up with input sample `n`. Out-of-range input is zero.
pub fn lowpass(samples: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = taps.len() / 2;
    let len = samples.len();
    (0..len)
        .map(|n| {
            // y[n] = Σ_k h[k] x[n + delay - k]
            let centre = n + delay;
            let k_min = centre.saturating_sub(len - 1);
            let k_max = centre.min(taps.len() - 1);
            (k_min..=k_max).map(|k| taps[k] * samples[centre - k]).sum()
        })
        .collect()
}

/// Signed mid-tread quantizer: `clamp(round(s·L), -L, L) / L` with `L = 2^(bits-1) - 1`.
pub fn quantize(samples: &[f64], bits: u32) -> Result<Vec<f64>> {
    if !(2..=24).contains(&bits) {
        return Err(Error::InvalidParameter(format!("bit depth {bits} outside 2..=24")));
    }
    let levels = f64::from((1u32 << (bits - 1)) - 1);
    Ok(samples
        .iter()
        .map(|s| (s * levels).round().clamp(-levels, levels) / levels)
        .collect())
}

/// The listening-test anchor: 1 kHz low-pass followed by 8-bit quantization.
pub fn make_anchor(clip: &AudioClip) -> Result<AudioClip> {
    if clip.sample_rate() <= 2000 {
        return Err(Error::InvalidParameter(format!(
            "sample rate {} Hz cannot represent a {ANCHOR_CUTOFF_HZ} Hz cutoff",
            clip.sample_rate()
        )));
    }
    let taps = lowpass_taps(ANCHOR_CUTOFF_HZ, clip.sample_rate(), LOWPASS_TAPS)?;
    let filtered = lowpass(clip.samples(), &taps);
    AudioClip::new(quantize(&filtered, ANCHOR_BITS)?, clip.sample_rate())
}
