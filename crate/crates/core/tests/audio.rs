mod common;

use std::collections::BTreeSet;

use common::{clip, dft_magnitudes, sine, RATE};
use naseval::audio::{
    encode_wav16, make_anchor, quantize, read_wav, stft, AudioClip, StftParams, Window,
    LOWPASS_TAPS,
};
use proptest::prelude::*;

fn write_raw(path: &std::path::Path, spec: hound::WavSpec, frames: &[Vec<i16>]) {
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for frame in frames {
        for &s in frame {
            w.write_sample(s).unwrap();
        }
    }
    w.finalize().unwrap();
}

fn int16(channels: u16) -> hound::WavSpec {
    hound::WavSpec {
        channels,
        sample_rate: RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

#[test]
fn int16_file_normalizes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    write_raw(&path, int16(1), &[vec![0], vec![32767], vec![-32768]]);
    let c = read_wav(&path).unwrap();
    assert_eq!(c.samples(), &[0.0, 32767.0 / 32768.0, -1.0]);
    assert_eq!(c.sample_rate(), RATE);
}

#[test]
fn stereo_file_downmixes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.wav");
    write_raw(&path, int16(2), &[vec![16384, 0]]);
    assert_eq!(read_wav(&path).unwrap().samples(), &[0.25]);
}

#[test]
fn float_file_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.wav");
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: 8000,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(&path, spec).unwrap();
    for s in [1.0f32, 0.0, -0.5, -0.5] {
        w.write_sample(s).unwrap();
    }
    w.finalize().unwrap();
    let c = read_wav(&path).unwrap();
    assert_eq!(c.samples(), &[0.5, -0.5]);
}

#[test]
fn truncated_header_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.wav");
    write_raw(&path, int16(1), &[vec![1], vec![2]]);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..20]).unwrap();
    let err = read_wav(&path).unwrap_err();
    assert!(err.to_string().contains("malformed WAV"), "{err}");
}

#[test]
fn sixteen_bit_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.wav");
    write_raw(&path, int16(1), &[vec![-32768], vec![-1], vec![0], vec![1], vec![12345], vec![32767]]);
    let first = read_wav(&path).unwrap();
    let bytes = encode_wav16(&first).unwrap();
    assert_eq!(naseval::audio::decode_wav(&bytes).unwrap(), first);
}

/// Frame `i` as the STFT defines it: hop offset, zero padding, window.
fn oracle_frame(x: &[f64], i: usize, fft: usize, hop: usize, window: &[f64]) -> Vec<f64> {
    (0..fft)
        .map(|t| x.get(i * hop + t).copied().unwrap_or(0.0) * window[t])
        .collect()
}

#[test]
fn stft_matches_direct_dft() {
    let x = common::tone(60, 700);
    let params = StftParams::new(128, 48, Window::Hann).unwrap();
    let s = stft(&clip(x.clone()), params).unwrap();
    let window: Vec<f64> = (0..128)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / 128.0).cos())
        .collect();
    // floor((700 − 128)/48) + 1 = 12 full frames, plus one zero-padded partial frame
    assert_eq!(s.frames(), 13);
    for i in 0..s.frames() {
        let expected = dft_magnitudes(&oracle_frame(&x, i, 128, 48, &window));
        for (a, b) in s.frame(i).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "frame {i}: {a} vs {b}");
        }
    }
}

#[test]
fn stft_examples() {
    let ones = stft(&clip(vec![1.0; 4]), StftParams::new(4, 4, Window::Rectangular).unwrap()).unwrap();
    assert_eq!(ones.frames(), 1);
    for (a, b) in ones.frame(0).iter().zip([4.0, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }

    let silent = stft(&clip(vec![0.0; 3000]), StftParams::default()).unwrap();
    assert!(silent.magnitudes().iter().all(|&m| m == 0.0));

    // bin 8 of a 256-point frame
    let k = 8;
    let x = sine(k as f64 * f64::from(RATE) / 256.0, 1.0, 256);
    let s = stft(&clip(x), StftParams::new(256, 256, Window::Rectangular).unwrap()).unwrap();
    let peak = s.frame(0)[k];
    assert!((peak - 128.0).abs() < 1e-9);
    for (bin, m) in s.frame(0).iter().enumerate() {
        if bin != k {
            assert!(*m < 1e-6 * peak, "bin {bin}: {m}");
        }
    }
}

#[test]
fn stft_short_clip_gets_one_frame() {
    let s = stft(&clip(vec![0.5]), StftParams::default()).unwrap();
    assert_eq!(s.frames(), 1);
    assert_eq!(s.bins(), 513);
}

#[test]
fn anchor_examples() {
    let silence = make_anchor(&clip(vec![0.0; 4000])).unwrap();
    assert!(silence.samples().iter().all(|&s| s == 0.0));

    let input = clip(sine(100.0, 1.0, 32_000));
    let low = make_anchor(&input).unwrap();
    let distinct: BTreeSet<u64> = low.samples().iter().map(|s| s.to_bits()).collect();
    assert!(distinct.len() <= 256);
    assert!(low.rms() >= 0.9 * input.rms());

    let high_in = clip(sine(4000.0, 1.0, 32_000));
    let high = make_anchor(&high_in).unwrap();
    let db = 20.0 * (high.rms() / high_in.rms()).log10();
    assert!(db <= -45.0, "4 kHz attenuated only {db} dB");

    assert!(make_anchor(&AudioClip::new(vec![0.1; 10], 2000).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_rectangular(samples in prop::collection::vec(-1.0f64..=1.0, 1..600), log_fft in 2u32..8) {
        let fft = 1usize << log_fft;
        let params = StftParams::new(fft, fft, Window::Rectangular).unwrap();
        let s = stft(&clip(samples.clone()), params).unwrap();
        let mut energy = 0.0;
        for i in 0..s.frames() {
            for (bin, m) in s.frame(i).iter().enumerate() {
                let weight = if bin == 0 || bin == fft / 2 { 1.0 } else { 2.0 };
                energy += weight * m * m;
            }
        }
        let time: f64 = samples.iter().map(|x| x * x).sum::<f64>() * fft as f64;
        prop_assert!((energy - time).abs() <= 1e-6 * time.max(1e-12));
    }

    #[test]
    fn anchor_idempotent_on_band_limited_input(
        parts in prop::collection::vec((20.0f64..800.0, 0.0f64..0.3, 0.0f64..6.28), 1..4),
        len in 600usize..3000,
    ) {
        // The zero-phase FIR sees zeros past either end, so content must start
        // and end in silence at least half a filter length from the boundary.
        let margin = LOWPASS_TAPS / 2;
        let mut x = vec![0.0; margin];
        x.extend((0..len).map(|n| {
            let t = n as f64 / f64::from(RATE);
            parts.iter().map(|(f, a, p)| a * (2.0 * std::f64::consts::PI * f * t + p).sin()).sum::<f64>()
        }));
        x.extend(vec![0.0; margin]);
        let total = x.len();
        let once = make_anchor(&clip(x)).unwrap();
        let twice = make_anchor(&once).unwrap();
        prop_assert_eq!(once.len(), total);
        prop_assert_eq!(twice.len(), total);
        // one step of the 8-bit grid
        let step = 1.0 / 127.0;
        for (a, b) in once.samples().iter().zip(twice.samples()) {
            prop_assert!((a - b).abs() <= step + 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn anchor_output_on_grid(x in prop::collection::vec(-1.0f64..=1.0, 1..400)) {
        let out = make_anchor(&clip(x.clone())).unwrap();
        prop_assert_eq!(out.len(), x.len());
        let grid = quantize(out.samples(), 8).unwrap();
        prop_assert_eq!(grid, out.samples().to_vec());
    }
}
