use std::io::{Cursor, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

/// Reads a PCM WAV file (16-bit integer or 32-bit float), down-mixing to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    decode(std::io::BufReader::new(file))
}

/// Decodes WAV bytes held in memory.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    decode(Cursor::new(bytes))
}

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::Unsupported => Error::UnsupportedCodec("unsupported sample format".into()),
        hound::Error::FormatError(msg) => Error::MalformedWav(msg.to_string()),
        hound::Error::IoError(e) => Error::MalformedWav(e.to_string()),
        other => Error::MalformedWav(other.to_string()),
    }
}

fn decode<R: Read + Seek>(reader: R) -> Result<AudioClip> {
    let mut reader = WavReader::new(reader).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::MalformedWav("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (format, bits) => {
            return Err(Error::UnsupportedCodec(format!("{bits}-bit {format:?}")));
        }
    };

    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if interleaved.len() % channels != 0 {
        return Err(Error::MalformedWav("partial sample frame".into()));
    }
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::MalformedWav("non-finite float sample".into()));
    }

    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(mono, spec.sample_rate)
}

/// Renders a clip as 16-bit little-endian PCM WAV bytes.
pub fn encode_wav16(clip: &AudioClip) -> Result<Vec<u8>> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::with_capacity(44 + clip.len() * 2));
    {
        let mut writer = WavWriter::new(&mut buf, spec).map_err(map_hound)?;
        let mut samples = writer.get_i16_writer(clip.len() as u32);
        for &s in clip.samples() {
            samples.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16);
        }
        samples.flush().map_err(map_hound)?;
        writer.finalize().map_err(map_hound)?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav16(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav16(clip)?;
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}
