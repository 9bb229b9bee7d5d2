//! Mono WAV input and output (16-bit PCM and 32-bit IEEE float).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

#[derive(Debug, Clone)]
pub struct WavInput {
    pub buffer: SampleBuffer,
    /// Channel count of the file; only the first channel is kept.
    pub channels: u16,
    pub warnings: Vec<String>,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavInput> {
    let mut reader = WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    let channels = spec.channels.max(1);
    let mut warnings = Vec::new();
    if channels > 1 {
        warnings.push(format!(
            "{} has {channels} channels, using the first",
            path.as_ref().display()
        ));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits) if (8..=32).contains(&bits) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (format, bits) => {
            return Err(Error::InvalidArgument(format!(
                "unsupported WAV encoding {format:?} with {bits} bits"
            )))
        }
    };
    let samples = interleaved
        .into_iter()
        .step_by(channels as usize)
        .collect();
    Ok(WavInput {
        buffer: SampleBuffer::new(samples, spec.sample_rate as f64)?,
        channels,
        warnings,
    })
}

fn spec_for(buffer: &SampleBuffer, bits: u16, format: SampleFormat) -> Result<WavSpec> {
    let rate = buffer.rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "WAV needs an integral sample rate, got {rate}"
        )));
    }
    Ok(WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: bits,
        sample_format: format,
    })
}

/// Writes 32-bit float samples; values outside [-1, 1] are kept as is.
pub fn write_wav_f32(path: impl AsRef<Path>, buffer: &SampleBuffer) -> Result<()> {
    let mut w = WavWriter::create(path, spec_for(buffer, 32, SampleFormat::Float)?)?;
    for &v in buffer.samples() {
        w.write_sample(v as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Writes 16-bit PCM, clipping to [-1, 1].
pub fn write_wav_pcm16(path: impl AsRef<Path>, buffer: &SampleBuffer) -> Result<()> {
    let mut w = WavWriter::create(path, spec_for(buffer, 16, SampleFormat::Int)?)?;
    for &v in buffer.samples() {
        let q = (v.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(q)?;
    }
    w.finalize()?;
    Ok(())
}
