use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxp::{analyze_utterance, MaxPConfig, Method};
use crate::metrics::skewness;
use crate::pitch::{detect_gci, estimate_f0, F0Track, GciConfig, PitchConfig};
use crate::signal::{reversed, SampleBuffer};

/// Sign linking differenced skewness to polarity: `polarity = sign(d) * this`.
///
/// Frozen after calibration on synthetic signals of known polarity with the
/// MaxP residual: its skewness has the opposite sign to the low-passed
/// waveform's, so `d = skew(glottal) - skew(residual)` follows the polarity.
pub const POLARITY_SIGN_CONVENTION: f64 = 1.0;

/// Minimum voiced duration for a confident verdict, in seconds.
pub const MIN_VOICED_SECONDS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityConfig {
    pub lp: MaxPConfig,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub glottal_cutoff_hz: f64,
    pub pitch: PitchConfig,
}

impl Default for PolarityConfig {
    fn default() -> Self {
        Self {
            lp: MaxPConfig::default(),
            win_ms: 25.0,
            hop_ms: 5.0,
            glottal_cutoff_hz: 1000.0,
            pitch: PitchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityVerdict {
    /// +1 or -1.
    pub polarity: i8,
    pub differenced_skewness: f64,
    pub skew_residual: f64,
    pub skew_glottal: f64,
    pub voiced_seconds: f64,
    /// Set for a zero differenced skewness or less than
    /// [`MIN_VOICED_SECONDS`] of voiced speech.
    pub low_confidence: bool,
}

/// Second-order Butterworth low-pass biquad (bilinear transform).
fn butterworth_lowpass(cutoff: f64, rate: f64) -> ([f64; 3], [f64; 2]) {
    let w0 = 2.0 * std::f64::consts::PI * cutoff / rate;
    let (sin, cos) = w0.sin_cos();
    let alpha = sin / std::f64::consts::SQRT_2;
    let a0 = 1.0 + alpha;
    let b = [(1.0 - cos) / 2.0 / a0, (1.0 - cos) / a0, (1.0 - cos) / 2.0 / a0];
    let a = [-2.0 * cos / a0, (1.0 - alpha) / a0];
    (b, a)
}

fn biquad(x: &[f64], b: &[f64; 3], a: &[f64; 2]) -> Vec<f64> {
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = b[0] * v + b[1] * x1 + b[2] * x2 - a[0] * y1 - a[1] * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

fn remove_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Rough glottal waveform: zero-phase (forward-backward) second-order
/// Butterworth low-pass at `cutoff_hz`, mean removed before and after.
pub fn glottal_approximation(buffer: &SampleBuffer, cutoff_hz: f64) -> Result<SampleBuffer> {
    if !(cutoff_hz > 0.0 && cutoff_hz < buffer.rate() / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz outside (0, Nyquist)"
        )));
    }
    let (b, a) = butterworth_lowpass(cutoff_hz, buffer.rate());
    let mut x = buffer.samples().to_vec();
    remove_mean(&mut x);
    let forward = biquad(&x, &b, &a);
    let mut y = reversed(&biquad(&reversed(&forward), &b, &a));
    remove_mean(&mut y);
    SampleBuffer::new(y, buffer.rate())
}

/// Sample mask of voiced frames of `f0`.
fn voiced_mask(f0: &F0Track, len: usize, rate: f64) -> Vec<bool> {
    let mut mask = vec![false; len];
    for (t, f) in f0.times.iter().zip(&f0.f0) {
        if *f > 0.0 {
            let lo = ((t - f0.hop / 2.0) * rate).round().max(0.0) as usize;
            let hi = (((t + f0.hop / 2.0) * rate).round() as usize).min(len);
            mask[lo.min(len)..hi].iter_mut().for_each(|m| *m = true);
        }
    }
    mask
}

/// Polarity from the differenced skewness of the residual and of a low-pass
/// glottal approximation, both taken over voiced samples.
pub fn detect_polarity(
    buffer: &SampleBuffer,
    method: Method,
    cfg: &PolarityConfig,
) -> Result<PolarityVerdict> {
    let f0 = estimate_f0(buffer, &cfg.pitch)?;
    let gcis = if method.needs_gcis() {
        let gci_cfg = GciConfig {
            lp: cfg.lp.clone(),
            ..GciConfig::default()
        };
        Some(detect_gci(buffer, &f0, &gci_cfg)?)
    } else {
        None
    };
    let analysis = analyze_utterance(buffer, method, &cfg.lp, gcis.as_ref(), cfg.win_ms, cfg.hop_ms)?;
    let glottal = glottal_approximation(buffer, cfg.glottal_cutoff_hz)?;

    let mut mask = voiced_mask(&f0, buffer.len(), buffer.rate());
    let voiced = mask.iter().filter(|&&m| m).count();
    if voiced == 0 {
        mask.iter_mut().for_each(|m| *m = true);
    }
    let pick = |x: &[f64]| -> Vec<f64> {
        x.iter().zip(&mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect()
    };
    let r = pick(analysis.residual.samples());
    let g = pick(glottal.samples());
    let unanalyzable = |e: Error| Error::Unanalyzable(format!("polarity: {e}"));
    let skew_residual = skewness(&r).map_err(unanalyzable)?;
    let skew_glottal = skewness(&g).map_err(unanalyzable)?;
    let differenced = skew_glottal - skew_residual;
    let voiced_seconds = voiced as f64 / buffer.rate();
    let polarity = if differenced * POLARITY_SIGN_CONVENTION < 0.0 { -1 } else { 1 };
    Ok(PolarityVerdict {
        polarity,
        differenced_skewness: differenced,
        skew_residual,
        skew_glottal,
        voiced_seconds,
        low_confidence: differenced == 0.0 || voiced_seconds < MIN_VOICED_SECONDS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Mean power over DFT bins in `[f_lo, f_hi)`, test-only naive DFT.
    fn band_power(x: &[f64], rate: f64, f_lo: f64, f_hi: f64) -> f64 {
        let n = x.len();
        let bins: Vec<usize> = (0..n / 2)
            .filter(|&k| {
                let f = k as f64 * rate / n as f64;
                f >= f_lo && f < f_hi
            })
            .collect();
        let total: f64 = bins
            .iter()
            .map(|&k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let ph = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                re * re + im * im
            })
            .sum();
        total / bins.len() as f64
    }

    #[test]
    fn lowpass_attenuates_high_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2048).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b = SampleBuffer::new(x.clone(), 8000.0).unwrap();
        let y = glottal_approximation(&b, 1000.0).unwrap();
        let before = band_power(&x, 8000.0, 1500.0, 4000.0);
        let after = band_power(y.samples(), 8000.0, 1500.0, 4000.0);
        let db = 10.0 * (after / before).log10();
        assert!(db < -20.0, "{db} dB");
        let pass_before = band_power(&x, 8000.0, 50.0, 500.0);
        let pass_after = band_power(y.samples(), 8000.0, 50.0, 500.0);
        assert!(pass_after / pass_before > 0.5);
    }

    #[test]
    fn glottal_approximation_is_odd_and_kills_dc() {
        let x: Vec<f64> = (0..500).map(|i| ((i * 37) % 11) as f64 * 0.1 - 0.3).collect();
        let b = SampleBuffer::new(x, 8000.0).unwrap();
        let y = glottal_approximation(&b, 1000.0).unwrap();
        let yn = glottal_approximation(&b.scaled(-1.0), 1000.0).unwrap();
        for (u, v) in y.samples().iter().zip(yn.samples()) {
            assert!((u + v).abs() < 1e-12);
        }
        let dc = SampleBuffer::new(vec![0.37; 400], 8000.0).unwrap();
        let z = glottal_approximation(&dc, 1000.0).unwrap();
        assert!(z.samples().iter().all(|v| v.abs() < 1e-12));
        assert!(glottal_approximation(&b, 5000.0).is_err());
    }

    #[test]
    fn silence_is_unanalyzable() {
        let b = SampleBuffer::zeros(8000, 8000.0).unwrap();
        let r = detect_polarity(&b, Method::Lp2, &PolarityConfig::default());
        assert!(matches!(r, Err(Error::Unanalyzable(_))));
    }
}
