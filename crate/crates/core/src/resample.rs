//! Band-limited resampling with a Kaiser-windowed sinc kernel.

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

const KAISER_BETA: f64 = 8.0;
/// Kernel half-width in input samples at unit ratio (32 taps per phase).
const HALF_TAPS: f64 = 16.0;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    norm: f64,
}

impl Kernel {
    /// `ratio` is output rate over input rate.
    fn new(ratio: f64) -> Self {
        let cutoff = ratio.min(1.0);
        Self {
            cutoff,
            half_width: HALF_TAPS / cutoff,
            norm: bessel_i0(KAISER_BETA),
        }
    }

    fn weight(&self, d: f64) -> f64 {
        let u = d / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / self.norm;
        self.cutoff * sinc(self.cutoff * d) * window
    }

    /// Interpolated value of `x` at fractional input position `t`.
    fn eval(&self, x: &[f64], t: f64) -> f64 {
        let lo = (t - self.half_width).ceil().max(0.0) as usize;
        let hi = ((t + self.half_width).floor() as isize).min(x.len() as isize - 1);
        if hi < lo as isize {
            return 0.0;
        }
        (lo..=hi as usize)
            .map(|k| x[k] * self.weight(t - k as f64))
            .sum()
    }
}

/// Resamples `buffer` to `target_rate`; an equal rate returns the input unchanged.
pub fn resample(buffer: &SampleBuffer, target_rate: f64) -> Result<SampleBuffer> {
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    if target_rate == buffer.rate() {
        return Ok(buffer.clone());
    }
    let ratio = target_rate / buffer.rate();
    let out_len = (buffer.len() as f64 * ratio).round() as usize;
    let kernel = Kernel::new(ratio);
    let x = buffer.samples();
    let y = (0..out_len)
        .map(|m| kernel.eval(x, m as f64 / ratio))
        .collect();
    SampleBuffer::new(y, target_rate)
}

/// Stretches or compresses `x` onto exactly `out_len` samples, output index
/// `j` reading input position `j * x.len() / out_len`.
pub fn resample_to_length(x: &[f64], out_len: usize) -> Vec<f64> {
    if out_len == 0 || x.is_empty() {
        return vec![0.0; out_len];
    }
    if out_len == x.len() {
        return x.to_vec();
    }
    let step = x.len() as f64 / out_len as f64;
    let kernel = Kernel::new(1.0 / step);
    (0..out_len).map(|j| kernel.eval(x, j as f64 * step)).collect()
}

/// Band-limited interpolation of `x` at fractional `positions`, with the
/// anti-aliasing cutoff set for an output/input rate `ratio`.
pub fn interpolate_at(x: &[f64], positions: &[f64], ratio: f64) -> Vec<f64> {
    let kernel = Kernel::new(ratio);
    positions.iter().map(|&t| kernel.eval(x, t)).collect()
}
