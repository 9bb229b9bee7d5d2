//! Signal containers and the filtering, framing and reversal primitives
//! shared by every analysis stage.
//!
//! All filters run from a zero initial state. Frames are analyzed
//! independently, so no filter memory is carried between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LpModel;

/// Output magnitude above which all-pole synthesis is declared unstable.
pub const SYNTHESIS_OVERFLOW_LIMIT: f64 = 1e12;

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    rate: f64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { samples, rate })
    }

    pub fn zeros(len: usize, rate: f64) -> Result<Self> {
        Self::new(vec![0.0; len], rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Same rate, new content. Used by operations whose output is finite
    /// whenever their input is.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            rate: self.rate,
        }
    }

    /// Contiguous sub-range `[start, end)` as a new buffer.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        self.with_samples(self.samples[start..end].to_vec())
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.with_samples(self.samples.iter().map(|v| v * gain).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hanning,
    Rectangular,
}

impl WindowKind {
    /// Window coefficients of length `len`.
    ///
    /// The Hanning window is the symmetric form without zero end points,
    /// `w(i) = 0.5 - 0.5 cos(2 pi (i + 1) / (len + 1))`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hanning => hanning(len),
        }
    }
}

pub fn hanning(len: usize) -> Vec<f64> {
    let denom = (len + 1) as f64;
    // computed on the first half and mirrored so the window is exactly symmetric
    let mut w: Vec<f64> = (0..len.div_ceil(2))
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i + 1) as f64 / denom).cos())
        .collect();
    let mirror: Vec<f64> = w[..len / 2].iter().rev().copied().collect();
    w.extend(mirror);
    w
}

/// A windowed excerpt of a [`SampleBuffer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    samples: Vec<f64>,
    start_index: usize,
    window_kind: WindowKind,
    rate: f64,
}

impl Frame {
    /// Wraps samples that already carry `window_kind`.
    pub fn new(samples: Vec<f64>, start_index: usize, window_kind: WindowKind, rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("frame must not be empty".into()));
        }
        if !(rate > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid rate {rate}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite frame sample".into()));
        }
        Ok(Self {
            samples,
            start_index,
            window_kind,
            rate,
        })
    }

    /// Unwindowed frame over the whole buffer.
    pub fn whole(buffer: &SampleBuffer) -> Result<Self> {
        Self::new(buffer.samples().to_vec(), 0, WindowKind::Rectangular, buffer.rate())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn window_kind(&self) -> WindowKind {
        self.window_kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_buffer(&self) -> SampleBuffer {
        SampleBuffer {
            samples: self.samples.clone(),
            rate: self.rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            ..self.clone()
        }
    }
}

/// Frame grid: window length and hop in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    pub length: usize,
    pub hop: usize,
}

impl FrameGrid {
    pub fn from_ms(win_ms: f64, hop_ms: f64, rate: f64) -> Result<Self> {
        if !(win_ms > 0.0 && hop_ms > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "window and hop must be positive, got {win_ms} ms / {hop_ms} ms"
            )));
        }
        let length = (win_ms * 1e-3 * rate).round() as usize;
        let hop = (hop_ms * 1e-3 * rate).round() as usize;
        if length == 0 || hop == 0 {
            return Err(Error::InvalidArgument(
                "window or hop rounds to zero samples".into(),
            ));
        }
        Ok(Self { length, hop })
    }

    /// Number of complete frames that fit in `len` samples.
    pub fn count(&self, len: usize) -> usize {
        if len < self.length {
            0
        } else {
            (len - self.length) / self.hop + 1
        }
    }

    pub fn starts(&self, len: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.count(len)).map(move |i| i * self.hop)
    }
}

/// Result of [`frame_signal`].
#[derive(Debug, Clone)]
pub struct Framing {
    pub frames: Vec<Frame>,
    pub grid: FrameGrid,
    /// Set when the buffer was shorter than one window.
    pub too_short: bool,
}

/// Cuts `buffer` into overlapping windowed frames. A trailing partial window
/// is dropped.
pub fn frame_signal(
    buffer: &SampleBuffer,
    win_ms: f64,
    hop_ms: f64,
    window_kind: WindowKind,
) -> Result<Framing> {
    let grid = FrameGrid::from_ms(win_ms, hop_ms, buffer.rate())?;
    let window = window_kind.coefficients(grid.length);
    let frames = grid
        .starts(buffer.len())
        .map(|start| Frame {
            samples: buffer.samples()[start..start + grid.length]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect(),
            start_index: start,
            window_kind,
            rate: buffer.rate(),
        })
        .collect();
    Ok(Framing {
        frames,
        grid,
        too_short: buffer.len() < grid.length,
    })
}

/// Preemphasis filter `1 + alpha z^-1`.
///
/// With this convention `alpha = -1` is the first-order differencer and
/// negative values attenuate low frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreemphasisSpec {
    alpha: f64,
}

impl PreemphasisSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(-1.0..=0.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "preemphasis alpha must lie in [-1, 0], got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `y(n) = x(n) + alpha x(n-1)` with `x(-1) = 0`.
pub fn preemphasis(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut prev = 0.0;
    x.iter()
        .map(|&v| {
            let y = v + alpha * prev;
            prev = v;
            y
        })
        .collect()
}

pub fn preemphasize(buffer: &SampleBuffer, spec: PreemphasisSpec) -> SampleBuffer {
    buffer.with_samples(preemphasis(buffer.samples(), spec.alpha()))
}

/// FIR analysis filter `A(z) = 1 - sum a_k z^-k` from zero state.
pub fn lp_inverse(x: &[f64], coefficients: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            let prediction: f64 = coefficients
                .iter()
                .enumerate()
                .take(n)
                .map(|(k, a)| a * x[n - k - 1])
                .sum();
            x[n] - prediction
        })
        .collect()
}

/// All-pole filter `1 / A(z)` from zero state. Fails if the output exceeds
/// [`SYNTHESIS_OVERFLOW_LIMIT`].
pub fn lp_synthesis(excitation: &[f64], coefficients: &[f64]) -> Result<Vec<f64>> {
    let mut y = Vec::with_capacity(excitation.len());
    for (n, e) in excitation.iter().enumerate() {
        let feedback: f64 = coefficients
            .iter()
            .enumerate()
            .take(n)
            .map(|(k, a)| a * y[n - k - 1])
            .sum();
        let v = e + feedback;
        if !(v.abs() <= SYNTHESIS_OVERFLOW_LIMIT) {
            return Err(Error::Unstable {
                index: n,
                limit: SYNTHESIS_OVERFLOW_LIMIT,
            });
        }
        y.push(v);
    }
    Ok(y)
}

pub fn inverse_filter(signal: &SampleBuffer, model: &LpModel) -> SampleBuffer {
    signal.with_samples(lp_inverse(signal.samples(), model.coefficients()))
}

pub fn synthesis_filter(excitation: &SampleBuffer, model: &LpModel) -> Result<SampleBuffer> {
    Ok(excitation.with_samples(lp_synthesis(excitation.samples(), model.coefficients())?))
}

pub fn time_reverse(buffer: &SampleBuffer) -> SampleBuffer {
    buffer.with_samples(reversed(buffer.samples()))
}

pub(crate) fn reversed(x: &[f64]) -> Vec<f64> {
    x.iter().rev().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(x: &[f64]) -> SampleBuffer {
        SampleBuffer::new(x.to_vec(), 8000.0).unwrap()
    }

    #[test]
    fn buffer_rejects_bad_rate_and_nan() {
        assert!(SampleBuffer::new(vec![0.0], 0.0).is_err());
        assert!(SampleBuffer::new(vec![f64::NAN], 8000.0).is_err());
        assert!(SampleBuffer::new(vec![], 8000.0).is_ok());
    }

    #[test]
    fn framing_at_8khz() {
        let b = SampleBuffer::zeros(8000, 8000.0).unwrap();
        let f = frame_signal(&b, 25.0, 5.0, WindowKind::Hanning).unwrap();
        assert_eq!(f.grid, FrameGrid { length: 200, hop: 40 });
        assert_eq!(f.frames.len(), (8000 - 200) / 40 + 1);
        assert_eq!(f.frames.len(), 196);
        assert!(!f.too_short);
        for (i, fr) in f.frames.iter().enumerate() {
            assert_eq!(fr.start_index(), i * 40);
            assert!(fr.start_index() + fr.len() <= 8000);
        }
    }

    #[test]
    fn short_buffer_gives_flagged_empty_framing() {
        let b = SampleBuffer::zeros(100, 8000.0).unwrap();
        let f = frame_signal(&b, 25.0, 5.0, WindowKind::Hanning).unwrap();
        assert!(f.frames.is_empty());
        assert!(f.too_short);
        assert!(frame_signal(&b, 0.0, 5.0, WindowKind::Hanning).is_err());
    }

    #[test]
    fn hanning_is_symmetric() {
        for len in [1, 2, 7, 200, 201] {
            let w = hanning(len);
            for i in 0..len {
                assert_eq!(w[i], w[len - 1 - i]);
            }
        }
        let b = SampleBuffer::new(vec![1.0; 400], 8000.0).unwrap();
        let f = frame_signal(&b, 25.0, 5.0, WindowKind::Hanning).unwrap();
        let s = f.frames[0].samples();
        for i in 0..s.len() {
            assert!((s[i] - s[s.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn preemphasis_examples() {
        assert_eq!(preemphasis(&[1.0, 0.0, 0.0], -1.0), vec![1.0, -1.0, 0.0]);
        let y = preemphasis(&[1.0, 1.0], -0.7);
        assert_eq!(y[0], 1.0);
        assert!((y[1] - 0.3).abs() < 1e-15);
        let dc = preemphasis(&[0.4; 10], -1.0);
        assert!(dc[1..].iter().all(|&v| v == 0.0));
        assert!(PreemphasisSpec::new(0.5).is_err());
        assert!(PreemphasisSpec::new(-1.2).is_err());
    }

    #[test]
    fn inverse_filter_identity_and_impulse() {
        let x = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(lp_inverse(&x, &[0.0, 0.0]), x.to_vec());
        let a = [1.2, -0.6, 0.1];
        let mut imp = vec![0.0; 64];
        imp[0] = 1.0;
        let h = lp_synthesis(&imp, &a).unwrap();
        let r = lp_inverse(&h, &a);
        assert!((r[0] - 1.0).abs() < 1e-10);
        assert!(r[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn synthesis_examples() {
        assert!(lp_synthesis(&[0.0; 16], &[0.9]).unwrap().iter().all(|&v| v == 0.0));
        let y = lp_synthesis(&[1.0, 0.0, 0.0, 0.0], &[0.5]).unwrap();
        assert_eq!(y, vec![1.0, 0.5, 0.25, 0.125]);
        let mut e = vec![0.0; 2000];
        e[0] = 1.0;
        assert!(matches!(
            lp_synthesis(&e, &[1.5]),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn time_reverse_examples() {
        let b = buf(&[1.0, 2.0, 3.0]);
        assert_eq!(time_reverse(&b).samples(), &[3.0, 2.0, 1.0]);
        assert_eq!(time_reverse(&time_reverse(&b)), b);
    }

    proptest! {
        #[test]
        fn preemphasis_is_linear(
            x in proptest::collection::vec(-1.0f64..1.0, 1..64),
            seed in proptest::collection::vec(-1.0f64..1.0, 64),
            a in -3.0f64..3.0, b in -3.0f64..3.0, alpha in -1.0f64..=0.0,
        ) {
            let y: Vec<f64> = seed[..x.len()].to_vec();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = preemphasis(&mix, alpha);
            let px = preemphasis(&x, alpha);
            let py = preemphasis(&y, alpha);
            for i in 0..x.len() {
                prop_assert!((lhs[i] - (a * px[i] + b * py[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn synthesis_then_inverse_round_trips(
            e in proptest::collection::vec(-1.0f64..1.0, 1..256),
            radii in proptest::collection::vec(0.0f64..0.95, 1..=10),
            angles in proptest::collection::vec(0.0f64..std::f64::consts::PI, 10),
        ) {
            // Stable polynomial from conjugate root pairs, order <= 20.
            let mut poly = vec![1.0];
            for (r, th) in radii.iter().zip(&angles) {
                let c1 = -2.0 * r * th.cos();
                let c2 = r * r;
                let mut next = vec![0.0; poly.len() + 2];
                for (i, p) in poly.iter().enumerate() {
                    next[i] += p;
                    next[i + 1] += p * c1;
                    next[i + 2] += p * c2;
                }
                poly = next;
            }
            let a: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
            let y = lp_synthesis(&e, &a).unwrap();
            let back = lp_inverse(&y, &a);
            for (u, v) in back.iter().zip(&e) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }

        #[test]
        fn framing_follows_hop_grid(len in 0usize..3000, win in 1.0f64..40.0, hop in 1.0f64..20.0) {
            let b = SampleBuffer::zeros(len, 8000.0).unwrap();
            let f = frame_signal(&b, win, hop, WindowKind::Rectangular).unwrap();
            for (i, fr) in f.frames.iter().enumerate() {
                prop_assert_eq!(fr.start_index(), i * f.grid.hop);
                prop_assert_eq!(fr.len(), f.grid.length);
                prop_assert!(fr.start_index() + fr.len() <= len);
            }
            prop_assert_eq!(f.frames.len(), f.grid.count(len));
        }
    }
}
