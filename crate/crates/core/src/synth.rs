//! Synthetic mixed-phase "speech" with known filters, excitation instants
//! and polarity.
//!
//! An impulse train at F0 goes through an anticausal two-pole glottal
//! resonance (causal filtering of the reversed train, reversed back), then
//! through a causal all-pole vocal tract. The polarity multiplies the
//! excitation and white noise may be added at a given SNR.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LpModel;
use crate::pitch::{GciSource, GciTrack};
use crate::signal::{lp_synthesis, reversed, SampleBuffer};

/// Peak amplitude of the noiseless synthetic signal.
const PEAK: f64 = 0.5;

/// Complex-conjugate pole pair given by radius and angle (as a frequency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolePair {
    pub radius: f64,
    pub freq_hz: f64,
}

impl PolePair {
    /// Second-order predictor `[2 r cos(theta), -r^2]`.
    pub fn predictor(&self, rate: f64) -> [f64; 2] {
        let theta = 2.0 * std::f64::consts::PI * self.freq_hz / rate;
        [2.0 * self.radius * theta.cos(), -self.radius * self.radius]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rate: f64,
    pub duration: f64,
    /// F0 at the start and end (linear ramp; equal for constant F0).
    pub f0_start: f64,
    pub f0_end: f64,
    /// Anticausal glottal resonance; `None` gives a causal-only signal.
    pub glottal: Option<PolePair>,
    pub tract: Vec<PolePair>,
    /// +1 or -1.
    pub polarity: i8,
    /// SNR of added white noise in dB; `None` for a noiseless signal.
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.rate > 0.0 && self.duration > 0.0) {
            return bad("rate and duration must be positive".into());
        }
        let (lo, hi) = (self.f0_start.min(self.f0_end), self.f0_start.max(self.f0_end));
        if !(lo > 0.0 && hi < self.rate / 2.0) {
            return bad(format!("invalid F0 range {lo}..{hi}"));
        }
        if self.polarity != 1 && self.polarity != -1 {
            return bad(format!("polarity must be +1 or -1, got {}", self.polarity));
        }
        let pole_ok = |p: &PolePair| p.radius > 0.0 && p.radius < 1.0 && p.freq_hz >= 0.0 && p.freq_hz <= self.rate / 2.0;
        if let Some(g) = &self.glottal {
            if !pole_ok(g) {
                return bad(format!("invalid glottal pole {g:?}"));
            }
            if g.freq_hz < lo || g.freq_hz > 3.0 * hi {
                return bad(format!(
                    "glottal formant {} Hz outside [F0, 3 F0] = [{lo}, {}]",
                    g.freq_hz,
                    3.0 * hi
                ));
            }
        }
        if let Some(p) = self.tract.iter().find(|p| !pole_ok(p)) {
            return bad(format!("invalid tract pole {p:?}"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.duration * self.rate).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Synthesized signal together with everything used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub signal: SampleBuffer,
    /// Signed, scaled impulse train driving the filters.
    pub excitation: SampleBuffer,
    pub gcis: GciTrack,
    pub causal_filter: LpModel,
    /// Glottal predictor in reversed time (identity of order 0 if absent).
    pub anticausal_filter: LpModel,
    pub polarity: i8,
}

/// Serializable description of a [`SynthTruth`] (signals excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub spec: SynthSpec,
    pub gci_times: Vec<f64>,
    pub causal_filter: LpModel,
    pub anticausal_filter: LpModel,
    pub polarity: i8,
    pub excitation_gain: f64,
}

impl SynthTruth {
    pub fn record(&self) -> TruthRecord {
        let gain = self
            .excitation
            .samples()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        TruthRecord {
            spec: self.spec.clone(),
            gci_times: self.gcis.instants().to_vec(),
            causal_filter: self.causal_filter.clone(),
            anticausal_filter: self.anticausal_filter.clone(),
            polarity: self.polarity,
            excitation_gain: gain,
        }
    }
}

fn expand_pairs(pairs: &[PolePair], rate: f64) -> Vec<f64> {
    // Multiply (1 - c1 z^-1 - c2 z^-2) factors as polynomials in z^-1.
    let mut poly = vec![1.0];
    for p in pairs {
        let [c1, c2] = p.predictor(rate);
        let mut next = vec![0.0; poly.len() + 2];
        for (i, v) in poly.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * c1;
            next[i + 2] -= v * c2;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

/// Impulse positions for a linear F0 ramp; the first pulse sits half a
/// period in.
fn pulse_positions(spec: &SynthSpec) -> Vec<usize> {
    let n = spec.len();
    let mut positions = Vec::new();
    let mut phase = 0.5;
    for i in 0..n {
        let f = spec.f0_start + (spec.f0_end - spec.f0_start) * i as f64 / n.max(1) as f64;
        phase += f / spec.rate;
        if phase >= 1.0 {
            phase -= 1.0;
            positions.push(i);
        }
    }
    positions
}

pub fn synthesize(spec: &SynthSpec) -> Result<SynthTruth> {
    spec.validate()?;
    let n = spec.len();
    let positions = pulse_positions(spec);
    let mut excitation = vec![0.0; n];
    for &p in &positions {
        excitation[p] = spec.polarity as f64;
    }

    let glottal_coeffs = spec
        .glottal
        .map(|g| g.predictor(spec.rate).to_vec())
        .unwrap_or_default();
    let glottal = if glottal_coeffs.is_empty() {
        excitation.clone()
    } else {
        reversed(&lp_synthesis(&reversed(&excitation), &glottal_coeffs)?)
    };
    let tract_coeffs = expand_pairs(&spec.tract, spec.rate);
    let mut signal = lp_synthesis(&glottal, &tract_coeffs)?;

    let peak = signal.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let gain = if peak > 0.0 { PEAK / peak } else { 1.0 };
    signal.iter_mut().for_each(|v| *v *= gain);
    excitation.iter_mut().for_each(|v| *v *= gain);

    if let Some(snr) = spec.noise_snr_db {
        let rms = (signal.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
        let sigma = rms * 10f64.powf(-snr / 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in signal.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * z;
        }
    }

    Ok(SynthTruth {
        spec: spec.clone(),
        signal: SampleBuffer::new(signal, spec.rate)?,
        excitation: SampleBuffer::new(excitation, spec.rate)?,
        gcis: GciTrack::from_samples(&positions, spec.rate, GciSource::External)?,
        causal_filter: LpModel::new(tract_coeffs, 0.0)?,
        anticausal_filter: LpModel::new(glottal_coeffs, 0.0)?,
        polarity: spec.polarity,
    })
}

/// Sampling ranges for [`make_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRanges {
    pub rate: f64,
    pub duration: f64,
    pub f0: (f64, f64),
    /// Glottal formant as a multiple of F0.
    pub fg_ratio: (f64, f64),
    pub glottal_radius: (f64, f64),
    pub tract_pairs: (usize, usize),
    /// One frequency band per formant, in order; the first `k` are used.
    pub formant_bands: Vec<(f64, f64)>,
    pub formant_bandwidth: (f64, f64),
    /// `None` gives noiseless utterances.
    pub snr_db: Option<(f64, f64)>,
}

impl Default for CorpusRanges {
    fn default() -> Self {
        Self {
            rate: 8000.0,
            duration: 1.0,
            f0: (80.0, 250.0),
            fg_ratio: (1.0, 3.0),
            glottal_radius: (0.88, 0.96),
            tract_pairs: (2, 4),
            formant_bands: vec![
                (300.0, 900.0),
                (900.0, 2000.0),
                (2000.0, 3000.0),
                (3000.0, 3700.0),
            ],
            formant_bandwidth: (60.0, 200.0),
            snr_db: Some((30.0, 60.0)),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Seed of utterance `index` in a corpus seeded with `seed`.
pub fn utterance_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Draws the spec of utterance `index`. Polarity alternates, starting at +1.
pub fn corpus_spec(ranges: &CorpusRanges, seed: u64, index: usize) -> SynthSpec {
    let useed = utterance_seed(seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(useed);
    let f0 = uniform(&mut rng, ranges.f0);
    let fg = f0 * uniform(&mut rng, ranges.fg_ratio);
    let glottal = PolePair {
        radius: uniform(&mut rng, ranges.glottal_radius),
        freq_hz: fg,
    };
    let count = rng.random_range(ranges.tract_pairs.0..=ranges.tract_pairs.1);
    let tract = ranges.formant_bands[..count.min(ranges.formant_bands.len())]
        .iter()
        .map(|&band| {
            let freq_hz = uniform(&mut rng, band);
            let bw = uniform(&mut rng, ranges.formant_bandwidth);
            PolePair {
                radius: (-std::f64::consts::PI * bw / ranges.rate).exp(),
                freq_hz,
            }
        })
        .collect();
    let noise_snr_db = ranges.snr_db.map(|r| uniform(&mut rng, r));
    SynthSpec {
        rate: ranges.rate,
        duration: ranges.duration,
        f0_start: f0,
        f0_end: f0,
        glottal: Some(glottal),
        tract,
        polarity: if index.is_multiple_of(2) { 1 } else { -1 },
        noise_snr_db,
        seed: useed,
    }
}

/// `n` reproducible utterances drawn from `ranges`.
pub fn make_corpus(n: usize, ranges: &CorpusRanges, seed: u64) -> Result<Vec<SynthTruth>> {
    if n == 0 {
        return Err(Error::InvalidArgument("corpus size must be at least 1".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| synthesize(&corpus_spec(ranges, seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{polynomial_roots, wlp2_analyze, WeightVector};
    use crate::signal::lp_inverse;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            rate: 8000.0,
            duration: 0.5,
            f0_start: 120.0,
            f0_end: 120.0,
            glottal: Some(PolePair { radius: 0.93, freq_hz: 200.0 }),
            tract: vec![
                PolePair { radius: 0.95, freq_hz: 600.0 },
                PolePair { radius: 0.96, freq_hz: 1500.0 },
            ],
            polarity: 1,
            noise_snr_db: None,
            seed: 1,
        }
    }

    #[test]
    fn validation() {
        assert!(base_spec().validate().is_ok());
        let mut s = base_spec();
        s.glottal = Some(PolePair { radius: 0.9, freq_hz: 50.0 });
        assert!(matches!(synthesize(&s), Err(Error::Validation(_))));
        let mut s = base_spec();
        s.tract[0].radius = 1.0;
        assert!(s.validate().is_err());
        let mut s = base_spec();
        s.polarity = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn causal_only_residual_is_impulse_train() {
        let mut s = base_spec();
        s.glottal = None;
        let t = synthesize(&s).unwrap();
        let x = t.signal.samples();
        let r = lp_inverse(x, t.causal_filter.coefficients());
        for (a, b) in r.iter().zip(t.excitation.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        // A matched-order covariance fit between two pulses is exact, so its
        // residual over the whole signal is the impulse train.
        let order = t.causal_filter.order();
        let p = t.gcis.sample_indices(s.rate);
        let stretch = &x[p[0] + 1 - order..p[1]];
        let m = wlp2_analyze(stretch, order, &WeightVector::ones(stretch.len())).unwrap();
        let r = lp_inverse(x, m.coefficients());
        let peak = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let pulses: std::collections::HashSet<usize> = p.into_iter().collect();
        for (n, v) in r.iter().enumerate() {
            if !pulses.contains(&n) {
                assert!(v.abs() < 1e-6 * peak, "sample {n}: {v}");
            }
        }
    }

    #[test]
    fn deterministic_with_seed() {
        let mut s = base_spec();
        s.noise_snr_db = Some(35.0);
        assert_eq!(synthesize(&s).unwrap(), synthesize(&s).unwrap());
        let mut other = s.clone();
        other.seed = 2;
        assert_ne!(synthesize(&s).unwrap().signal, synthesize(&other).unwrap().signal);
    }

    #[test]
    fn glottal_part_is_reversed_causal_filtering() {
        let mut s = base_spec();
        s.tract.clear();
        let t = synthesize(&s).unwrap();
        let rev_train = reversed(t.excitation.samples());
        let causal = lp_synthesis(&rev_train, t.anticausal_filter.coefficients()).unwrap();
        let rev_signal = reversed(t.signal.samples());
        for (a, b) in rev_signal.iter().zip(&causal) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gci_spacing_matches_f0() {
        let t = synthesize(&base_spec()).unwrap();
        let idx = t.gcis.sample_indices(8000.0);
        for w in idx.windows(2) {
            let d = (w[1] - w[0]) as f64;
            assert!((d - 8000.0 / 120.0).abs() <= 1.0);
        }
    }

    #[test]
    fn corpus_properties() {
        let ranges = CorpusRanges::default();
        let a = make_corpus(12, &ranges, 99).unwrap();
        let b = make_corpus(12, &ranges, 99).unwrap();
        assert_eq!(a, b);
        let positive = a.iter().filter(|t| t.polarity == 1).count();
        assert_eq!(positive, 6);
        for t in &a {
            let g = t.spec.glottal.unwrap();
            assert!(g.radius < 1.0);
            assert!(g.freq_hz >= t.spec.f0_start && g.freq_hz <= 3.0 * t.spec.f0_start);
            let report = polynomial_roots(&t.anticausal_filter);
            assert!(report.max_modulus < 1.0);
            assert!((2..=4).contains(&t.spec.tract.len()));
        }
        assert!(make_corpus(0, &ranges, 1).is_err());
    }
}
