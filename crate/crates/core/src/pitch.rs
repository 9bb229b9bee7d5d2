//! Lightweight F0 tracking and glottal closure instant (GCI) detection,
//! plus the plain-text GCI file format.
//!
//! F0 comes from a normalized autocorrelation peak search; GCIs are the
//! strongest LP residual extrema, one per local pitch period.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxp::{analyze_utterance, MaxPConfig, Method};
use crate::signal::SampleBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub min_f0: f64,
    pub max_f0: f64,
    /// Minimum normalized autocorrelation peak for a voiced decision.
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            frame_ms: 40.0,
            hop_ms: 10.0,
            min_f0: 50.0,
            max_f0: 500.0,
            voicing_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Track {
    /// Frame center times in seconds.
    pub times: Vec<f64>,
    /// Hz, 0 for unvoiced frames.
    pub f0: Vec<f64>,
    /// Seconds between frames.
    pub hop: f64,
}

impl F0Track {
    /// F0 of the frame whose center is nearest to `t` (0 when empty).
    pub fn at(&self, t: f64) -> f64 {
        if self.times.is_empty() {
            return 0.0;
        }
        let first = self.times[0];
        let i = ((t - first) / self.hop).round().clamp(0.0, (self.times.len() - 1) as f64);
        self.f0[i as usize]
    }

    pub fn voiced_count(&self) -> usize {
        self.f0.iter().filter(|&&f| f > 0.0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,f0\n");
        for (t, f) in self.times.iter().zip(&self.f0) {
            let _ = writeln!(s, "{t:.6},{f:.3}");
        }
        s
    }
}

/// Normalized autocorrelation at `lag` over the overlapping part of `x`.
fn nacf(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i], x[i + lag]);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        0.0
    } else {
        xy / (xx * yy).sqrt()
    }
}

fn frame_f0(x: &[f64], rate: f64, cfg: &PitchConfig) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let min_lag = (rate / cfg.max_f0).floor().max(1.0) as usize;
    let max_lag = ((rate / cfg.min_f0).ceil() as usize).min(x.len().saturating_sub(2));
    if max_lag <= min_lag + 1 {
        return 0.0;
    }
    let r: Vec<f64> = (min_lag - 1..=max_lag + 1).map(|l| nacf(&x, l)).collect();
    // r[i] is the lag min_lag - 1 + i
    let peaks: Vec<usize> = (1..r.len() - 1)
        .filter(|&i| r[i] > 0.0 && r[i] >= r[i - 1] && r[i] >= r[i + 1])
        .collect();
    let Some(best) = peaks.iter().map(|&i| r[i]).reduce(f64::max) else {
        return 0.0;
    };
    if best < cfg.voicing_threshold {
        return 0.0;
    }
    // Earliest peak close to the best one, which avoids period doubling.
    let i = *peaks.iter().find(|&&i| r[i] >= 0.9 * best).expect("best is a peak");
    let (l, c, h) = (r[i - 1], r[i], r[i + 1]);
    let denom = l - 2.0 * c + h;
    let shift = if denom.abs() > 1e-12 {
        (0.5 * (l - h) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (min_lag - 1 + i) as f64 + shift;
    let f0 = rate / lag;
    if (cfg.min_f0..=cfg.max_f0).contains(&f0) {
        f0
    } else {
        0.0
    }
}

/// Per-frame F0 estimate. Requires a sample rate of at least 8 kHz.
pub fn estimate_f0(buffer: &SampleBuffer, cfg: &PitchConfig) -> Result<F0Track> {
    if buffer.rate() < 8000.0 {
        return Err(Error::InvalidArgument(format!(
            "F0 estimation needs at least 8 kHz, got {}",
            buffer.rate()
        )));
    }
    let len = (cfg.frame_ms * 1e-3 * buffer.rate()).round() as usize;
    let hop = (cfg.hop_ms * 1e-3 * buffer.rate()).round() as usize;
    if len == 0 || hop == 0 {
        return Err(Error::InvalidArgument("pitch frame or hop is zero".into()));
    }
    let x = buffer.samples();
    let starts: Vec<usize> = if x.len() < len {
        Vec::new()
    } else {
        (0..=(x.len() - len) / hop).map(|i| i * hop).collect()
    };
    let f0 = starts
        .par_iter()
        .map(|&s| frame_f0(&x[s..s + len], buffer.rate(), cfg))
        .collect();
    let times = starts
        .iter()
        .map(|&s| (s as f64 + len as f64 / 2.0) / buffer.rate())
        .collect();
    Ok(F0Track {
        times,
        f0,
        hop: hop as f64 / buffer.rate(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GciSource {
    Detected,
    External,
}

/// Strictly increasing glottal closure instants, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GciTrack {
    instants: Vec<f64>,
    source: GciSource,
}

impl GciTrack {
    pub fn new(instants: Vec<f64>, source: GciSource) -> Result<Self> {
        if let Some(i) = instants.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Validation(format!("invalid GCI time at position {i}")));
        }
        if let Some(i) = instants.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "GCI times not strictly increasing at position {}",
                i + 1
            )));
        }
        Ok(Self { instants, source })
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn source(&self) -> GciSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn sample_indices(&self, rate: f64) -> Vec<usize> {
        self.instants.iter().map(|t| (t * rate).round() as usize).collect()
    }

    pub fn from_samples(indices: &[usize], rate: f64, source: GciSource) -> Result<Self> {
        Self::new(indices.iter().map(|&i| i as f64 / rate).collect(), source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GciConfig {
    /// Residual analysis settings (order, etc.). Only the l2 path is used.
    pub lp: MaxPConfig,
    pub win_ms: f64,
    pub hop_ms: f64,
    /// Minimum spacing between consecutive instants, as a fraction of the
    /// local period.
    pub min_spacing: f64,
    /// End of the search window after an instant, as a fraction of the
    /// local period.
    pub max_spacing: f64,
}

impl Default for GciConfig {
    fn default() -> Self {
        Self {
            lp: MaxPConfig::default(),
            win_ms: 25.0,
            hop_ms: 5.0,
            min_spacing: 0.8,
            max_spacing: 1.2,
        }
    }
}

fn argmax_abs(r: &[f64], lo: usize, hi: usize) -> Option<usize> {
    (lo..hi).max_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()).then(j.cmp(&i)))
}

/// Picks one LP residual extremum (either sign) per local pitch period in
/// every voiced region of `f0`.
pub fn detect_gci(buffer: &SampleBuffer, f0: &F0Track, cfg: &GciConfig) -> Result<GciTrack> {
    let rate = buffer.rate();
    if f0.voiced_count() == 0 || buffer.is_empty() {
        return GciTrack::new(Vec::new(), GciSource::Detected);
    }
    let residual = analyze_utterance(buffer, Method::Lp2, &cfg.lp, None, cfg.win_ms, cfg.hop_ms)?
        .residual
        .into_samples();
    let n = residual.len();

    // Voiced regions in samples, from runs of voiced frames.
    let mut regions = Vec::new();
    let mut i = 0;
    while i < f0.f0.len() {
        if f0.f0[i] > 0.0 {
            let j = (i..f0.f0.len()).find(|&j| f0.f0[j] == 0.0).unwrap_or(f0.f0.len());
            let t0 = f0.times[i] - f0.hop / 2.0;
            let t1 = f0.times[j - 1] + f0.hop / 2.0;
            let s0 = (t0 * rate).round().max(0.0) as usize;
            let s1 = ((t1 * rate).round() as usize).min(n);
            if s1 > s0 {
                regions.push((s0, s1));
            }
            i = j;
        } else {
            i += 1;
        }
    }
    // Stretch the first and last regions to the buffer ends when they reach
    // the outermost frames, whose centers sit half a frame inside.
    if let Some(first) = regions.first_mut() {
        if f0.f0[0] > 0.0 {
            first.0 = 0;
        }
    }
    if let Some(last) = regions.last_mut() {
        if f0.f0.last().is_some_and(|&v| v > 0.0) {
            last.1 = n;
        }
    }

    let period_at = |s: usize| {
        let f = f0.at(s as f64 / rate);
        let f = if f > 0.0 { f } else { 100.0 };
        rate / f
    };

    let mut picks: Vec<usize> = Vec::new();
    for (s0, s1) in regions {
        let mut lo = s0;
        if let Some(&last) = picks.last() {
            lo = lo.max(last + (cfg.min_spacing * period_at(last)).ceil() as usize);
        }
        if lo >= s1 {
            continue;
        }
        let first_hi = (lo + period_at(lo).ceil() as usize).min(s1);
        let Some(mut prev) = argmax_abs(&residual, lo, first_hi) else { continue };
        picks.push(prev);
        loop {
            let t = period_at(prev);
            let lo = prev + (cfg.min_spacing * t).ceil() as usize;
            let hi = (prev + (cfg.max_spacing * t).floor() as usize + 1).min(s1);
            if lo >= hi {
                break;
            }
            match argmax_abs(&residual, lo, hi) {
                Some(p) => {
                    picks.push(p);
                    prev = p;
                }
                None => break,
            }
        }
    }
    GciTrack::from_samples(&picks, rate, GciSource::Detected)
}

/// One instant per line, seconds with six decimals.
pub fn format_gci(track: &GciTrack) -> String {
    let mut s = String::new();
    for t in track.instants() {
        let _ = writeln!(s, "{t:.6}");
    }
    s
}

pub fn parse_gci(text: &str, path: &Path) -> Result<GciTrack> {
    let mut instants = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("not a time in seconds: {line:?}"),
        })?;
        instants.push(t);
    }
    GciTrack::new(instants, GciSource::External)
}

pub fn read_gci_file(path: impl AsRef<Path>) -> Result<GciTrack> {
    let path = path.as_ref();
    parse_gci(&std::fs::read_to_string(path)?, path)
}

pub fn write_gci_file(track: &GciTrack, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_gci(track))?;
    Ok(())
}
