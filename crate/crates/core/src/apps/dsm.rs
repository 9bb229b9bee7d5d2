use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitch::{F0Track, GciTrack};
use crate::resample::interpolate_at;
use crate::signal::{hanning, SampleBuffer};

pub const DEFAULT_NORM_LENGTH: usize = 64;

/// GCI-synchronous residual frames, each resampled to `norm_length` samples
/// with unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFrames {
    pub norm_length: usize,
    pub rows: Vec<Vec<f64>>,
    /// Sample index of the GCI behind each row.
    pub centers: Vec<usize>,
    /// Set when fewer than two frames could be extracted.
    pub insufficient: bool,
}

impl ResidualFrames {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends the rows of `other`; lengths must match.
    pub fn extend(&mut self, other: ResidualFrames) -> Result<()> {
        if other.norm_length != self.norm_length {
            return Err(Error::InvalidArgument("frame lengths differ".into()));
        }
        self.rows.extend(other.rows);
        self.centers.extend(other.centers);
        self.insufficient = self.rows.len() < 2;
        Ok(())
    }
}

/// Local period in samples at GCI `k`: from the F0 track when voiced,
/// otherwise from the spacing to the neighbouring instants.
fn local_period(idx: &[usize], k: usize, f0: &F0Track, rate: f64) -> Option<usize> {
    let f = f0.at(idx[k] as f64 / rate);
    if f > 0.0 {
        return Some((rate / f).round() as usize);
    }
    let mut gaps = Vec::new();
    if k > 0 {
        gaps.push(idx[k] - idx[k - 1]);
    }
    if k + 1 < idx.len() {
        gaps.push(idx[k + 1] - idx[k]);
    }
    if gaps.is_empty() {
        None
    } else {
        Some(gaps.iter().sum::<usize>() / gaps.len())
    }
}

/// Windows two local periods of `residual` around every GCI with a Hanning
/// window, resamples them to `norm_length` and normalizes to unit energy.
/// GCIs whose window would overrun the buffer are skipped.
pub fn extract_residual_frames(
    residual: &SampleBuffer,
    gcis: &GciTrack,
    f0: &F0Track,
    norm_length: usize,
) -> Result<ResidualFrames> {
    if norm_length < 32 || !norm_length.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "normalized length must be even and at least 32, got {norm_length}"
        )));
    }
    let rate = residual.rate();
    let x = residual.samples();
    let idx = gcis.sample_indices(rate);
    let extracted: Vec<(usize, Vec<f64>)> = (0..idx.len())
        .into_par_iter()
        .filter_map(|k| {
            let g = idx[k];
            let t = local_period(&idx, k, f0, rate)?;
            if t < 2 || g < t || g + t >= x.len() {
                return None;
            }
            let w = hanning(2 * t + 1);
            let seg: Vec<f64> = x[g - t..=g + t].iter().zip(&w).map(|(a, b)| a * b).collect();
            let step = 2.0 * t as f64 / norm_length as f64;
            let half = (norm_length / 2) as f64;
            let positions: Vec<f64> = (0..norm_length)
                .map(|j| t as f64 + (j as f64 - half) * step)
                .collect();
            let mut row = interpolate_at(&seg, &positions, 1.0 / step);
            let energy = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(energy > 0.0) {
                return None;
            }
            row.iter_mut().for_each(|v| *v /= energy);
            Some((g, row))
        })
        .collect();
    let (centers, rows): (Vec<_>, Vec<_>) = extracted.into_iter().unzip();
    Ok(ResidualFrames {
        norm_length,
        insufficient: rows.len() < 2,
        rows,
        centers,
    })
}

/// Eigen-decomposition of the frames' second-moment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenModel {
    pub frame_length: usize,
    pub frame_count: usize,
    /// Descending, nonnegative.
    pub eigenvalues: Vec<f64>,
    /// One unit vector per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub cumulative_variance: Vec<f64>,
}

impl EigenModel {
    pub fn first(&self) -> &[f64] {
        &self.eigenvectors[0]
    }

    /// Smallest number of eigenvectors whose cumulative variance reaches
    /// `fraction`.
    pub fn components_for(&self, fraction: f64) -> usize {
        self.cumulative_variance
            .iter()
            .position(|&c| c >= fraction - 1e-12)
            .map_or(self.cumulative_variance.len(), |i| i + 1)
    }

    /// One eigenvector per line, in eigenvalue order.
    pub fn eigenvectors_csv(&self) -> String {
        let mut s = String::new();
        for v in &self.eigenvectors {
            let line: Vec<String> = v.iter().map(|c| format!("{c:.9}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// PCA without mean subtraction: eigenvectors of `F^T F / M` sorted by
/// decreasing eigenvalue, each flipped so its largest-magnitude entry is
/// positive.
pub fn pca(frames: &[Vec<f64>]) -> Result<EigenModel> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let n = frames[0].len();
    if n == 0 || frames.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("frames must share a nonzero length".into()));
    }
    let m = frames.len();
    let f = DMatrix::from_fn(m, n, |i, j| frames[i][j]);
    let c = (f.transpose() * &f) / m as f64;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let peak = v
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            if peak < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            v
        })
        .collect();
    let total: f64 = eigenvalues.iter().sum();
    let mut acc = 0.0;
    let cumulative_variance = eigenvalues
        .iter()
        .map(|l| {
            acc += l;
            if total > 0.0 {
                (acc / total).min(1.0)
            } else {
                1.0
            }
        })
        .collect();
    Ok(EigenModel {
        frame_length: n,
        frame_count: m,
        eigenvalues,
        eigenvectors,
        cumulative_variance,
    })
}

/// Fraction of the energy of `v` within `halfwidth_ms` of its midpoint
/// (index `len / 2`), at sampling rate `rate`.
pub fn pulse_concentration(v: &[f64], halfwidth_ms: f64, rate: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty vector".into()));
    }
    let total: f64 = v.iter().map(|c| c * c).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let hw = (halfwidth_ms * rate / 1000.0).round() as usize;
    let mid = v.len() / 2;
    let lo = mid.saturating_sub(hw);
    let hi = (mid + hw).min(v.len() - 1);
    let inner: f64 = v[lo..=hi].iter().map(|c| c * c).sum();
    Ok((inner / total).clamp(0.0, 1.0))
}
