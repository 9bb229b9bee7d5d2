//! Maximum-phase residual extraction.
//!
//! A first LP analysis of order `Kc = K - Ka`, estimated on a preemphasized
//! copy of the frame, removes the minimum-phase (vocal tract) part. The
//! remaining signal is time-reversed so that its maximum-phase (glottal open
//! phase) part becomes causal, and a second l2 analysis of order `Ka`
//! removes it. Reversing back yields the residual. The preemphasis
//! coefficient is picked per frame among a few candidates by maximizing the
//! Gini index of the residual.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{
    gci_weighting, l1_analyze, lp2_analyze, polynomial_roots, reflect_poles, wlp2_analyze,
    L1Options, LpModel, WeightingDip, DEFAULT_ORDER,
};
use crate::metrics::gini_index;
use crate::pitch::GciTrack;
use crate::signal::{lp_inverse, preemphasis, reversed, FrameGrid, Frame, SampleBuffer, WindowKind};

pub const DEFAULT_ANTICAUSAL_ORDER: usize = 2;
pub const DEFAULT_ALPHAS: [f64; 2] = [-1.0, -0.7];

/// LP criterion used for a single analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseMethod {
    Lp2,
    Wlp2,
    Lp1,
}

/// Residual extraction method: a conventional single-pass analysis or its
/// maximum-phase counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lp2,
    Wlp2,
    Lp1,
    MaxpLp2,
    MaxpWlp2,
    MaxpLp1,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lp2,
        Method::MaxpLp2,
        Method::Wlp2,
        Method::MaxpWlp2,
        Method::Lp1,
        Method::MaxpLp1,
    ];

    pub fn base(self) -> BaseMethod {
        match self {
            Method::Lp2 | Method::MaxpLp2 => BaseMethod::Lp2,
            Method::Wlp2 | Method::MaxpWlp2 => BaseMethod::Wlp2,
            Method::Lp1 | Method::MaxpLp1 => BaseMethod::Lp1,
        }
    }

    pub fn is_maxp(self) -> bool {
        matches!(self, Method::MaxpLp2 | Method::MaxpWlp2 | Method::MaxpLp1)
    }

    pub fn needs_gcis(self) -> bool {
        self.base() == BaseMethod::Wlp2
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lp2 => "lp2",
            Method::Wlp2 => "wlp2",
            Method::Lp1 => "lp1",
            Method::MaxpLp2 => "maxp_lp2",
            Method::MaxpWlp2 => "maxp_wlp2",
            Method::MaxpLp1 => "maxp_lp1",
        }
    }

    /// The conventional counterpart of a MaxP method (identity otherwise).
    pub fn conventional(self) -> Method {
        match self.base() {
            BaseMethod::Lp2 => Method::Lp2,
            BaseMethod::Wlp2 => Method::Wlp2,
            BaseMethod::Lp1 => Method::Lp1,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which signal the first inverse filter is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstPassInput {
    /// Filter the original frame with coefficients estimated on the
    /// preemphasized one.
    #[default]
    Original,
    Preemphasized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPConfig {
    pub total_order: usize,
    pub anticausal_order: usize,
    pub alpha_candidates: Vec<f64>,
    pub base_method: BaseMethod,
    pub first_pass_input: FirstPassInput,
    pub dip: WeightingDip,
    pub l1: L1Options,
}

impl Default for MaxPConfig {
    fn default() -> Self {
        Self {
            total_order: DEFAULT_ORDER,
            anticausal_order: DEFAULT_ANTICAUSAL_ORDER,
            alpha_candidates: DEFAULT_ALPHAS.to_vec(),
            base_method: BaseMethod::Lp2,
            first_pass_input: FirstPassInput::Original,
            dip: WeightingDip::default(),
            l1: L1Options::default(),
        }
    }
}

impl MaxPConfig {
    pub fn with_base(mut self, base: BaseMethod) -> Self {
        self.base_method = base;
        self
    }

    pub fn causal_order(&self) -> usize {
        self.total_order - self.anticausal_order
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.anticausal_order && self.anticausal_order < self.total_order) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < Ka < K, got Ka = {}, K = {}",
                self.anticausal_order, self.total_order
            )));
        }
        if self.alpha_candidates.is_empty() {
            return Err(Error::InvalidArgument("no preemphasis candidates".into()));
        }
        if let Some(a) = self.alpha_candidates.iter().find(|a| !(-1.0..=0.0).contains(*a)) {
            return Err(Error::InvalidArgument(format!(
                "preemphasis alpha {a} outside [-1, 0]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPResult {
    pub residual: SampleBuffer,
    pub causal_model: LpModel,
    /// Second-stage predictor, expressed on the time-reversed signal.
    pub anticausal_model: LpModel,
    pub alpha_chosen: f64,
    pub gini: f64,
}

/// Serializable part of a [`MaxPResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPSummary {
    pub alpha_chosen: f64,
    pub gini: f64,
    pub causal_model: LpModel,
    pub anticausal_model: LpModel,
}

impl MaxPResult {
    pub fn summary(&self) -> MaxPSummary {
        MaxPSummary {
            alpha_chosen: self.alpha_chosen,
            gini: self.gini,
            causal_model: self.causal_model.clone(),
            anticausal_model: self.anticausal_model.clone(),
        }
    }
}

/// GCI sample positions relative to the frame start.
pub fn gcis_in_frame(frame: &Frame, gcis: &GciTrack) -> Vec<usize> {
    let start = frame.start_index() as i64;
    let len = frame.len() as i64;
    gcis.sample_indices(frame.rate())
        .into_iter()
        .map(|g| g as i64 - start)
        .filter(|g| (0..len).contains(g))
        .map(|g| g as usize)
        .collect()
}

/// A single LP analysis under `base`; l1 models with poles outside the unit
/// circle are reflected inside.
fn base_analysis(
    x: &[f64],
    order: usize,
    base: BaseMethod,
    frame: &Frame,
    gcis: Option<&GciTrack>,
    cfg: &MaxPConfig,
) -> Result<LpModel> {
    match base {
        BaseMethod::Lp2 => lp2_analyze(x, order),
        BaseMethod::Wlp2 => {
            let track = gcis.ok_or_else(|| {
                Error::InvalidArgument("weighted LP needs glottal closure instants".into())
            })?;
            let w = gci_weighting(x.len(), frame.rate(), &gcis_in_frame(frame, track), &cfg.dip)?;
            wlp2_analyze(x, order, &w)
        }
        BaseMethod::Lp1 => {
            let model = l1_analyze(x, order, &cfg.l1)?.model;
            if order > 0 && polynomial_roots(&model).max_modulus > 1.0 {
                Ok(reflect_poles(&model).model)
            } else {
                Ok(model)
            }
        }
    }
}

fn check_frame(frame: &Frame, order: usize) -> Result<()> {
    if frame.len() <= order {
        return Err(Error::InvalidArgument(format!(
            "frame length {} must exceed order {order}",
            frame.len()
        )));
    }
    if frame.samples().iter().all(|&v| v == 0.0) {
        return Err(Error::Unanalyzable("all-zero frame".into()));
    }
    Ok(())
}

/// Models of the two-stage pipeline for one preemphasis value.
struct StageModels {
    causal: LpModel,
    anticausal: LpModel,
}

fn estimate_stages(
    frame: &Frame,
    alpha: f64,
    cfg: &MaxPConfig,
    gcis: Option<&GciTrack>,
) -> Result<(StageModels, Vec<f64>)> {
    let x = frame.samples();
    let emphasized = preemphasis(x, alpha);
    let causal = base_analysis(&emphasized, cfg.causal_order(), cfg.base_method, frame, gcis, cfg)?;
    let first_input = match cfg.first_pass_input {
        FirstPassInput::Original => x,
        FirstPassInput::Preemphasized => &emphasized[..],
    };
    let after_causal = reversed(&lp_inverse(first_input, causal.coefficients()));
    let anticausal = lp2_analyze(&after_causal, cfg.anticausal_order)
        .map_err(|e| Error::Unanalyzable(format!("anticausal stage: {e}")))?;
    let residual = reversed(&lp_inverse(&after_causal, anticausal.coefficients()));
    Ok((StageModels { causal, anticausal }, residual))
}

/// Runs the two-stage pipeline for a fixed preemphasis coefficient.
pub fn maxp_residual_for_alpha(
    frame: &Frame,
    alpha: f64,
    cfg: &MaxPConfig,
    gcis: Option<&GciTrack>,
) -> Result<MaxPResult> {
    cfg.validate()?;
    check_frame(frame, cfg.total_order)?;
    if !(-1.0..=0.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [-1, 0]")));
    }
    let (models, residual) = estimate_stages(frame, alpha, cfg, gcis)?;
    let gini = gini_index(&residual).map_err(|e| Error::Unanalyzable(e.to_string()))?;
    Ok(MaxPResult {
        residual: SampleBuffer::new(residual, frame.rate())?,
        causal_model: models.causal,
        anticausal_model: models.anticausal,
        alpha_chosen: alpha,
        gini,
    })
}

/// Evaluates every preemphasis candidate and keeps the sparsest residual.
/// Ties go to the earlier candidate.
pub fn maxp_analyze(frame: &Frame, cfg: &MaxPConfig, gcis: Option<&GciTrack>) -> Result<MaxPResult> {
    cfg.validate()?;
    check_frame(frame, cfg.total_order)?;
    let mut best: Option<MaxPResult> = None;
    let mut last_err = None;
    for &alpha in &cfg.alpha_candidates {
        match maxp_residual_for_alpha(frame, alpha, cfg, gcis) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.gini > b.gini) {
                    best = Some(r);
                }
            }
            Err(e @ Error::InvalidArgument(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::Unanalyzable(match last_err {
            Some(e) => format!("every preemphasis candidate failed, last: {e}"),
            None => "every preemphasis candidate failed".into(),
        })
    })
}

/// Filters estimated for one frame by any method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameModels {
    pub causal: LpModel,
    /// Present for MaxP methods only.
    pub anticausal: Option<LpModel>,
    pub alpha: Option<f64>,
}

impl FrameModels {
    /// Applies the frame's filters to `x`: the causal FIR, then (if present)
    /// the anticausal FIR `r(n) = r_a(n) - sum_j b_j r_a(n + j)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let after = lp_inverse(x, self.causal.coefficients());
        match &self.anticausal {
            None => after,
            Some(b) => reversed(&lp_inverse(&reversed(&after), b.coefficients())),
        }
    }
}

/// Estimates the filters of `method` on one frame, returning them together
/// with the frame residual.
pub fn analyze_frame(
    frame: &Frame,
    method: Method,
    cfg: &MaxPConfig,
    gcis: Option<&GciTrack>,
) -> Result<(FrameModels, SampleBuffer)> {
    let cfg = MaxPConfig {
        base_method: method.base(),
        ..cfg.clone()
    };
    if method.is_maxp() {
        let r = maxp_analyze(frame, &cfg, gcis)?;
        let models = FrameModels {
            causal: r.causal_model,
            anticausal: Some(r.anticausal_model),
            alpha: Some(r.alpha_chosen),
        };
        Ok((models, r.residual))
    } else {
        check_frame(frame, cfg.total_order)?;
        let causal = base_analysis(frame.samples(), cfg.total_order, cfg.base_method, frame, gcis, &cfg)?;
        let residual = lp_inverse(frame.samples(), causal.coefficients());
        let models = FrameModels {
            causal,
            anticausal: None,
            alpha: None,
        };
        Ok((models, SampleBuffer::new(residual, frame.rate())?))
    }
}

/// Residual of `frame` under any of the six methods, with order
/// `cfg.total_order`.
pub fn residual_by_method(
    frame: &Frame,
    method: Method,
    cfg: &MaxPConfig,
    gcis: Option<&GciTrack>,
) -> Result<SampleBuffer> {
    analyze_frame(frame, method, cfg, gcis).map(|(_, r)| r)
}

/// Per-frame record of an utterance analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub start: usize,
    /// `None` when the frame could not be analyzed (e.g. digital silence).
    pub models: Option<FrameModels>,
    /// Gini index of the windowed frame residual.
    pub gini: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct UtteranceAnalysis {
    /// Residual over the whole buffer (see [`analyze_utterance`]).
    pub residual: SampleBuffer,
    pub frames: Vec<FrameRecord>,
    pub grid: FrameGrid,
}

/// Frame-by-frame analysis of a whole buffer.
///
/// Filters are estimated on Hanning-windowed frames. The utterance residual
/// is assembled by applying each frame's FIR filters to the unwindowed
/// signal on the samples closest to that frame's center: the buffer is
/// partitioned into hop-long segments, the first and last stretched to the
/// buffer ends. Unanalyzable frames pass their segment through unchanged.
pub fn analyze_utterance(
    buffer: &SampleBuffer,
    method: Method,
    cfg: &MaxPConfig,
    gcis: Option<&GciTrack>,
    win_ms: f64,
    hop_ms: f64,
) -> Result<UtteranceAnalysis> {
    cfg.validate()?;
    if method.needs_gcis() && gcis.is_none() {
        return Err(Error::InvalidArgument(format!("{method} needs glottal closure instants")));
    }
    let framing = crate::signal::frame_signal(buffer, win_ms, hop_ms, WindowKind::Hanning)?;
    let grid = framing.grid;
    let frames: Vec<FrameRecord> = framing
        .frames
        .par_iter()
        .enumerate()
        .map(|(index, frame)| match analyze_frame(frame, method, cfg, gcis) {
            Ok((models, residual)) => Ok(FrameRecord {
                index,
                start: frame.start_index(),
                gini: gini_index(residual.samples()).ok(),
                models: Some(models),
            }),
            Err(Error::Unanalyzable(_)) | Err(Error::DegenerateInput(_)) => Ok(FrameRecord {
                index,
                start: frame.start_index(),
                models: None,
                gini: None,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let x = buffer.samples();
    let n = x.len();
    let mut residual = x.to_vec();
    let offset = (grid.length - grid.hop) / 2;
    let context = cfg.total_order + 1;
    for (i, rec) in frames.iter().enumerate() {
        let seg_start = if i == 0 { 0 } else { rec.start + offset };
        let seg_end = if i + 1 == frames.len() {
            n
        } else {
            frames[i + 1].start + offset
        };
        let Some(models) = &rec.models else { continue };
        // Causal taps look back and anticausal taps look ahead. The excerpt
        // is padded by `order + 1` on both sides so zero-state transients at
        // its borders never reach the kept segment.
        let lo = seg_start.saturating_sub(context);
        let hi = (seg_end + context).min(n);
        let first_input: Vec<f64> = match (models.alpha, cfg.first_pass_input) {
            (Some(alpha), FirstPassInput::Preemphasized) => {
                let pre_lo = lo.saturating_sub(1);
                preemphasis(&x[pre_lo..hi], alpha)[lo - pre_lo..].to_vec()
            }
            _ => x[lo..hi].to_vec(),
        };
        let filtered = models.apply(&first_input);
        residual[seg_start..seg_end].copy_from_slice(&filtered[seg_start - lo..seg_end - lo]);
    }
    Ok(UtteranceAnalysis {
        residual: SampleBuffer::new(residual, buffer.rate())?,
        frames,
        grid,
    })
}
