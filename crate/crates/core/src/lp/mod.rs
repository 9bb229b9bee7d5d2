//! Linear-prediction estimators: autocorrelation/Levinson-Durbin (l2),
//! weighted covariance (weighted l2), IRLS (l1), and pole utilities.

mod l1;
mod levinson;
mod poles;
mod weighted;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use l1::{irls_l1, l1_analyze, l1_objective, IrlsStep, L1Fit, L1Options};
pub use levinson::{autocorrelate, levinson_durbin, lp2_analyze, Levinson};
pub use poles::{polynomial_roots, reflect_poles, PoleReflection, PoleReport};
pub use weighted::{
    covariance_design, gci_weighting, solve_spd, wlp2_analyze, WeightVector, WeightingDip,
};

/// Default prediction order at 8 kHz.
pub const DEFAULT_ORDER: usize = 13;

/// Predictor `A(z) = 1 - sum_k a_k z^-k`, coefficients `a_1..a_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    order: usize,
    coefficients: Vec<f64>,
    residual_energy: f64,
}

impl LpModel {
    pub fn new(coefficients: Vec<f64>, residual_energy: f64) -> Result<Self> {
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::DegenerateInput("non-finite LP coefficient".into()));
        }
        if !(residual_energy >= 0.0 && residual_energy.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "invalid residual energy {residual_energy}"
            )));
        }
        Ok(Self {
            order: coefficients.len(),
            coefficients,
            residual_energy,
        })
    }

    /// Model with all-zero coefficients (identity analysis filter).
    pub fn identity(order: usize) -> Self {
        Self {
            order,
            coefficients: vec![0.0; order],
            residual_energy: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn residual_energy(&self) -> f64 {
        self.residual_energy
    }

    /// Polynomial `[1, -a_1, ..., -a_K]` in powers of `z^-1`.
    pub fn analysis_polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.coefficients.iter().map(|a| -a))
            .collect()
    }
}

pub(crate) fn check_order(len: usize, order: usize) -> Result<()> {
    if len <= order {
        return Err(Error::InvalidArgument(format!(
            "frame length {len} must exceed prediction order {order}"
        )));
    }
    Ok(())
}
