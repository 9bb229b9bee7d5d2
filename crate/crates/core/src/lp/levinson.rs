use crate::error::{Error, Result};

use super::{check_order, LpModel};

/// Relative prediction error below which the recursion is treated as an exact fit.
const EXACT_FIT_RATIO: f64 = 1e-12;

/// Biased autocorrelation `rho_j = sum_n x(n) x(n-j)` for `j = 0..=order`.
pub fn autocorrelate(x: &[f64], order: usize) -> Result<Vec<f64>> {
    check_order(x.len(), order)?;
    Ok((0..=order)
        .map(|lag| x[lag..].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect())
}

/// Output of the Levinson-Durbin recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct Levinson {
    pub model: LpModel,
    pub reflection: Vec<f64>,
    /// The prediction error vanished before the requested order; remaining
    /// coefficients are zero.
    pub exact_fit: bool,
}

/// Solves the Toeplitz normal equations for the order `rho.len() - 1`
/// predictor.
pub fn levinson_durbin(rho: &[f64]) -> Result<Levinson> {
    let order = rho.len().saturating_sub(1);
    let r0 = *rho
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty autocorrelation".into()))?;
    if !(r0 > 0.0) || rho.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "zero-lag autocorrelation must be positive, got {r0}"
        )));
    }

    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r0;
    let mut exact_fit = false;

    for i in 0..order {
        let acc = rho[i + 1] - (0..i).map(|j| a[j] * rho[i - j]).sum::<f64>();
        let k = acc / err;
        if k.abs() > 1.0 + 1e-9 {
            return Err(Error::DegenerateInput(format!(
                "reflection coefficient {k} at stage {} (autocorrelation not positive definite)",
                i + 1
            )));
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        reflection.push(k);
        err *= 1.0 - k * k;
        if err <= EXACT_FIT_RATIO * r0 {
            exact_fit = true;
            err = err.max(0.0);
            break;
        }
    }

    Ok(Levinson {
        model: LpModel::new(a, err)?,
        reflection,
        exact_fit,
    })
}

/// Autocorrelation-method l2 predictor of order `order`.
pub fn lp2_analyze(x: &[f64], order: usize) -> Result<LpModel> {
    let rho = autocorrelate(x, order)?;
    Ok(levinson_durbin(&rho)?.model)
}
