use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{check_order, LpModel};

/// Ridge added (relative to the trace) when the normal equations are singular.
const RIDGE: f64 = 1e-9;

/// Per-sample weights in [0, 1], aligned with a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidArgument("weights must lie in [0, 1]".into()));
        }
        Ok(Self { weights })
    }

    pub fn ones(len: usize) -> Self {
        Self {
            weights: vec![1.0; len],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Raised-cosine dip placed on every glottal closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingDip {
    pub halfwidth_ms: f64,
    pub floor: f64,
}

impl Default for WeightingDip {
    fn default() -> Self {
        Self {
            halfwidth_ms: 2.0,
            floor: 0.1,
        }
    }
}

/// Weight 1 everywhere except a raised-cosine dip down to `dip.floor` over
/// `±dip.halfwidth_ms` around each GCI. Overlapping dips combine by minimum.
pub fn gci_weighting(
    len: usize,
    rate: f64,
    gcis_in_frame: &[usize],
    dip: &WeightingDip,
) -> Result<WeightVector> {
    if !(0.0..1.0).contains(&dip.floor) {
        return Err(Error::InvalidArgument(format!(
            "dip floor must lie in [0, 1), got {}",
            dip.floor
        )));
    }
    if let Some(g) = gcis_in_frame.iter().find(|&&g| g >= len) {
        return Err(Error::InvalidArgument(format!(
            "GCI index {g} outside frame of length {len}"
        )));
    }
    let half = dip.halfwidth_ms * 1e-3 * rate;
    let mut weights = vec![1.0_f64; len];
    if half > 0.0 {
        for &g in gcis_in_frame {
            let reach = half.ceil() as usize;
            let lo = g.saturating_sub(reach);
            let hi = (g + reach + 1).min(len);
            for (n, weight) in weights.iter_mut().enumerate().take(hi).skip(lo) {
                let d = n.abs_diff(g) as f64;
                if d < half {
                    let shape = 0.5 * (1.0 - (std::f64::consts::PI * d / half).cos());
                    *weight = weight.min(dip.floor + (1.0 - dip.floor) * shape);
                }
            }
        }
    }
    Ok(WeightVector { weights })
}

/// Covariance-method regression rows for `n in [order, len)`: the design
/// matrix holds `x(n-1)..x(n-order)`, the target is `x(n)`.
pub fn covariance_design(x: &[f64], order: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = x.len().saturating_sub(order);
    let design = DMatrix::from_fn(rows, order, |r, k| x[r + order - k - 1]);
    let target = DVector::from_fn(rows, |r, _| x[r + order]);
    (design, target)
}

/// Solves a symmetric positive semi-definite system by Cholesky, retrying
/// with a `1e-9 * trace` ridge when the factorization fails.
pub fn solve_spd(m: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let trace = m.trace();
    if !(trace > 0.0) {
        return Err(Error::DegenerateInput("normal equations have zero trace".into()));
    }
    let n = m.nrows();
    let ridged = m + DMatrix::identity(n, n) * (RIDGE * trace);
    ridged
        .cholesky()
        .map(|ch| ch.solve(b))
        .ok_or_else(|| Error::DegenerateInput("normal equations rank deficient after ridge".into()))
}

/// Weighted l2 predictor minimizing `sum_n w(n) (x(n) - sum_k a_k x(n-k))^2`
/// over `n in [order, len)`.
pub fn wlp2_analyze(x: &[f64], order: usize, w: &WeightVector) -> Result<LpModel> {
    check_order(x.len(), order)?;
    if w.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "weight length {} differs from frame length {}",
            w.len(),
            x.len()
        )));
    }
    if order == 0 {
        let e = x.iter().map(|v| v * v).sum();
        return LpModel::new(Vec::new(), e);
    }
    let (design, target) = covariance_design(x, order);
    let row_w = DVector::from_fn(design.nrows(), |r, _| w.weights()[r + order]);
    let mut weighted = design.clone();
    for (mut row, wr) in weighted.row_iter_mut().zip(row_w.iter()) {
        row *= *wr;
    }
    let normal = design.transpose() * &weighted;
    let rhs = weighted.transpose() * &target;
    let a = solve_spd(normal, &rhs)?;
    let resid = &target - &design * &a;
    LpModel::new(a.iter().copied().collect(), resid.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dense_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / m[r][r];
        }
        x
    }

    #[test]
    fn weighting_examples() {
        let w = gci_weighting(100, 8000.0, &[], &WeightingDip::default()).unwrap();
        assert!(w.weights().iter().all(|&v| v == 1.0));

        let w = gci_weighting(101, 8000.0, &[50], &WeightingDip::default()).unwrap();
        assert!((w.weights()[50] - 0.1).abs() < 1e-15);
        assert_eq!(w.weights()[50 + 16], 1.0);
        assert_eq!(w.weights()[50 - 16], 1.0);
        assert!(w.weights()[58] > 0.1 && w.weights()[58] < 1.0);

        assert!(gci_weighting(10, 8000.0, &[10], &WeightingDip::default()).is_err());
        let bad = WeightingDip { halfwidth_ms: 2.0, floor: 1.0 };
        assert!(gci_weighting(10, 8000.0, &[], &bad).is_err());
    }

    #[test]
    fn overlapping_dips_take_minimum() {
        let dip = WeightingDip::default();
        let both = gci_weighting(100, 8000.0, &[40, 50], &dip).unwrap();
        // Evaluate each dip by formula at the overlap.
        let single = |g: f64, n: f64| {
            let d = (n - g).abs();
            if d < 16.0 {
                0.1 + 0.9 * 0.5 * (1.0 - (std::f64::consts::PI * d / 16.0).cos())
            } else {
                1.0
            }
        };
        for n in 30..66 {
            let expected = single(40.0, n as f64).min(single(50.0, n as f64));
            assert!((both.weights()[n] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_weights_match_covariance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..120).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = 13;
        let m = wlp2_analyze(&x, k, &WeightVector::ones(x.len())).unwrap();
        // phi(i, j) = sum_{n=k}^{L-1} x(n-i) x(n-j)
        let phi = |i: usize, j: usize| (k..x.len()).map(|n| x[n - i] * x[n - j]).sum::<f64>();
        let mat = (1..=k).map(|i| (1..=k).map(|j| phi(i, j)).collect()).collect();
        let rhs = (1..=k).map(|i| phi(i, 0)).collect();
        let expected = dense_solve(mat, rhs);
        for (g, e) in m.coefficients().iter().zip(&expected) {
            assert!((g - e).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_weight_hides_corrupted_sample() {
        let mut x: Vec<f64> = (0..60).map(|n| 0.98f64.powi(n)).collect();
        let last = x.len() - 1;
        x[last] += 5.0;
        let mut w = vec![1.0; x.len()];
        w[last] = 0.0;
        let m = wlp2_analyze(&x, 1, &WeightVector::new(w).unwrap()).unwrap();
        assert!((m.coefficients()[0] - 0.98).abs() < 1e-8);
        let plain = wlp2_analyze(&x, 1, &WeightVector::ones(x.len())).unwrap();
        assert!((plain.coefficients()[0] - 0.98).abs() > 1e-3);
    }

    #[test]
    fn singular_system_gets_ridge() {
        // Zero signal except one sample: regressors are collinear.
        let mut x = vec![0.0; 30];
        x[29] = 1.0;
        let r = wlp2_analyze(&x, 3, &WeightVector::ones(30));
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
        let mut x = vec![0.0; 30];
        x[10] = 1.0;
        let m = wlp2_analyze(&x, 3, &WeightVector::ones(30)).unwrap();
        assert!(m.coefficients().iter().all(|a| a.is_finite()));
    }
}
