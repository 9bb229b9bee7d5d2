//! Sparsity and shape statistics: Gini index, Hoyer measure, kurtosis,
//! skewness, plus the relative improvement of a residual over its source.
//!
//! Every statistic is computed on a sorted copy of the input, which makes
//! the results bit-identical under any permutation of the samples (and in
//! particular under time reversal).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn sorted_magnitudes(x: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    c.sort_by(f64::total_cmp);
    c
}

fn sorted_values(x: &[f64]) -> Vec<f64> {
    let mut c = x.to_vec();
    c.sort_by(f64::total_cmp);
    c
}

/// Gini index of the magnitude distribution, in [0, 1).
///
/// With `c_(1) <= ... <= c_(N)` the sorted magnitudes,
/// `G = 1 - 2 sum_k (c_(k) / ||x||_1) (N - k + 1/2) / N`.
pub fn gini_index(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n == 0 {
        return Err(Error::UndefinedMetric("gini of empty sequence".into()));
    }
    let c = sorted_magnitudes(x);
    let l1: f64 = c.iter().sum();
    if l1 == 0.0 {
        return Err(Error::UndefinedMetric("gini of all-zero sequence".into()));
    }
    let nf = n as f64;
    let acc: f64 = c
        .iter()
        .enumerate()
        .map(|(i, v)| (v / l1) * ((nf - (i + 1) as f64 + 0.5) / nf))
        .sum();
    Ok(1.0 - 2.0 * acc)
}

/// Hoyer measure `(sqrt(N) - ||x||_1 / ||x||_2) / (sqrt(N) - 1)`.
pub fn hoyer_measure(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedMetric(format!("hoyer needs N >= 2, got {n}")));
    }
    let c = sorted_magnitudes(x);
    let l1: f64 = c.iter().sum();
    let l2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(Error::UndefinedMetric("hoyer of all-zero sequence".into()));
    }
    let rn = (n as f64).sqrt();
    Ok((rn - l1 / l2) / (rn - 1.0))
}

/// Central moments `(m2, m3, m4)` over the sorted sample.
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let s = sorted_values(x);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &s {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Non-excess kurtosis `m4 / m2^2` (3 for a Gaussian).
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::UndefinedMetric(format!(
            "kurtosis needs N >= 4, got {}",
            x.len()
        )));
    }
    let (m2, _, m4) = central_moments(x);
    if m2 == 0.0 {
        return Err(Error::UndefinedMetric("kurtosis of zero-variance sequence".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// Skewness `m3 / m2^(3/2)`.
pub fn skewness(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::UndefinedMetric(format!(
            "skewness needs N >= 3, got {}",
            x.len()
        )));
    }
    let (m2, m3, _) = central_moments(x);
    if m2 == 0.0 {
        return Err(Error::UndefinedMetric("skewness of zero-variance sequence".into()));
    }
    Ok(m3 / m2.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Kurtosis,
    Hoyer,
    Gini,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Kurtosis, Metric::Hoyer, Metric::Gini];

    pub fn evaluate(self, x: &[f64]) -> Result<f64> {
        match self {
            Metric::Kurtosis => kurtosis(x),
            Metric::Hoyer => hoyer_measure(x),
            Metric::Gini => gini_index(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Kurtosis => "kurtosis",
            Metric::Hoyer => "hoyer",
            Metric::Gini => "gini",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kurtosis" => Ok(Metric::Kurtosis),
            "hoyer" => Ok(Metric::Hoyer),
            "gini" => Ok(Metric::Gini),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// `(SM(r) - SM(s)) / SM(s)` as a fraction.
pub fn sparsity_improvement(s: &[f64], r: &[f64], metric: Metric) -> Result<f64> {
    let base = metric.evaluate(s)?;
    if base == 0.0 {
        return Err(Error::UndefinedMetric(format!(
            "{} of the reference signal is zero",
            metric.name()
        )));
    }
    Ok((metric.evaluate(r)? - base) / base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub kurtosis: f64,
    pub hoyer: f64,
    pub gini: f64,
    pub n: usize,
}

impl SparsityReport {
    pub const CSV_HEADER: &'static str = "n,kurtosis,hoyer,gini";

    pub fn of(x: &[f64]) -> Result<Self> {
        Ok(Self {
            kurtosis: kurtosis(x)?,
            hoyer: hoyer_measure(x)?,
            gini: gini_index(x)?,
            n: x.len(),
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Kurtosis => self.kurtosis,
            Metric::Hoyer => self.hoyer,
            Metric::Gini => self.gini,
        }
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.n, self.kurtosis, self.hoyer, self.gini)
    }
}

/// Two-sided paired t-test on `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub mean_difference: f64,
    pub t: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("paired samples differ in length".into()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientData("paired t-test needs two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let dof = n - 1;
    let se = (var / n as f64).sqrt();
    let (t, p_value) = if se == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, dof as f64)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        (t, 2.0 * dist.cdf(-t.abs()))
    };
    Ok(PairedTTest {
        mean_difference: mean,
        t,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn gini_examples() {
        assert!(gini_index(&[1.0; 4]).unwrap().abs() < 1e-15);
        assert!((gini_index(&[0.0, 0.0, 0.0, 5.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(gini_index(&[0.0; 3]), Err(Error::UndefinedMetric(_))));
        let x = [0.3, -1.2, 0.0, 4.0, 0.1];
        let g = gini_index(&x).unwrap();
        let g2 = gini_index(&x.map(|v| -2.5 * v)).unwrap();
        assert!((g - g2).abs() < 1e-12);
    }

    #[test]
    fn hoyer_examples() {
        assert!((hoyer_measure(&[0.0, 0.0, 7.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(hoyer_measure(&[1.0; 4]).unwrap().abs() < 1e-15);
        assert!((hoyer_measure(&[3.0, 4.0, 0.0, 0.0]).unwrap() - 0.6).abs() < 1e-15);
        assert!(hoyer_measure(&[1.0]).is_err());
        assert!(hoyer_measure(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn moment_examples() {
        assert!((kurtosis(&[1.0, -1.0, 1.0, -1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((kurtosis(&[3.0, -1.0, -1.0, -1.0]).unwrap() - 21.0 / 9.0).abs() < 1e-12);
        assert!((skewness(&[0.0, 0.0, 3.0]).unwrap() - 2.0 / 2f64.powf(1.5)).abs() < 1e-12);
        assert!(skewness(&[1.0, -2.0, 2.0, -1.0]).unwrap().abs() < 1e-15);
        assert!(kurtosis(&[2.0; 8]).is_err());
        assert!(skewness(&[2.0; 8]).is_err());
        assert!(kurtosis(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn gaussian_kurtosis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let x: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = kurtosis(&x).unwrap();
        assert!((k - 3.0).abs() < 0.05, "{k}");
    }

    #[test]
    fn improvement_arithmetic() {
        // gini([0,0,0,5]) = 0.75, gini([0,0,0,0,0,0,0,5]) = 0.875
        let s = [0.0, 0.0, 0.0, 5.0];
        assert_eq!(sparsity_improvement(&s, &s, Metric::Gini).unwrap(), 0.0);
        let r = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0];
        let imp = sparsity_improvement(&s, &r, Metric::Gini).unwrap();
        assert!((imp - (0.875 - 0.75) / 0.75).abs() < 1e-15);
        assert!(sparsity_improvement(&[1.0; 4], &r, Metric::Gini).is_err());
    }

    #[test]
    fn t_test_detects_shift() {
        let a: Vec<f64> = (0..50).map(|i| (i % 7) as f64 * 0.1 + 1.0).collect();
        let b: Vec<f64> = (0..50).map(|i| (i % 5) as f64 * 0.1).collect();
        let t = paired_t_test(&a, &b).unwrap();
        assert!(t.p_value < 1e-10);
        let same = paired_t_test(&a, &a).unwrap();
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn report_csv() {
        let r = SparsityReport::of(&[0.0, 1.0, 0.0, -1.0, 3.0]).unwrap();
        assert_eq!(r.n, 5);
        assert_eq!(r.csv_row().split(',').count(), SparsityReport::CSV_HEADER.split(',').count());
    }

    proptest! {
        #[test]
        fn permutation_and_scale_invariance(
            x in proptest::collection::vec(-10.0f64..10.0, 4..64),
            scale in 0.01f64..100.0,
            rot in 0usize..64,
        ) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let mut p = x.clone();
            p.rotate_left(rot % x.len());
            p.reverse();
            let s: Vec<f64> = x.iter().map(|v| v * scale).collect();
            prop_assert_eq!(gini_index(&x).unwrap(), gini_index(&p).unwrap());
            prop_assert_eq!(hoyer_measure(&x).unwrap(), hoyer_measure(&p).unwrap());
            prop_assert!((gini_index(&x).unwrap() - gini_index(&s).unwrap()).abs() < 1e-12);
            prop_assert!((hoyer_measure(&x).unwrap() - hoyer_measure(&s).unwrap()).abs() < 1e-12);
            if let (Ok(k), Ok(sk)) = (kurtosis(&x), skewness(&x)) {
                prop_assert_eq!(k, kurtosis(&p).unwrap());
                prop_assert_eq!(sk, skewness(&p).unwrap());
                prop_assert!((k - kurtosis(&s).unwrap()).abs() < 1e-12 * k.max(1.0));
                prop_assert!((sk - skewness(&s).unwrap()).abs() < 1e-12 * sk.abs().max(1.0));
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert!((skewness(&neg).unwrap() + sk).abs() < 1e-12);
            }
        }

        #[test]
        fn dalton_transfer_never_lowers_gini(
            x in proptest::collection::vec(0.01f64..10.0, 2..=16),
            frac in 0.0f64..1.0,
        ) {
            let n = x.len();
            let lo = (0..n).min_by(|&i, &j| x[i].total_cmp(&x[j])).unwrap();
            let hi = (0..n).max_by(|&i, &j| x[i].total_cmp(&x[j])).unwrap();
            prop_assume!(lo != hi);
            let moved = x[lo] * frac;
            let mut y = x.clone();
            y[lo] -= moved;
            y[hi] += moved;
            prop_assert!(gini_index(&y).unwrap() >= gini_index(&x).unwrap() - 1e-12);
        }

        #[test]
        fn delta_closed_forms(n in 2usize..=1024, pos in 0usize..1024, amp in 0.1f64..5.0) {
            let mut x = vec![0.0; n];
            x[pos % n] = amp;
            prop_assert!((gini_index(&x).unwrap() - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
            prop_assert!((hoyer_measure(&x).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
