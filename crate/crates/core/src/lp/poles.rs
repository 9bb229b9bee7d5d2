use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LpModel;

/// Roots closer than this to the unit circle are not reflected.
const UNIT_CIRCLE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PoleReport {
    pub roots: Vec<Complex64>,
    pub max_modulus: f64,
}

/// Evaluates `z^K - a_1 z^(K-1) - ... - a_K` and its derivative.
fn eval_monic(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in poly {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Poles of `1 / A(z)`: eigenvalues of the companion matrix, each refined by
/// a few Newton steps on the polynomial.
pub fn polynomial_roots(model: &LpModel) -> PoleReport {
    let k = model.order();
    if k == 0 {
        return PoleReport {
            roots: Vec::new(),
            max_modulus: 0.0,
        };
    }
    let a = model.coefficients();
    let companion = DMatrix::from_fn(k, k, |i, j| {
        if i == 0 {
            a[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let poly = model.analysis_polynomial();
    let roots: Vec<Complex64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|&z0| {
            let mut z = z0;
            let (mut pz, _) = eval_monic(&poly, z);
            for _ in 0..4 {
                let (p, dp) = eval_monic(&poly, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let next = z - p / dp;
                let (pn, _) = eval_monic(&poly, next);
                if pn.norm() < pz.norm() {
                    z = next;
                    pz = pn;
                } else {
                    break;
                }
            }
            z
        })
        .collect();
    let max_modulus = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    PoleReport { roots, max_modulus }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleReflection {
    pub model: LpModel,
    pub reflected: usize,
    /// Roots left in place because they sit on the unit circle.
    pub on_unit_circle: usize,
}

/// Reflects every root outside the unit circle to `1 / conj(root)`.
///
/// The magnitude response of `A(z)` is preserved up to a constant gain. The
/// residual energy of the input model is carried over unchanged.
pub fn reflect_poles(model: &LpModel) -> PoleReflection {
    let report = polynomial_roots(model);
    let mut reflected = 0;
    let mut on_unit_circle = 0;
    let roots: Vec<Complex64> = report
        .roots
        .iter()
        .map(|&z| {
            let m = z.norm();
            if (m - 1.0).abs() < UNIT_CIRCLE_BAND {
                on_unit_circle += 1;
                z
            } else if m > 1.0 {
                reflected += 1;
                1.0 / z.conj()
            } else {
                z
            }
        })
        .collect();
    if reflected == 0 {
        return PoleReflection {
            model: model.clone(),
            reflected,
            on_unit_circle,
        };
    }
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in &roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    let coefficients = poly[1..].iter().map(|c| -c.re).collect();
    PoleReflection {
        model: LpModel::new(coefficients, model.residual_energy())
            .expect("reflected polynomial is finite"),
        reflected,
        on_unit_circle,
    }
}
