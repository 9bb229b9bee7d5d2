//! Least-absolute-deviation prediction by iteratively reweighted least
//! squares with a decreasing smoothing schedule.
//!
//! For a fixed smoothing `eps`, each reweighted solve is a majorize-minimize
//! step on `sum_n sqrt(r_n^2 + eps^2)`, so that surrogate never increases.
//! An l1 regression optimum interpolates `order` equations, so the last
//! iterate is finished by an exact descent over such vertices, started from
//! the rows with the smallest residuals.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

use super::weighted::{covariance_design, solve_spd};
use super::{check_order, LpModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Options {
    /// Stop when the change of the l1 objective between iterations of the
    /// final smoothing stage falls below `tol` (relative to the objective).
    pub tol: f64,
    pub max_iter: usize,
    pub eps_start: f64,
    pub eps_end: f64,
}

impl Default for L1Options {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 400,
            eps_start: 1e-2,
            eps_end: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsStep {
    /// Absolute smoothing used for this iteration.
    pub eps: f64,
    /// Smoothed objective after the update.
    pub smoothed: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct L1Fit {
    pub model: LpModel,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IrlsStep>,
}

fn residual(design: &DMatrix<f64>, target: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
    target - design * a
}

fn smoothed(r: &DVector<f64>, eps: f64) -> f64 {
    r.iter().map(|v| (v * v + eps * eps).sqrt()).sum()
}

fn weighted_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut wd = design.clone();
    for (mut row, w) in wd.row_iter_mut().zip(weights.iter()) {
        row *= *w;
    }
    let normal = design.transpose() * &wd;
    let rhs = wd.transpose() * target;
    solve_spd(normal, &rhs)
}

/// Exact finish from the vertex through the `k` smallest residuals of `a`.
///
/// Moves between vertices (sets of `k` interpolated rows) along the edge with
/// the steepest descent of the l1 objective, doing an exact line search on
/// each edge, until no edge descends. Returns `None` if the starting rows are
/// singular.
fn polish(design: &DMatrix<f64>, target: &DVector<f64>, a: &DVector<f64>) -> Option<DVector<f64>> {
    let (m, k) = design.shape();
    let r = residual(design, target, a);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()).then(i.cmp(&j)));
    let mut basis: Vec<usize> = idx[..k].to_vec();
    let scale = target.amax().max(f64::MIN_POSITIVE);
    let mut best: Option<(DVector<f64>, f64)> = None;

    for _ in 0..(20 * m).max(50) {
        let sub = DMatrix::from_fn(k, k, |i, j| design[(basis[i], j)]);
        let inv = sub.try_inverse()?;
        let rhs = DVector::from_fn(k, |i, _| target[basis[i]]);
        let a = &inv * rhs;
        let r = residual(design, target, &a);
        let obj = r.lp_norm(1);
        if !obj.is_finite() {
            return best.map(|b| b.0);
        }
        if best.as_ref().is_some_and(|(_, o)| obj >= *o * (1.0 - 1e-14)) {
            // no progress: degenerate cycling
            return best.map(|b| b.0);
        }
        best = Some((a, obj));

        let zero = 1e-13 * scale;
        let mut steepest: Option<(usize, DVector<f64>, f64)> = None;
        for pos in 0..k {
            for sign in [1.0, -1.0] {
                let d = inv.column(pos) * sign;
                let c = design * &d;
                let mut slope = 1.0;
                for j in (0..m).filter(|j| !basis.contains(j)) {
                    slope += if r[j].abs() <= zero { c[j].abs() } else { -r[j].signum() * c[j] };
                }
                if slope < -1e-12 && steepest.as_ref().is_none_or(|s| slope < s.2) {
                    steepest = Some((pos, c, slope));
                }
            }
        }
        let Some((pos, c, mut slope)) = steepest else {
            return best.map(|b| b.0);
        };
        let mut breaks: Vec<(f64, usize)> = (0..m)
            .filter(|j| !basis.contains(j) && c[*j] != 0.0)
            .map(|j| (r[j] / c[j], j))
            .filter(|(s, _)| *s > 0.0)
            .collect();
        breaks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut entering = None;
        for (_, j) in breaks {
            slope += 2.0 * c[j].abs();
            if slope >= 0.0 {
                entering = Some(j);
                break;
            }
        }
        let j = entering?;
        basis[pos] = j;
    }
    best.map(|b| b.0)
}

/// IRLS on a generic design. Returns the coefficient vector together with the
/// iteration record.
pub fn irls_l1(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    opts: &L1Options,
) -> Result<(DVector<f64>, f64, bool, Vec<IrlsStep>)> {
    let k = design.ncols();
    let m = design.nrows();
    let scale = (target.norm_squared() / m.max(1) as f64).sqrt();
    if k == 0 || scale == 0.0 {
        let a = DVector::zeros(k);
        let obj = residual(design, target, &a).lp_norm(1);
        return Ok((a, obj, true, Vec::new()));
    }

    let mut a = weighted_solve(design, target, &DVector::from_element(m, 1.0))?;
    let mut history = Vec::new();
    let mut eps_rel = opts.eps_start;
    let mut converged = false;
    let mut iterations = 0;

    'stages: loop {
        let eps = eps_rel * scale;
        let last_stage = eps_rel <= opts.eps_end * (1.0 + 1e-9);
        let mut prev_obj = residual(design, target, &a).lp_norm(1);
        loop {
            if iterations >= opts.max_iter {
                break 'stages;
            }
            let r = residual(design, target, &a);
            let w = r.map(|v| 1.0 / (v * v + eps * eps).sqrt());
            let next = match weighted_solve(design, target, &w) {
                Ok(next) => next,
                Err(_) => break 'stages,
            };
            iterations += 1;
            let r_next = residual(design, target, &next);
            let obj = r_next.lp_norm(1);
            history.push(IrlsStep {
                eps,
                smoothed: smoothed(&r_next, eps),
                objective: obj,
            });
            a = next;
            let change = (prev_obj - obj).abs();
            prev_obj = obj;
            let stage_tol = if last_stage { opts.tol } else { 1e-6 };
            if change <= stage_tol * obj.max(f64::MIN_POSITIVE) {
                if last_stage {
                    converged = true;
                    break 'stages;
                }
                break;
            }
        }
        eps_rel = (eps_rel * 0.1).max(opts.eps_end);
    }

    let mut objective = residual(design, target, &a).lp_norm(1);
    if let Some(p) = polish(design, target, &a) {
        let po = residual(design, target, &p).lp_norm(1);
        if po < objective {
            a = p;
            objective = po;
        }
    }
    Ok((a, objective, converged, history))
}

/// `sum_n |x(n) - sum_k a_k x(n-k)|` over `n in [order, len)`.
pub fn l1_objective(x: &[f64], coefficients: &[f64]) -> f64 {
    let k = coefficients.len();
    (k..x.len())
        .map(|n| {
            let p: f64 = coefficients.iter().enumerate().map(|(j, a)| a * x[n - j - 1]).sum();
            (x[n] - p).abs()
        })
        .sum()
}

/// l1-norm predictor over the covariance range `n in [order, len)`.
pub fn l1_analyze(x: &[f64], order: usize, opts: &L1Options) -> Result<L1Fit> {
    check_order(x.len(), order)?;
    let (design, target) = covariance_design(x, order);
    let (a, objective, converged, history) = irls_l1(&design, &target, opts)?;
    let energy = residual(&design, &target, &a).norm_squared();
    Ok(L1Fit {
        model: LpModel::new(a.iter().copied().collect(), energy)?,
        objective,
        converged,
        iterations: history.len(),
        history,
    })
}
