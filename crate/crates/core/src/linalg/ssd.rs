//! Simultaneous Schur decomposition of a set of real square matrices.
//!
//! Finds one orthogonal `Q` such that every `Q^T M_k Q` is as close to upper
//! triangular as possible, minimizing the summed squared strictly-lower
//! entries. The start point is the real Schur basis of a fixed linear
//! combination of the inputs (or the identity, whichever is better); Jacobi
//! sweeps then visit the planes `(i, j)`, `i < j`, cyclically by rows. In each
//! plane the objective is a trigonometric polynomial in the rotation angle
//! with harmonics `0, 2θ, 4θ`; it is recovered exactly from eight samples and
//! minimized globally, and the rotation is applied only when it lowers the
//! objective, so the objective never increases.

use std::f64::consts::PI;

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::tensor::RMatrix;

/// Output of [`ssd`].
#[derive(Debug, Clone)]
pub struct SsdResult {
    /// Orthogonal joint Schur basis.
    pub q: RMatrix,
    /// `Q^T M_k Q` for each input.
    pub ts: Vec<RMatrix>,
    /// Tuple `r` holds the `r`-th diagonal entry of every `T_k`.
    pub eigen_tuples: Vec<Vec<f64>>,
    /// Objective after initialization and after each sweep.
    pub objective_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl SsdResult {
    /// Final summed squared strictly-lower-triangular mass.
    pub fn residual(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

fn lower_mass(ms: &[RMatrix]) -> f64 {
    ms.iter()
        .map(|m| {
            let mut acc = 0.0;
            for col in 0..m.ncols() {
                for row in col + 1..m.nrows() {
                    acc += m[(row, col)] * m[(row, col)];
                }
            }
            acc
        })
        .sum()
}

/// `G^T M G` for the plane rotation with `G[i,i] = G[j,j] = c`,
/// `G[i,j] = s`, `G[j,i] = −s`.
fn rotate(m: &mut RMatrix, i: usize, j: usize, c: f64, s: f64) {
    let n = m.nrows();
    for col in 0..n {
        let (a, b) = (m[(i, col)], m[(j, col)]);
        m[(i, col)] = c * a - s * b;
        m[(j, col)] = s * a + c * b;
    }
    for row in 0..n {
        let (a, b) = (m[(row, i)], m[(row, j)]);
        m[(row, i)] = c * a - s * b;
        m[(row, j)] = s * a + c * b;
    }
}

fn rotate_basis(q: &mut RMatrix, i: usize, j: usize, c: f64, s: f64) {
    for row in 0..q.nrows() {
        let (a, b) = (q[(row, i)], q[(row, j)]);
        q[(row, i)] = c * a - s * b;
        q[(row, j)] = s * a + c * b;
    }
}

fn plane_objective(ts: &[RMatrix], i: usize, j: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let rotated: Vec<RMatrix> = ts
        .iter()
        .map(|t| {
            let mut m = t.clone();
            rotate(&mut m, i, j, c, s);
            m
        })
        .collect();
    lower_mass(&rotated)
}

/// Global minimizer over `θ ∈ [0, π)` of
/// `a0 + a1 cos2θ + b1 sin2θ + a2 cos4θ + b2 sin4θ`.
fn minimize_trig(coef: [f64; 5]) -> f64 {
    let [a0, a1, b1, a2, b2] = coef;
    let f = |p: f64| a0 + a1 * p.cos() + b1 * p.sin() + a2 * (2.0 * p).cos() + b2 * (2.0 * p).sin();
    let df = |p: f64| -a1 * p.sin() + b1 * p.cos() - 2.0 * a2 * (2.0 * p).sin() + 2.0 * b2 * (2.0 * p).cos();
    let d2f = |p: f64| -a1 * p.cos() - b1 * p.sin() - 4.0 * a2 * (2.0 * p).cos() - 4.0 * b2 * (2.0 * p).sin();
    const GRID: usize = 720;
    let mut best = 0.0;
    let mut best_val = f(0.0);
    for k in 1..GRID {
        let p = 2.0 * PI * k as f64 / GRID as f64;
        let v = f(p);
        if v < best_val {
            best_val = v;
            best = p;
        }
    }
    // Newton polish on φ = 2θ
    let mut p = best;
    for _ in 0..20 {
        let h = d2f(p);
        if h <= 0.0 {
            break;
        }
        let step = df(p) / h;
        let cand = p - step;
        if f(cand) > f(p) {
            break;
        }
        p = cand;
        if step.abs() < 1e-15 {
            break;
        }
    }
    p / 2.0
}

fn optimal_plane_angle(ts: &[RMatrix], i: usize, j: usize) -> f64 {
    // eight samples of a π-periodic polynomial with harmonics 0, 2θ, 4θ
    let samples: Vec<(f64, f64)> = (0..8)
        .map(|k| {
            let phi = PI * k as f64 / 4.0;
            (phi, plane_objective(ts, i, j, phi / 2.0))
        })
        .collect();
    let mut coef = [0.0; 5];
    for &(phi, v) in &samples {
        coef[0] += v / 8.0;
        coef[1] += v * phi.cos() / 4.0;
        coef[2] += v * phi.sin() / 4.0;
        coef[3] += v * (2.0 * phi).cos() / 4.0;
        coef[4] += v * (2.0 * phi).sin() / 4.0;
    }
    minimize_trig(coef)
}

/// Runs the simultaneous Schur decomposition.
///
/// Stops when the residual lower mass falls to `tol` times the total input
/// energy, or when a full sweep lowers it by less than that amount (a
/// stationary point). Reaching `max_sweeps` first yields a best-effort
/// result with `converged == false`.
pub fn ssd(ms: &[RMatrix], tol: f64, max_sweeps: usize) -> Result<SsdResult> {
    let first = ms.first().ok_or_else(|| Error::invalid("ssd needs at least one matrix"))?;
    let n = first.nrows();
    if n == 0 || ms.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::shape("ssd inputs must be square and of equal size"));
    }
    if ms.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("ssd: non-finite entries"));
    }
    let scale: f64 = ms.iter().map(|m| m.norm_squared()).sum::<f64>().max(f64::MIN_POSITIVE);
    let threshold = tol * scale;

    let identity_obj = lower_mass(ms);
    let mut q = RMatrix::identity(n, n);
    let mut ts: Vec<RMatrix> = ms.to_vec();
    if n > 1 {
        // fixed, incommensurate weights so no input dominates by accident
        let mut combo = RMatrix::zeros(n, n);
        for (k, m) in ms.iter().enumerate() {
            combo += m * (1.0 / (1.0 + k as f64 * std::f64::consts::SQRT_2));
        }
        if let Some(schur) = Schur::try_new(combo, f64::EPSILON, 10_000) {
            let (qs, _) = schur.unpack();
            let cand: Vec<RMatrix> = ms.iter().map(|m| qs.transpose() * m * &qs).collect();
            if lower_mass(&cand) < identity_obj {
                q = qs;
                ts = cand;
            }
        }
    }

    let mut history = vec![lower_mass(&ts)];
    let mut converged = history[0] <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let theta = optimal_plane_angle(&ts, i, j);
                let before = lower_mass(&ts);
                if plane_objective(&ts, i, j, theta) < before {
                    let (s, c) = theta.sin_cos();
                    for t in ts.iter_mut() {
                        rotate(t, i, j, c, s);
                    }
                    rotate_basis(&mut q, i, j, c, s);
                }
            }
        }
        let obj = lower_mass(&ts);
        let prev = *history.last().unwrap();
        history.push(obj);
        if obj <= threshold || prev - obj <= threshold {
            converged = true;
        }
    }

    let eigen_tuples = (0..n).map(|r| ts.iter().map(|t| t[(r, r)]).collect()).collect();
    Ok(SsdResult { q, ts, eigen_tuples, objective_history: history, sweeps, converged })
}
