//! Complex CPD by alternating least squares.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv, qr};
use crate::tensor::{CMatrix, ComplexTensor, C64};
use crate::khatri_rao;

use super::CpdModel;

/// Relative ridge added to the normal equations when they are not
/// numerically positive definite.
const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlsOptions {
    pub max_iters: usize,
    /// Stop once the relative residual changes by less than this.
    pub tol: f64,
    /// Number of random orthonormal starts; the best fit is kept.
    pub restarts: usize,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-10, restarts: 5 }
    }
}

/// Result of [`cpd_als_with`] for the best start.
#[derive(Debug, Clone)]
pub struct CpdFit {
    /// Fitted model with unit-norm factor columns.
    pub model: CpdModel,
    pub iterations: usize,
    /// Relative residual `‖X − X̂‖ / ‖X‖` after each iteration.
    pub residual_history: Vec<f64>,
    /// Relative residual of the returned model, evaluated directly.
    pub relative_residual: f64,
    pub converged: bool,
    /// True if any normal-equation solve needed the ridge fallback.
    pub regularized: bool,
    pub best_restart: usize,
}

/// ALS with five random starts.
pub fn cpd_als(y: &ComplexTensor, r: usize, max_iters: usize, tol: f64, seed: u64) -> Result<CpdFit> {
    cpd_als_with(y, r, &AlsOptions { max_iters, tol, ..AlsOptions::default() }, seed)
}

/// Each mode update solves `U_n (G^T) = M_n` with `M_n` the MTTKRP
/// `X_(n) conj(⊙_{m≠n} U_m)` and `G = ⊛_{m≠n} U_m^H U_m`.
pub fn cpd_als_with(y: &ComplexTensor, r: usize, opts: &AlsOptions, seed: u64) -> Result<CpdFit> {
    if r == 0 {
        return Err(Error::invalid("CPD rank must be at least 1"));
    }
    if y.order() < 2 {
        return Err(Error::invalid("CPD needs a tensor of order at least 2"));
    }
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::invalid("ALS needs at least one start and one iteration"));
    }
    let dims = y.dims().to_vec();
    let unfoldings: Vec<CMatrix> = (0..dims.len()).map(|n| y.unfold_mode(n)).collect::<Result<_>>()?;
    let x2 = y.norm_sqr();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best: Option<CpdFit> = None;
    for start in 0..opts.restarts {
        let init = random_start(&mut rng, &dims, r)?;
        let fit = run_als(y, &unfoldings, x2, init, opts)?;
        let better = match &best {
            None => true,
            Some(b) => fit.relative_residual < b.relative_residual,
        };
        if better {
            best = Some(CpdFit { best_restart: start, ..fit });
        }
    }
    Ok(best.expect("at least one start"))
}

fn random_start(rng: &mut ChaCha20Rng, dims: &[usize], r: usize) -> Result<Vec<CMatrix>> {
    dims.iter()
        .map(|&d| {
            let mut a = CMatrix::from_fn(d, r, |_, _| {
                C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            if d >= r {
                Ok(qr(&a)?.0)
            } else {
                for mut col in a.column_iter_mut() {
                    let n = col.norm();
                    col.unscale_mut(n);
                }
                Ok(a)
            }
        })
        .collect()
}

/// `conj(U_{n+1} ⊙ ⋯ ⊙ U_N ⊙ U_1 ⊙ ⋯ ⊙ U_{n−1})`, matching the column order
/// of the `(n)` unfolding.
fn conj_khatri_rao_except(factors: &[CMatrix], n: usize) -> CMatrix {
    let big_n = factors.len();
    let order: Vec<usize> = (n + 1..big_n).chain(0..n).collect();
    let mut acc = factors[order[0]].conjugate();
    for &k in &order[1..] {
        acc = khatri_rao(&acc, &factors[k].conjugate()).expect("equal column counts");
    }
    acc
}

fn solve_normal(m: &CMatrix, h: &CMatrix, regularized: &mut bool) -> Result<CMatrix> {
    // U H = M  ⇔  H^T U^T = M^T, with H^T Hermitian positive semidefinite
    let ht = h.transpose();
    if let Some(ch) = Cholesky::new(ht.clone()) {
        return Ok(ch.solve(&m.transpose()).transpose());
    }
    *regularized = true;
    let n = ht.nrows();
    let trace: f64 = (0..n).map(|k| ht[(k, k)].re).sum();
    let ridge = CMatrix::identity(n, n) * C64::new(RIDGE * trace.max(f64::MIN_POSITIVE), 0.0);
    if let Some(ch) = Cholesky::new(&ht + ridge) {
        return Ok(ch.solve(&m.transpose()).transpose());
    }
    let (p, _) = pinv(&ht, 1e-12)?;
    Ok((p * m.transpose()).transpose())
}

fn run_als(y: &ComplexTensor, unfoldings: &[CMatrix], x2: f64, mut factors: Vec<CMatrix>, opts: &AlsOptions) -> Result<CpdFit> {
    let big_n = factors.len();
    let r = factors[0].ncols();
    let mut grams: Vec<CMatrix> = factors.iter().map(|u| u.adjoint() * u).collect();
    let mut history = Vec::new();
    let mut regularized = false;
    let mut converged = false;
    let mut iterations = 0;
    if x2 == 0.0 {
        let model = CpdModel::new(vec![C64::new(0.0, 0.0); r], factors)?;
        return Ok(CpdFit {
            model,
            iterations: 0,
            residual_history: vec![0.0],
            relative_residual: 0.0,
            converged: true,
            regularized: false,
            best_restart: 0,
        });
    }
    let mut prev = f64::INFINITY;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let mut last_mttkrp = CMatrix::zeros(0, 0);
        for n in 0..big_n {
            let kr = conj_khatri_rao_except(&factors, n);
            let m = &unfoldings[n] * kr;
            let mut h = CMatrix::from_element(r, r, C64::new(1.0, 0.0));
            for (k, g) in grams.iter().enumerate() {
                if k != n {
                    h.component_mul_assign(g);
                }
            }
            let h = h.conjugate();
            factors[n] = solve_normal(&m, &h, &mut regularized)?;
            grams[n] = factors[n].adjoint() * &factors[n];
            if n == big_n - 1 {
                last_mttkrp = m;
            }
        }
        let u = &factors[big_n - 1];
        let inner: C64 = u.iter().zip(last_mttkrp.iter()).map(|(a, b)| a * b.conj()).sum();
        let mut all = CMatrix::from_element(r, r, C64::new(1.0, 0.0));
        for g in &grams {
            all.component_mul_assign(g);
        }
        let xhat2: f64 = all.iter().map(|z| z.re).sum();
        let res = ((x2 - 2.0 * inner.re + xhat2).max(0.0) / x2).sqrt();
        history.push(res);
        if (prev - res).abs() < opts.tol {
            converged = true;
            break;
        }
        prev = res;
    }
    let model = CpdModel::new(vec![C64::new(1.0, 0.0); r], factors)?.normalized();
    let relative_residual = model.reconstruct().sub(y)?.norm() / x2.sqrt();
    Ok(CpdFit {
        model,
        iterations,
        residual_history: history,
        relative_residual,
        converged,
        regularized,
        best_restart: 0,
    })
}
