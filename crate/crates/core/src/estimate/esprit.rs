//! Real-valued shift invariance: signal subspace, `Υ_n` solves and their
//! joint eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{imag_part, pinv, real_part, ssd, svd};
use crate::tensor::{CMatrix, RMatrix, C64};

use super::fba::unitary_q;
use super::RealTensor;

/// Singular values below this fraction of the largest count as zero when
/// checking that the requested subspace exists.
pub const SUBSPACE_RANK_TOL: f64 = 1e-9;

/// Relative cut-off of the pseudo-inverse in the `Υ_n` solves.
pub const UPSILON_RCOND: f64 = 1e-10;

/// Dominant rank-`r` subspace of the last-mode unfolding of `yfb`: the
/// leading left singular vectors of the `∏J_n × 2J_{N+1}` matrix, folded to
/// dims `[J_1, …, J_N, r]`. Also returns all singular values, descending.
pub fn signal_subspace(yfb: &RealTensor, r: usize) -> Result<(RealTensor, Vec<f64>)> {
    let dims = yfb.dims();
    let order = dims.len();
    if order < 2 {
        return Err(Error::invalid("signal subspace needs a tensor of order ≥ 2"));
    }
    let spatial = &dims[..order - 1];
    let cols = dims[order - 1];
    let smallest = spatial.iter().copied().min().unwrap_or(0);
    if r == 0 || r > smallest || r > cols {
        return Err(Error::invalid(format!(
            "model order {r} must lie in 1..={} (smallest window {smallest}, {cols} columns)",
            smallest.min(cols)
        )));
    }
    let m = yfb.unfold_last();
    let rows = m.nrows();
    let dec = svd(&m)?;
    let sigma = dec.sigma.clone();
    let top = sigma.first().copied().unwrap_or(0.0);
    let available = sigma.iter().filter(|&&s| s > SUBSPACE_RANK_TOL * top && s > 0.0).count();
    if available < r {
        return Err(Error::RankDeficient { requested: r, available });
    }
    let data = dec.u.columns(0, r).iter().copied().collect::<Vec<f64>>();
    debug_assert_eq!(data.len(), rows * r);
    let mut g_dims = spatial.to_vec();
    g_dims.push(r);
    Ok((RealTensor::new(g_dims, data)?, sigma))
}

/// `K^{(1)}` and `K^{(2)}`: real and imaginary parts of
/// `Q_{J−1}^H [I_{J−1}, 0] Q_J`.
pub fn selection_pair(j: usize) -> (RMatrix, RMatrix) {
    assert!(j >= 2);
    let sel = CMatrix::from_fn(j - 1, j, |r, c| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let k = unitary_q(j - 1).adjoint() * sel * unitary_q(j);
    (real_part(&k), imag_part(&k))
}

/// Per-mode shift-invariance operators.
#[derive(Debug, Clone)]
pub struct UpsilonSet {
    /// `None` for a mode whose window is 1 (no shift to exploit).
    pub mats: Vec<Option<RMatrix>>,
    /// `‖A Υ^T − B‖_F / ‖B‖_F` of each solve.
    pub residuals: Vec<Option<f64>>,
    /// True where the least-squares matrix lost rank and the
    /// pseudo-inverse dropped directions.
    pub regularized: Vec<bool>,
}

impl UpsilonSet {
    pub fn unobservable_modes(&self) -> Vec<usize> {
        self.mats.iter().enumerate().filter(|(_, m)| m.is_none()).map(|(n, _)| n).collect()
    }
}

/// Least-squares solution of `𝒢 ×_n K^{(1)} ×_{N+1} Υ_n ≈ 𝒢 ×_n K^{(2)}` for
/// every spatial mode `n`.
pub fn solve_upsilon(g: &RealTensor) -> Result<UpsilonSet> {
    let dims = g.dims();
    let order = dims.len();
    if order < 2 {
        return Err(Error::invalid("subspace tensor needs order ≥ 2"));
    }
    let r = dims[order - 1];
    let mut out = UpsilonSet { mats: Vec::new(), residuals: Vec::new(), regularized: Vec::new() };
    for (n, &j) in dims[..order - 1].iter().enumerate() {
        if j < 2 {
            log::warn!("mode {n} has window 1 and is unobservable");
            out.mats.push(None);
            out.residuals.push(None);
            out.regularized.push(false);
            continue;
        }
        let (k1, k2) = selection_pair(j);
        let a = g.mode_product(&k1, n)?.unfold_last();
        let b = g.mode_product(&k2, n)?.unfold_last();
        let (a_pinv, rank) = pinv(&a, UPSILON_RCOND)?;
        let ups_t = a_pinv * &b;
        let bn = b.norm();
        let resid = if bn > 0.0 { (&a * &ups_t - &b).norm() / bn } else { 0.0 };
        if rank < r {
            log::warn!("mode {n}: least-squares matrix has rank {rank} < {r}");
        }
        out.mats.push(Some(ups_t.transpose()));
        out.residuals.push(Some(resid));
        out.regularized.push(rank < r);
    }
    Ok(out)
}

/// Eigenvalues of all observable `Υ_n`, paired across modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEigs {
    /// `tuples[r][n]` is the `r`-th eigenvalue of `Υ_n`; `None` for an
    /// unobservable mode.
    pub tuples: Vec<Vec<Option<f64>>>,
    pub sweeps: usize,
    pub converged: bool,
    pub residual: f64,
}

/// SSD stopping tolerance relative to the input energy.
pub const SSD_TOL: f64 = 1e-14;
pub const SSD_MAX_SWEEPS: usize = 100;

pub fn joint_eigs(u: &UpsilonSet) -> Result<JointEigs> {
    let observed: Vec<(usize, &RMatrix)> =
        u.mats.iter().enumerate().filter_map(|(n, m)| m.as_ref().map(|m| (n, m))).collect();
    if observed.is_empty() {
        return Err(Error::invalid("no observable mode to estimate"));
    }
    let mats: Vec<RMatrix> = observed.iter().map(|(_, m)| (*m).clone()).collect();
    let res = ssd(&mats, SSD_TOL, SSD_MAX_SWEEPS)?;
    if !res.converged {
        log::warn!("ssd stopped after {} sweeps without converging", res.sweeps);
    }
    let r = mats[0].nrows();
    let tuples = (0..r)
        .map(|k| {
            let mut t = vec![None; u.mats.len()];
            for (slot, (n, _)) in observed.iter().enumerate() {
                t[*n] = Some(res.eigen_tuples[k][slot]);
            }
            t
        })
        .collect();
    Ok(JointEigs { tuples, sweeps: res.sweeps, converged: res.converged, residual: res.residual() })
}
