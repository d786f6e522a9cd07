//! Tensor-train construction: TT-SVD with per-bond MDL ranks, the exact
//! CPD-to-TT embedding, and QR-based recompression.

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr, svd};
use crate::tensor::{CMatrix, ComplexTensor, C64};

use super::mdl::{mdl_rank_with, MdlDiagnostics, MdlVariant};
use super::{CpdModel, TTModel};

/// Knobs for [`tt_mdl_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TtMdlOptions {
    pub variant: MdlVariant,
    /// Optional cap on every bond rank.
    pub max_rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TtStatus {
    Ok,
    /// The first bond was judged pure noise; the output is all zeros.
    EmptySignal,
}

/// Output of TT-MDL denoising.
#[derive(Debug, Clone)]
pub struct TtMdlResult {
    pub model: TTModel,
    pub denoised: ComplexTensor,
    pub status: TtStatus,
    /// MDL diagnostics per bond (`None` where the unfolding had a single row
    /// or column and the rank was forced to 1).
    pub diagnostics: Vec<Option<MdlDiagnostics>>,
    /// Energy discarded at each bond, `Σ_{i>T_n} σ_i²`.
    pub truncation_energy: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TtMdlResult {
    /// `|‖y‖² − ‖denoised‖² − Σ discarded| / ‖y‖²`.
    pub fn energy_identity_error(&self, input: &ComplexTensor) -> f64 {
        let total = input.norm_sqr();
        if total == 0.0 {
            return 0.0;
        }
        let kept = self.denoised.norm_sqr();
        let cut: f64 = self.truncation_energy.iter().sum();
        (total - kept - cut).abs() / total
    }
}

/// TT-MDL denoising with default options.
pub fn tt_mdl(y: &ComplexTensor) -> Result<TtMdlResult> {
    tt_mdl_with(y, &TtMdlOptions::default())
}

/// Sequential truncated SVDs of the running iterate `C`, starting from the
/// `⟨1⟩` unfolding, each bond rank chosen by MDL on the centered iterate.
pub fn tt_mdl_with(y: &ComplexTensor, opts: &TtMdlOptions) -> Result<TtMdlResult> {
    let dims = y.dims().to_vec();
    let order = dims.len();
    if order < 2 {
        return Err(Error::invalid("TT-MDL needs a tensor of order at least 2"));
    }
    if y.data().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("TT-MDL input has non-finite entries"));
    }
    let mut cores = Vec::with_capacity(order);
    let mut diagnostics = Vec::with_capacity(order - 1);
    let mut truncation_energy = Vec::with_capacity(order - 1);
    let mut warnings = Vec::new();
    let mut prev_rank = 1usize;
    let mut c = CMatrix::from_column_slice(dims[0], y.len() / dims[0], y.data());

    for n in 0..order - 1 {
        let (m, cols) = c.shape();
        let mut rank = if m.min(cols) < 2 {
            diagnostics.push(None);
            1
        } else {
            let (r, d) = mdl_rank_with(&c, opts.variant)?;
            diagnostics.push(Some(d));
            r
        };
        if rank == 0 {
            if n == 0 {
                let msg = "no signal component found on the first bond; returning an all-zero estimate".to_string();
                info!("{msg}");
                warnings.push(msg);
                return Ok(empty_result(&dims, y.norm_sqr(), diagnostics, warnings));
            }
            let msg = format!("bond {} judged pure noise; keeping rank 1", n + 1);
            info!("{msg}");
            warnings.push(msg);
            rank = 1;
        }
        if let Some(cap) = opts.max_rank {
            rank = rank.min(cap.max(1));
        }
        let dec = svd(&c)?;
        rank = rank.min(dec.sigma.len());
        truncation_energy.push(dec.tail_energy(rank));
        let u = dec.u.columns(0, rank).into_owned();
        cores.push(ComplexTensor::new(vec![prev_rank, dims[n], rank], u.as_slice().to_vec())?);
        let mut c0 = dec.v.columns(0, rank).adjoint();
        for (k, &s) in dec.sigma[..rank].iter().enumerate() {
            for z in c0.row_mut(k).iter_mut() {
                *z *= s;
            }
        }
        let next_rows = rank * dims[n + 1];
        c = CMatrix::from_column_slice(next_rows, c0.len() / next_rows, c0.as_slice());
        prev_rank = rank;
    }
    cores.push(ComplexTensor::new(vec![prev_rank, dims[order - 1], 1], c.as_slice().to_vec())?);
    let model = TTModel::new(cores)?;
    let denoised = model.reconstruct();
    Ok(TtMdlResult { model, denoised, status: TtStatus::Ok, diagnostics, truncation_energy, warnings })
}

fn empty_result(
    dims: &[usize],
    energy: f64,
    diagnostics: Vec<Option<MdlDiagnostics>>,
    warnings: Vec<String>,
) -> TtMdlResult {
    let cores: Vec<ComplexTensor> = dims.iter().map(|&d| ComplexTensor::zeros(&[1, d, 1])).collect();
    let model = TTModel::new(cores).expect("unit ranks");
    let mut truncation_energy = vec![0.0; dims.len() - 1];
    truncation_energy[0] = energy;
    TtMdlResult {
        denoised: ComplexTensor::zeros(dims),
        model,
        status: TtStatus::EmptySignal,
        diagnostics,
        truncation_energy,
        warnings,
    }
}

/// Exact TT representation of a CPD model, with bond ranks
/// `min(R^n, R^{N−n})`.
///
/// With `n̄ = ⌈N/2⌉`, cores left of `n̄` carry the running multi-index
/// `(r_1, …, r_n)` (`r_1` fastest) on their right bond, cores right of `n̄`
/// carry `(r_n, …, r_N)` on their left bond, and core `n̄` holds `α_r u_{n̄,r}`
/// on the "diagonal" where all indices equal `r`.
pub fn cpd_to_tt(m: &CpdModel) -> Result<TTModel> {
    let big_n = m.order();
    let r = m.rank();
    if big_n < 2 {
        return Err(Error::invalid("CPD to TT needs order at least 2"));
    }
    let pow = |e: usize| -> Result<usize> {
        r.checked_pow(e as u32).ok_or_else(|| Error::invalid("TT rank overflows"))
    };
    // geometric "all indices equal" offset: 1 + R + … + R^{k−1}
    let diag_step = |k: usize| -> Result<usize> { (0..k).try_fold(0usize, |acc, e| Ok(acc + pow(e)?)) };
    let nbar = big_n.div_ceil(2); // 1-based
    let mut cores = Vec::with_capacity(big_n);
    for n in 1..=big_n {
        let u = &m.factors()[n - 1];
        let i_n = u.nrows();
        let core = if n < nbar {
            let (left, right) = (pow(n - 1)?, pow(n)?);
            let mut t = vec![C64::new(0.0, 0.0); left * i_n * right];
            for a in 0..left {
                for rr in 0..r {
                    let b = a + left * rr;
                    for i in 0..i_n {
                        t[a + left * (i + i_n * b)] = u[(i, rr)];
                    }
                }
            }
            ComplexTensor::new(vec![left, i_n, right], t)?
        } else if n == nbar {
            let (left, right) = (pow(n - 1)?, pow(big_n - n)?);
            let (sl, sr) = (diag_step(n - 1)?, diag_step(big_n - n)?);
            let mut t = vec![C64::new(0.0, 0.0); left * i_n * right];
            for rr in 0..r {
                let (a, b) = (rr * sl, rr * sr);
                for i in 0..i_n {
                    t[a + left * (i + i_n * b)] = m.weights()[rr] * u[(i, rr)];
                }
            }
            ComplexTensor::new(vec![left, i_n, right], t)?
        } else {
            let (left, right) = (pow(big_n - n + 1)?, pow(big_n - n)?);
            let mut t = vec![C64::new(0.0, 0.0); left * i_n * right];
            for b in 0..right {
                for rr in 0..r {
                    let a = rr + r * b;
                    for i in 0..i_n {
                        t[a + left * (i + i_n * b)] = u[(i, rr)];
                    }
                }
            }
            ComplexTensor::new(vec![left, i_n, right], t)?
        };
        cores.push(core);
    }
    TTModel::new(cores)
}

/// TT rounding: a left-to-right QR sweep makes every core left-orthogonal,
/// then a right-to-left sweep truncates each bond by SVD, keeping the
/// smallest rank with `‖discarded σ‖ ≤ ε ‖σ‖` (at least 1). The total error
/// is at most `ε √(N−1) ‖X‖`.
pub fn tt_recompress(model: &TTModel, epsilon: f64) -> Result<TTModel> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let mut cores: Vec<ComplexTensor> = model.cores().to_vec();
    let n = cores.len();
    for k in 0..n - 1 {
        let [t0, i, t1] = core_dims(&cores[k]);
        let (q, rfac) = qr(&cores[k].as_matrix(t0 * i, t1))?;
        let kept = q.ncols();
        cores[k] = ComplexTensor::new(vec![t0, i, kept], q.as_slice().to_vec())?;
        let [u0, ui, u1] = core_dims(&cores[k + 1]);
        let next = rfac * cores[k + 1].as_matrix(u0, ui * u1);
        cores[k + 1] = ComplexTensor::new(vec![kept, ui, u1], next.as_slice().to_vec())?;
    }
    for k in (1..n).rev() {
        let [t0, i, t1] = core_dims(&cores[k]);
        let dec = svd(&cores[k].as_matrix(t0, i * t1))?;
        let total: f64 = dec.sigma.iter().map(|s| s * s).sum();
        let limit = epsilon * epsilon * total;
        let mut rank = dec.sigma.len();
        while rank > 1 && dec.tail_energy(rank - 1) <= limit {
            rank -= 1;
        }
        let vh = dec.v.columns(0, rank).adjoint();
        cores[k] = ComplexTensor::new(vec![rank, i, t1], vh.as_slice().to_vec())?;
        let mut us = dec.u.columns(0, rank).into_owned();
        for (c, &s) in dec.sigma[..rank].iter().enumerate() {
            for z in us.column_mut(c).iter_mut() {
                *z *= s;
            }
        }
        let [p0, pi, _] = core_dims(&cores[k - 1]);
        let prev = cores[k - 1].as_matrix(p0 * pi, t0) * us;
        cores[k - 1] = ComplexTensor::new(vec![p0, pi, rank], prev.as_slice().to_vec())?;
    }
    TTModel::new(cores)
}

fn core_dims(c: &ComplexTensor) -> [usize; 3] {
    [c.dims()[0], c.dims()[1], c.dims()[2]]
}
