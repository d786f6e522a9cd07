//! Forward-backward averaging into a real-valued tensor.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, ComplexTensor, C64, ZERO};

use super::RealTensor;

/// Relative imaginary residue tolerated before the cast to real.
pub const FBA_RESIDUE_TOL: f64 = 1e-10;

/// Left-Π-real unitary matrix of size `n`. Even sizes use
/// `[[I, jI], [J, −jJ]] / √2`; odd sizes insert a centre row and column with
/// a single `√2` entry. Satisfies `J_n Q_n = Q_n^*`.
pub fn unitary_q(n: usize) -> CMatrix {
    assert!(n > 0, "unitary_q needs n ≥ 1");
    let h = n / 2;
    let s = FRAC_1_SQRT_2;
    let mut q = CMatrix::zeros(n, n);
    for k in 0..h {
        q[(k, k)] = C64::new(s, 0.0);
        q[(n - 1 - k, k)] = C64::new(s, 0.0);
        q[(k, n - h + k)] = C64::new(0.0, s);
        q[(n - 1 - k, n - h + k)] = C64::new(0.0, -s);
    }
    if n % 2 == 1 {
        q[(h, h)] = C64::new(1.0, 0.0);
    }
    q
}

/// Exchange matrix `J_n` (ones on the anti-diagonal).
pub fn exchange(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| if r + c + 1 == n { C64::new(1.0, 0.0) } else { ZERO })
}

/// Centro-Hermitian extension along the last mode followed by the unitary
/// map of every mode. For a smoothed tensor of dims `[J_1, …, J_N, J_{N+1}]`
/// the output has dims `[J_1, …, J_N, 2 J_{N+1}]` and norm `√2 ‖y_ss‖`.
///
/// Fails with a numeric error if the imaginary residue exceeds
/// [`FBA_RESIDUE_TOL`] relative to the output norm.
pub fn fba(y_ss: &ComplexTensor) -> Result<RealTensor> {
    let (out, residue) = fba_complex(y_ss)?;
    let total = out.norm();
    if residue > FBA_RESIDUE_TOL * total.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericFailure { what: format!("fba imaginary residue {:.3e}", residue / total), iterations: 0 });
    }
    RealTensor::new(out.dims().to_vec(), out.data().iter().map(|z| z.re).collect())
}

/// The mapped tensor before the real cast, with its imaginary-part norm.
pub(crate) fn fba_complex(y_ss: &ComplexTensor) -> Result<(ComplexTensor, f64)> {
    let order = y_ss.order();
    if order < 2 {
        return Err(Error::invalid("fba needs a tensor of order ≥ 2"));
    }
    let last = order - 1;
    let backward = y_ss.conj().flip_all();
    let mut ch = ComplexTensor::concat(&[y_ss.clone(), backward], last)?;
    for mode in 0..last {
        let q = unitary_q(ch.dims()[mode]);
        ch = ch.mode_product(&q.adjoint(), mode)?;
    }
    // last mode: ×_last Q^T applied column-wise without forming Q
    let dims = ch.dims().to_vec();
    let prefix: usize = dims[..last].iter().product();
    let n = dims[last] / 2;
    let src = ch.data();
    let mut out = vec![ZERO; src.len()];
    let col = |k: usize| &src[k * prefix..(k + 1) * prefix];
    for k in 0..n {
        let (a, b) = (col(k), col(2 * n - 1 - k));
        let dst = &mut out[k * prefix..(k + 1) * prefix];
        for ((d, x), y) in dst.iter_mut().zip(a).zip(b) {
            *d = (x + y) * FRAC_1_SQRT_2;
        }
        let dst = &mut out[(n + k) * prefix..(n + k + 1) * prefix];
        for ((d, x), y) in dst.iter_mut().zip(a).zip(b) {
            let diff = (x - y) * FRAC_1_SQRT_2;
            *d = C64::new(-diff.im, diff.re);
        }
    }
    let residue = out.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    Ok((ComplexTensor::new(dims, out)?, residue))
}
