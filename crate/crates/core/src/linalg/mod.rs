//! Matrix factorizations used by the decomposition and estimation stages.
//!
//! SVD, QR and Hermitian eigendecomposition are backed by `nalgebra`; this
//! module fixes their gauge (the first significant entry of every
//! singular/eigen vector is real and positive, QR's `R` has a real positive
//! diagonal) and their ordering (descending). No randomness is used.

mod ssd;

pub use ssd::{ssd, SsdResult};

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, RMatrix, C64};

const SVD_MAX_ITERS: usize = 10_000;

/// Thin singular value decomposition `A = U diag(σ) V^H`.
#[derive(Debug, Clone)]
pub struct SvdResult<T: ComplexField<RealField = f64>> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> SvdResult<T> {
    /// `U diag(σ) V^H`.
    pub fn recompose(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (k, &s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.adjoint()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.sigma.len());
        self.sigma.truncate(k);
        self.u = self.u.columns(0, k).into_owned();
        self.v = self.v.columns(0, k).into_owned();
        self
    }

    /// Sum of the squared singular values past index `k`.
    pub fn tail_energy(&self, k: usize) -> f64 {
        self.sigma.iter().skip(k).map(|s| s * s).sum()
    }
}

fn check_finite<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, what: &str) -> Result<()> {
    if a.iter().all(|z| z.modulus().is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what}: non-finite entries")))
    }
}

/// Index of the first entry whose magnitude is significant relative to the
/// vector norm.
fn pivot_index<T: ComplexField<RealField = f64> + Copy>(col: &[T]) -> Option<usize> {
    let norm = col.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    col.iter().position(|z| z.modulus() > 1e-10 * norm)
}

/// Phase that rotates `z` onto the positive real axis, i.e. `conj(z)/|z|`.
fn unphase<T: ComplexField<RealField = f64> + Copy>(z: T) -> T {
    z.conjugate().unscale(z.modulus())
}

/// Scalars the factorizations accept: `f64` and `C64`.
pub trait Scalar: ComplexField<RealField = f64> + faer::traits::ComplexField<Real = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + faer::traits::ComplexField<Real = f64> + Copy> Scalar for T {}

/// `(U, σ, V)` of the thin SVD, σ descending, from faer. nalgebra's own SVD
/// is not used: its singular vectors do not reconstruct rank-deficient
/// inputs.
#[allow(clippy::type_complexity)]
fn raw_svd<T: Scalar>(a: &DMatrix<T>, vectors: bool) -> Result<(Option<DMatrix<T>>, Vec<f64>, Option<DMatrix<T>>)> {
    let (m, n) = a.shape();
    let fa = faer::Mat::<T>::from_fn(m, n, |i, j| a[(i, j)]);
    let fail = |_| Error::NumericFailure { what: "svd".into(), iterations: 0 };
    if !vectors {
        return Ok((None, fa.singular_values().map_err(fail)?, None));
    }
    let dec = fa.thin_svd().map_err(fail)?;
    let (u, v, s) = (dec.U(), dec.V(), dec.S().column_vector());
    let k = m.min(n);
    let sigma = (0..k).map(|i| <T as ComplexField>::real(s[i])).collect();
    Ok((Some(DMatrix::from_fn(m, k, |i, j| u[(i, j)])), sigma, Some(DMatrix::from_fn(n, k, |i, j| v[(i, j)]))))
}

/// Complex or real SVD with sorted singular values and fixed gauge.
pub fn svd<T: Scalar>(a: &DMatrix<T>) -> Result<SvdResult<T>> {
    check_finite(a, "svd")?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::invalid("svd of an empty matrix"));
    }
    let (u, raw, v) = raw_svd(a, true)?;
    let (u, v) = (u.expect("u requested"), v.expect("v requested"));
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let k = raw.len();
    let mut out_u = DMatrix::<T>::zeros(m, k);
    let mut out_v = DMatrix::<T>::zeros(n, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(raw[src]);
        let mut ucol = u.column(src).into_owned();
        let mut vcol = v.column(src).into_owned();
        if let Some(p) = pivot_index(ucol.as_slice()) {
            let ph = unphase(ucol[p]);
            ucol *= ph;
            vcol *= ph;
        }
        out_u.set_column(dst, &ucol);
        out_v.set_column(dst, &vcol);
    }
    Ok(SvdResult { u: out_u, sigma, v: out_v })
}

/// Leading `k` singular triplets.
pub fn truncated_svd<T: Scalar>(a: &DMatrix<T>, k: usize) -> Result<SvdResult<T>> {
    let min = a.nrows().min(a.ncols());
    if k == 0 || k > min {
        return Err(Error::invalid(format!("truncation rank {k} outside 1..={min}")));
    }
    Ok(svd(a)?.truncate(k))
}

/// Singular values only, descending.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Result<Vec<f64>> {
    check_finite(a, "singular_values")?;
    if a.is_empty() {
        return Err(Error::invalid("singular values of an empty matrix"));
    }
    let (_, mut s, _) = raw_svd(a, false)?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Numerical rank: number of singular values above `rel_tol·σ_max`.
pub fn numerical_rank<T: Scalar>(a: &DMatrix<T>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * top).count())
}

/// Thin QR: `Q` is `m × min(m,n)` with orthonormal columns, `R` is
/// `min(m,n) × n` upper triangular with a real nonnegative diagonal.
pub fn qr<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    check_finite(a, "qr")?;
    if a.is_empty() {
        return Err(Error::invalid("qr of an empty matrix"));
    }
    let dec = nalgebra::QR::new(a.clone());
    let mut q = dec.q();
    let mut r = dec.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        if d.modulus() > 0.0 {
            let ph = unphase(d);
            for z in r.row_mut(k).iter_mut() {
                *z *= ph;
            }
            for z in q.column_mut(k).iter_mut() {
                *z *= ph.conjugate();
            }
        }
    }
    Ok((q, r))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn herm_eig(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_finite(a, "herm_eig")?;
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("herm_eig needs a non-empty square matrix"));
    }
    let asym = (a - a.adjoint()).norm();
    if asym > 1e-8 * a.norm() {
        return Err(Error::invalid(format!("matrix is not Hermitian (‖A − A^H‖ = {asym:e})")));
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let dec = nalgebra::SymmetricEigen::try_new(herm, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericFailure { what: "herm_eig".into(), iterations: SVD_MAX_ITERS })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.eigenvalues[j].total_cmp(&dec.eigenvalues[i]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(dec.eigenvalues[src]);
        let mut col = dec.eigenvectors.column(src).into_owned();
        if let Some(p) = pivot_index(col.as_slice()) {
            col *= unphase(col[p]);
        }
        vecs.set_column(dst, &col);
    }
    Ok((vals, vecs))
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `rcond·σ_max` discarded. Also returns the retained rank.
pub fn pinv<T: Scalar>(a: &DMatrix<T>, rcond: f64) -> Result<(DMatrix<T>, usize)> {
    let s = svd(a)?;
    let top = s.sigma.first().copied().unwrap_or(0.0);
    let rank = s.sigma.iter().filter(|&&x| x > rcond * top && x > 0.0).count();
    let mut vs = s.v.columns(0, rank).into_owned();
    for k in 0..rank {
        vs.column_mut(k).unscale_mut(s.sigma[k]);
    }
    Ok((vs * s.u.columns(0, rank).adjoint(), rank))
}

/// Real part of a complex matrix.
pub fn real_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.re)
}

/// Imaginary part of a complex matrix.
pub fn imag_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.im)
}

/// Promotes a real matrix to complex.
pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

/// Column vector as a `DVector`.
pub fn column<T: ComplexField + Copy>(a: &DMatrix<T>, k: usize) -> DVector<T> {
    a.column(k).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_error(q: &CMatrix) -> f64 {
        (q.adjoint() * q - CMatrix::identity(q.ncols(), q.ncols())).norm()
    }

    #[test]
    fn svd_of_diagonal() {
        let a = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(3.0, 0.0)]));
        let s = svd(&a).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-14 && (s.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_random_is_orthonormal_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, n) in [(4, 6), (6, 4), (1, 5), (5, 1)] {
            let a = random_matrix(&mut rng, m, n);
            let s = svd(&a).unwrap();
            assert!(orthonormality_error(&s.u) <= 1e-12);
            assert!(orthonormality_error(&s.v) <= 1e-12);
            assert!((s.recompose() - &a).norm() <= 1e-10 * a.norm());
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..s.sigma.len() {
                let p = pivot_index(s.u.column(k).as_slice()).unwrap();
                assert!(s.u[(p, k)].im.abs() < 1e-14 && s.u[(p, k)].re > 0.0);
            }
        }
    }

    #[test]
    fn svd_of_rank_deficient_wide_and_tall_matrices_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let low = random_matrix(&mut rng, 4, 3) * random_matrix(&mut rng, 3, 512);
            for a in [low.clone(), low.adjoint()] {
                let s = svd(&a).unwrap();
                assert!(rel_err(&s.recompose(), &a) <= 1e-12, "{} {}x{}", rel_err(&s.recompose(), &a), a.nrows(), a.ncols());
                assert!(orthonormality_error(&s.u.columns(0, 3).into_owned()) <= 1e-12);
                assert!(orthonormality_error(&s.v.columns(0, 3).into_owned()) <= 1e-12);
                let sv = singular_values(&a).unwrap();
                for (x, y) in sv.iter().zip(&s.sigma) {
                    assert!((x - y).abs() <= 1e-12 * sv[0]);
                }
            }
            let real = RMatrix::from_fn(4, 512, |i, j| low[(i, j)].re);
            let s = svd(&real).unwrap();
            assert!((s.recompose() - &real).norm() <= 1e-12 * real.norm());
        }
    }

    #[test]
    fn svd_detects_known_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 6, 2) * random_matrix(&mut rng, 2, 7);
        let s = svd(&a).unwrap();
        assert!(s.sigma[2] / s.sigma[0] <= 1e-12);
        assert_eq!(numerical_rank(&a, 1e-8).unwrap(), 2);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(svd(&a).is_err());
    }

    #[test]
    fn truncated_svd_eckart_young() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 8, 8);
        let full = svd(&a).unwrap();
        let t = truncated_svd(&a, 3).unwrap();
        let resid = (&a - t.recompose()).norm_squared();
        assert!((resid - full.tail_energy(3)).abs() <= 1e-10 * a.norm_squared());
        let all = truncated_svd(&a, 8).unwrap();
        assert!((all.recompose() - full.recompose()).norm() <= 1e-12 * a.norm());
        let r1 = random_matrix(&mut rng, 5, 1) * random_matrix(&mut rng, 1, 4);
        assert!(rel_err(&truncated_svd(&r1, 1).unwrap().recompose(), &r1) <= 1e-12);
        assert!(truncated_svd(&a, 0).is_err());
        assert!(truncated_svd(&a, 9).is_err());
    }

    #[test]
    fn qr_cases() {
        let i = CMatrix::identity(3, 3);
        let (q, r) = qr(&i).unwrap();
        assert!((q - &i).norm() < 1e-14 && (r - &i).norm() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 6, 3);
        let (q, r) = qr(&a).unwrap();
        assert_eq!(q.shape(), (6, 3));
        assert!(orthonormality_error(&q) <= 1e-12);
        assert!(rel_err(&(&q * &r), &a) <= 1e-10);
        for k in 0..3 {
            assert!(r[(k, k)].im.abs() < 1e-14 && r[(k, k)].re >= 0.0);
        }

        // upper triangular input: Q is a diagonal phase matrix
        let mut u = random_matrix(&mut rng, 3, 3);
        for row in 0..3 {
            for col in 0..row {
                u[(row, col)] = C64::new(0.0, 0.0);
            }
        }
        let (q, _) = qr(&u).unwrap();
        for row in 0..3 {
            for col in 0..3 {
                if row != col {
                    assert!(q[(row, col)].norm() < 1e-12);
                } else {
                    assert!((q[(row, col)].norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn herm_eig_cases() {
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]));
        let (vals, _) = herm_eig(&d).unwrap();
        assert_eq!(vals.len(), 2);
        assert!((vals[0] - 2.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_matrix(&mut rng, 4, 1) * random_matrix(&mut rng, 1, 16);
        let delta = &c * c.adjoint() / C64::new(16.0, 0.0);
        let (vals, _) = herm_eig(&delta).unwrap();
        assert!(vals[0] > 0.0);
        assert!(vals[1..].iter().all(|v| v.abs() <= 1e-12 * vals[0]));

        let b = random_matrix(&mut rng, 5, 5);
        let h = &b + b.adjoint();
        let (vals, vecs) = herm_eig(&h).unwrap();
        let trace: f64 = (0..5).map(|k| h[(k, k)].re).sum();
        assert!((trace - vals.iter().sum::<f64>()).abs() <= 1e-10 * h.norm());
        for k in 0..5 {
            let v = vecs.column(k);
            assert!((&h * v - v * C64::new(vals[k], 0.0)).norm() <= 1e-9 * h.norm());
        }
        assert!(herm_eig(&b).is_err());
    }

    #[test]
    fn pinv_of_tall_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 5, 3);
        let (p, rank) = pinv(&a, 1e-12).unwrap();
        assert_eq!(rank, 3);
        assert!((&p * &a - CMatrix::identity(3, 3)).norm() <= 1e-10);
    }

    #[test]
    fn factorizations_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 5, 4);
        let s1 = svd(&a).unwrap();
        let s2 = svd(&a).unwrap();
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.sigma, s2.sigma);
    }
}
