//! Minimum-description-length model order selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::tensor::{CMatrix, C64};

/// Relative floor applied to eigenvalues before taking logarithms.
pub const EIGEN_FLOOR: f64 = 1e-15;

/// Which form of the likelihood term to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdlVariant {
    /// Geometric over arithmetic mean of the `M − t` trailing eigenvalues.
    #[default]
    Classical,
    /// Geometric mean taken with a fixed exponent `1/M` instead of
    /// `1/(M − t)`; kept only for comparison, it is not consistent.
    FixedExponent,
}

/// Everything the criterion looked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlDiagnostics {
    /// Floored eigenvalues of the sample covariance, descending.
    pub eigenvalues: Vec<f64>,
    /// Criterion value for each candidate `t = 0..M−1`.
    pub curve: Vec<f64>,
    pub rank: usize,
    /// Snapshot dimension `M` and snapshot count `N` actually used.
    pub m: usize,
    pub n: usize,
    /// True when the input had more rows than columns and was transposed.
    pub transposed: bool,
    /// True for an all-zero input.
    pub degenerate: bool,
}

/// Eigenvalues of `Δ = C̄ C̄^H / N`, where `C̄` is `C` with its mean column
/// subtracted from every column, obtained as `σ_k² / N` from the singular
/// values of `C̄`. If `C` has more rows than columns it is transposed first
/// so that the eigenproblem is the smaller one.
pub fn covariance_eigenvalues(c: &CMatrix) -> Result<(Vec<f64>, usize, usize, bool)> {
    let transposed = c.nrows() > c.ncols();
    let c = if transposed { c.transpose() } else { c.clone() };
    let (m, n) = c.shape();
    let mut centered = c;
    for row in 0..m {
        let mean: C64 = centered.row(row).iter().sum::<C64>() / n as f64;
        for z in centered.row_mut(row).iter_mut() {
            *z -= mean;
        }
    }
    let sv = singular_values(&centered)?;
    let mut eig: Vec<f64> = sv.iter().map(|s| s * s / n as f64).collect();
    eig.resize(m, 0.0);
    Ok((eig, m, n, transposed))
}

/// Criterion curve over `t = 0..M−1` for descending eigenvalues `λ` and
/// snapshot count `n`.
pub fn mdl_curve(lambda: &[f64], n: usize, variant: MdlVariant) -> Vec<f64> {
    let m = lambda.len();
    let ln_n = (n as f64).ln();
    (0..m)
        .map(|t| {
            let tail = &lambda[t..];
            let k = tail.len() as f64;
            let sum_ln: f64 = tail.iter().map(|l| l.ln()).sum();
            let arith = tail.iter().sum::<f64>() / k;
            let log_ratio = match variant {
                MdlVariant::Classical => sum_ln / k - arith.ln(),
                MdlVariant::FixedExponent => sum_ln / m as f64 - arith.ln(),
            };
            -(n as f64) * k * log_ratio + 0.5 * t as f64 * (2.0 * m as f64 - t as f64) * ln_n
        })
        .collect()
}

/// Model order of `C` by the classical criterion.
pub fn mdl_rank(c: &CMatrix) -> Result<(usize, MdlDiagnostics)> {
    mdl_rank_with(c, MdlVariant::Classical)
}

/// Model order of `C` with an explicit criterion variant. The returned rank is
/// the argmin of the recorded curve, in `0..M`.
pub fn mdl_rank_with(c: &CMatrix, variant: MdlVariant) -> Result<(usize, MdlDiagnostics)> {
    if c.nrows() < 2 || c.ncols() < 2 {
        return Err(Error::invalid(format!(
            "MDL needs at least a 2 × 2 matrix, got {} × {}",
            c.nrows(),
            c.ncols()
        )));
    }
    let (raw, m, n, transposed) = covariance_eigenvalues(c)?;
    let top = raw[0];
    if top <= 0.0 {
        let diag = MdlDiagnostics { eigenvalues: raw, curve: Vec::new(), rank: 0, m, n, transposed, degenerate: true };
        return Ok((0, diag));
    }
    let floor = EIGEN_FLOOR * top;
    let lambda: Vec<f64> = raw.iter().map(|&l| l.max(floor)).collect();
    let curve = mdl_curve(&lambda, n, variant);
    let rank = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| t)
        .unwrap_or(0);
    Ok((rank, MdlDiagnostics { eigenvalues: lambda, curve, rank, m, n, transposed, degenerate: false }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_c64, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `t` signal components with unit-power random-phase sources plus
    /// white noise at the given per-element SNR.
    fn snapshot_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, t: usize, snr_db: f64) -> CMatrix {
        let noise = random_matrix(rng, m, n) * C64::new((0.5f64).sqrt(), 0.0);
        if t == 0 {
            return noise;
        }
        let a = random_matrix(rng, m, t) * C64::new((0.5f64).sqrt(), 0.0);
        let s = CMatrix::from_fn(t, n, |_, _| random_c64(rng) * (0.5f64).sqrt());
        let amp = 10f64.powf(snr_db / 20.0);
        a * s * C64::new(amp, 0.0) + noise
    }

    #[test]
    fn rank_one_at_forty_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = snapshot_matrix(&mut rng, 8, 256, 1, 40.0);
        let (r, d) = mdl_rank(&c).unwrap();
        assert_eq!(r, 1);
        assert_eq!(d.curve.len(), 8);
        let argmin = d.curve.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmin, d.rank);
    }

    #[test]
    fn pure_noise_is_rank_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hits = (0..200)
            .filter(|_| mdl_rank(&snapshot_matrix(&mut rng, 8, 256, 0, 0.0)).unwrap().0 == 0)
            .count();
        assert!(hits >= 190, "{hits}/200");
    }

    #[test]
    fn three_components_at_twenty_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = snapshot_matrix(&mut rng, 8, 256, 3, 20.0);
        assert_eq!(mdl_rank(&c).unwrap().0, 3);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let (r, d) = mdl_rank(&CMatrix::zeros(4, 10)).unwrap();
        assert_eq!(r, 0);
        assert!(d.degenerate);
        assert!(mdl_rank(&CMatrix::zeros(1, 10)).is_err());
    }

    #[test]
    fn tall_input_is_transposed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = snapshot_matrix(&mut rng, 8, 256, 2, 30.0).transpose();
        let (r, d) = mdl_rank(&c).unwrap();
        assert!(d.transposed);
        assert_eq!((d.m, d.n), (8, 256));
        assert_eq!(r, 2);
    }

    #[test]
    fn eigenvalues_match_covariance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_matrix(&mut rng, 5, 40);
        let (eig, _, n, _) = covariance_eigenvalues(&c).unwrap();
        let mean = CMatrix::from_fn(5, 1, |r, _| c.row(r).iter().sum::<C64>() / 40.0);
        let centered = CMatrix::from_fn(5, 40, |r, k| c[(r, k)] - mean[(r, 0)]);
        let delta = &centered * centered.adjoint() / C64::new(n as f64, 0.0);
        let (oracle, _) = crate::linalg::herm_eig(&delta).unwrap();
        for (a, b) in eig.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * oracle[0]);
        }
    }

    #[test]
    fn fixed_exponent_variant_differs() {
        let lambda = [5.0, 1.0, 0.9, 1.1];
        let a = mdl_curve(&lambda, 100, MdlVariant::Classical);
        let b = mdl_curve(&lambda, 100, MdlVariant::FixedExponent);
        assert_eq!(a[0], b[0]);
        assert_ne!(a[1], b[1]);
    }
}
