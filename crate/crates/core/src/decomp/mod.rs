//! Low-rank tensor models and the decompositions that produce them.

mod cpd;
mod mdl;
mod store;
mod tt;

pub use cpd::{cpd_als, cpd_als_with, AlsOptions, CpdFit};
pub use mdl::{covariance_eigenvalues, mdl_curve, mdl_rank, mdl_rank_with, MdlDiagnostics, MdlVariant, EIGEN_FLOOR};
pub use store::{load_cpd, load_tt, save_cpd, save_tt};
pub use tt::{cpd_to_tt, tt_mdl, tt_mdl_with, tt_recompress, TtMdlOptions, TtMdlResult, TtStatus};

use crate::error::{Error, Result};
use crate::khatri_rao;
use crate::tensor::{CMatrix, ComplexTensor, C64};

/// Tensor train: cores `𝒢_n` of dims `[T_{n−1}, I_n, T_n]` with
/// `T_0 = T_N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTModel {
    cores: Vec<ComplexTensor>,
}

impl TTModel {
    pub fn new(cores: Vec<ComplexTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::invalid("a tensor train needs at least one core"));
        }
        for (k, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(Error::shape(format!("core {k} has order {}, expected 3", c.order())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[2] != 1 {
            return Err(Error::shape("boundary ranks must be 1"));
        }
        for k in 1..cores.len() {
            if cores[k - 1].dims()[2] != cores[k].dims()[0] {
                return Err(Error::shape(format!(
                    "rank mismatch between cores {} and {k}: {} vs {}",
                    k - 1,
                    cores[k - 1].dims()[2],
                    cores[k].dims()[0]
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[ComplexTensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<ComplexTensor> {
        self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Full rank vector `[T_0, T_1, …, T_N]`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.dims()[2]));
        r
    }

    /// Interior ranks `[T_1, …, T_{N−1}]`.
    pub fn bond_ranks(&self) -> Vec<usize> {
        let r = self.ranks();
        r[1..r.len() - 1].to_vec()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Number of stored complex entries.
    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(ComplexTensor::len).sum()
    }

    /// Full tensor by left-to-right contraction of the chain.
    pub fn reconstruct(&self) -> ComplexTensor {
        let first = &self.cores[0];
        let mut acc = first.as_matrix(first.dims()[1], first.dims()[2]);
        for core in &self.cores[1..] {
            let [t0, i, t1] = [core.dims()[0], core.dims()[1], core.dims()[2]];
            let rows = acc.nrows();
            let prod = acc * core.as_matrix(t0, i * t1);
            acc = CMatrix::from_column_slice(rows * i, t1, prod.as_slice());
        }
        ComplexTensor::new(self.dims(), acc.as_slice().to_vec()).expect("chain dims are consistent")
    }

    /// One entry as the product of lateral slices `𝒢_1(:, i_1, :) ⋯ 𝒢_N(:, i_N, :)`.
    pub fn element(&self, idx: &[usize]) -> C64 {
        assert_eq!(idx.len(), self.order());
        let mut row = vec![C64::new(1.0, 0.0)];
        for (core, &i) in self.cores.iter().zip(idx) {
            let [t0, _, t1] = [core.dims()[0], core.dims()[1], core.dims()[2]];
            row = (0..t1)
                .map(|b| (0..t0).map(|a| row[a] * core.get(&[a, i, b])).sum())
                .collect();
        }
        row[0]
    }
}

/// Canonical polyadic model `Σ_r α_r u_{1,r} ∘ ⋯ ∘ u_{N,r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpdModel {
    weights: Vec<C64>,
    factors: Vec<CMatrix>,
}

impl CpdModel {
    pub fn new(weights: Vec<C64>, factors: Vec<CMatrix>) -> Result<Self> {
        let r = weights.len();
        if r == 0 || factors.is_empty() {
            return Err(Error::invalid("CPD needs at least one component and one factor"));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.ncols() != r || f.nrows() == 0 {
                return Err(Error::shape(format!(
                    "factor {k} is {}×{}, expected I×{r}",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(Self { weights, factors })
    }

    /// Same tensor with unit-norm factor columns; norms go into the weights.
    pub fn normalized(&self) -> Self {
        let mut weights = self.weights.clone();
        let mut factors = self.factors.clone();
        for (r, w) in weights.iter_mut().enumerate() {
            for f in factors.iter_mut() {
                let n = f.column(r).norm();
                if n > 0.0 {
                    f.column_mut(r).unscale_mut(n);
                    *w *= n;
                }
            }
        }
        Self { weights, factors }
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Full tensor via `X_⟨1⟩ = U_1 diag(α) (U_N ⊙ ⋯ ⊙ U_2)^T`.
    pub fn reconstruct(&self) -> ComplexTensor {
        let mut left = self.factors[0].clone();
        for (r, &w) in self.weights.iter().enumerate() {
            for z in left.column_mut(r).iter_mut() {
                *z *= w;
            }
        }
        let dims = self.dims();
        if self.order() == 1 {
            let v: Vec<C64> = (0..dims[0]).map(|i| left.row(i).iter().sum()).collect();
            return ComplexTensor::new(dims, v).expect("valid dims");
        }
        let mut right = self.factors[self.order() - 1].clone();
        for f in self.factors[1..self.order() - 1].iter().rev() {
            right = khatri_rao(&right, f).expect("equal column counts");
        }
        let m = left * right.transpose();
        ComplexTensor::new(dims, m.as_slice().to_vec()).expect("valid dims")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_ones_cores_give_constant_tensor() {
        let one = C64::new(1.0, 0.0);
        let cores = vec![
            ComplexTensor::new(vec![1, 2, 2], vec![one; 4]).unwrap(),
            ComplexTensor::new(vec![2, 3, 2], vec![one; 12]).unwrap(),
            ComplexTensor::new(vec![2, 2, 1], vec![one; 4]).unwrap(),
        ];
        let t = TTModel::new(cores).unwrap().reconstruct();
        assert_eq!(t.dims(), &[2, 3, 2]);
        assert!(t.data().iter().all(|&z| (z - C64::new(4.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn chain_reconstruction_matches_slice_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ranks = [1, 2, 3, 2, 1];
        let dims = [3, 4, 2, 5];
        let cores: Vec<ComplexTensor> =
            (0..4).map(|k| random_tensor(&mut rng, &[ranks[k], dims[k], ranks[k + 1]])).collect();
        let tt = TTModel::new(cores).unwrap();
        let full = tt.reconstruct();
        use rand::Rng;
        for _ in 0..100 {
            let idx: Vec<usize> = dims.iter().map(|&d| rng.random_range(0..d)).collect();
            let (a, b) = (full.get(&idx), tt.element(&idx));
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
        assert_eq!(tt.ranks(), ranks.to_vec());
        assert_eq!(tt.bond_ranks(), vec![2, 3, 2]);
    }

    #[test]
    fn chain_contraction_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g1 = random_tensor(&mut rng, &[3, 2]);
        let g2 = random_tensor(&mut rng, &[2, 4, 3]);
        let g3 = random_tensor(&mut rng, &[3, 5]);
        let left = crate::contract(&crate::contract(&g1, &g2, 1, 0).unwrap(), &g3, 2, 0).unwrap();
        let right = crate::contract(&g1, &crate::contract(&g2, &g3, 2, 0).unwrap(), 1, 0).unwrap();
        let rel = left.sub(&right).unwrap().norm() / left.norm();
        assert!(rel <= 1e-12);
        let tt = TTModel::new(vec![
            g1.reshape(&[1, 3, 2]).unwrap(),
            g2,
            g3.reshape(&[3, 5, 1]).unwrap(),
        ])
        .unwrap();
        assert!(tt.reconstruct().sub(&left).unwrap().norm() <= 1e-12 * left.norm());
    }

    #[test]
    fn rejects_inconsistent_ranks() {
        let c1 = ComplexTensor::zeros(&[1, 2, 2]);
        let c2 = ComplexTensor::zeros(&[3, 2, 1]);
        assert!(TTModel::new(vec![c1, c2]).is_err());
        assert!(TTModel::new(vec![ComplexTensor::zeros(&[2, 2, 1])]).is_err());
    }

    #[test]
    fn cpd_reconstruct_matches_outer_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = [2, 3, 4];
        let factors: Vec<CMatrix> = dims.iter().map(|&d| random_matrix(&mut rng, d, 2)).collect();
        let w = vec![C64::new(1.0, 0.5), C64::new(-2.0, 0.0)];
        let m = CpdModel::new(w.clone(), factors.clone()).unwrap();
        let t = m.reconstruct();
        let oracle = ComplexTensor::from_fn(&dims, |i| {
            (0..2).map(|r| w[r] * factors[0][(i[0], r)] * factors[1][(i[1], r)] * factors[2][(i[2], r)]).sum()
        });
        assert!(t.sub(&oracle).unwrap().norm() <= 1e-12 * oracle.norm());
        let n = m.normalized();
        assert!(n.reconstruct().sub(&oracle).unwrap().norm() <= 1e-12 * oracle.norm());
        for f in n.factors() {
            for r in 0..2 {
                assert!((f.column(r).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
