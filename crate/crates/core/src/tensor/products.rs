use crate::error::{Error, Result};

use super::{increment, CMatrix, ComplexTensor, C64};

/// Column-wise Kronecker product `A ⊙ B`: column `r` is `a_r ⊗ b_r`, so the
/// row index of `B` runs fastest.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::shape(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    Ok(CMatrix::from_fn(ra * rb, a.ncols(), |row, col| a[(row / rb, col)] * b[(row % rb, col)]))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (rb, cb) = (b.nrows(), b.ncols());
    CMatrix::from_fn(a.nrows() * rb, a.ncols() * cb, |row, col| {
        a[(row / rb, col / cb)] * b[(row % rb, col % cb)]
    })
}

/// Rank-one tensor `v_1 ∘ v_2 ∘ ⋯ ∘ v_N`.
pub fn outer(vs: &[Vec<C64>]) -> Result<ComplexTensor> {
    if vs.is_empty() {
        return Err(Error::invalid("outer product of no vectors"));
    }
    let dims: Vec<usize> = vs.iter().map(Vec::len).collect();
    if dims.contains(&0) {
        return Err(Error::invalid("outer product with an empty vector"));
    }
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        data.push(idx.iter().zip(vs).map(|(&i, v)| v[i]).product());
        increment(&mut idx, &dims);
    }
    ComplexTensor::new(dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn khatri_rao_of_single_columns_is_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 1);
        let b = random_matrix(&mut rng, 2, 1);
        assert_eq!(khatri_rao(&a, &b).unwrap(), kron(&a, &b));
    }

    #[test]
    fn khatri_rao_gram_is_hadamard_of_grams() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 3, 2);
        let kr = khatri_rao(&a, &b).unwrap();
        let lhs = kr.transpose() * &kr;
        let rhs = (a.transpose() * &a).component_mul(&(b.transpose() * &b));
        assert!(rel_err(&lhs, &rhs) <= 1e-12);
        assert!(khatri_rao(&a, &random_matrix(&mut rng, 3, 3)).is_err());
    }

    #[test]
    fn outer_indexing() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let b = vec![C64::new(0.0, 1.0), C64::new(3.0, 0.0), C64::new(-1.0, 0.0)];
        let t = outer(&[a.clone(), b.clone()]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(t.get(&[i, j]), a[i] * b[j]);
            }
        }
    }
}
