//! Helpers shared by unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::{CMatrix, ComplexTensor, C64};

pub fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_c64(rng))
}

pub fn random_tensor<R: Rng>(rng: &mut R, dims: &[usize]) -> ComplexTensor {
    ComplexTensor::from_fn(dims, |_| random_c64(rng))
}

pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
