//! Tensor-train denoising and tensor unitary-ESPRIT parameter estimation for
//! FMCW MIMO radar data cubes.

pub mod decomp;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod linalg;
pub mod sim;
pub mod tensor;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use tensor::{contract, khatri_rao, kron, outer, CMatrix, ComplexTensor, IndexMap, RMatrix, C64};
