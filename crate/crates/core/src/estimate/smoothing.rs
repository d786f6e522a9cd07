//! Multidimensional spatial smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, ZERO};

/// Subarray sizes `T_n` for each mode of the data tensor. The shift counts
/// `L_n = I_n − T_n + 1` follow from the data dims.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingPlan {
    windows: Vec<usize>,
}

impl SmoothingPlan {
    pub fn new(windows: Vec<usize>) -> Result<Self> {
        if windows.is_empty() || windows.contains(&0) {
            return Err(Error::invalid(format!("smoothing windows must be ≥ 1, got {windows:?}")));
        }
        Ok(Self { windows })
    }

    /// Default windows for a 4D tensor from the bond ranks `[T_1, T_2, T_3]`
    /// of its tensor train: the last mode reuses `T_3`, every window is
    /// raised to at least 2 (so each mode stays observable) and capped at
    /// the mode size.
    pub fn from_tt_ranks(bond_ranks: &[usize], dims: &[usize]) -> Result<Self> {
        if bond_ranks.is_empty() || bond_ranks.len() + 1 != dims.len() {
            return Err(Error::shape(format!(
                "{} bond ranks do not match a tensor of order {}",
                bond_ranks.len(),
                dims.len()
            )));
        }
        let last = bond_ranks[bond_ranks.len() - 1];
        let windows = bond_ranks
            .iter()
            .chain(std::iter::once(&last))
            .zip(dims)
            .map(|(&t, &i)| t.max(2).min(i))
            .collect();
        Self::new(windows)
    }

    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    pub fn order(&self) -> usize {
        self.windows.len()
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if dims.len() != self.windows.len() {
            return Err(Error::shape(format!(
                "plan has {} windows, tensor has order {}",
                self.windows.len(),
                dims.len()
            )));
        }
        for (n, (&t, &i)) in self.windows.iter().zip(dims).enumerate() {
            if t > i {
                return Err(Error::invalid(format!("window {t} exceeds size {i} of mode {n}")));
            }
        }
        Ok(())
    }

    /// `L_n` for each mode.
    pub fn shifts(&self, dims: &[usize]) -> Result<Vec<usize>> {
        self.validate(dims)?;
        Ok(self.windows.iter().zip(dims).map(|(&t, &i)| i - t + 1).collect())
    }

    /// Number of stacked subtensors `∏ L_n`.
    pub fn stack_len(&self, dims: &[usize]) -> Result<usize> {
        Ok(self.shifts(dims)?.iter().product())
    }
}

/// Stacks every windowed subtensor `y[l_1.., l_2.., …]` of size `T_1×⋯×T_N`
/// along a new trailing mode. Block index `l_1 + L_1 (l_2 + L_2 (…))`, so the
/// first shift varies fastest.
pub fn spatial_smooth(y: &ComplexTensor, plan: &SmoothingPlan) -> Result<ComplexTensor> {
    let dims = y.dims();
    let shifts = plan.shifts(dims)?;
    let win = plan.windows();
    let block: usize = win.iter().product();
    let blocks: usize = shifts.iter().product();
    let n = dims.len();

    let mut strides = vec![1usize; n];
    for k in 1..n {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let src = y.data();
    let mut out = vec![ZERO; block * blocks];
    let row = win[0];
    let mut shift = vec![0usize; n];
    for b in 0..blocks {
        let base: usize = shift.iter().zip(&strides).map(|(l, s)| l * s).sum();
        let dst = &mut out[b * block..(b + 1) * block];
        // inner index over modes 1..n; mode 0 is copied as a contiguous run
        let mut idx = vec![0usize; n];
        for chunk in dst.chunks_exact_mut(row) {
            let off: usize = base + idx[1..].iter().zip(&strides[1..]).map(|(i, s)| i * s).sum::<usize>();
            chunk.copy_from_slice(&src[off..off + row]);
            crate::tensor::increment(&mut idx[1..], &win[1..]);
        }
        crate::tensor::increment(&mut shift, &shifts);
    }
    let mut out_dims = win.to_vec();
    out_dims.push(blocks);
    ComplexTensor::new(out_dims, out)
}
