//! Dense complex tensors with column-major storage.
//!
//! Element `(i_1, …, i_N)` (1-based, as in the usual tensor-algebra notation)
//! lives at flat position `i_1 + I_1(i_2 − 1) + … + I_1⋯I_{N−1}(i_N − 1)`
//! (again 1-based). The Rust API is 0-based throughout; [`IndexMap`] is the one
//! place where multi-indices and flat positions are converted.
//!
//! Two unfolding flavours are provided:
//!
//! * [`ComplexTensor::unfold_cpd`]: the `⟨n⟩` unfolding, rows indexed by
//!   modes `1..=n` and columns by modes `n+1..=N`. It is a pure reinterpretation
//!   of the flat buffer.
//! * [`ComplexTensor::unfold_mode`]: the `(n)` unfolding, `I_n × ∏_{m≠n} I_m`,
//!   with columns ordered cyclically so that
//!   `(𝒳 ×_1 S_1 ⋯ ×_N S_N)_(n) = S_n X_(n) (S_{n+1} ⊗ ⋯ ⊗ S_N ⊗ S_1 ⊗ ⋯ ⊗ S_{n−1})^T`
//!   holds with the standard Kronecker product.

mod io;
mod products;

pub use io::{read_cten, read_cten_file, write_cten, write_cten_file, CTEN_MAGIC, CTEN_VERSION};
pub use products::{khatri_rao, kron, outer};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used everywhere (64-bit real and imaginary parts).
pub type C64 = Complex64;
/// Dense complex matrix (column-major, as is the flat tensor buffer).
pub type CMatrix = DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = DMatrix<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::invalid("tensor order must be at least 1"));
    }
    if dims.contains(&0) {
        return Err(Error::invalid(format!("zero-sized dimension in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::invalid(format!("dimension product overflows for {dims:?}")))
}

/// Column-major flat position of a 0-based multi-index.
pub fn flat_index(dims: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), idx.len());
    let mut flat = 0;
    let mut stride = 1;
    for (&i, &d) in idx.iter().zip(dims) {
        debug_assert!(i < d);
        flat += i * stride;
        stride *= d;
    }
    flat
}

/// 0-based multi-index of a column-major flat position.
pub fn multi_index(dims: &[usize], mut flat: usize) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let i = flat % d;
            flat /= d;
            i
        })
        .collect()
}

/// Correspondence between the multi-indices of two shapes with equal element
/// counts, through the shared column-major flat position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    source: Vec<usize>,
    target: Vec<usize>,
}

impl IndexMap {
    pub fn new(source: &[usize], target: &[usize]) -> Result<Self> {
        let ps = check_dims(source)?;
        let pt = check_dims(target)?;
        if ps != pt {
            return Err(Error::invalid(format!(
                "cannot map {source:?} (product {ps}) onto {target:?} (product {pt})"
            )));
        }
        Ok(Self { source: source.to_vec(), target: target.to_vec() })
    }

    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    /// Maps a 0-based source multi-index to the 0-based target multi-index.
    pub fn map(&self, idx: &[usize]) -> Vec<usize> {
        multi_index(&self.target, flat_index(&self.source, idx))
    }

    /// Same as [`IndexMap::map`] with 1-based indices on both sides.
    pub fn map_one_based(&self, idx: &[usize]) -> Vec<usize> {
        let zero: Vec<usize> = idx.iter().map(|&i| i - 1).collect();
        self.map(&zero).into_iter().map(|i| i + 1).collect()
    }
}

/// A dense N-order complex tensor. Immutable once built; every operation
/// returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexTensor {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let n = check_dims(&dims)?;
        if n != data.len() {
            return Err(Error::shape(format!(
                "buffer of length {} does not fit dims {dims:?} (product {n})",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// All-zero tensor. Panics on an empty or zero-sized shape.
    pub fn zeros(dims: &[usize]) -> Self {
        let n = check_dims(dims).expect("invalid tensor dims");
        Self { dims: dims.to_vec(), data: vec![ZERO; n] }
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    /// Panics on an empty or zero-sized shape.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let n = check_dims(dims).expect("invalid tensor dims");
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        Self { dims: dims.to_vec(), data }
    }

    /// Wraps a matrix as an order-2 tensor.
    pub fn from_matrix(m: &CMatrix) -> Self {
        Self { dims: vec![m.nrows(), m.ncols()], data: m.as_slice().to_vec() }
    }

    /// Wraps a vector as an order-1 tensor.
    pub fn from_vector(v: Vec<C64>) -> Result<Self> {
        Self::new(vec![v.len()], v)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Element at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> C64 {
        assert_eq!(idx.len(), self.order(), "index order mismatch");
        self.data[flat_index(&self.dims, idx)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::shape(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Same flat buffer, new shape.
    pub fn reshape(&self, new_dims: &[usize]) -> Result<Self> {
        self.clone().into_reshape(new_dims)
    }

    pub fn into_reshape(mut self, new_dims: &[usize]) -> Result<Self> {
        let n = check_dims(new_dims)?;
        if n != self.data.len() {
            return Err(Error::invalid(format!(
                "cannot reshape {:?} into {new_dims:?}: element counts differ",
                self.dims
            )));
        }
        self.dims = new_dims.to_vec();
        Ok(self)
    }

    /// Reorders modes: result mode `k` is source mode `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&m| m >= n || std::mem::replace(&mut seen[m], true)) {
            return Err(Error::invalid(format!("{order:?} is not a permutation of 0..{n}")));
        }
        let src_strides = strides(&self.dims);
        let new_dims: Vec<usize> = order.iter().map(|&m| self.dims[m]).collect();
        let perm_strides: Vec<usize> = order.iter().map(|&m| src_strides[m]).collect();
        let mut idx = vec![0usize; n];
        let mut data = Vec::with_capacity(self.len());
        let mut offset = 0usize;
        for _ in 0..self.len() {
            data.push(self.data[offset]);
            // odometer with incremental offset
            for k in 0..n {
                idx[k] += 1;
                offset += perm_strides[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                offset -= perm_strides[k] * new_dims[k];
                idx[k] = 0;
            }
        }
        Ok(Self { dims: new_dims, data })
    }

    /// Column-major copy of the buffer as a `rows × cols` matrix.
    pub(crate) fn as_matrix(&self, rows: usize, cols: usize) -> CMatrix {
        debug_assert_eq!(rows * cols, self.len());
        CMatrix::from_column_slice(rows, cols, &self.data)
    }

    /// The `⟨split⟩` unfolding: `∏_{l≤split} I_l × ∏_{l>split} I_l`,
    /// with `1 ≤ split < N`.
    pub fn unfold_cpd(&self, split: usize) -> Result<CMatrix> {
        let n = self.order();
        if split == 0 || split >= n {
            return Err(Error::invalid(format!("unfolding split {split} outside 1..{n}")));
        }
        let rows: usize = self.dims[..split].iter().product();
        Ok(self.as_matrix(rows, self.len() / rows))
    }

    /// Inverse of [`ComplexTensor::unfold_cpd`].
    pub fn fold_cpd(m: &CMatrix, split: usize, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if split == 0 || split >= dims.len() {
            return Err(Error::invalid(format!("unfolding split {split} outside 1..{}", dims.len())));
        }
        let rows: usize = dims[..split].iter().product();
        let cols: usize = dims[split..].iter().product();
        if m.nrows() != rows || m.ncols() != cols {
            return Err(Error::shape(format!(
                "matrix {}×{} does not fold into {dims:?} at split {split}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { dims: dims.to_vec(), data: m.as_slice().to_vec() })
    }

    fn mode_unfold_order(n_modes: usize, mode: usize) -> Vec<usize> {
        // mode first, then mode-1, …, 0, N-1, …, mode+1 (fastest to slowest)
        let mut order = vec![mode];
        order.extend((0..mode).rev());
        order.extend((mode + 1..n_modes).rev());
        order
    }

    /// The `(mode)` unfolding (0-based mode), `I_mode × ∏_{m≠mode} I_m`.
    pub fn unfold_mode(&self, mode: usize) -> Result<CMatrix> {
        if mode >= self.order() {
            return Err(Error::invalid(format!("mode {mode} out of range for order {}", self.order())));
        }
        let p = self.permute(&Self::mode_unfold_order(self.order(), mode))?;
        Ok(p.as_matrix(self.dims[mode], self.len() / self.dims[mode]))
    }

    /// Inverse of [`ComplexTensor::unfold_mode`].
    pub fn fold_mode(m: &CMatrix, mode: usize, dims: &[usize]) -> Result<Self> {
        let total = check_dims(dims)?;
        if mode >= dims.len() {
            return Err(Error::invalid(format!("mode {mode} out of range for order {}", dims.len())));
        }
        if m.nrows() != dims[mode] || m.nrows() * m.ncols() != total {
            return Err(Error::shape(format!(
                "matrix {}×{} does not fold into {dims:?} along mode {mode}",
                m.nrows(),
                m.ncols()
            )));
        }
        let order = Self::mode_unfold_order(dims.len(), mode);
        let permuted_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
        let permuted = Self { dims: permuted_dims, data: m.as_slice().to_vec() };
        let mut inverse = vec![0; order.len()];
        for (k, &src) in order.iter().enumerate() {
            inverse[src] = k;
        }
        permuted.permute(&inverse)
    }

    /// Mode product `𝒳 ×_mode M` (0-based mode); `M` must have `I_mode` columns.
    pub fn mode_product(&self, m: &CMatrix, mode: usize) -> Result<Self> {
        if mode >= self.order() {
            return Err(Error::invalid(format!("mode {mode} out of range for order {}", self.order())));
        }
        let i_n = self.dims[mode];
        if m.ncols() != i_n {
            return Err(Error::shape(format!(
                "mode-{mode} product needs {i_n} columns, matrix has {}",
                m.ncols()
            )));
        }
        let left: usize = self.dims[..mode].iter().product();
        let right: usize = self.dims[mode + 1..].iter().product();
        let j_n = m.nrows();
        let mut out = vec![ZERO; left * j_n * right];
        for r in 0..right {
            let src = &self.data[r * left * i_n..(r + 1) * left * i_n];
            let dst = &mut out[r * left * j_n..(r + 1) * left * j_n];
            for i in 0..i_n {
                let src_col = &src[i * left..(i + 1) * left];
                for j in 0..j_n {
                    let w = m[(j, i)];
                    if w == ZERO {
                        continue;
                    }
                    let dst_col = &mut dst[j * left..(j + 1) * left];
                    for (d, &s) in dst_col.iter_mut().zip(src_col) {
                        *d += w * s;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[mode] = j_n;
        Ok(Self { dims, data: out })
    }

    /// Stacks tensors along `mode` (0-based). All other dims must agree.
    pub fn concat(ts: &[ComplexTensor], mode: usize) -> Result<Self> {
        let first = ts.first().ok_or_else(|| Error::invalid("concat of an empty list"))?;
        let order = first.order();
        if mode >= order {
            return Err(Error::invalid(format!("mode {mode} out of range for order {order}")));
        }
        for t in ts {
            let same = t.order() == order
                && t.dims.iter().zip(&first.dims).enumerate().all(|(k, (a, b))| k == mode || a == b);
            if !same {
                return Err(Error::shape(format!("cannot stack {:?} with {:?}", t.dims, first.dims)));
            }
        }
        let left: usize = first.dims[..mode].iter().product();
        let right: usize = first.dims[mode + 1..].iter().product();
        let total_mode: usize = ts.iter().map(|t| t.dims[mode]).sum();
        let mut data = Vec::with_capacity(left * total_mode * right);
        for r in 0..right {
            for t in ts {
                let block = left * t.dims[mode];
                data.extend_from_slice(&t.data[r * block..(r + 1) * block]);
            }
        }
        let mut dims = first.dims.clone();
        dims[mode] = total_mode;
        Ok(Self { dims, data })
    }

    /// Reverses index order along every mode (the action of the exchange
    /// matrices `J` on all modes at once).
    pub fn flip_all(&self) -> Self {
        let mut data = self.data.clone();
        data.reverse();
        Self { dims: self.dims.clone(), data }
    }
}

/// Contraction `𝒜 ×^q_p ℬ`: sums mode `p` of `a` against mode `q` of `b`
/// (both 0-based). The result carries the remaining modes of `a` followed by
/// the remaining modes of `b`. A full contraction (two vectors) yields a
/// single-element tensor of dims `[1]`.
pub fn contract(a: &ComplexTensor, b: &ComplexTensor, p: usize, q: usize) -> Result<ComplexTensor> {
    if p >= a.order() || q >= b.order() {
        return Err(Error::invalid(format!(
            "contraction modes ({p}, {q}) out of range for orders ({}, {})",
            a.order(),
            b.order()
        )));
    }
    if a.dims[p] != b.dims[q] {
        return Err(Error::shape(format!(
            "contraction length mismatch: {} vs {}",
            a.dims[p], b.dims[q]
        )));
    }
    let k = a.dims[p];
    let mut a_order: Vec<usize> = (0..a.order()).filter(|&m| m != p).collect();
    a_order.push(p);
    let mut b_order = vec![q];
    b_order.extend((0..b.order()).filter(|&m| m != q));
    let ap = a.permute(&a_order)?;
    let bp = b.permute(&b_order)?;
    let am = ap.as_matrix(a.len() / k, k);
    let bm = bp.as_matrix(k, b.len() / k);
    let prod = am * bm;
    let mut dims: Vec<usize> = a_order[..a_order.len() - 1].iter().map(|&m| a.dims[m]).collect();
    dims.extend(b_order[1..].iter().map(|&m| b.dims[m]));
    if dims.is_empty() {
        dims.push(1);
    }
    ComplexTensor::new(dims, prod.as_slice().to_vec())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        s.push(acc);
        acc *= d;
    }
    s
}

/// Advances a column-major multi-index; wraps to all zeros after the last one.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}
