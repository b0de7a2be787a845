//! Symmetric tensors, Tucker products, flattenings and Koszul–Young flattenings.
//!
//! A [`SymmetricTensor`] of order `k` over `R^q` stores one value per
//! non-decreasing multi-index, in the lexicographic order produced by
//! [`enumerate_multi_indices`]. Reading any permutation of an index tuple
//! returns the value stored at its sorted form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial, enumerate_multi_indices, enumerate_subsets, multichoose, permutation_sign,
    MultiIndex, MultiIndexer,
};
use crate::error::{Error, Result};

/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    order: usize,
    dim: usize,
    values: Vec<f64>,
    indexer: MultiIndexer,
}

impl SymmetricTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        let indexer = MultiIndexer::new(dim, order);
        SymmetricTensor {
            order,
            dim,
            values: vec![0.0; indexer.len()],
            indexer,
        }
    }

    /// Builds a tensor by evaluating `f` on every sorted multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(order, dim);
        for (pos, idx) in enumerate_multi_indices(dim, order).iter().enumerate() {
            t.values[pos] = f(idx);
        }
        t
    }

    /// Wraps values laid out in canonical multi-index order.
    pub fn from_values(order: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = multichoose(dim, order) as usize;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} values for order {order}, dim {dim}; got {}",
                values.len()
            )));
        }
        Ok(SymmetricTensor {
            order,
            dim,
            values,
            indexer: MultiIndexer::new(dim, order),
        })
    }

    /// Diagonal tensor with `t_{j...j} = weights[j]`.
    pub fn diagonal(order: usize, weights: &[f64]) -> Self {
        let mut t = Self::zeros(order, weights.len());
        for (j, &w) in weights.iter().enumerate() {
            t.set(&vec![j; order], w);
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored values in canonical multi-index order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        enumerate_multi_indices(self.dim, self.order)
    }

    /// Value at an arbitrary (unsorted) index tuple.
    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        self.values[self.indexer.rank(idx)]
    }

    /// Value at an index tuple already sorted non-decreasingly.
    #[inline]
    pub fn get_sorted(&self, idx: &[usize]) -> f64 {
        self.values[self.indexer.rank_sorted(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let pos = self.indexer.rank(idx);
        self.values[pos] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies entry `(i_1..i_k)` by `scale[i_1] * ... * scale[i_k]`,
    /// i.e. the Tucker product with `diag(scale)`.
    pub fn scale_modes(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "scale has {} entries, tensor dim is {}",
                scale.len(),
                self.dim
            )));
        }
        let mut out = self.clone();
        for (v, idx) in out.values.iter_mut().zip(self.multi_indices()) {
            *v *= idx.iter().map(|&i| scale[i]).product::<f64>();
        }
        Ok(out)
    }

    /// Dense row-major array of all `dim^order` entries.
    pub fn to_dense(&self) -> Vec<f64> {
        let total = self.dim.pow(self.order as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.order];
        for _ in 0..total {
            out.push(self.get(&idx));
            for t in (0..self.order).rev() {
                idx[t] += 1;
                if idx[t] < self.dim {
                    break;
                }
                idx[t] = 0;
            }
        }
        out
    }
}

/// `T • A • ... • A`: applies `a` (p × q) along every mode of `t` (dim q).
pub fn tucker_transform(t: &SymmetricTensor, a: &DMatrix<f64>) -> Result<SymmetricTensor> {
    let q = t.dim();
    if a.ncols() != q {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, tensor dimension is {q}",
            a.ncols()
        )));
    }
    let p = a.nrows();
    let k = t.order();
    let mut dims = vec![q; k];
    let mut cur = t.to_dense();
    for mode in 0..k {
        let outer: usize = dims[..mode].iter().product();
        let inner: usize = dims[mode + 1..].iter().product();
        let mut next = vec![0.0; outer * p * inner];
        for o in 0..outer {
            for j in 0..q {
                let src = &cur[(o * q + j) * inner..(o * q + j + 1) * inner];
                for i in 0..p {
                    let coef = a[(i, j)];
                    if coef == 0.0 {
                        continue;
                    }
                    let dst = &mut next[(o * p + i) * inner..(o * p + i + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        dims[mode] = p;
        cur = next;
    }
    Ok(SymmetricTensor::from_fn(k, p, |idx| {
        let flat = idx.iter().fold(0usize, |acc, &i| acc * p + i);
        cur[flat]
    }))
}

/// `Σ_j w_j v_j^{⊗k}`.
pub fn rank_one_sum(vectors: &[Vec<f64>], weights: &[f64], order: usize) -> Result<SymmetricTensor> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("no vectors given".into()))?;
    let q = first.len();
    if vectors.iter().any(|v| v.len() != q) {
        return Err(Error::DimensionMismatch("vectors have inconsistent lengths".into()));
    }
    if weights.len() != vectors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} vectors",
            weights.len(),
            vectors.len()
        )));
    }
    Ok(SymmetricTensor::from_fn(order, q, |idx| {
        vectors
            .iter()
            .zip(weights)
            .map(|(v, w)| w * idx.iter().map(|&i| v[i]).product::<f64>())
            .sum()
    }))
}

/// A matrix together with the labels of its rows and columns.
///
/// For ordinary flattenings the labels are multi-indices. For Young
/// flattenings a label is the symmetric part followed by the index set
/// (rows) or by the complement of the wedge index set (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FlatteningMatrix {
    pub row_labels: Vec<Vec<usize>>,
    pub col_labels: Vec<Vec<usize>>,
    pub data: DMatrix<f64>,
}

impl FlatteningMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }
}

/// `fl_m(T)`: columns indexed by length-`m` tuples, rows by length-`(k-m)` tuples.
pub fn flatten(t: &SymmetricTensor, m: usize) -> Result<FlatteningMatrix> {
    let k = t.order();
    if m == 0 || m >= k {
        return Err(Error::InvalidArgument(format!(
            "flattening split {m} out of range 1..{k}"
        )));
    }
    let rows = enumerate_multi_indices(t.dim(), k - m);
    let cols = enumerate_multi_indices(t.dim(), m);
    let mut buf = vec![0usize; k];
    let data = DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        buf[..k - m].copy_from_slice(&rows[r]);
        buf[k - m..].copy_from_slice(&cols[c]);
        t.get(&buf)
    });
    Ok(FlatteningMatrix {
        row_labels: rows,
        col_labels: cols,
        data,
    })
}

/// Koszul–Young flattening of an order-3 tensor, of size `p·C(p,a) × p·C(p,a+1)`
/// with `a = ⌊(p-1)/2⌋`.
pub fn young_flattening_3(t: &SymmetricTensor) -> Result<FlatteningMatrix> {
    if t.order() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "Y3 needs an order-3 tensor, got order {}",
            t.order()
        )));
    }
    koszul_young(t, 1)
}

/// Koszul–Young flattening of an order-5 tensor, of size
/// `multichoose(p,2)·C(p,a) × multichoose(p,2)·C(p,a+1)`.
pub fn young_flattening_5(t: &SymmetricTensor) -> Result<FlatteningMatrix> {
    if t.order() != 5 {
        return Err(Error::DimensionMismatch(format!(
            "Y5 needs an order-5 tensor, got order {}",
            t.order()
        )));
    }
    koszul_young(t, 2)
}

/// Number of rows and columns of the Young flattening with `sym` symmetric slots.
pub fn young_shape(p: usize, sym: usize) -> (usize, usize) {
    let a = p.saturating_sub(1) / 2;
    let s = multichoose(p, sym) as usize;
    (s * binomial(p, a) as usize, s * binomial(p, a + 1) as usize)
}

// Rows: (R, I) with R a sorted sym-tuple and I an a-subset.
// Columns: (C, K) with C a sorted sym-tuple and K the complement of the
// (a+1)-subset J. Entry t_{C,R,c} · sgn whenever I ⊆ J, with c = J \ I.
// The sign is sgn(I, c, K) times (-1)^(1 + Σ R + Σ C) over 1-based labels;
// for p = 3 this reproduces the standard skew-symmetric 9 × 9 layout.
fn koszul_young(t: &SymmetricTensor, sym: usize) -> Result<FlatteningMatrix> {
    let p = t.dim();
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "Young flattening requires p >= 3, got {p}"
        )));
    }
    let a = (p - 1) / 2;
    let sym_tuples = enumerate_multi_indices(p, sym);
    let row_sets = enumerate_subsets(p, a);
    let col_sets = enumerate_subsets(p, p - a - 1);

    let mut row_labels = Vec::with_capacity(sym_tuples.len() * row_sets.len());
    for r in &sym_tuples {
        for i in &row_sets {
            row_labels.push(r.iter().chain(i).copied().collect::<Vec<_>>());
        }
    }
    let mut col_labels = Vec::with_capacity(sym_tuples.len() * col_sets.len());
    for c in &sym_tuples {
        for k in &col_sets {
            col_labels.push(c.iter().chain(k).copied().collect::<Vec<_>>());
        }
    }

    let parity = |tuple: &[usize]| tuple.iter().map(|&v| v + 1).sum::<usize>();
    let mut data = DMatrix::zeros(row_labels.len(), col_labels.len());
    let mut member = vec![false; p];
    let mut seq = Vec::with_capacity(p);
    let mut idx = Vec::with_capacity(2 * sym + 1);
    for (ri, r) in sym_tuples.iter().enumerate() {
        for (si, iset) in row_sets.iter().enumerate() {
            let row = ri * row_sets.len() + si;
            for (ci, c) in sym_tuples.iter().enumerate() {
                for (ki, kset) in col_sets.iter().enumerate() {
                    member.iter_mut().for_each(|m| *m = false);
                    let mut disjoint = true;
                    for &v in iset {
                        member[v] = true;
                    }
                    for &v in kset {
                        if member[v] {
                            disjoint = false;
                            break;
                        }
                        member[v] = true;
                    }
                    if !disjoint {
                        continue;
                    }
                    let missing = member.iter().position(|m| !m).expect("one index left");
                    seq.clear();
                    seq.extend_from_slice(iset);
                    seq.push(missing);
                    seq.extend_from_slice(kset);
                    let mut sign = permutation_sign(&seq);
                    if (1 + parity(r) + parity(c)) % 2 == 1 {
                        sign = -sign;
                    }
                    idx.clear();
                    idx.extend_from_slice(c);
                    idx.extend_from_slice(r);
                    idx.push(missing);
                    let col = ci * col_sets.len() + ki;
                    data[(row, col)] = sign * t.get(&idx);
                }
            }
        }
    }
    Ok(FlatteningMatrix {
        row_labels,
        col_labels,
        data,
    })
}

/// Singular spectrum and the number of singular values above `tol · σ_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> Result<RankInfo> {
    if m.is_empty() {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol * top).count()
    };
    Ok(RankInfo {
        rank,
        singular_values: sv,
    })
}
