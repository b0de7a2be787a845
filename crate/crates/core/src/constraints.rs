//! Rank and polynomial constraints on cumulant tensors, and the choice of
//! constraints for a given number of observed variables `p` and latent
//! confounders `l`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, enumerate_multi_indices, enumerate_subsets, multichoose, MultiIndex};
use crate::cumulants::{CumulantSet, MAX_ORDER};
use crate::error::{Error, Result};
use crate::tensor::{flatten, young_flattening_3, young_flattening_5, young_shape, FlatteningMatrix, SymmetricTensor};

/// Cumulant orders `k1..=k2` stacked into `M^(k1,...,k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MMatrixSpec {
    pub k1: usize,
    pub k2: usize,
}

impl MMatrixSpec {
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if !(2 <= k1 && k1 < k2 && k2 <= MAX_ORDER) {
            return Err(Error::InvalidArgument(format!(
                "M-matrix orders must satisfy 2 <= k1 < k2 <= {MAX_ORDER}, got ({k1}, {k2})"
            )));
        }
        Ok(MMatrixSpec { k1, k2 })
    }

    pub fn orders(&self) -> Vec<usize> {
        (self.k1..=self.k2).collect()
    }

    /// `Σ_h multichoose(p, h-k1) × multichoose(p, k1)`.
    pub fn expected_shape(&self, p: usize) -> (usize, usize) {
        let rows = (self.k1..=self.k2).map(|h| multichoose(p, h - self.k1) as usize).sum();
        (rows, multichoose(p, self.k1) as usize)
    }

    /// Row labels (tuples of length `h - k1`, grouped by `h`) paired with the order `h`.
    pub fn row_labels(&self, p: usize) -> Vec<(usize, MultiIndex)> {
        (self.k1..=self.k2)
            .flat_map(|h| {
                enumerate_multi_indices(p, h - self.k1)
                    .into_iter()
                    .map(move |r| (h, r))
            })
            .collect()
    }

    /// Cumulant entry sitting at (`row`, `col`) of the matrix: order and multi-index.
    pub fn entry(&self, p: usize, row: usize, col: usize) -> (usize, MultiIndex) {
        let rows = self.row_labels(p);
        let cols = enumerate_multi_indices(p, self.k1);
        let (h, r) = &rows[row];
        let mut idx: Vec<usize> = r.iter().chain(&cols[col]).copied().collect();
        idx.sort_unstable();
        (*h, idx)
    }
}

impl fmt::Display for MMatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orders: Vec<String> = self.orders().iter().map(|k| k.to_string()).collect();
        write!(f, "M^({})", orders.join(","))
    }
}

/// `fl_{k1}(C^(k1))` on top of `fl_{k1}(C^(h))` for `h = k1+1..=k2`.
pub fn build_m_matrix(cums: &CumulantSet, spec: &MMatrixSpec) -> Result<FlatteningMatrix> {
    let p = cums.dim();
    let cols = enumerate_multi_indices(p, spec.k1);
    let (nrows, ncols) = spec.expected_shape(p);
    let mut data = DMatrix::zeros(nrows, ncols);
    let mut row_labels = Vec::with_capacity(nrows);
    let top = cums.get(spec.k1)?;
    for (c, idx) in cols.iter().enumerate() {
        data[(0, c)] = top.get_sorted(idx);
    }
    row_labels.push(Vec::new());
    let mut offset = 1;
    for h in spec.k1 + 1..=spec.k2 {
        let fl = flatten(cums.get(h)?, spec.k1)?;
        let r = fl.data.nrows();
        data.view_mut((offset, 0), (r, ncols)).copy_from(&fl.data);
        row_labels.extend(fl.row_labels);
        offset += r;
    }
    Ok(FlatteningMatrix {
        row_labels,
        col_labels: cols,
        data,
    })
}

/// A matrix whose rank is bounded under the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankMatrix {
    M(MMatrixSpec),
    Flattening { order: usize, split: usize },
    Young3,
    Young5,
}

impl RankMatrix {
    pub fn orders(&self) -> Vec<usize> {
        match self {
            RankMatrix::M(spec) => spec.orders(),
            RankMatrix::Flattening { order, .. } => vec![*order],
            RankMatrix::Young3 => vec![3],
            RankMatrix::Young5 => vec![5],
        }
    }

    pub fn shape(&self, p: usize) -> (usize, usize) {
        match self {
            RankMatrix::M(spec) => spec.expected_shape(p),
            RankMatrix::Flattening { order, split } => {
                (multichoose(p, order - split) as usize, multichoose(p, *split) as usize)
            }
            RankMatrix::Young3 => young_shape(p, 1),
            RankMatrix::Young5 => young_shape(p, 2),
        }
    }

    pub fn build(&self, cums: &CumulantSet) -> Result<FlatteningMatrix> {
        match self {
            RankMatrix::M(spec) => build_m_matrix(cums, spec),
            RankMatrix::Flattening { order, split } => flatten(cums.get(*order)?, *split),
            RankMatrix::Young3 => young_flattening_3(cums.get(3)?),
            RankMatrix::Young5 => young_flattening_5(cums.get(5)?),
        }
    }
}

impl fmt::Display for RankMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankMatrix::M(spec) => write!(f, "{spec}"),
            RankMatrix::Flattening { order, split } => write!(f, "fl_{split}(C^({order}))"),
            RankMatrix::Young3 => write!(f, "Y_3(C^(3))"),
            RankMatrix::Young5 => write!(f, "Y_5(C^(5))"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition {
    Rank { matrix: RankMatrix, bound: usize },
    StrInequality,
    AronholdEquality,
}

impl Condition {
    pub fn orders(&self) -> Vec<usize> {
        match self {
            Condition::Rank { matrix, .. } => matrix.orders(),
            Condition::StrInequality | Condition::AronholdEquality => vec![3],
        }
    }

    pub fn rank_bound(&self) -> Option<usize> {
        match self {
            Condition::Rank { bound, .. } => Some(*bound),
            _ => None,
        }
    }

    /// True for conditions stated as polynomial (in)equalities.
    pub fn is_polynomial(&self) -> bool {
        !matches!(self, Condition::Rank { .. })
    }

    pub fn summary(&self) -> ConditionSummary {
        ConditionSummary {
            condition: self.to_string(),
            matrix_orders: self.orders(),
            rank_bound: self.rank_bound(),
        }
    }

    /// Evaluates the condition on exact (population) cumulants.
    pub fn check(&self, cums: &CumulantSet, tol: f64) -> Result<ConditionCheck> {
        match self {
            Condition::Rank { matrix, bound } => {
                let m = matrix.build(cums)?;
                let sv = crate::tensor::singular_values(&m.data);
                let top = sv.first().copied().unwrap_or(0.0);
                let next = sv.get(*bound).copied().unwrap_or(0.0);
                let ratio = if top > 0.0 { next / top } else { 0.0 };
                Ok(ConditionCheck {
                    value: ratio,
                    holds: ratio < tol,
                })
            }
            Condition::StrInequality => {
                let v = str_invariant(cums.get(3)?)?;
                Ok(ConditionCheck {
                    value: v,
                    holds: v <= tol,
                })
            }
            Condition::AronholdEquality => {
                let t = cums.get(3)?;
                let v = aronhold_invariant(t)?;
                let scale = t.max_abs().powi(4);
                Ok(ConditionCheck {
                    value: v,
                    holds: v.abs() <= tol * scale.max(f64::MIN_POSITIVE),
                })
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Rank { matrix, bound } => write!(f, "rank({matrix}) <= {bound}"),
            Condition::StrInequality => write!(f, "Str(C^(3)) <= 0"),
            Condition::AronholdEquality => write!(f, "Ar(C^(3)) = 0"),
        }
    }
}

/// For rank conditions `value` is `σ_{bound+1} / σ_max`; otherwise the invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub matrix_orders: Vec<usize>,
    pub rank_bound: Option<usize>,
}

/// The two conditions tested for a given `(p, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionPlan {
    pub p: usize,
    pub l: usize,
    pub condition_a: Condition,
    pub condition_b: Condition,
    pub cumulant_orders: Vec<usize>,
}

impl ConditionPlan {
    pub fn conditions(&self) -> [&Condition; 2] {
        [&self.condition_a, &self.condition_b]
    }
}

fn rank_is_informative(p: usize, matrix: &RankMatrix, bound: usize) -> bool {
    let (r, c) = matrix.shape(p);
    bound < r.min(c)
}

/// Selects the pair of conditions for `(p, l)`:
///
/// | case | first | second |
/// |---|---|---|
/// | l = 0, p = 2 | rank M^(2,3) ≤ p | Str(C^(3)) ≤ 0 |
/// | l = 0, p = 3 | rank M^(2,3) ≤ p | Ar(C^(3)) = 0 |
/// | l = 0, p ≥ 4 | rank M^(2,3) ≤ p | rank Y₃(C^(3)) ≤ C(p-1,a)·p |
/// | l = 1, p = 2 | rank M^(3,4,5) ≤ p+l | rank fl₃(C^(6)) ≤ p+l |
/// | l ≥ 1, p = 3 | rank M^(2,3,4) ≤ p+l | rank fl₂(C^(4)) ≤ p+l |
/// | l ≥ 1, p ≥ 4 | rank M^(2,3,4) ≤ p+l | rank Y₅(C^(5)) ≤ C(p-1,a)·(p+l) |
///
/// Combinations where a bound is not below the matrix size carry no
/// information and are rejected.
pub fn plan_conditions(p: usize, l: usize) -> Result<ConditionPlan> {
    let unsupported = |reason: String| Error::Unsupported { p, l, reason };
    if p < 2 {
        return Err(unsupported("at least two observed variables are needed".into()));
    }
    let a = (p - 1) / 2;
    let (condition_a, condition_b) = match (p, l) {
        (2, 0) => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 2, k2: 3 }),
                bound: 2,
            },
            Condition::StrInequality,
        ),
        (3, 0) => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 2, k2: 3 }),
                bound: 3,
            },
            Condition::AronholdEquality,
        ),
        (_, 0) => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 2, k2: 3 }),
                bound: p,
            },
            Condition::Rank {
                matrix: RankMatrix::Young3,
                bound: binomial(p - 1, a) as usize * p,
            },
        ),
        (2, 1) => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 3, k2: 5 }),
                bound: 3,
            },
            Condition::Rank {
                matrix: RankMatrix::Flattening { order: 6, split: 3 },
                bound: 3,
            },
        ),
        (2, _) => {
            return Err(unsupported(
                "with two observed variables only one latent confounder is supported".into(),
            ))
        }
        (3, _) => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 2, k2: 4 }),
                bound: p + l,
            },
            Condition::Rank {
                matrix: RankMatrix::Flattening { order: 4, split: 2 },
                bound: p + l,
            },
        ),
        _ => (
            Condition::Rank {
                matrix: RankMatrix::M(MMatrixSpec { k1: 2, k2: 4 }),
                bound: p + l,
            },
            Condition::Rank {
                matrix: RankMatrix::Young5,
                bound: binomial(p - 1, a) as usize * (p + l),
            },
        ),
    };
    for cond in [&condition_a, &condition_b] {
        if let Condition::Rank { matrix, bound } = cond {
            if !rank_is_informative(p, matrix, *bound) {
                let (r, c) = matrix.shape(p);
                return Err(unsupported(format!(
                    "rank bound {bound} for the {r} x {c} matrix {matrix} is not restrictive"
                )));
            }
        }
    }
    let mut cumulant_orders: Vec<usize> = condition_a.orders();
    cumulant_orders.extend(condition_b.orders());
    cumulant_orders.sort_unstable();
    cumulant_orders.dedup();
    Ok(ConditionPlan {
        p,
        l,
        condition_a,
        condition_b,
        cumulant_orders,
    })
}

/// One `(r+1) × (r+1)` minor of an M-matrix: chosen rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minor {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Minor {
    /// Cumulant multi-index of every entry of the minor, row by row.
    pub fn entries(&self, spec: &MMatrixSpec, p: usize) -> Vec<Vec<(usize, MultiIndex)>> {
        self.rows
            .iter()
            .map(|&r| self.cols.iter().map(|&c| spec.entry(p, r, c)).collect())
            .collect()
    }

    /// Determinant of the minor read off a built matrix.
    pub fn evaluate(&self, m: &DMatrix<f64>) -> f64 {
        DMatrix::from_fn(self.rows.len(), self.cols.len(), |i, j| m[(self.rows[i], self.cols[j])]).determinant()
    }
}

/// All `(r+1) × (r+1)` minors of `M`, row subsets major and column subsets
/// minor, both lexicographic.
pub fn minor_polynomials(spec: &MMatrixSpec, p: usize, r: usize) -> Result<Vec<Minor>> {
    let (nrows, ncols) = spec.expected_shape(p);
    if r >= nrows.min(ncols) {
        return Err(Error::InvalidArgument(format!(
            "rank bound {r} is not restrictive for a {nrows} x {ncols} matrix"
        )));
    }
    let row_sets = enumerate_subsets(nrows, r + 1);
    let col_sets = enumerate_subsets(ncols, r + 1);
    Ok(row_sets
        .iter()
        .flat_map(|rows| {
            col_sets.iter().map(move |cols| Minor {
                rows: rows.clone(),
                cols: cols.clone(),
            })
        })
        .collect())
}

/// A polynomial in the entries of a symmetric tensor: a sum of
/// `coefficient · Π t_{idx}` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPolynomial {
    pub order: usize,
    pub dim: usize,
    pub terms: Vec<(f64, Vec<MultiIndex>)>,
}

impl TensorPolynomial {
    fn from_one_based(order: usize, dim: usize, terms: &[(f64, &[&[usize]])]) -> Self {
        TensorPolynomial {
            order,
            dim,
            terms: terms
                .iter()
                .map(|(c, factors)| (*c, factors.iter().map(|f| f.iter().map(|v| v - 1).collect()).collect()))
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, f)| f.len()).max().unwrap_or(0)
    }

    pub fn evaluate(&self, t: &SymmetricTensor) -> Result<f64> {
        if t.order() != self.order || t.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "polynomial expects order {} and dimension {}, got order {} and dimension {}",
                self.order,
                self.dim,
                t.order(),
                t.dim()
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|(c, factors)| c * factors.iter().map(|idx| t.get_sorted(idx)).product::<f64>())
            .sum())
    }
}

/// `Str(T)` for `T ∈ Sym_3(R^2)`; non-positive exactly on border rank ≤ 2.
pub fn str_polynomial() -> TensorPolynomial {
    const T111: &[usize] = &[1, 1, 1];
    const T112: &[usize] = &[1, 1, 2];
    const T122: &[usize] = &[1, 2, 2];
    const T222: &[usize] = &[2, 2, 2];
    TensorPolynomial::from_one_based(
        3,
        2,
        &[
            (3.0, &[T112, T112, T122, T122]),
            (-4.0, &[T111, T122, T122, T122]),
            (-4.0, &[T112, T112, T112, T222]),
            (6.0, &[T111, T112, T122, T222]),
            (-1.0, &[T111, T111, T222, T222]),
        ],
    )
}

/// The Aronhold invariant of `T ∈ Sym_3(R^3)`; vanishes exactly on border rank ≤ 3.
pub fn aronhold_polynomial() -> TensorPolynomial {
    const A: &[usize] = &[1, 1, 1];
    const B: &[usize] = &[2, 2, 2];
    const C: &[usize] = &[3, 3, 3];
    const T112: &[usize] = &[1, 1, 2];
    const T113: &[usize] = &[1, 1, 3];
    const T122: &[usize] = &[1, 2, 2];
    const T123: &[usize] = &[1, 2, 3];
    const T133: &[usize] = &[1, 3, 3];
    const T223: &[usize] = &[2, 2, 3];
    const T233: &[usize] = &[2, 3, 3];
    TensorPolynomial::from_one_based(
        3,
        3,
        &[
            (1.0, &[A, B, C, T123]),
            (-1.0, &[B, C, T112, T113]),
            (-1.0, &[C, A, T122, T223]),
            (-1.0, &[A, B, T133, T233]),
            (-1.0, &[T123, A, T223, T233]),
            (-1.0, &[T123, B, T133, T113]),
            (-1.0, &[T123, C, T112, T122]),
            (1.0, &[A, T122, T233, T233]),
            (1.0, &[A, T133, T223, T223]),
            (1.0, &[B, T112, T133, T133]),
            (1.0, &[B, T233, T113, T113]),
            (1.0, &[C, T223, T112, T112]),
            (1.0, &[C, T113, T122, T122]),
            (-1.0, &[T123, T123, T123, T123]),
            (2.0, &[T123, T123, T122, T133]),
            (2.0, &[T123, T123, T233, T112]),
            (2.0, &[T123, T123, T113, T223]),
            (-3.0, &[T123, T112, T223, T133]),
            (-3.0, &[T123, T113, T122, T233]),
            (-1.0, &[T122, T122, T133, T133]),
            (-1.0, &[T233, T233, T112, T112]),
            (-1.0, &[T113, T113, T223, T223]),
            (1.0, &[T233, T112, T113, T223]),
            (1.0, &[T113, T223, T122, T133]),
            (1.0, &[T122, T133, T233, T112]),
        ],
    )
}

pub fn str_invariant(t: &SymmetricTensor) -> Result<f64> {
    str_polynomial().evaluate(t)
}

pub fn aronhold_invariant(t: &SymmetricTensor) -> Result<f64> {
    aronhold_polynomial().evaluate(t)
}
