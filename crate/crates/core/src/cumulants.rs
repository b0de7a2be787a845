//! Sample and population cumulant tensors.
//!
//! Sample cumulants are plug-in estimates: sample moments are substituted
//! into the moment–cumulant partition formula
//! `κ(i_1..i_k) = Σ_π (-1)^{|π|-1} (|π|-1)! Π_{B∈π} E[Π_{j∈B} X_{i_j}]`.
//! Population cumulants of a linear SEM `X = Bη` are the Tucker product of
//! the diagonal source cumulants with `B`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::accum::ExactSum;
use crate::combinatorics::{enumerate_multi_indices, factorial, set_partitions, MultiIndex, MultiIndexer};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::tensor::{tucker_transform, SymmetricTensor};

/// Highest cumulant order supported.
pub const MAX_ORDER: usize = 6;

/// Sample moments `E[X_{i_1} ··· X_{i_m}]` for every sorted multi-index of
/// length `1..=max_order`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    dim: usize,
    by_order: Vec<Vec<f64>>,
    indexers: Vec<MultiIndexer>,
}

impl MomentTable {
    fn empty(dim: usize, max_order: usize) -> Self {
        let indexers: Vec<MultiIndexer> = (0..=max_order).map(|m| MultiIndexer::new(dim, m)).collect();
        let by_order = indexers.iter().map(|ix| vec![0.0; ix.len()]).collect();
        MomentTable {
            dim,
            by_order,
            indexers,
        }
    }

    /// Unweighted moments with order-independent summation.
    pub fn from_data(data: &DataMatrix, max_order: usize) -> Self {
        let rows: Vec<usize> = (0..data.n()).collect();
        Self::build(data.values(), &rows, None, max_order)
    }

    /// Moments of the sample in which row `i` appears `weights[i]` times.
    /// Summation runs in row order.
    pub fn from_weighted(values: &DMatrix<f64>, weights: &[f64], max_order: usize) -> Self {
        let rows: Vec<usize> = (0..values.nrows()).filter(|&i| weights[i] != 0.0).collect();
        Self::build(values, &rows, Some(weights), max_order)
    }

    fn build(values: &DMatrix<f64>, rows: &[usize], weights: Option<&[f64]>, max_order: usize) -> Self {
        let p = values.ncols();
        let mut table = Self::empty(p, max_order);
        table.by_order[0][0] = 1.0;
        let total: f64 = match weights {
            Some(w) => rows.iter().map(|&i| w[i]).sum(),
            None => rows.len() as f64,
        };
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|c| rows.iter().map(|&r| values[(r, c)]).collect())
            .collect();
        let w: Option<Vec<f64>> = weights.map(|w| rows.iter().map(|&r| w[r]).collect());
        let mut stack: Vec<Vec<f64>> = vec![vec![1.0; rows.len()]];
        let mut tuple = Vec::with_capacity(max_order);
        table.fill(&columns, w.as_deref(), total, max_order, 0, &mut tuple, &mut stack);
        table
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(
        &mut self,
        columns: &[Vec<f64>],
        weights: Option<&[f64]>,
        total: f64,
        max_order: usize,
        start: usize,
        tuple: &mut Vec<usize>,
        stack: &mut Vec<Vec<f64>>,
    ) {
        if tuple.len() == max_order {
            return;
        }
        for v in start..self.dim {
            let prod: Vec<f64> = stack
                .last()
                .expect("stack is seeded")
                .iter()
                .zip(&columns[v])
                .map(|(a, b)| a * b)
                .collect();
            let moment = match weights {
                Some(w) => prod.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / total,
                None => {
                    let mut acc = ExactSum::new();
                    prod.iter().for_each(|&x| acc.add(x));
                    acc.value() / total
                }
            };
            tuple.push(v);
            let m = tuple.len();
            let pos = self.indexers[m].rank_sorted(tuple);
            self.by_order[m][pos] = moment;
            stack.push(prod);
            self.fill(columns, weights, total, max_order, v, tuple, stack);
            stack.pop();
            tuple.pop();
        }
    }

    pub fn max_order(&self) -> usize {
        self.by_order.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Moment at a sorted multi-index (empty index gives 1).
    #[inline]
    pub fn get_sorted(&self, idx: &[usize]) -> f64 {
        self.by_order[idx.len()][self.indexers[idx.len()].rank_sorted(idx)]
    }

    /// Order-`k` cumulant tensor via the partition formula.
    pub fn cumulant(&self, k: usize) -> Result<SymmetricTensor> {
        if !(2..=MAX_ORDER).contains(&k) {
            return Err(Error::UnsupportedOrder(k));
        }
        if k > self.max_order() {
            return Err(Error::MissingOrder(k));
        }
        let partitions = set_partitions(k);
        let coefs: Vec<f64> = partitions
            .iter()
            .map(|part| {
                let h = part.len();
                let sign = if h % 2 == 1 { 1.0 } else { -1.0 };
                sign * factorial(h - 1)
            })
            .collect();
        let mut sub = Vec::with_capacity(k);
        Ok(SymmetricTensor::from_fn(k, self.dim, |idx| {
            let mut total = 0.0;
            for (part, coef) in partitions.iter().zip(&coefs) {
                let mut prod = *coef;
                for block in part {
                    sub.clear();
                    // positions are increasing and idx is sorted, so sub is sorted
                    sub.extend(block.iter().map(|&b| idx[b]));
                    prod *= self.get_sorted(&sub);
                }
                total += prod;
            }
            total
        }))
    }
}

/// Products of data columns for every sorted tuple of orders `1..=max_order`,
/// stored row by row, together with the partition formula compiled against
/// them, for fast cumulants of bootstrap resamples.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    dim: usize,
    width: usize,
    // Rows padded to whole lanes of four.
    lanes: usize,
    products: Vec<[f64; 4]>,
    programs: Vec<(usize, Vec<Vec<Term>>)>,
}

#[derive(Debug, Clone)]
struct Term {
    coef: f64,
    factors: Vec<usize>,
}

impl MonomialBasis {
    pub fn new(values: &DMatrix<f64>, orders: &[usize]) -> Result<Self> {
        let (n, p) = values.shape();
        if let Some(&k) = orders.iter().find(|&&k| !(2..=MAX_ORDER).contains(&k)) {
            return Err(Error::UnsupportedOrder(k));
        }
        let max_order = orders.iter().copied().max().unwrap_or(2);
        let tuples: Vec<MultiIndex> = (1..=max_order).flat_map(|m| enumerate_multi_indices(p, m)).collect();
        let slot: BTreeMap<&[usize], usize> = tuples.iter().enumerate().map(|(k, t)| (t.as_slice(), k)).collect();
        let width = tuples.len();
        let lanes = width.div_ceil(4);
        let mut products = vec![[0.0; 4]; n * lanes];
        for (i, row) in products.chunks_exact_mut(lanes).enumerate() {
            for (k, t) in tuples.iter().enumerate() {
                row[k / 4][k % 4] = t.iter().map(|&v| values[(i, v)]).product();
            }
        }
        let programs = orders
            .iter()
            .map(|&k| {
                let entries = enumerate_multi_indices(p, k)
                    .iter()
                    .map(|idx| compile_entry(idx, &slot))
                    .collect();
                (k, entries)
            })
            .collect();
        Ok(MonomialBasis {
            dim: p,
            width,
            lanes,
            products,
            programs,
        })
    }

    /// Raw moments of the sample made of the given rows (repeats allowed),
    /// in the order of the sorted tuples.
    pub fn resampled_moments(&self, rows: &[u32]) -> Vec<f64> {
        let sums = match self.lanes {
            1 => lane_sums::<1>(&self.products, rows),
            2 => lane_sums::<2>(&self.products, rows),
            3 => lane_sums::<3>(&self.products, rows),
            4 => lane_sums::<4>(&self.products, rows),
            5 => lane_sums::<5>(&self.products, rows),
            6 => lane_sums::<6>(&self.products, rows),
            7 => lane_sums::<7>(&self.products, rows),
            8 => lane_sums::<8>(&self.products, rows),
            l => {
                let mut sums = vec![[0.0; 4]; l];
                for &r in rows {
                    let r = r as usize * l;
                    for (s, x) in sums.iter_mut().zip(&self.products[r..r + l]) {
                        add_lane(s, x);
                    }
                }
                sums
            }
        };
        let total = rows.len() as f64;
        sums.iter().flatten().take(self.width).map(|s| s / total).collect()
    }

    /// Cumulants of the requested orders for the sample made of the given rows.
    pub fn resampled_cumulants(&self, rows: &[u32]) -> Result<CumulantSet> {
        let moments = self.resampled_moments(rows);
        let mut set = CumulantSet::new(self.dim);
        for (k, entries) in &self.programs {
            let values = entries
                .iter()
                .map(|terms| {
                    terms
                        .iter()
                        .map(|t| t.coef * t.factors.iter().map(|&f| moments[f]).product::<f64>())
                        .sum()
                })
                .collect();
            set.insert(SymmetricTensor::from_values(*k, self.dim, values)?)?;
        }
        Ok(set)
    }
}

// Partition formula for one entry, with identical products merged.
fn compile_entry(idx: &[usize], slot: &BTreeMap<&[usize], usize>) -> Vec<Term> {
    let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut sub = Vec::with_capacity(idx.len());
    for part in set_partitions(idx.len()) {
        let h = part.len();
        let sign = if h % 2 == 1 { 1.0 } else { -1.0 };
        let mut factors: Vec<usize> = part
            .iter()
            .map(|block| {
                sub.clear();
                sub.extend(block.iter().map(|&b| idx[b]));
                slot[sub.as_slice()]
            })
            .collect();
        factors.sort_unstable();
        *merged.entry(factors).or_insert(0.0) += sign * factorial(h - 1);
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(factors, coef)| Term { coef, factors })
        .collect()
}

#[inline(always)]
fn add_lane(s: &mut [f64; 4], x: &[f64; 4]) {
    s[0] += x[0];
    s[1] += x[1];
    s[2] += x[2];
    s[3] += x[3];
}

fn lane_sums<const L: usize>(products: &[[f64; 4]], rows: &[u32]) -> Vec<[f64; 4]> {
    let rows_of: &[[[f64; 4]; L]] = products.as_chunks::<L>().0;
    let mut sums = [[0.0; 4]; L];
    for &r in rows {
        let x = &rows_of[r as usize];
        for k in 0..L {
            add_lane(&mut sums[k], &x[k]);
        }
    }
    sums.to_vec()
}

/// The tuple `(C^(2), ..., C^(k))` (any subset of orders) for one sample or model.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    dim: usize,
    tensors: BTreeMap<usize, SymmetricTensor>,
}

impl CumulantSet {
    pub fn new(dim: usize) -> Self {
        CumulantSet {
            dim,
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, tensor: SymmetricTensor) -> Result<()> {
        if tensor.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor dim {} in a set of dim {}",
                tensor.dim(),
                self.dim
            )));
        }
        self.tensors.insert(tensor.order(), tensor);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize) -> Result<&SymmetricTensor> {
        self.tensors.get(&k).ok_or(Error::MissingOrder(k))
    }

    pub fn orders(&self) -> Vec<usize> {
        self.tensors.keys().copied().collect()
    }

    /// Rescales every variable to unit variance using `C^(2)`.
    pub fn standardized(&self) -> Result<CumulantSet> {
        let cov = self.get(2)?;
        let scale: Vec<f64> = (0..self.dim)
            .map(|i| {
                let v = cov.get(&[i, i]);
                if v > 0.0 {
                    Ok(1.0 / v.sqrt())
                } else {
                    Err(Error::InvalidData(format!("variable {} has zero variance", i + 1)))
                }
            })
            .collect::<Result<_>>()?;
        let mut out = CumulantSet::new(self.dim);
        for t in self.tensors.values() {
            out.insert(t.scale_modes(&scale)?)?;
        }
        Ok(out)
    }
}

fn check_order(k: usize) -> Result<()> {
    if (2..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(k))
    }
}

/// Plug-in order-`k` cumulant of the (empirically centered) sample.
pub fn sample_cumulant(data: &DataMatrix, k: usize) -> Result<SymmetricTensor> {
    check_order(k)?;
    if data.n() < k {
        return Err(Error::InvalidData(format!(
            "order-{k} cumulant needs at least {k} observations, got {}",
            data.n()
        )));
    }
    MomentTable::from_data(&data.centered(), k).cumulant(k)
}

/// Several plug-in cumulants sharing one moment table.
pub fn sample_cumulants(data: &DataMatrix, orders: &[usize]) -> Result<CumulantSet> {
    let max = orders.iter().copied().max().unwrap_or(2);
    for &k in orders {
        check_order(k)?;
    }
    if data.n() < max {
        return Err(Error::InvalidData(format!(
            "order-{max} cumulants need at least {max} observations, got {}",
            data.n()
        )));
    }
    let table = MomentTable::from_data(&data.centered(), max);
    cumulants_from_table(&table, orders)
}

/// Cumulants of a resample given by row multiplicities. The partition
/// formula includes the first moments, so no re-centering pass is needed.
pub fn weighted_cumulants(data: &DataMatrix, weights: &[f64], orders: &[usize]) -> Result<CumulantSet> {
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} rows",
            weights.len(),
            data.n()
        )));
    }
    let max = orders.iter().copied().max().unwrap_or(2);
    for &k in orders {
        check_order(k)?;
    }
    let table = MomentTable::from_weighted(data.values(), weights, max);
    cumulants_from_table(&table, orders)
}

pub(crate) fn cumulants_from_table(table: &MomentTable, orders: &[usize]) -> Result<CumulantSet> {
    let mut set = CumulantSet::new(table.dim());
    for &k in orders {
        set.insert(table.cumulant(k)?)?;
    }
    Ok(set)
}

/// `κ_m = shape·(m-1)!/rate^m` for `m = 2..=max_order`, the cumulants of a
/// Gamma(shape, rate) law.
pub fn gamma_cumulants(shape: f64, rate: f64, max_order: usize) -> Result<Vec<f64>> {
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Gamma parameters must be positive (shape {shape}, rate {rate})"
        )));
    }
    Ok((2..=max_order)
        .map(|m| shape * factorial(m - 1) / rate.powi(m as i32))
        .collect())
}

/// `κ_2 = sd²` and zero above order 2.
pub fn gaussian_cumulants(sd: f64, max_order: usize) -> Vec<f64> {
    (2..=max_order).map(|m| if m == 2 { sd * sd } else { 0.0 }).collect()
}

/// Linear SEM `X = Λᵀ X + Γᵀ L + ε` with independent sources
/// `η = (L_1..L_l, ε_1..ε_p)` described by their cumulants.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    lambda: DMatrix<f64>,
    gamma: DMatrix<f64>,
    // source j, entry k-2 holds κ_j^(k)
    source_cumulants: Vec<Vec<f64>>,
    mixing: DMatrix<f64>,
}

impl SemModel {
    pub fn new(lambda: DMatrix<f64>, gamma: DMatrix<f64>, source_cumulants: Vec<Vec<f64>>) -> Result<Self> {
        let p = lambda.nrows();
        if lambda.ncols() != p {
            return Err(Error::DimensionMismatch("Λ must be square".into()));
        }
        if (0..p).any(|i| lambda[(i, i)] != 0.0) {
            return Err(Error::InvalidArgument("Λ must have a zero diagonal".into()));
        }
        if gamma.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "Γ has {} columns, expected {p}",
                gamma.ncols()
            )));
        }
        let l = gamma.nrows();
        if source_cumulants.len() != p + l {
            return Err(Error::DimensionMismatch(format!(
                "{} source cumulant lists for {} sources",
                source_cumulants.len(),
                p + l
            )));
        }
        let i_minus = DMatrix::<f64>::identity(p, p) - &lambda;
        let inv = i_minus
            .try_inverse()
            .ok_or_else(|| Error::Numerical("I - Λ is singular".into()))?;
        let inv_t = inv.transpose();
        let mut stacked = DMatrix::zeros(p, l + p);
        stacked.view_mut((0, 0), (p, l)).copy_from(&gamma.transpose());
        stacked.view_mut((0, l), (p, p)).fill_with_identity();
        let mixing = inv_t * stacked;
        Ok(SemModel {
            lambda,
            gamma,
            source_cumulants,
            mixing,
        })
    }

    pub fn p(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn l(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// `B = (I - Λ)^{-T} (Γᵀ | I_p)`, of size p × (l + p).
    pub fn mixing_matrix(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn source_cumulant(&self, source: usize, k: usize) -> Option<f64> {
        self.source_cumulants.get(source)?.get(k.checked_sub(2)?).copied()
    }

    /// `cum^(k)(η) • B • ... • B`.
    pub fn population_cumulant(&self, k: usize) -> Result<SymmetricTensor> {
        check_order(k)?;
        let kappas: Vec<f64> = (0..self.p() + self.l())
            .map(|j| self.source_cumulant(j, k).ok_or(Error::MissingOrder(k)))
            .collect::<Result<_>>()?;
        tucker_transform(&SymmetricTensor::diagonal(k, &kappas), &self.mixing)
    }

    pub fn population_cumulants(&self, orders: &[usize]) -> Result<CumulantSet> {
        let mut set = CumulantSet::new(self.p());
        for &k in orders {
            set.insert(self.population_cumulant(k)?)?;
        }
        Ok(set)
    }
}

/// Multi-indices of order `k` over `p` variables, re-exported for callers
/// that iterate cumulant entries.
pub fn cumulant_indices(p: usize, k: usize) -> Vec<Vec<usize>> {
    enumerate_multi_indices(p, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, StandardNormal};

    fn gaussian_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
    }

    #[test]
    fn order_two_is_biased_covariance() {
        let d = gaussian_data(50, 3, 1);
        let c2 = sample_cumulant(&d, 2).unwrap();
        let x = d.centered();
        for i in 0..3 {
            for j in 0..3 {
                let cov: f64 = (0..50).map(|r| x.values()[(r, i)] * x.values()[(r, j)]).sum::<f64>() / 50.0;
                assert_relative_eq!(c2.get(&[i, j]), cov, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn order_three_is_third_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Gamma::new(2.0, 1.0).unwrap();
        let d = DataMatrix::new(DMatrix::from_fn(80, 2, |_, _| g.sample(&mut rng))).unwrap();
        let c3 = sample_cumulant(&d, 3).unwrap();
        let x = d.centered();
        for idx in cumulant_indices(2, 3) {
            let m: f64 = (0..80)
                .map(|r| idx.iter().map(|&i| x.values()[(r, i)]).product::<f64>())
                .sum::<f64>()
                / 80.0;
            assert_relative_eq!(c3.get(&idx), m, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_fourth_cumulant_vanishes() {
        let d = gaussian_data(10_000, 1, 3);
        let k4 = sample_cumulant(&d, 4).unwrap();
        assert!(k4.get(&[0, 0, 0, 0]).abs() < 0.3);
    }

    #[test]
    fn fourth_cumulant_matches_closed_form() {
        // univariate: κ4 = m4 - 3 m2² on centered data
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Gamma::new(2.5, 2.0).unwrap();
        let d = DataMatrix::new(DMatrix::from_fn(200, 1, |_, _| g.sample(&mut rng))).unwrap();
        let x = d.centered();
        let m = |k: i32| x.values().iter().map(|v| v.powi(k)).sum::<f64>() / 200.0;
        let k4 = sample_cumulant(&d, 4).unwrap().get(&[0, 0, 0, 0]);
        assert_relative_eq!(k4, m(4) - 3.0 * m(2).powi(2), epsilon = 1e-10);
        let k6 = sample_cumulant(&d, 6).unwrap().get(&[0; 6]);
        let expected = m(6) - 15.0 * m(4) * m(2) - 10.0 * m(3).powi(2) + 30.0 * m(2).powi(3);
        assert_relative_eq!(k6, expected, max_relative = 1e-9);
    }

    #[test]
    fn order_and_size_errors() {
        let d = gaussian_data(5, 2, 5);
        assert_eq!(sample_cumulant(&d, 1), Err(Error::UnsupportedOrder(1)));
        assert_eq!(sample_cumulant(&d, 7), Err(Error::UnsupportedOrder(7)));
        assert!(matches!(sample_cumulant(&d, 6), Err(Error::InvalidData(_))));
    }

    #[test]
    fn row_shuffle_is_bit_exact() {
        let d = gaussian_data(300, 3, 6);
        let mut rows: Vec<usize> = (0..300).collect();
        rows.reverse();
        rows.rotate_left(77);
        let shuffled = d.select_rows(&rows);
        for k in 2..=4 {
            let a = sample_cumulant(&d, k).unwrap();
            let b = sample_cumulant(&shuffled, k).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn affine_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = gaussian_data(100, 3, 8).map(|v| v.exp()).unwrap();
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let transformed = DataMatrix::new(d.values() * a.transpose()).unwrap();
        for k in [2usize, 3] {
            let lhs = sample_cumulant(&transformed, k).unwrap();
            let rhs = tucker_transform(&sample_cumulant(&d, k).unwrap(), &a).unwrap();
            let scale = rhs.max_abs();
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn weighted_matches_materialized_resample() {
        let d = gaussian_data(40, 2, 9).map(|v| v * v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rows: Vec<usize> = (0..40).map(|_| rng.random_range(0..40)).collect();
        let mut counts = vec![0.0; 40];
        rows.iter().for_each(|&r| counts[r] += 1.0);
        let a = weighted_cumulants(&d, &counts, &[2, 3, 4]).unwrap();
        let b = sample_cumulants(&d.select_rows(&rows), &[2, 3, 4]).unwrap();
        for k in [2, 3, 4] {
            for (x, y) in a.get(k).unwrap().values().iter().zip(b.get(k).unwrap().values()) {
                assert_relative_eq!(x, y, epsilon = 1e-12, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn gamma_cumulant_examples() {
        assert_eq!(gamma_cumulants(1.0, 1.0, 4).unwrap(), vec![1.0, 2.0, 6.0]);
        assert_eq!(gamma_cumulants(2.0, 2.0, 2).unwrap(), vec![0.5]);
        let k = gamma_cumulants(2.7, 3.1, 3).unwrap();
        assert_relative_eq!(k[0], 2.7 / (3.1 * 3.1), epsilon = 1e-15);
        assert!(gamma_cumulants(0.0, 1.0, 3).is_err());
        assert!(gamma_cumulants(1.0, -1.0, 3).is_err());
    }

    fn random_model(p: usize, l: usize, seed: u64) -> SemModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { rng.random_range(-1.0..1.0) });
        let gamma = DMatrix::from_fn(l, p, |_, _| rng.random_range(-1.0..1.0));
        let sources = (0..p + l)
            .map(|_| gamma_cumulants(rng.random_range(2.0..3.0), rng.random_range(1.0..5.0), 6).unwrap())
            .collect();
        SemModel::new(lambda, gamma, sources).unwrap()
    }

    #[test]
    fn population_identity_covariance() {
        let model = SemModel::new(DMatrix::zeros(3, 3), DMatrix::zeros(0, 3), vec![vec![1.0]; 3]).unwrap();
        let c2 = model.population_cumulant(2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c2.get(&[i, j]), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(model.population_cumulant(3), Err(Error::MissingOrder(3)));
    }

    #[test]
    fn population_matches_expanded_sum() {
        let model = random_model(3, 1, 11);
        let b = model.mixing_matrix();
        let c3 = model.population_cumulant(3).unwrap();
        for idx in cumulant_indices(3, 3) {
            let expanded: f64 = (0..4)
                .map(|j| model.source_cumulant(j, 3).unwrap() * idx.iter().map(|&i| b[(i, j)]).product::<f64>())
                .sum();
            assert_relative_eq!(c3.get(&idx), expanded, epsilon = 1e-12);
        }
    }

    #[test]
    fn population_matches_simulation() {
        // p = 2, l = 0, Gamma sources; relative sup error below 0.05 for k <= 4.
        // At n = 1e5 the order-4 error is about 0.06 on typical seeds, so the
        // sample is 1e6.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lambda = DMatrix::from_row_slice(2, 2, &[0.0, 0.8, 0.0, 0.0]);
        let laws = [(2.0, 1.5), (3.0, 2.0)];
        let sources = laws.iter().map(|&(s, r)| gamma_cumulants(s, r, 6).unwrap()).collect();
        let model = SemModel::new(lambda, DMatrix::zeros(0, 2), sources).unwrap();
        let n = 1_000_000;
        let eta = DMatrix::from_fn(n, 2, |_, j| Gamma::new(laws[j].0, 1.0 / laws[j].1).unwrap().sample(&mut rng));
        let x = DataMatrix::new(eta * model.mixing_matrix().transpose()).unwrap();
        for k in 2..=4 {
            let est = sample_cumulant(&x, k).unwrap();
            let pop = model.population_cumulant(k).unwrap();
            let err = est
                .values()
                .iter()
                .zip(pop.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err / pop.max_abs() < 0.05, "k={k}: rel err {}", err / pop.max_abs());
        }
    }

    #[test]
    fn sem_validation() {
        let bad_diag = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!(SemModel::new(bad_diag, DMatrix::zeros(0, 2), vec![vec![1.0]; 2]).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            SemModel::new(singular, DMatrix::zeros(0, 2), vec![vec![1.0]; 2]),
            Err(Error::Numerical(_))
        ));
        assert!(SemModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(1, 2), vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn standardized_set_has_unit_variances() {
        let model = random_model(3, 0, 13);
        let set = model.population_cumulants(&[2, 3]).unwrap().standardized().unwrap();
        for i in 0..3 {
            assert_relative_eq!(set.get(2).unwrap().get(&[i, i]), 1.0, epsilon = 1e-14);
        }
    }
}
