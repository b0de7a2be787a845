//! Index combinatorics shared by every tensor and matrix layout in the crate.
//!
//! All multi-indices are 0-based internally. Non-decreasing tuples are
//! enumerated in lexicographic order, and that order is the canonical row and
//! column order of every flattening.

use std::sync::OnceLock;

/// Binomial coefficient `C(n, k)`; saturates at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of multisets of size `m` drawn from `q` elements, `C(q + m - 1, m)`.
pub fn multichoose(q: usize, m: usize) -> u64 {
    if m == 0 {
        return 1;
    }
    if q == 0 {
        return 0;
    }
    binomial(q + m - 1, m)
}

/// A sorted (non-decreasing) tuple of 0-based variable indices.
pub type MultiIndex = Vec<usize>;

/// All non-decreasing tuples of length `m` over `0..q`, in lexicographic order.
pub fn enumerate_multi_indices(q: usize, m: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(multichoose(q, m) as usize);
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    if q == 0 {
        return out;
    }
    let mut cur = vec![0usize; m];
    loop {
        out.push(cur.clone());
        // advance to the next non-decreasing tuple
        let mut t = m;
        while t > 0 && cur[t - 1] == q - 1 {
            t -= 1;
        }
        if t == 0 {
            break;
        }
        let v = cur[t - 1] + 1;
        for slot in cur.iter_mut().skip(t - 1) {
            *slot = v;
        }
    }
    out
}

/// All strictly increasing tuples (subsets) of size `s` over `0..p`, lexicographic.
pub fn enumerate_subsets(p: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(p, s) as usize);
    if s > p {
        return out;
    }
    let mut cur: Vec<usize> = (0..s).collect();
    loop {
        out.push(cur.clone());
        let mut t = s;
        while t > 0 && cur[t - 1] == p - s + t - 1 {
            t -= 1;
        }
        if t == 0 {
            break;
        }
        cur[t - 1] += 1;
        for u in t..s {
            cur[u] = cur[u - 1] + 1;
        }
    }
    out
}

/// Position of a non-decreasing tuple within [`enumerate_multi_indices`].
///
/// Precomputes tail counts so each lookup is `O(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexer {
    q: usize,
    m: usize,
    // skip[t][v]: number of tuples skipped when slot t holds v instead of
    // its minimum allowed value, accumulated from 0.
    prefix: Vec<Vec<u64>>,
}

impl MultiIndexer {
    pub fn new(q: usize, m: usize) -> Self {
        let mut prefix = Vec::with_capacity(m);
        for t in 0..m {
            let tail = m - t - 1;
            let mut row = Vec::with_capacity(q + 1);
            let mut acc = 0u64;
            row.push(0);
            for v in 0..q {
                acc += multichoose(q - v, tail);
                row.push(acc);
            }
            prefix.push(row);
        }
        MultiIndexer { q, m, prefix }
    }

    pub fn len(&self) -> usize {
        multichoose(self.q, self.m) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rank of a sorted tuple. The caller guarantees sortedness and range.
    #[inline]
    pub fn rank_sorted(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.m);
        let mut r = 0u64;
        let mut lo = 0usize;
        for (t, &v) in idx.iter().enumerate() {
            r += self.prefix[t][v] - self.prefix[t][lo];
            lo = v;
        }
        r as usize
    }

    /// Rank of an arbitrary tuple (sorted first).
    #[inline]
    pub fn rank(&self, idx: &[usize]) -> usize {
        let mut buf = [0usize; 16];
        let k = idx.len();
        if k <= buf.len() {
            buf[..k].copy_from_slice(idx);
            buf[..k].sort_unstable();
            self.rank_sorted(&buf[..k])
        } else {
            let mut v = idx.to_vec();
            v.sort_unstable();
            self.rank_sorted(&v)
        }
    }
}

/// Sign of the permutation that sorts `seq` (entries must be distinct).
pub fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let mut i = d;
        while i > 1 && cur[i - 2] >= cur[i - 1] {
            i -= 1;
        }
        if i <= 1 {
            break;
        }
        let pivot = i - 2;
        let mut j = d - 1;
        while cur[j] <= cur[pivot] {
            j -= 1;
        }
        cur.swap(pivot, j);
        cur[pivot + 1..].reverse();
    }
    out
}

/// A set partition of `0..k`: blocks with increasing elements, ordered by
/// their smallest element.
pub type SetPartition = Vec<Vec<usize>>;

/// Set partitions of `0..k` (Bell(k) of them), cached for `k <= 6`.
pub fn set_partitions(k: usize) -> &'static [SetPartition] {
    static CACHE: OnceLock<Vec<Vec<SetPartition>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=6).map(build_partitions).collect());
    assert!(k <= 6, "set partitions are cached up to k = 6");
    &cache[k]
}

fn build_partitions(k: usize) -> Vec<SetPartition> {
    // restricted growth strings
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut rgs = vec![0usize; k];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<SetPartition>) {
        let k = rgs.len();
        if pos == k {
            let blocks = rgs.iter().copied().max().unwrap_or(0) + 1;
            let mut part = vec![Vec::new(); blocks];
            for (i, &b) in rgs.iter().enumerate() {
                part[b].push(i);
            }
            out.push(part);
            return;
        }
        for b in 0..=max + 1 {
            rgs[pos] = b;
            rec(pos + 1, max.max(b), rgs, out);
        }
    }
    rgs[0] = 0;
    rec(1, 0, &mut rgs, &mut out);
    out
}

/// `n!` as f64.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, v| acc * v as f64)
}
