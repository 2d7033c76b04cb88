//! One-pass streaming estimators for the bilinear form a^T B c.
//!
//! Stream layout, fixed across the crate: the n entries of c, then the n^2
//! entries of B in row-major order, then the n entries of a.
//!
//! Two estimators live here. The naive sketch hashes both sides with 8-wise
//! independent signs and has variance on the order of n. The decider keeps
//! the heaviest coordinates of c, renormalizes, and runs a median-of-means
//! bank of 4-wise sketches against the implied unit vector, which is what
//! brings the error down to a constant at sublinear space.

use std::collections::BinaryHeap;

use crate::hashing::{SignBank, SignFamily};
use crate::linalg::Label;
use crate::numeric::{ceil_log2, median};
use crate::rng::StreamRng;

/// Independence order of the naive estimator's two hash families.
pub const NAIVE_INDEPENDENCE: u32 = 8;
/// Independence order of the decider's sign bank.
pub const DECIDER_INDEPENDENCE: u32 = 4;
/// Median groups. 19 groups push the median failure probability per run
/// below 1e-8 when each group mean is within tolerance with margin 2 sigma.
pub const MOM_GROUPS: usize = 19;
/// Hard cap on bank size so a tiny retained mass cannot balloon memory.
pub const MAX_COPIES: usize = 1 << 21;

/// Field degree used for stream indices in [0, n).
pub fn field_degree_for(n: usize) -> u32 {
    ceil_log2(n as u64).max(2)
}

/// Retained-coordinate budget: ceil(cf * sqrt(n)), clamped to [1, n].
pub fn capacity_for(n: usize, capacity_factor: f64) -> usize {
    let raw = (capacity_factor * (n as f64).sqrt()).ceil();
    (raw as usize).clamp(1, n)
}

/// Sketch copies per median group so each group mean lands within alpha/3
/// of its target with a 2-sigma margin (copy variance is at most 1+alpha^2).
pub fn copies_per_group(alpha: f64) -> crate::Result<usize> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(crate::Error::Degenerate(format!("retained mass alpha = {alpha}")));
    }
    Ok((72.0 / (alpha * alpha)).ceil() as usize)
}

/// Reference space envelope 40 sqrt(n) log2(n), in stored reals.
pub fn reference_space_budget(n: usize) -> f64 {
    40.0 * (n as f64).sqrt() * (n as f64).log2()
}

#[derive(Debug, Clone, Copy)]
pub struct SpaceReport {
    pub n: usize,
    pub capacity: usize,
    /// Total sketch copies (groups x copies per group).
    pub copies: usize,
    /// f64 slots the algorithm holds: retained values, two running sums per
    /// copy, the retained mass, one row accumulator.
    pub stored_reals: usize,
    /// Non-real bookkeeping: retained indices, hash seeds, duplicate bitset.
    pub aux_bits: u64,
}

/// Result of one decider run.
#[derive(Debug, Clone, Copy)]
pub struct StreamOutcome {
    pub label: Label,
    /// Median-of-means estimate of <a, B cbar>; its target is label * alpha.
    pub estimate: f64,
    /// Euclidean mass of the retained part of c.
    pub alpha: f64,
    pub space: SpaceReport,
}

#[derive(Debug)]
struct HeapEntry {
    abs: f64,
    index: usize,
    value: f64,
}

// Max element of the heap = weakest entry: smaller |value| is weaker,
// ties broken toward the larger index so earlier coordinates win.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.abs.total_cmp(&self.abs).then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for HeapEntry {}

/// Streaming top-|value| selector over indices [0, n). Deterministic:
/// among equal magnitudes the smaller index is kept.
#[derive(Debug)]
pub struct HeavyCoords {
    n: usize,
    capacity: usize,
    heap: BinaryHeap<HeapEntry>,
    seen: Vec<u64>,
}

impl HeavyCoords {
    pub fn new(n: usize, capacity: usize) -> crate::Result<HeavyCoords> {
        if n == 0 {
            return Err(crate::Error::Parameter("dimension 0".into()));
        }
        if capacity == 0 || capacity > n {
            return Err(crate::Error::Parameter(format!(
                "capacity {capacity} outside [1, {n}]"
            )));
        }
        Ok(HeavyCoords {
            n,
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
            seen: vec![0u64; n.div_ceil(64)],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn insert(&mut self, index: usize, value: f64) -> crate::Result<()> {
        if index >= self.n {
            return Err(crate::Error::Parameter(format!("index {index} >= n = {}", self.n)));
        }
        if !value.is_finite() {
            return Err(crate::Error::Parameter(format!("non-finite value at {index}")));
        }
        let (word, bit) = (index / 64, index % 64);
        if self.seen[word] >> bit & 1 == 1 {
            return Err(crate::Error::DuplicateIndex(index as u64));
        }
        self.seen[word] |= 1 << bit;
        let entry = HeapEntry { abs: value.abs(), index, value };
        if self.heap.len() < self.capacity {
            self.heap.push(entry);
        } else if let Some(weakest) = self.heap.peek() {
            // keep the newcomer only if it is strictly stronger
            if entry.cmp(weakest) == std::cmp::Ordering::Less {
                self.heap.pop();
                self.heap.push(entry);
            }
        }
        Ok(())
    }

    /// Retained mass and the retained coordinates scaled to unit norm.
    pub fn into_sparse(self) -> crate::Result<(f64, SparseUnit)> {
        if self.heap.is_empty() {
            return Err(crate::Error::EmptySketch);
        }
        let n = self.n;
        let mut pairs: Vec<(usize, f64)> =
            self.heap.into_iter().map(|e| (e.index, e.value)).collect();
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let alpha = pairs.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if alpha < 1e-12 {
            return Err(crate::Error::Degenerate("retained mass is zero".into()));
        }
        let indices: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
        let weights: Vec<f64> = pairs.iter().map(|&(_, v)| v / alpha).collect();
        Ok((alpha, SparseUnit { n, indices, weights }))
    }
}

/// A unit vector with few nonzero coordinates, indices strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseUnit {
    n: usize,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseUnit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (i, w) in self.entries() {
            v[i] = w;
        }
        v
    }
}

fn take_next(
    it: &mut impl Iterator<Item = f64>,
    expected: usize,
    got: &mut usize,
) -> crate::Result<f64> {
    match it.next() {
        Some(x) => {
            *got += 1;
            Ok(x)
        }
        None => Err(crate::Error::Dimension { expected, got: *got }),
    }
}

/// Naive one-pass sketch: signs v on the row side, w on the column side,
/// estimate = (sum_i v_i a_i) (sum_ij v_i w_j B_ij) (sum_j w_j c_j).
/// Unbiased; its variance scales linearly with n.
pub fn naive_bilinear_estimate(
    n: usize,
    values: impl IntoIterator<Item = f64>,
    rng: &mut StreamRng,
) -> crate::Result<f64> {
    let m = field_degree_for(n);
    let v = SignFamily::sample(NAIVE_INDEPENDENCE, m, rng)?;
    let w = SignFamily::sample(NAIVE_INDEPENDENCE, m, rng)?;
    naive_bilinear_estimate_with_families(n, values, &v, &w)
}

pub fn naive_bilinear_estimate_with_families(
    n: usize,
    values: impl IntoIterator<Item = f64>,
    v: &SignFamily,
    w: &SignFamily,
) -> crate::Result<f64> {
    if n == 0 {
        return Err(crate::Error::Parameter("dimension 0".into()));
    }
    if (1u64 << v.m().min(63)) < n as u64 || (1u64 << w.m().min(63)) < n as u64 {
        return Err(crate::Error::Parameter("family field too small for n".into()));
    }
    // per-index sign caches; the stream itself is still read exactly once
    let vs: Vec<f64> = (0..n as u64).map(|i| v.sign_at(i)).collect::<crate::Result<_>>()?;
    let ws: Vec<f64> = (0..n as u64).map(|j| w.sign_at(j)).collect::<crate::Result<_>>()?;

    let expected = n * n + 2 * n;
    let mut got = 0usize;
    let mut it = values.into_iter();
    let mut sum_c = 0.0;
    for j in 0..n {
        sum_c += ws[j] * take_next(&mut it, expected, &mut got)?;
    }
    let mut sum_b = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += ws[j] * take_next(&mut it, expected, &mut got)?;
        }
        sum_b += vs[i] * row;
    }
    let mut sum_a = 0.0;
    for i in 0..n {
        sum_a += vs[i] * take_next(&mut it, expected, &mut got)?;
    }
    if it.next().is_some() {
        return Err(crate::Error::Dimension { expected, got: got + 1 });
    }
    Ok(sum_a * sum_b * sum_c)
}

/// One-pass decision sketch. Phase 1 keeps the heaviest `capacity` entries
/// of c; phases 2 and 3 run a median-of-means bank of 4-wise sketches of
/// <a, B cbar>, whose target value is label * alpha.
///
/// `copies_override` replaces the alpha-driven copies-per-group count;
/// sizing otherwise follows `copies_per_group`.
pub fn streaming_abc_decide(
    n: usize,
    values: impl IntoIterator<Item = f64>,
    capacity_factor: f64,
    copies_override: Option<usize>,
    rng: &mut StreamRng,
) -> crate::Result<StreamOutcome> {
    if n == 0 {
        return Err(crate::Error::Parameter("dimension 0".into()));
    }
    if !(capacity_factor.is_finite() && capacity_factor > 0.0) {
        return Err(crate::Error::Parameter(format!(
            "capacity factor {capacity_factor} must be positive"
        )));
    }
    let expected = n * n + 2 * n;
    let mut got = 0usize;
    let mut it = values.into_iter();

    let capacity = capacity_for(n, capacity_factor);
    let mut heavy = HeavyCoords::new(n, capacity)?;
    for i in 0..n {
        heavy.insert(i, take_next(&mut it, expected, &mut got)?)?;
    }
    let (alpha, cbar) = heavy.into_sparse()?;

    let per_group = match copies_override {
        Some(s) if s == 0 => {
            return Err(crate::Error::Parameter("copies per group must be positive".into()))
        }
        Some(s) => s,
        None => copies_per_group(alpha)?,
    };
    let copies = per_group
        .checked_mul(MOM_GROUPS)
        .filter(|&c| c <= MAX_COPIES)
        .ok_or_else(|| {
            crate::Error::Parameter(format!(
                "bank of {per_group} x {MOM_GROUPS} copies exceeds the cap; raise the capacity factor"
            ))
        })?;

    let m = field_degree_for(n);
    let bank = SignBank::sample(DECIDER_INDEPENDENCE, m, copies, rng)?;
    let mut sum_b = vec![0.0f64; copies];
    let mut sum_a = vec![0.0f64; copies];
    let mut signs = vec![0.0f64; copies];

    for i in 0..n {
        // (B cbar)_i accumulates over the row; cbar's indices are sorted so
        // a single cursor tracks the row-major column counter
        let mut row_acc = 0.0;
        let mut cursor = 0usize;
        for j in 0..n {
            let x = take_next(&mut it, expected, &mut got)?;
            if cursor < cbar.indices.len() && cbar.indices[cursor] == j {
                row_acc += x * cbar.weights[cursor];
                cursor += 1;
            }
        }
        let point = bank.point(i as u64)?;
        bank.signs_into(&point, &mut signs);
        for (acc, sg) in sum_b.iter_mut().zip(&signs) {
            *acc += sg * row_acc;
        }
    }
    for i in 0..n {
        let x = take_next(&mut it, expected, &mut got)?;
        let point = bank.point(i as u64)?;
        bank.signs_into(&point, &mut signs);
        for (acc, sg) in sum_a.iter_mut().zip(&signs) {
            *acc += sg * x;
        }
    }
    if it.next().is_some() {
        return Err(crate::Error::Dimension { expected, got: got + 1 });
    }

    let mut group_means = Vec::with_capacity(MOM_GROUPS);
    for g in 0..MOM_GROUPS {
        let base = g * per_group;
        let total: f64 =
            (base..base + per_group).map(|idx| sum_a[idx] * sum_b[idx]).sum();
        group_means.push(total / per_group as f64);
    }
    let estimate = median(&mut group_means);

    let space = SpaceReport {
        n,
        capacity,
        copies,
        stored_reals: capacity + 2 * copies + 2,
        aux_bits: (n as u64)
            + (copies as u64) * u64::from(DECIDER_INDEPENDENCE) * u64::from(m)
            + (capacity as u64) * 64,
    };
    Ok(StreamOutcome { label: Label::from_sign(estimate), estimate, alpha, space })
}

/// The canonical stream of a promise instance: c, B row-major, a.
pub fn instance_values(inst: &crate::linalg::PromiseInstance) -> impl Iterator<Item = f64> + '_ {
    let n = inst.n();
    let c = inst.c.as_slice().iter().copied();
    let b = (0..n).flat_map(move |i| inst.b.row(i).iter().copied());
    let a = inst.a.as_slice().iter().copied();
    c.chain(b).chain(a)
}
