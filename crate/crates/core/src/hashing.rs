//! k-wise independent {-1, +1} hash families.
//!
//! A family is a uniformly random polynomial of degree < k over GF(2^m);
//! the sign at point x is the lowest bit of p(x). Any k distinct points give
//! uniform independent bits, so the signs are k-wise independent and each
//! family costs k field elements of state.
//!
//! Evaluation never multiplies in the field at stream time: the lowest bit
//! of c * x^d is GF(2)-linear in c, so each point carries one mask per
//! degree and a sign is k AND+popcount steps (see `GfField::lsb_masks`).

use crate::gf2::GfField;
use crate::rng::StreamRng;
use ndarray::Array2;
use rand::Rng;

/// Cap on (tuples x seeds x degree) work in the exhaustive checks.
const MAX_EXHAUSTIVE_OPS: f64 = 8.6e9;

#[inline]
fn sign_from_bit(bit: u32) -> f64 {
    1.0 - 2.0 * f64::from(bit)
}

/// One hash function: k coefficients, coeffs[d] multiplies x^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignFamily {
    field: GfField,
    coeffs: Vec<u32>,
}

impl SignFamily {
    pub fn sample(k: u32, m: u32, rng: &mut StreamRng) -> crate::Result<SignFamily> {
        let field = GfField::new(m)?;
        if k == 0 {
            return Err(crate::Error::Parameter("independence order k = 0".into()));
        }
        let coeffs = (0..k).map(|_| rng.gen_range(0..field.order()) as u32).collect();
        Ok(SignFamily { field, coeffs })
    }

    pub fn from_coeffs(k: u32, m: u32, coeffs: Vec<u32>) -> crate::Result<SignFamily> {
        let field = GfField::new(m)?;
        if k == 0 || coeffs.len() != k as usize {
            return Err(crate::Error::Parameter(format!(
                "expected {k} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|&c| u64::from(c) >= field.order()) {
            return Err(crate::Error::Parameter("coefficient outside the field".into()));
        }
        Ok(SignFamily { field, coeffs })
    }

    /// Decode a seed index into coefficients, low m bits first.
    pub fn from_seed_index(k: u32, m: u32, seed: u64) -> crate::Result<SignFamily> {
        let bits = seed_bits(k, m)?;
        if bits >= 64 || seed >> bits != 0 {
            return Err(crate::Error::SeedSpaceTooLarge { bits: bits as u32 });
        }
        let mask = (1u64 << m) - 1;
        let coeffs = (0..k).map(|d| ((seed >> (d * m)) & mask) as u32).collect();
        SignFamily::from_coeffs(k, m, coeffs)
    }

    pub fn k(&self) -> u32 {
        self.coeffs.len() as u32
    }

    pub fn m(&self) -> u32 {
        self.field.m()
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// Direct evaluation through field arithmetic. Reference path; the
    /// mask-based bank below must agree with this bit for bit.
    pub fn sign_at(&self, point: u64) -> crate::Result<f64> {
        if point >= self.field.order() {
            return Err(crate::Error::Parameter(format!(
                "point {point} outside field of order {}",
                self.field.order()
            )));
        }
        let val = self.field.eval_poly(&self.coeffs, point as u32);
        Ok(sign_from_bit(val & 1))
    }
}

pub fn seed_bits(k: u32, m: u32) -> crate::Result<u64> {
    if k == 0 {
        return Err(crate::Error::Parameter("independence order k = 0".into()));
    }
    GfField::new(m)?;
    Ok(u64::from(k) * u64::from(m))
}

/// Per-degree lsb masks of one evaluation point, shared by every family in a
/// bank with the same (k, m).
#[derive(Debug, Clone)]
pub struct SignPoint {
    masks: Vec<u32>,
    m: u32,
}

impl SignPoint {
    /// Concatenation of the per-degree masks, low degree in the low bits.
    /// The sign of a family with seed index s at this point is the parity
    /// of s AND this mask, which is what the exhaustive checks exploit.
    pub fn seed_mask(&self) -> crate::Result<u64> {
        let bits = seed_bits(self.masks.len() as u32, self.m)?;
        if bits >= 64 {
            return Err(crate::Error::SeedSpaceTooLarge { bits: bits as u32 });
        }
        let mut out = 0u64;
        for (d, &mask) in self.masks.iter().enumerate() {
            out |= u64::from(mask) << (d as u64 * u64::from(self.m));
        }
        Ok(out)
    }
}

/// `count` independent families sharing one field and one order k, laid out
/// for bulk evaluation at a common stream point.
#[derive(Debug, Clone)]
pub struct SignBank {
    field: GfField,
    k: u32,
    count: usize,
    coeffs: Vec<u32>, // count * k, family-major
}

impl SignBank {
    pub fn sample(k: u32, m: u32, count: usize, rng: &mut StreamRng) -> crate::Result<SignBank> {
        let field = GfField::new(m)?;
        if k == 0 {
            return Err(crate::Error::Parameter("independence order k = 0".into()));
        }
        if count == 0 {
            return Err(crate::Error::Parameter("empty bank".into()));
        }
        let coeffs =
            (0..count * k as usize).map(|_| rng.gen_range(0..field.order()) as u32).collect();
        Ok(SignBank { field, k, count, coeffs })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.field.m()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Field elements of state across the whole bank.
    pub fn state_words(&self) -> usize {
        self.coeffs.len()
    }

    pub fn family(&self, idx: usize) -> crate::Result<SignFamily> {
        if idx >= self.count {
            return Err(crate::Error::Parameter(format!("family index {idx} out of range")));
        }
        let start = idx * self.k as usize;
        SignFamily::from_coeffs(
            self.k,
            self.field.m(),
            self.coeffs[start..start + self.k as usize].to_vec(),
        )
    }

    pub fn point(&self, x: u64) -> crate::Result<SignPoint> {
        if x >= self.field.order() {
            return Err(crate::Error::Parameter(format!(
                "point {x} outside field of order {}",
                self.field.order()
            )));
        }
        Ok(SignPoint { masks: self.field.lsb_masks(x as u32, self.k as usize), m: self.field.m() })
    }

    /// Signs of every family at one point. `out.len()` must equal `count`.
    pub fn signs_into(&self, point: &SignPoint, out: &mut [f64]) {
        assert_eq!(out.len(), self.count);
        assert_eq!(point.masks.len(), self.k as usize);
        let k = self.k as usize;
        for (f, slot) in out.iter_mut().enumerate() {
            let base = f * k;
            let mut bit = 0u32;
            for (d, &mask) in point.masks.iter().enumerate() {
                bit ^= (self.coeffs[base + d] & mask).count_ones();
            }
            *slot = sign_from_bit(bit & 1);
        }
    }

    pub fn sign_one(&self, idx: usize, point: &SignPoint) -> f64 {
        let k = self.k as usize;
        let base = idx * k;
        let mut bit = 0u32;
        for (d, &mask) in point.masks.iter().enumerate() {
            bit ^= (self.coeffs[base + d] & mask).count_ones();
        }
        sign_from_bit(bit & 1)
    }
}

/// Which construction an exhaustive check runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyVariant {
    /// The real construction: all k coefficients free.
    Full,
    /// Deliberately broken control: the top coefficient is pinned to zero,
    /// leaving degree < k-1. The check must reject this one.
    TopCoefficientZeroed,
}

#[derive(Debug, Clone)]
pub struct KwiseCheckReport {
    pub k: u32,
    pub m: u32,
    pub variant: FamilyVariant,
    pub tuples_checked: u64,
    pub seeds_per_tuple: u64,
    pub max_abs_bias: f64,
    pub worst_tuple: Vec<u64>,
    pub passed: bool,
}

struct Combinations {
    idx: Vec<usize>,
    q: usize,
    fresh: bool,
}

impl Combinations {
    fn new(q: usize, t: usize) -> Combinations {
        Combinations { idx: (0..t).collect(), q, fresh: true }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let t = self.idx.len();
        if t > self.q {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.idx.clone());
        }
        let mut i = t;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if self.idx[i] < self.q - (t - i) {
                self.idx[i] += 1;
                for j in i + 1..t {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(self.idx.clone());
            }
        }
    }
}

fn count_tuples(q: u64, k: u64) -> f64 {
    let mut total = 0.0f64;
    let mut binom = 1.0f64;
    for t in 1..=k.min(q) {
        binom *= (q - t + 1) as f64 / t as f64;
        total += binom;
    }
    total
}

/// Mean of the product of signs over a tuple of points, averaged over every
/// seed in the family's seed space. Exact: the accumulator is an integer.
pub fn tuple_correlation(k: u32, m: u32, tuple: &[u64]) -> crate::Result<f64> {
    tuple_correlation_variant(k, m, tuple, FamilyVariant::Full)
}

pub fn tuple_correlation_variant(
    k: u32,
    m: u32,
    tuple: &[u64],
    variant: FamilyVariant,
) -> crate::Result<f64> {
    let field = GfField::new(m)?;
    if tuple.is_empty() {
        return Err(crate::Error::Parameter("empty tuple".into()));
    }
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(crate::Error::DuplicateIndex(w[0]));
        }
    }
    if let Some(&bad) = tuple.iter().find(|&&x| x >= field.order()) {
        return Err(crate::Error::Parameter(format!("point {bad} outside the field")));
    }
    let free_degrees = match variant {
        FamilyVariant::Full => k,
        FamilyVariant::TopCoefficientZeroed => {
            if k < 2 {
                return Err(crate::Error::Parameter(
                    "zeroed-top variant needs k >= 2".into(),
                ));
            }
            k - 1
        }
    };
    let bits = seed_bits(free_degrees, m)?;
    if bits >= 63 {
        return Err(crate::Error::SeedSpaceTooLarge { bits: bits as u32 });
    }
    let seeds = 1u64 << bits;
    let ops = seeds as f64 * tuple.len() as f64;
    if ops > MAX_EXHAUSTIVE_OPS {
        return Err(crate::Error::Parameter(format!(
            "exhaustive tuple scan needs ~{ops:.2e} operations, over the safety cap"
        )));
    }

    // per-point seed masks built from the same lsb-mask machinery the banks use
    let point_masks: Vec<u64> = tuple
        .iter()
        .map(|&x| {
            let masks = field.lsb_masks(x as u32, free_degrees as usize);
            let mut out = 0u64;
            for (d, &mk) in masks.iter().enumerate() {
                out |= u64::from(mk) << (d as u64 * u64::from(m));
            }
            out
        })
        .collect();

    let mut sum: i64 = 0;
    for s in 0..seeds {
        let mut bit = 0u32;
        for &pm in &point_masks {
            bit ^= (s & pm).count_ones();
        }
        sum += if bit & 1 == 0 { 1 } else { -1 };
    }
    Ok(sum as f64 / seeds as f64)
}

/// Enumerate every nonempty tuple of at most k distinct points and every
/// seed, and report the largest absolute correlation found. For the real
/// construction every correlation is exactly zero.
pub fn exhaustive_kwise_check(k: u32, m: u32) -> crate::Result<KwiseCheckReport> {
    exhaustive_kwise_check_variant(k, m, FamilyVariant::Full)
}

pub fn exhaustive_kwise_check_variant(
    k: u32,
    m: u32,
    variant: FamilyVariant,
) -> crate::Result<KwiseCheckReport> {
    let field = GfField::new(m)?;
    let free_degrees = match variant {
        FamilyVariant::Full => k,
        FamilyVariant::TopCoefficientZeroed => {
            if k < 2 {
                return Err(crate::Error::Parameter(
                    "zeroed-top variant needs k >= 2".into(),
                ));
            }
            k - 1
        }
    };
    let bits = seed_bits(free_degrees, m)?;
    if bits >= 63 {
        return Err(crate::Error::SeedSpaceTooLarge { bits: bits as u32 });
    }
    let seeds = 1u64 << bits;
    let q = field.order();
    let ops = count_tuples(q, u64::from(k)) * seeds as f64 * k as f64;
    if ops > MAX_EXHAUSTIVE_OPS {
        return Err(crate::Error::Parameter(format!(
            "exhaustive check at k={k}, m={m} needs ~{ops:.2e} operations, over the safety cap"
        )));
    }

    // seed mask per point, one shot
    let all_point_masks: Vec<u64> = (0..q)
        .map(|x| {
            let masks = field.lsb_masks(x as u32, free_degrees as usize);
            let mut out = 0u64;
            for (d, &mk) in masks.iter().enumerate() {
                out |= u64::from(mk) << (d as u64 * u64::from(m));
            }
            out
        })
        .collect();

    let mut tuples_checked = 0u64;
    let mut max_abs_bias = 0.0f64;
    let mut worst_tuple: Vec<u64> = Vec::new();
    for t in 1..=k.min(q as u32) {
        for combo in Combinations::new(q as usize, t as usize) {
            tuples_checked += 1;
            let masks: Vec<u64> = combo.iter().map(|&i| all_point_masks[i]).collect();
            let mut sum: i64 = 0;
            for s in 0..seeds {
                let mut bit = 0u32;
                for &pm in &masks {
                    bit ^= (s & pm).count_ones();
                }
                sum += if bit & 1 == 0 { 1 } else { -1 };
            }
            let bias = (sum as f64 / seeds as f64).abs();
            if bias > max_abs_bias {
                max_abs_bias = bias;
                worst_tuple = combo.iter().map(|&i| i as u64).collect();
            }
        }
    }
    Ok(KwiseCheckReport {
        k,
        m,
        variant,
        tuples_checked,
        seeds_per_tuple: seeds,
        max_abs_bias,
        worst_tuple,
        passed: max_abs_bias == 0.0,
    })
}

/// E[v v^T] over the entire seed space, restricted to points 0..n. For the
/// real construction with k >= 2 this is exactly the identity; computing it
/// by enumeration is what certifies the estimator's mean factorization.
pub fn exhaustive_sign_gram(k: u32, m: u32, n: usize) -> crate::Result<Array2<f64>> {
    let field = GfField::new(m)?;
    if n == 0 || n as u64 > field.order() {
        return Err(crate::Error::Parameter(format!(
            "need 1 <= n <= 2^m, got n={n}, m={m}"
        )));
    }
    let bits = seed_bits(k, m)?;
    if bits >= 63 {
        return Err(crate::Error::SeedSpaceTooLarge { bits: bits as u32 });
    }
    let seeds = 1u64 << bits;
    let pairs = (n * (n - 1) / 2) as f64;
    if pairs * seeds as f64 > MAX_EXHAUSTIVE_OPS {
        return Err(crate::Error::Parameter(format!(
            "gram enumeration at k={k}, m={m}, n={n} is over the safety cap"
        )));
    }

    let point_masks: Vec<u64> = (0..n as u64)
        .map(|x| {
            let masks = field.lsb_masks(x as u32, k as usize);
            let mut out = 0u64;
            for (d, &mk) in masks.iter().enumerate() {
                out |= u64::from(mk) << (d as u64 * u64::from(m));
            }
            out
        })
        .collect();

    let mut gram = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in i + 1..n {
            // product of the two signs is the parity of s AND (mask_i ^ mask_j)
            let pm = point_masks[i] ^ point_masks[j];
            let mut sum: i64 = 0;
            for s in 0..seeds {
                sum += if (s & pm).count_ones() & 1 == 0 { 1 } else { -1 };
            }
            let mean = sum as f64 / seeds as f64;
            gram[(i, j)] = mean;
            gram[(j, i)] = mean;
        }
    }
    Ok(gram)
}
