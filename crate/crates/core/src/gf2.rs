//! GF(2^m) arithmetic for the sign families, m in [2, 32].
//!
//! Field elements are bit masks over the primitive polynomial listed below.
//! The hot path never multiplies in the field directly: polynomial evaluation
//! only needs the lowest bit of products c * p, and the lowest bit is
//! GF(2)-linear in c, so each point gets a per-degree mask and every family
//! evaluation collapses to AND + popcount.

/// Low bits (everything below x^m) of a primitive polynomial of degree m.
/// Index by m. Verified externally: each polynomial is irreducible and x
/// generates the full multiplicative group of order 2^m - 1.
const POLY_LOW: [u32; 33] = [
    0, 0, 0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x87, 0x11, 0x9, 0x5, 0x107, 0x27, 0x1007, 0x3, 0x100b,
    0x9, 0x81, 0x27, 0x9, 0x5, 0x3, 0x21, 0x87, 0x9, 0x47, 0x27, 0x9, 0x5, 0x800007, 0x9,
    0x400007,
];

pub const MIN_M: u32 = 2;
pub const MAX_M: u32 = 32;

/// A binary field GF(2^m). Cheap to copy; all state is the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GfField {
    m: u32,
    poly_low: u32,
}

impl GfField {
    pub fn new(m: u32) -> crate::Result<GfField> {
        if !(MIN_M..=MAX_M).contains(&m) {
            return Err(crate::Error::Parameter(format!(
                "field degree m={m} outside [{MIN_M}, {MAX_M}]"
            )));
        }
        Ok(GfField { m, poly_low: POLY_LOW[m as usize] })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of field elements, 2^m.
    pub fn order(&self) -> u64 {
        1u64 << self.m
    }

    #[inline]
    fn mask(&self) -> u64 {
        (1u64 << self.m) - 1
    }

    /// Multiply by x and reduce. One step of an LFSR over the modulus.
    #[inline]
    pub fn times_x(&self, a: u32) -> u32 {
        let shifted = (a as u64) << 1;
        let reduced = if shifted >> self.m & 1 == 1 {
            shifted ^ (1u64 << self.m) ^ self.poly_low as u64
        } else {
            shifted
        };
        (reduced & self.mask()) as u32
    }

    /// Carry-less product reduced by the modulus.
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        debug_assert!(u64::from(a) <= self.mask() && u64::from(b) <= self.mask());
        let mut acc: u64 = 0;
        let a = a as u64;
        let mut b = b as u64;
        let mut shift = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a << shift;
            }
            b >>= 1;
            shift += 1;
        }
        let full = (1u64 << self.m) | self.poly_low as u64;
        while acc >> self.m != 0 {
            let deg = 63 - acc.leading_zeros();
            acc ^= full << (deg - self.m);
        }
        acc as u32
    }

    #[cfg(test)]
    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut out = 1u32;
        while exp != 0 {
            if exp & 1 == 1 {
                out = self.mul(out, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        out
    }

    /// Horner evaluation of the polynomial with the given coefficients
    /// (coeffs[j] multiplies x^j) at the point `at`.
    pub fn eval_poly(&self, coeffs: &[u32], at: u32) -> u32 {
        let mut acc = 0u32;
        for &c in coeffs.iter().rev() {
            acc = self.mul(acc, at) ^ c;
        }
        acc
    }

    /// Masks lifting "lowest bit of c * at^j" to parity(c & mask[j]):
    /// bit a of mask[j] is the lowest bit of x^a * at^j. The lowest bit of a
    /// field product is GF(2)-linear in either factor, which is what makes
    /// the per-point mask exact.
    pub fn lsb_masks(&self, at: u32, degree_count: usize) -> Vec<u32> {
        let mut masks = Vec::with_capacity(degree_count);
        let mut power = 1u32; // at^j
        for _ in 0..degree_count {
            let mut cur = power;
            let mut mask = 0u32;
            for a in 0..self.m {
                mask |= (cur & 1) << a;
                cur = self.times_x(cur);
            }
            masks.push(mask);
            power = self.mul(power, at);
        }
        masks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_field_tables() {
        // GF(4) with x^2 + x + 1: x * x = x + 1
        let f = GfField::new(2).unwrap();
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.mul(3, 3), 2);
    }

    #[test]
    fn x_is_primitive_for_small_m() {
        // order of x must be exactly 2^m - 1
        for m in MIN_M..=16 {
            let f = GfField::new(m).unwrap();
            let n = f.order() - 1;
            assert_eq!(f.pow(2, n), 1, "m={m}: x^(2^m-1) != 1");
            // check no proper divisor order by walking prime factors of n
            let mut rem = n;
            let mut p = 2u64;
            while p * p <= rem {
                if rem % p == 0 {
                    assert_ne!(f.pow(2, n / p), 1, "m={m}: x has order dividing {}", n / p);
                    while rem % p == 0 {
                        rem /= p;
                    }
                }
                p += 1;
            }
            if rem > 1 {
                assert_ne!(f.pow(2, n / rem), 1, "m={m}: x has order dividing {}", n / rem);
            }
        }
    }

    #[test]
    fn big_field_mul_associative_spot() {
        let f = GfField::new(32).unwrap();
        let (a, b, c) = (0xdead_beef, 0x1234_5677, 0x0bad_f00d);
        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        assert_eq!(f.mul(a, 1), a);
    }

    #[test]
    fn lsb_masks_match_direct_products() {
        for m in [2u32, 3, 5, 11] {
            let f = GfField::new(m).unwrap();
            let pts: Vec<u32> = (0..f.order().min(9)).map(|x| x as u32).collect();
            for &at in &pts {
                let masks = f.lsb_masks(at, 4);
                for c in 0..f.order().min(64) as u32 {
                    for (j, &mask) in masks.iter().enumerate() {
                        let direct = f.mul(c, f.pow(at, j as u64)) & 1;
                        let via_mask = (c & mask).count_ones() & 1;
                        assert_eq!(direct, via_mask, "m={m} at={at} c={c} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range_degree() {
        assert!(GfField::new(1).is_err());
        assert!(GfField::new(33).is_err());
    }
}
