//! Plus-minus-one functions on {0,1}^m with constant-modulus Walsh spectrum.
//!
//! The inner-product function `u -> (-1)^{u_1 u_2 + u_3 u_4 + ...}` is used
//! everywhere; it is its own spectral dual, which keeps both the evaluator
//! and the coefficient-sign accessor one popcount away.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BentFunction {
    m: u32,
}

impl BentFunction {
    /// `m` must be even; `m = 0` is the constant +1 function.
    pub fn inner_product(m: u32) -> Result<Self> {
        if m % 2 != 0 {
            return Err(Error::invalid(format!(
                "bent functions need an even bit count, got {}",
                m
            )));
        }
        Ok(BentFunction { m })
    }

    pub fn bits(&self) -> u32 {
        self.m
    }

    /// Value at `u`, with `u_j` stored as bit `j-1`.
    pub fn eval(&self, u: u64) -> i8 {
        debug_assert!(self.m == 64 || u < (1u64 << self.m));
        let mut acc = 0u32;
        let mut rest = u;
        for _ in 0..self.m / 2 {
            acc ^= (rest & 1) as u32 & ((rest >> 1) as u32 & 1);
            rest >>= 2;
        }
        if acc & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Sign of the normalized spectrum coefficient at `w`; the modulus is
    /// always `2^{-m/2}`.
    pub fn spectrum_sign(&self, w: u64) -> i8 {
        // Self-dual: the dual of the inner-product function is itself.
        self.eval(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Normalized spectrum by direct summation: 2^{-m} Σ_u f(u) (-1)^{w·u}.
    fn naive_spectrum(b: &BentFunction, w: u64) -> f64 {
        let n = 1u64 << b.bits();
        let mut acc = 0i64;
        for u in 0..n {
            let dot = (u & w).count_ones() % 2;
            let sign = if dot == 0 { 1 } else { -1 };
            acc += (b.eval(u) as i64) * sign;
        }
        acc as f64 / n as f64
    }

    #[test]
    fn odd_m_rejected() {
        assert!(BentFunction::inner_product(3).is_err());
        assert!(BentFunction::inner_product(0).is_ok());
    }

    #[test]
    fn m0_is_constant_one() {
        let b = BentFunction::inner_product(0).unwrap();
        assert_eq!(b.eval(0), 1);
        assert_eq!(naive_spectrum(&b, 0), 1.0);
    }

    #[test]
    fn m2_truth_table() {
        let b = BentFunction::inner_product(2).unwrap();
        assert_eq!(
            (0..4).map(|u| b.eval(u)).collect::<Vec<_>>(),
            vec![1, 1, 1, -1]
        );
        for w in 0..4u64 {
            assert_eq!(naive_spectrum(&b, w).abs(), 0.5, "w={}", w);
        }
    }

    #[test]
    fn flat_spectrum_and_dual_up_to_m8() {
        for m in [0u32, 2, 4, 6, 8] {
            let b = BentFunction::inner_product(m).unwrap();
            let expect = (-(m as f64) / 2.0).exp2();
            for w in 0..(1u64 << m) {
                let s = naive_spectrum(&b, w);
                assert!((s.abs() - expect).abs() < 1e-12, "m={} w={}", m, w);
                let sign = if s > 0.0 { 1 } else { -1 };
                assert_eq!(sign, b.spectrum_sign(w), "m={} w={}", m, w);
            }
        }
    }
}
