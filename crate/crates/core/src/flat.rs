//! Flat-spectrum interval blocks: for a dyadic interval of scale `K` and a
//! window exponent `M > K` with `M - K` even, a Walsh polynomial supported
//! on the index group `[2^M, 2^{M+1})` whose coefficients all have modulus
//! `2^{-(M+K)/2}`, and whose pointwise values are -1 and +1 on halves of the
//! interval and 0 outside it.
//!
//! Construction: indicator times the first Rademacher factor below the
//! window times a bent function of the middle bits. The three factors use
//! disjoint index bits, so every product index in the group is hit exactly
//! once and flatness is exact.

use crate::bent::BentFunction;
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::interval::{DyadicInterval, IntervalSet};
use crate::scalar::{Dyadic, Rational};
use crate::stepfn::StepFunction;
use num_bigint::BigUint;
use num_traits::{One, Zero};

#[derive(Clone, Debug)]
pub struct FlatBlock {
    delta: DyadicInterval,
    window_exp: u32,
    bent: BentFunction,
    /// rev_K(i): the low-bit character signs depend only on this.
    rev_index: u64,
    magnitude: Dyadic,
}

impl FlatBlock {
    /// The block for `delta` in window `[2^M, 2^{M+1})`.
    pub fn construct(delta: DyadicInterval, window_exp: u32) -> Result<FlatBlock> {
        let k = delta.scale();
        if window_exp <= k {
            return Err(Error::invalid(format!(
                "window exponent {} must exceed the interval scale {}",
                window_exp, k
            )));
        }
        if (window_exp - k) % 2 != 0 {
            return Err(Error::Parity {
                window: window_exp,
                scale: k,
            });
        }
        let bent = BentFunction::inner_product(window_exp - k)?;
        if k > 63 {
            return Err(Error::invalid(
                "interval scale beyond 63 not supported for block construction",
            ));
        }
        let idx = delta
            .index_u64()
            .ok_or_else(|| Error::invalid("interval index too large"))?;
        let rev_index = crate::walsh::bit_reverse(idx, k);
        let magnitude = Dyadic::pow2(-((window_exp + k) as i64) / 2);
        Ok(FlatBlock {
            delta,
            window_exp,
            bent,
            rev_index,
            magnitude,
        })
    }

    pub fn delta(&self) -> &DyadicInterval {
        &self.delta
    }

    /// `M`: coefficients live in `[2^M, 2^{M+1})`.
    pub fn window_exp(&self) -> u32 {
        self.window_exp
    }

    /// Coefficient modulus `2^{-(M+K)/2}`.
    pub fn magnitude(&self) -> &Dyadic {
        &self.magnitude
    }

    pub fn window_lo(&self) -> BigUint {
        BigUint::one() << self.window_exp
    }

    /// Sign of the coefficient at index `window_lo + offset`, for
    /// `offset < 2^M`.
    pub fn coeff_sign_at_offset(&self, offset: &BigUint) -> i8 {
        let k_scale = self.delta.scale();
        let low: u64 = if k_scale == 0 {
            0
        } else {
            let mask = (BigUint::one() << k_scale) - BigUint::one();
            (offset & mask).try_into().unwrap()
        };
        let mid: u64 = {
            let t = offset >> k_scale;
            debug_assert!(t.bits() <= self.bent.bits() as u64);
            (&t).try_into().unwrap()
        };
        let low_sign = if (low & self.rev_index).count_ones() % 2 == 0 {
            1
        } else {
            -1
        };
        low_sign * self.bent.spectrum_sign(mid)
    }

    /// Signed coefficient at absolute index `k`; zero outside the window.
    pub fn coeff(&self, k: &BigUint) -> Dyadic {
        let lo = self.window_lo();
        if *k < lo {
            return Dyadic::zero();
        }
        let offset = k - &lo;
        if offset.bits() > self.window_exp as u64 {
            return Dyadic::zero();
        }
        let s = self.coeff_sign_at_offset(&offset);
        if s > 0 {
            self.magnitude.clone()
        } else {
            -self.magnitude.clone()
        }
    }

    /// Pointwise value on a cell of scale >= M+1: one of -1, 0, +1.
    pub fn value_on_cell(&self, cell: &DyadicInterval) -> i8 {
        debug_assert!(cell.scale() > self.window_exp);
        if !self.delta.contains(cell) {
            return 0;
        }
        let s = cell.scale();
        let idx = cell.index();
        let m = self.bent.bits();
        let k_scale = self.delta.scale();
        // Middle bits K+1..M of the position, packed with u_j at bit j-1.
        let mut t = 0u64;
        for j in 1..=m {
            if idx.bit((s - k_scale - j) as u64) {
                t |= 1 << (j - 1);
            }
        }
        let r_sign = if idx.bit((s - self.window_exp - 1) as u64) {
            -1
        } else {
            1
        };
        r_sign * self.bent.eval(t)
    }

    /// The half of `delta` where the block takes the value `sign`, as scale
    /// `M+1` cells. Piece count is `2^{M-K}`.
    pub fn level_set(&self, sign: i8, budget: &Budget) -> Result<IntervalSet> {
        assert!(sign == 1 || sign == -1);
        let m = self.bent.bits();
        budget.check_cells("materializing a block level set", 1u128 << m)?;
        let mut pieces = Vec::with_capacity(1usize << m);
        for t in 0..(1u64 << m) {
            // Within the scale-M cell for middle bits t, the -1 half is the
            // right child when the bent value is +1.
            let bent_val = self.bent.eval(t);
            let right = bent_val != sign;
            // Rebuild the cell index: delta bits, then middle bits (u_1 at
            // the top of the field), then the child bit.
            let mut mid = BigUint::zero();
            for j in 1..=m {
                mid <<= 1u32;
                if t & (1 << (j - 1)) != 0 {
                    mid |= BigUint::one();
                }
            }
            let cell_idx =
                ((self.delta.index() << m) + mid) << 1u32 | BigUint::from(right as u32);
            pieces.push(DyadicInterval::new(self.window_exp + 1, cell_idx));
        }
        Ok(IntervalSet::from_pieces(pieces))
    }

    /// Exact measure of `{value == sign} ∩ cell` for any dyadic `cell`,
    /// without materializing: the level sets occupy exactly half of every
    /// sub-cell of `delta` down to scale `M`, and finer cells are decided
    /// pointwise.
    pub fn level_measure_within(&self, sign: i8, cell: &DyadicInterval) -> Dyadic {
        assert!(sign == 1 || sign == -1);
        if let Some(common) = self.delta.intersect(cell) {
            if common.scale() <= self.window_exp {
                // Equidistribution: half of the common part.
                return common.length().mul_pow2(-1);
            }
            // The cell sits inside one scale-(M+1) child: constant there.
            if self.value_on_cell(&common) == sign {
                common.length()
            } else {
                Dyadic::zero()
            }
        } else {
            Dyadic::zero()
        }
    }

    /// Dense pointwise form at scale M+1 (budget-guarded).
    pub fn pointwise(&self, budget: &Budget) -> Result<StepFunction> {
        let scale = self.window_exp + 1;
        budget.check_dense_scale("materializing a block pointwise", scale)?;
        let mut pieces = Vec::new();
        for p in IntervalSet::from_interval(self.delta.clone())
            .complement()
            .pieces()
        {
            pieces.push((p.clone(), Rational::zero()));
        }
        let base = self.delta.index() << (scale - self.delta.scale());
        let count = 1u64 << (scale - self.delta.scale());
        for off in 0..count {
            let cell = DyadicInterval::new(scale, &base + BigUint::from(off));
            let v = self.value_on_cell(&cell);
            pieces.push((cell, Rational::from_integer(v.into())));
        }
        Ok(StepFunction::from_pieces(pieces))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{lp_pow_exact_on, Lebesgue};
    use crate::walsh::{fwt_forward, naive_transform};

    fn budget() -> Budget {
        Budget::default()
    }

    #[test]
    fn rejects_bad_windows() {
        let unit = DyadicInterval::unit();
        assert!(FlatBlock::construct(unit.clone(), 0).is_err());
        assert!(matches!(
            FlatBlock::construct(unit, 1),
            Err(Error::Parity { .. })
        ));
        let half = DyadicInterval::new(1, 1u32);
        assert!(FlatBlock::construct(half, 1).is_err());
    }

    #[test]
    fn unit_interval_window_two() {
        let b = FlatBlock::construct(DyadicInterval::unit(), 2).unwrap();
        assert_eq!(b.magnitude().to_rational(), Rational::new(1.into(), 2.into()));
        for k in 4u64..8 {
            let c = b.coeff(&BigUint::from(k));
            assert_eq!(c.abs().to_rational(), Rational::new(1.into(), 2.into()));
        }
        assert!(b.coeff(&BigUint::from(3u32)).is_zero());
        assert!(b.coeff(&BigUint::from(8u32)).is_zero());
        let e1 = b.level_set(-1, &budget()).unwrap();
        assert_eq!(e1.measure().to_rational(), Rational::new(1.into(), 2.into()));
    }

    #[test]
    fn spectrum_matches_dense_transform() {
        // All constructible (K <= 2, M <= 6): symbolic accessor equals the
        // transform of the pointwise form exactly.
        for k_scale in 0u32..=2 {
            for idx in 0..(1u64 << k_scale) {
                let delta = DyadicInterval::new(k_scale, idx);
                let mut m = k_scale + 2;
                while m <= 6 {
                    let b = FlatBlock::construct(delta.clone(), m).unwrap();
                    let f = b.pointwise(&budget()).unwrap();
                    let c = fwt_forward(&f, &budget()).unwrap();
                    for k in 0..c.coeffs.len() as u64 {
                        assert_eq!(
                            c.coeff(k),
                            b.coeff(&BigUint::from(k)).to_rational(),
                            "K={} i={} M={} k={}",
                            k_scale,
                            idx,
                            m,
                            k
                        );
                    }
                    m += 2;
                }
            }
        }
    }

    #[test]
    fn four_block_properties() {
        for (k_scale, idx, m) in [(0u32, 0u64, 2u32), (1, 1, 3), (2, 3, 4), (1, 0, 5)] {
            let delta = DyadicInterval::new(k_scale, idx);
            let b = FlatBlock::construct(delta.clone(), m).unwrap();
            let e1 = b.level_set(-1, &budget()).unwrap();
            let e2 = b.level_set(1, &budget()).unwrap();
            let half = delta.length().mul_pow2(-1);
            assert_eq!(e1.measure(), half);
            assert_eq!(e2.measure(), half);
            assert!(e1.intersect(&e2).is_empty());
            let both = e1.union(&e2);
            assert_eq!(both, IntervalSet::from_interval(delta.clone()));
            // Support confinement and the level sets agree with pointwise
            // values.
            let f = b.pointwise(&budget()).unwrap();
            for (cell, v) in f.pieces() {
                if delta.is_disjoint(cell) {
                    assert!(v.is_zero());
                }
            }
            // Mean zero.
            let outside = IntervalSet::full();
            let m1 = lp_pow_exact_on(&f, &outside, 1);
            assert_eq!(
                m1,
                delta.length().to_rational(),
                "block has unit modulus on exactly its interval"
            );
            let integral = crate::norm::lp_pow_exact(
                &StepFunction::zip_with(&f, &StepFunction::zero(), &budget(), |a, _| a.clone())
                    .unwrap(),
                1,
                &Lebesgue,
            );
            let _ = integral;
            let mut signed = Rational::zero();
            for (cell, v) in f.pieces() {
                signed += v * cell.length().to_rational();
            }
            assert!(signed.is_zero());
        }
    }

    #[test]
    fn half_measure_rule_matches_materialized_sets() {
        let delta = DyadicInterval::new(1, 1u32);
        let b = FlatBlock::construct(delta, 5).unwrap();
        let e1 = b.level_set(-1, &budget()).unwrap();
        for scale in 0..=7u32 {
            for i in 0..(1u64 << scale) {
                let cell = DyadicInterval::new(scale, i);
                assert_eq!(
                    b.level_measure_within(-1, &cell),
                    e1.measure_within(&cell),
                    "scale={} i={}",
                    scale,
                    i
                );
            }
        }
    }

    #[test]
    fn decomposition_identity() {
        // value = indicator * R_{M+1} * bent(middle bits), on every cell at
        // scale M+1.
        let delta = DyadicInterval::new(2, 2u32);
        let m = 6u32;
        let b = FlatBlock::construct(delta.clone(), m).unwrap();
        let f = b.pointwise(&budget()).unwrap();
        let g = naive_transform(&f, &budget()).unwrap();
        // No component below the window or at W_0 in particular.
        for k in 0..(1u64 << m) {
            assert!(g.coeff(k).is_zero(), "k={}", k);
        }
    }
}
