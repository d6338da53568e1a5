//! Lp norms of step functions, unweighted and weighted.
//!
//! Integer exponents get exact rational p-th powers. Real exponents and
//! weighted evaluations in the float path accumulate in the log2 domain with
//! a fixed left-to-right summation order over pieces, so results are
//! deterministic and immune to underflow from very small weights.

use crate::error::{Error, Result};
use crate::interval::{DyadicInterval, IntervalSet};
use crate::scalar::{rational_log2_abs, Dyadic, Rational};
use crate::stepfn::StepFunction;
use num_traits::{Signed, ToPrimitive, Zero};

/// A measure on [0,1) that can report its exact mass on any dyadic interval.
///
/// Lebesgue measure and the layered weights built later both implement this;
/// weighted norms of step functions reduce to per-piece masses.
pub trait CellMeasure {
    /// Exact mass of `cell` under the measure.
    fn mass_of_cell(&self, cell: &DyadicInterval) -> Rational;

    /// log2 of the mass, for the float path. Default goes through the exact
    /// mass.
    fn log2_mass_of_cell(&self, cell: &DyadicInterval) -> f64 {
        rational_log2_abs(&self.mass_of_cell(cell))
    }
}

/// Lebesgue measure.
pub struct Lebesgue;

impl CellMeasure for Lebesgue {
    fn mass_of_cell(&self, cell: &DyadicInterval) -> Rational {
        cell.length().to_rational()
    }

    fn log2_mass_of_cell(&self, cell: &DyadicInterval) -> f64 {
        -(cell.scale() as f64)
    }
}

/// Exact `∫ |f|^p dμ` for integer `p >= 1`.
pub fn lp_pow_exact(f: &StepFunction, p: u32, mu: &dyn CellMeasure) -> Rational {
    assert!(p >= 1, "p must be >= 1");
    let mut acc = Rational::zero();
    for (cell, v) in f.pieces() {
        if v.is_zero() {
            continue;
        }
        let vp = pow_abs(v, p);
        acc += vp * mu.mass_of_cell(cell);
    }
    acc
}

/// Exact `∫_E |f|^p dx` over an interval set, integer `p >= 1`.
pub fn lp_pow_exact_on(f: &StepFunction, e: &IntervalSet, p: u32) -> Rational {
    assert!(p >= 1);
    let mut acc = Rational::zero();
    for (cell, v) in f.pieces() {
        if v.is_zero() {
            continue;
        }
        let m = e.measure_within(cell);
        if m.is_zero() {
            continue;
        }
        acc += pow_abs(v, p) * m.to_rational();
    }
    acc
}

pub fn pow_abs(v: &Rational, p: u32) -> Rational {
    let mut out = Rational::from_integer(1.into());
    let a = if v.is_negative() { -v } else { v.clone() };
    for _ in 0..p {
        out *= &a;
    }
    out
}

pub fn dyadic_pow(v: &Dyadic, p: u32) -> Dyadic {
    let mut out = Dyadic::one();
    for _ in 0..p {
        out = &out * v;
    }
    out
}

/// `(∫ |f|^p dμ)^{1/p}` as binary64 for any real `p >= 1`.
///
/// Terms are accumulated left to right in the log2 domain: with running
/// maximum `m`, the sum is kept as `m + log2(Σ 2^{t_i - m})`.
pub fn lp_norm_f64(f: &StepFunction, p: f64, mu: &dyn CellMeasure) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid(format!("p = {} < 1 rejected", p)));
    }
    let mut terms = Vec::with_capacity(f.pieces().len());
    for (cell, v) in f.pieces() {
        if v.is_zero() {
            continue;
        }
        let log_mass = mu.log2_mass_of_cell(cell);
        if log_mass == f64::NEG_INFINITY {
            continue;
        }
        terms.push(p * rational_log2_abs(v) + log_mass);
    }
    Ok((log2_sum_exp(&terms) / p).exp2())
}

/// `(∫_E |f|^p dx)^{1/p}` as binary64 for real `p >= 1`.
pub fn restrict_norm_f64(f: &StepFunction, e: &IntervalSet, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid(format!("p = {} < 1 rejected", p)));
    }
    let mut terms = Vec::new();
    for (cell, v) in f.pieces() {
        if v.is_zero() {
            continue;
        }
        let m = e.measure_within(cell);
        if m.is_zero() {
            continue;
        }
        terms.push(p * rational_log2_abs(v) + m.log2_abs());
    }
    Ok((log2_sum_exp(&terms) / p).exp2())
}

/// Base-2 log-sum-exp with left-to-right accumulation.
pub fn log2_sum_exp(terms: &[f64]) -> f64 {
    let m = terms
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0_f64;
    for t in terms {
        acc += (t - m).exp2();
    }
    m + acc.log2()
}

/// p-th root of an exact rational, as binary64.
pub fn root_f64(pth_power: &Rational, p: f64) -> f64 {
    if pth_power.is_zero() {
        return 0.0;
    }
    (rational_log2_abs(pth_power) / p).exp2()
}

/// Compare `a^(1/p) < b` exactly for rational `a >= 0`, `b >= 0` and integer
/// p: equivalent to `a < b^p`.
pub fn root_less_than(a: &Rational, p: u32, b: &Rational) -> bool {
    if b.is_negative() {
        return false;
    }
    *a < pow_abs(b, p)
}

pub fn as_u32_p(p: f64) -> Option<u32> {
    if p >= 1.0 && p.fract() == 0.0 && p <= u32::MAX as f64 {
        p.to_u32()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::DyadicInterval;
    use num_bigint::BigInt;

    fn half_indicator() -> StepFunction {
        StepFunction::from_pieces(vec![
            (DyadicInterval::new(1, 0u32), Rational::from_integer(1.into())),
            (DyadicInterval::new(1, 1u32), Rational::zero()),
        ])
    }

    #[test]
    fn exact_l2_of_half_indicator() {
        let f = half_indicator();
        let sq = lp_pow_exact(&f, 2, &Lebesgue);
        assert_eq!(sq, Rational::new(1.into(), 2.into()));
        let n = lp_norm_f64(&f, 2.0, &Lebesgue).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn restrict_norm_example() {
        let f = StepFunction::constant(Rational::from_integer(1.into()));
        let e = IntervalSet::from_pieces(vec![DyadicInterval::new(2, 0u32)]);
        let v = lp_pow_exact_on(&f, &e, 1);
        assert_eq!(v, Rational::new(1.into(), 4.into()));
    }

    #[test]
    fn constant_weight() {
        struct Tiny;
        impl CellMeasure for Tiny {
            fn mass_of_cell(&self, cell: &DyadicInterval) -> Rational {
                cell.length().to_rational() * Rational::new(1.into(), BigInt::from(1u64 << 10))
            }
        }
        let f = StepFunction::constant(Rational::from_integer(1.into()));
        for p in [1.0, 2.0, 3.5] {
            let n = lp_norm_f64(&f, p, &Tiny).unwrap();
            assert!((n - (-10.0 / p).exp2()).abs() < 1e-12, "p={}", p);
        }
    }

    #[test]
    fn p_below_one_rejected() {
        let f = half_indicator();
        assert!(lp_norm_f64(&f, 0.5, &Lebesgue).is_err());
    }

    #[test]
    fn log_domain_handles_underflow() {
        // 2^{-1500} masses would underflow a naive f64 product.
        struct Deep;
        impl CellMeasure for Deep {
            fn mass_of_cell(&self, cell: &DyadicInterval) -> Rational {
                let d = Dyadic::pow2(-1500);
                cell.length().to_rational() * d.to_rational()
            }
            fn log2_mass_of_cell(&self, cell: &DyadicInterval) -> f64 {
                -(cell.scale() as f64) - 1500.0
            }
        }
        let f = StepFunction::constant(Rational::from_integer(1.into()));
        let mut terms = Vec::new();
        for (cell, _) in f.pieces() {
            terms.push(2.0 * 0.0 + Deep.log2_mass_of_cell(cell));
        }
        let l = log2_sum_exp(&terms);
        assert!((l - (-1500.0)).abs() < 1e-9);
    }
}
