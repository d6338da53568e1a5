//! Coefficient sequences over an index window `[2^{n0}, 2^{n_end})`,
//! organized as runs of constant magnitude: carrier runs hold one flat block
//! per Walsh group with signs applied, filler runs hold positive magnitudes
//! with zero sign-selector. This is the symbolic form shared by the
//! recursive interval construction, the polynomial approximant, and the
//! universal-function blocks; it stays exact at window exponents far beyond
//! anything dense arithmetic could touch.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::flat::FlatBlock;
use crate::interval::DyadicInterval;
use crate::scalar::{Dyadic, Rational};
use crate::walsh::WalshPolynomial;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum RunKind {
    /// Positive magnitudes, sign-selector zero everywhere.
    Filler,
    /// One flat block filling the single group `[2^{n_lo}, 2^{n_lo+1})`.
    /// Coefficients are `amp * block coefficient`; the sign-selector is the
    /// coefficient sign, the magnitude is constant over the group.
    Carrier {
        block: Arc<FlatBlock>,
        /// Signed amplitude multiplying the unit-valued block.
        amp: Dyadic,
        /// Construction level the block belongs to (1-based).
        level: u32,
    },
}

#[derive(Clone, Debug)]
pub struct Run {
    /// Walsh groups `[2^{n_lo}, 2^{n_hi})`.
    pub n_lo: u32,
    pub n_hi: u32,
    pub magnitude: Dyadic,
    pub kind: RunKind,
}

impl Run {
    pub fn index_count(&self) -> BigUint {
        (BigUint::one() << self.n_hi) - (BigUint::one() << self.n_lo)
    }

    pub fn is_carrier(&self) -> bool {
        matches!(self.kind, RunKind::Carrier { .. })
    }
}

#[derive(Clone, Debug)]
pub struct SignedBlockSeq {
    n0: u32,
    n_end: u32,
    runs: Vec<Run>,
}

impl SignedBlockSeq {
    pub fn new(n0: u32, n_end: u32, runs: Vec<Run>) -> Self {
        debug_assert!(runs.iter().all(|r| r.n_lo < r.n_hi));
        debug_assert!(runs.first().map(|r| r.n_lo) == Some(n0) || runs.is_empty());
        debug_assert!(runs.last().map(|r| r.n_hi) == Some(n_end) || runs.is_empty());
        debug_assert!(runs.windows(2).all(|w| w[0].n_hi == w[1].n_lo));
        SignedBlockSeq { n0, n_end, runs }
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn n_end(&self) -> u32 {
        self.n_end
    }

    pub fn k_lo(&self) -> BigUint {
        BigUint::one() << self.n0
    }

    pub fn k_end(&self) -> BigUint {
        BigUint::one() << self.n_end
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn carriers(&self) -> impl Iterator<Item = &Run> {
        self.runs.iter().filter(|r| r.is_carrier())
    }

    fn run_for_group(&self, n: u32) -> Option<&Run> {
        self.runs.iter().find(|r| r.n_lo <= n && n < r.n_hi)
    }

    /// Coefficient magnitude at an absolute index inside the window.
    pub fn magnitude_at(&self, k: &BigUint) -> Dyadic {
        let bits = k.bits();
        if bits == 0 {
            return Dyadic::zero();
        }
        let n = (bits - 1) as u32;
        match self.run_for_group(n) {
            Some(r) => r.magnitude.clone(),
            None => Dyadic::zero(),
        }
    }

    /// Sign-selector at an absolute index: 0 on fillers, the signed block
    /// coefficient sign on carriers.
    pub fn delta_at(&self, k: &BigUint) -> i8 {
        let bits = k.bits();
        if bits == 0 {
            return 0;
        }
        let n = (bits - 1) as u32;
        match self.run_for_group(n) {
            Some(Run {
                kind: RunKind::Carrier { block, amp, .. },
                ..
            }) => {
                let offset = k - (BigUint::one() << n);
                block.coeff_sign_at_offset(&offset) * amp.signum()
            }
            _ => 0,
        }
    }

    /// Signed coefficient `delta * magnitude` at an index.
    pub fn signed_coeff_at(&self, k: &BigUint) -> Dyadic {
        let d = self.delta_at(k);
        if d == 0 {
            Dyadic::zero()
        } else if d > 0 {
            self.magnitude_at(k)
        } else {
            -self.magnitude_at(k)
        }
    }

    /// Per-group magnitudes `(n, b_n)` in ascending group order.
    pub fn group_ladder(&self) -> impl Iterator<Item = (u32, &Dyadic)> {
        self.runs
            .iter()
            .flat_map(|r| (r.n_lo..r.n_hi).map(move |n| (n, &r.magnitude)))
    }

    /// All magnitudes positive, non-increasing across the window, below
    /// `bound`; returns the violating group on failure.
    pub fn check_ladder(&self, bound: &Rational, strict_below: bool) -> Result<()> {
        let mut prev: Option<&Dyadic> = None;
        for r in &self.runs {
            if !r.magnitude.is_positive() {
                return Err(Error::ConstructionCheck {
                    statement: "coefficient positivity".into(),
                    detail: format!("group {} has magnitude {:?}", r.n_lo, r.magnitude),
                });
            }
            let mag_rat = r.magnitude.to_rational();
            let ok = if strict_below {
                mag_rat < *bound
            } else {
                mag_rat <= *bound
            };
            if !ok {
                return Err(Error::ConstructionCheck {
                    statement: "coefficient smallness".into(),
                    detail: format!(
                        "group {} magnitude {} is not below {}",
                        r.n_lo, mag_rat, bound
                    ),
                });
            }
            if let Some(p) = prev {
                if r.magnitude > *p {
                    return Err(Error::ConstructionCheck {
                        statement: "coefficient monotonicity".into(),
                        detail: format!("magnitude increases entering group {}", r.n_lo),
                    });
                }
            }
            prev = Some(&r.magnitude);
        }
        Ok(())
    }

    /// `Σ_n b_n` over the whole window, exact.
    pub fn sum_group_magnitudes(&self) -> Dyadic {
        let mut acc = Dyadic::zero();
        for r in &self.runs {
            let width = Dyadic::from_int((r.n_hi - r.n_lo) as i64);
            acc = &acc + &(&width * &r.magnitude);
        }
        acc
    }

    /// Exact maximum of `‖Σ δ_k a_k W_k‖_2^2` over all partial sums: the
    /// squares accumulate, so the maximum is the full sum
    /// `Σ_carriers amp^2 |cell|`.
    pub fn max_signed_l2_pow(&self) -> Rational {
        let mut acc = Rational::zero();
        for r in self.carriers() {
            if let RunKind::Carrier { block, amp, .. } = &r.kind {
                let a2 = (amp * amp).to_rational();
                acc += a2 * block.delta().length().to_rational();
            }
        }
        acc
    }

    /// Certified upper bound check for `max_M ‖Σ_{k<=M} a_k W_k‖_{L^1} < eps`
    /// over the unsigned magnitudes. For each group, the partial sums through
    /// earlier groups cost at most `Σ b_n` (each full group kernel has unit
    /// L1 mass) and the in-group remainder at constant magnitude `b` costs at
    /// most `b * min(2^{n/2}, n+1)`; both comparisons are exact.
    pub fn check_unsigned_l1_below(&self, eps: &Rational) -> (bool, f64, Vec<(u32, f64)>) {
        let mut prefix = Dyadic::zero();
        let mut worst: f64 = 0.0;
        let mut violations = Vec::new();
        for r in &self.runs {
            for n in r.n_lo..r.n_hi {
                let b = &r.magnitude;
                let headroom = eps - prefix.to_rational();
                let ok = if headroom <= Rational::zero() {
                    false
                } else {
                    // Either the flat Lebesgue-style bound or the
                    // Cauchy-Schwarz bound must fit in the headroom.
                    let linear = b.to_rational() * Rational::from_integer((n as i64 + 1).into());
                    let linear_ok = linear < headroom;
                    let sq = (b * b).mul_pow2(n as i64).to_rational();
                    let sq_ok = sq < &headroom * &headroom;
                    linear_ok || sq_ok
                };
                let boundary = b.to_f64() * ((n as f64) / 2.0).exp2().min(n as f64 + 1.0);
                let value = prefix.to_f64() + boundary;
                worst = worst.max(value);
                if !ok {
                    violations.push((n, value));
                }
                prefix = &prefix + b;
            }
        }
        (violations.is_empty(), worst, violations)
    }

    /// Dense window as a Walsh polynomial with absolute indexing from zero;
    /// `signed` selects `δ_k a_k` vs `a_k`.
    pub fn to_walsh_polynomial(&self, signed: bool, budget: &Budget) -> Result<WalshPolynomial> {
        budget.check_dense_scale("materializing a block sequence", self.n_end)?;
        let k_lo = 1u64 << self.n0;
        let k_end = 1u64 << self.n_end;
        let mut coeffs = Vec::with_capacity((k_end - k_lo) as usize);
        for k in k_lo..k_end {
            let kb = BigUint::from(k);
            let c = if signed {
                self.signed_coeff_at(&kb)
            } else {
                self.magnitude_at(&kb)
            };
            coeffs.push(c.to_rational());
        }
        Ok(WalshPolynomial { k_lo, coeffs })
    }

    /// Pointwise value of the signed sum on a cell finer than every window.
    pub fn signed_value_on_cell(&self, cell: &DyadicInterval) -> Dyadic {
        let mut acc = Dyadic::zero();
        for r in self.carriers() {
            if let RunKind::Carrier { block, amp, .. } = &r.kind {
                let v = block.value_on_cell(cell);
                if v == 1 {
                    acc = &acc + amp;
                } else if v == -1 {
                    acc = &acc - amp;
                }
            }
        }
        acc
    }

    /// Concatenate windows: `self` then `next`, with `next.n0 == self.n_end`.
    pub fn concat(self, next: SignedBlockSeq) -> Result<SignedBlockSeq> {
        if next.n0 != self.n_end {
            return Err(Error::invalid(format!(
                "window seam mismatch: {} vs {}",
                self.n_end, next.n0
            )));
        }
        let mut runs = self.runs;
        runs.extend(next.runs);
        Ok(SignedBlockSeq::new(self.n0, next.n_end, runs))
    }
}

/// Exact scan of `max_M ‖Σ δ_k a_k W_k‖_p^p` (signed) or the unsigned
/// variant over every partial bound `M` in the window; the test oracle for
/// the certified routes. Needs roughly `4^{n_end}` rational operations.
pub fn max_partial_norm_dense(
    seq: &SignedBlockSeq,
    p: u32,
    signed: bool,
    budget: &Budget,
) -> Result<(Rational, u64)> {
    if seq.n_end > 13 {
        return Err(Error::budget(
            "dense partial-sum scan",
            1u128 << (2 * seq.n_end),
            1u128 << 26,
        ));
    }
    budget.check_dense_scale("dense partial-sum scan", seq.n_end)?;
    let poly = seq.to_walsh_polynomial(signed, budget)?;
    let scale = seq.n_end;
    let n = 1usize << scale;
    let mut values = vec![Rational::zero(); n];
    let mut best = Rational::zero();
    let mut best_m = poly.k_lo;
    for (off, c) in poly.coeffs.iter().enumerate() {
        let k = poly.k_lo + off as u64;
        if !c.is_zero() {
            for (i, v) in values.iter_mut().enumerate() {
                let cell = DyadicInterval::new(scale, i as u64);
                if crate::walsh::walsh_on_cell(k, &cell) > 0 {
                    *v += c;
                } else {
                    *v -= c;
                }
            }
        }
        let mut acc = Rational::zero();
        for v in &values {
            if !v.is_zero() {
                acc += crate::norm::pow_abs(v, p);
            }
        }
        acc /= Rational::from_integer(num_bigint::BigInt::one() << scale as usize);
        if acc > best {
            best = acc;
            best_m = k;
        }
    }
    Ok((best, best_m))
}
