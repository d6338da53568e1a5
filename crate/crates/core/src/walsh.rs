//! The Walsh–Paley system over exact scalars.
//!
//! Indexing is the Paley (dyadic) ordering throughout: index bit `j`
//! corresponds to the Rademacher function of fractional bit `j+1`, so
//! `W_k(i/2^R) = (-1)^{popcount(k & rev_R(i))}` where `rev_R` reverses the
//! low `R` bits. Values at dyadic breakpoints follow right-continuity.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::scalar::{Dyadic, Rational};
use crate::stepfn::StepFunction;
use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `R_n(x)`: the n-th fractional bit of `x` mapped to {+1, -1}.
pub fn rademacher(n: u32, x: &Dyadic) -> i8 {
    assert!(n >= 1, "Rademacher index starts at 1");
    assert!(
        !x.is_negative() && x < &Dyadic::one(),
        "x must lie in [0,1)"
    );
    if x.is_zero() {
        return 1;
    }
    let scale = x.exp();
    debug_assert!(scale >= 0);
    // bit n of x = bit (scale - n) of the numerator, zero beyond resolution.
    if (n as i64) > scale {
        return 1;
    }
    let shift = (scale - n as i64) as u64;
    let numer = x.numer().magnitude();
    if numer.bit(shift) {
        -1
    } else {
        1
    }
}

/// `W_k(x)` as a product of Rademacher factors over the bits of `k`.
pub fn walsh_eval(k: &BigUint, x: &Dyadic) -> i8 {
    let mut sign = 1i8;
    for j in 0..k.bits() {
        if k.bit(j) {
            sign *= rademacher(j as u32 + 1, x);
        }
    }
    sign
}

pub fn walsh_eval_u64(k: u64, x: &Dyadic) -> i8 {
    walsh_eval(&BigUint::from(k), x)
}

/// `W_k` on the whole cell `i/2^R .. (i+1)/2^R` for `k < 2^R`; constant there.
pub fn walsh_on_cell(k: u64, cell: &DyadicInterval) -> i8 {
    debug_assert!(k < (1u64 << cell.scale().min(63)) || k == 0);
    let i = cell
        .index_u64()
        .expect("walsh_on_cell requires a dense-scale cell");
    if (k & bit_reverse(i, cell.scale())).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Reverse the low `width` bits of `i`.
pub fn bit_reverse(i: u64, width: u32) -> u64 {
    if width == 0 {
        return 0;
    }
    i.reverse_bits() >> (64 - width)
}

/// Coefficients over the index window `[k_lo, k_lo + coeffs.len())`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalshPolynomial {
    pub k_lo: u64,
    pub coeffs: Vec<Rational>,
}

impl WalshPolynomial {
    pub fn k_hi(&self) -> u64 {
        self.k_lo + self.coeffs.len() as u64
    }

    pub fn coeff(&self, k: u64) -> Rational {
        if k < self.k_lo || k >= self.k_hi() {
            return Rational::zero();
        }
        self.coeffs[(k - self.k_lo) as usize].clone()
    }

    /// Serialize: one line per index, "k numerator/denominator".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (off, c) in self.coeffs.iter().enumerate() {
            s.push_str(&format!(
                "{} {}/{}\n",
                self.k_lo + off as u64,
                c.numer(),
                c.denom()
            ));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries: Vec<(u64, Rational)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse(format!("line {}: {}", lineno + 1, m));
            let mut it = line.split_whitespace();
            let k: u64 = it
                .next()
                .ok_or_else(|| err("missing index".into()))?
                .parse()
                .map_err(|e| err(format!("{}", e)))?;
            let v = crate::stepfn::parse_rational(
                it.next().ok_or_else(|| err("missing coefficient".into()))?,
            )
            .map_err(err)?;
            entries.push((k, v));
        }
        if entries.is_empty() {
            return Err(Error::Parse("empty coefficient file".into()));
        }
        entries.sort_by_key(|(k, _)| *k);
        let k_lo = entries[0].0;
        let k_hi = entries.last().unwrap().0 + 1;
        let mut coeffs = vec![Rational::zero(); (k_hi - k_lo) as usize];
        for (k, v) in entries {
            coeffs[(k - k_lo) as usize] = v;
        }
        Ok(WalshPolynomial { k_lo, coeffs })
    }
}

fn butterfly(data: &mut [Rational]) {
    let n = data.len();
    let mut half = 1;
    while half < n {
        let step = half * 2;
        for start in (0..n).step_by(step) {
            for off in start..start + half {
                let a = data[off].clone();
                let b = data[off + half].clone();
                data[off] = &a + &b;
                data[off + half] = &a - &b;
            }
        }
        half = step;
    }
}

/// Exact forward transform of a step function on the uniform `2^R` grid:
/// `c_k = ∫ f W_k`, for `k < 2^R`. Cost `O(R 2^R)`.
pub fn fwt_forward(f: &StepFunction, budget: &Budget) -> Result<WalshPolynomial> {
    let scale = f.resolution();
    budget.check_dense_scale("forward transform", scale)?;
    let values = f.dense_values(scale, budget)?;
    let n = values.len();
    let mut data: Vec<Rational> = vec![Rational::zero(); n];
    for (i, v) in values.into_iter().enumerate() {
        data[bit_reverse(i as u64, scale) as usize] = v;
    }
    butterfly(&mut data);
    let norm = Rational::new(1.into(), num_bigint::BigInt::one() << scale as usize);
    for c in data.iter_mut() {
        *c *= &norm;
    }
    Ok(WalshPolynomial { k_lo: 0, coeffs: data })
}

/// Exact inverse: the step function `x -> Σ c_k W_k(x)` at scale
/// `ceil(log2 k_hi)`.
pub fn fwt_inverse(c: &WalshPolynomial, budget: &Budget) -> Result<StepFunction> {
    let k_hi = c.k_hi().max(1);
    let scale = 64 - (k_hi - 1).leading_zeros();
    let scale = if (1u64 << scale) < k_hi { scale + 1 } else { scale };
    budget.check_dense_scale("inverse transform", scale)?;
    let n = 1usize << scale;
    let mut data = vec![Rational::zero(); n];
    for (off, v) in c.coeffs.iter().enumerate() {
        data[c.k_lo as usize + off] = v.clone();
    }
    butterfly(&mut data);
    let values: Vec<Rational> = (0..n)
        .map(|i| data[bit_reverse(i as u64, scale) as usize].clone())
        .collect();
    Ok(StepFunction::from_uniform(scale, values))
}

/// Pointwise sum of the first `m - k_lo` terms of the window.
pub fn partial_sum(c: &WalshPolynomial, m: u64, budget: &Budget) -> Result<StepFunction> {
    if m < c.k_lo || m > c.k_hi() {
        return Err(Error::invalid(format!(
            "partial-sum bound {} outside window [{}, {}]",
            m,
            c.k_lo,
            c.k_hi()
        )));
    }
    if m == c.k_lo {
        return Ok(StepFunction::zero());
    }
    let truncated = WalshPolynomial {
        k_lo: c.k_lo,
        coeffs: c.coeffs[..(m - c.k_lo) as usize].to_vec(),
    };
    fwt_inverse(&truncated, budget)
}

/// Slow `O(4^R)` transform by direct inner products; the test oracle.
pub fn naive_transform(f: &StepFunction, budget: &Budget) -> Result<WalshPolynomial> {
    let scale = f.resolution();
    if scale > 12 {
        return Err(Error::budget(
            "naive transform",
            1u128 << (2 * scale),
            1u128 << 24,
        ));
    }
    let values = f.dense_values(scale, budget)?;
    let n = values.len() as u64;
    let norm = Rational::new(1.into(), num_bigint::BigInt::one() << scale as usize);
    let mut coeffs = Vec::with_capacity(n as usize);
    for k in 0..n {
        let mut acc = Rational::zero();
        for (i, v) in values.iter().enumerate() {
            let cell = DyadicInterval::new(scale, i as u64);
            if walsh_on_cell(k, &cell) > 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        coeffs.push(acc * &norm);
    }
    Ok(WalshPolynomial { k_lo: 0, coeffs })
}

/// Measured sup over a seeded corpus of `max_k ||S_k f||_p / ||f||_p`,
/// reported as a dyadic rounded up at grain `2^-10`.
///
/// The true operator constant for p > 1 is only known to exist; this is the
/// recorded stand-in used by downstream bound checks.
pub fn measured_partial_sum_ratio(
    p: u32,
    seed: u64,
    scales: &[u32],
    per_scale: usize,
    budget: &Budget,
) -> Result<Rational> {
    use rand::{Rng, SeedableRng};
    assert!(p >= 1);
    let mut max_ratio_pow: Rational = Rational::zero();
    for (si, &scale) in scales.iter().enumerate() {
        for trial in 0..per_scale {
            // Per-trial stream derived from the master seed by a counter.
            let stream = (si as u64) << 32 | trial as u64;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15));
            let n = 1usize << scale;
            let values: Vec<Rational> = (0..n)
                .map(|_| {
                    let num = rng.gen_range(-8i64..=8);
                    let den = 1i64 << rng.gen_range(0u32..=3);
                    Rational::new(num.into(), den.into())
                })
                .collect();
            let f = StepFunction::from_uniform(scale, values);
            if f.is_zero() {
                continue;
            }
            let denom = lp_pow_dense(&f, p, budget)?;
            let c = fwt_forward(&f, budget)?;
            // Incremental partial sums over the dense grid.
            let dense = f.dense_values(scale, budget)?;
            let mut s = vec![Rational::zero(); dense.len()];
            for k in 0..c.coeffs.len() as u64 {
                let ck = &c.coeffs[k as usize];
                if !ck.is_zero() {
                    for i in 0..s.len() {
                        let cell = DyadicInterval::new(scale, i as u64);
                        if walsh_on_cell(k, &cell) > 0 {
                            s[i] += ck;
                        } else {
                            s[i] -= ck;
                        }
                    }
                }
                let num = dense_lp_pow(&s, p, scale);
                let ratio = num / &denom;
                if ratio > max_ratio_pow {
                    max_ratio_pow = ratio;
                }
            }
        }
    }
    // p-th root, rounded up to the 2^-10 grid.
    let root = crate::norm::root_f64(&max_ratio_pow, p as f64);
    let grains = (root * 1024.0).ceil() as i64 + 1;
    Ok(Rational::new(grains.into(), 1024.into()))
}

fn lp_pow_dense(f: &StepFunction, p: u32, _budget: &Budget) -> Result<Rational> {
    Ok(crate::norm::lp_pow_exact(f, p, &crate::norm::Lebesgue))
}

fn dense_lp_pow(values: &[Rational], p: u32, scale: u32) -> Rational {
    let mut acc = Rational::zero();
    for v in values {
        if !v.is_zero() {
            acc += crate::norm::pow_abs(v, p);
        }
    }
    acc / Rational::from_integer(num_bigint::BigInt::one() << scale as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn budget() -> Budget {
        Budget::default()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn dy(n: i64, e: i64) -> Dyadic {
        Dyadic::new(BigInt::from(n), e)
    }

    #[test]
    fn rademacher_values() {
        assert_eq!(rademacher(1, &Dyadic::zero()), 1);
        assert_eq!(rademacher(1, &dy(1, 1)), -1); // x = 1/2
        assert_eq!(rademacher(3, &dy(5, 3)), -1); // x = 5/8 -> bits 101
        assert_eq!(rademacher(2, &dy(5, 3)), 1);
    }

    #[test]
    fn walsh_values() {
        for x in [dy(0, 0), dy(1, 2), dy(3, 3), dy(7, 3)] {
            assert_eq!(walsh_eval(&BigUint::zero(), &x), 1);
        }
        // W_3(1/4) = R_1 R_2 at 0.01 -> (+1)(-1)
        assert_eq!(walsh_eval_u64(3, &dy(1, 2)), -1);
        // Single-bit index is a Rademacher function.
        for m in 0..5u32 {
            for i in 0..16u64 {
                let x = dy(i as i64, 4);
                assert_eq!(walsh_eval_u64(1 << m, &x), rademacher(m + 1, &x));
            }
        }
    }

    #[test]
    fn walsh_cell_matches_pointwise() {
        let scale = 6u32;
        for k in 0..64u64 {
            for i in 0..64u64 {
                let cell = DyadicInterval::new(scale, i);
                let x = dy(i as i64, scale as i64);
                assert_eq!(walsh_on_cell(k, &cell), walsh_eval_u64(k, &x));
            }
        }
    }

    #[test]
    fn character_property_small() {
        // W_j W_k = W_{j xor k}, checked through the Rademacher-product path.
        let scale = 7u32;
        for j in 0..32u64 {
            for k in 0..32u64 {
                for i in (0..128u64).step_by(11) {
                    let x = dy(i as i64, scale as i64);
                    let lhs = walsh_eval_u64(j, &x) * walsh_eval_u64(k, &x);
                    assert_eq!(lhs, walsh_eval_u64(j ^ k, &x));
                }
            }
        }
    }

    #[test]
    fn forward_constant() {
        let f = StepFunction::constant(rat(1, 1));
        let c = fwt_forward(&f, &budget()).unwrap();
        assert_eq!(c.coeffs, vec![rat(1, 1)]);
    }

    #[test]
    fn forward_recovers_unit_coefficient() {
        // Pointwise W_5 at R = 3.
        let values: Vec<Rational> = (0..8u64)
            .map(|i| {
                let cell = DyadicInterval::new(3, i);
                Rational::from_integer(walsh_on_cell(5, &cell).into())
            })
            .collect();
        let f = StepFunction::from_uniform(3, values);
        let c = fwt_forward(&f, &budget()).unwrap();
        for k in 0..8u64 {
            let expect = if k == 5 { rat(1, 1) } else { rat(0, 1) };
            assert_eq!(c.coeff(k), expect, "k = {}", k);
        }
    }

    #[test]
    fn inverse_of_ones_is_dirichlet_kernel() {
        for m in 0..6u32 {
            let c = WalshPolynomial {
                k_lo: 0,
                coeffs: vec![rat(1, 1); 1 << m],
            };
            let f = fwt_inverse(&c, &budget()).unwrap();
            // 2^m on [0, 2^-m), 0 beyond.
            for (iv, v) in f.pieces() {
                let on_first = iv.index().is_zero() || iv.scale() == 0;
                if on_first && iv.scale() >= m {
                    assert_eq!(v, &rat(1 << m, 1));
                } else if !iv.contains(&DyadicInterval::new(m, 0u64))
                    && !DyadicInterval::new(m, 0u64).contains(iv)
                {
                    assert_eq!(v, &rat(0, 1));
                }
            }
        }
    }

    #[test]
    fn round_trip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let scale = rng.gen_range(0u32..=6);
            let values: Vec<Rational> = (0..(1usize << scale))
                .map(|_| rat(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=7)))
                .collect();
            let f = StepFunction::from_uniform(scale, values);
            let c = fwt_forward(&f, &budget()).unwrap();
            let g = fwt_inverse(&c, &budget()).unwrap();
            assert_eq!(f, g);
        }
    }

    #[test]
    fn matches_naive_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let scale = 5u32;
            let values: Vec<Rational> = (0..(1usize << scale))
                .map(|_| rat(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=7)))
                .collect();
            let f = StepFunction::from_uniform(scale, values);
            let a = fwt_forward(&f, &budget()).unwrap();
            let b = naive_transform(&f, &budget()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn block_partial_sum_matches_kernel_shape() {
        // Sum over one index group at m = 2: +4, -4, then 0.
        let m = 2u32;
        let mut coeffs = vec![Rational::zero(); 8];
        for k in 4..8 {
            coeffs[k] = rat(1, 1);
        }
        let c = WalshPolynomial { k_lo: 0, coeffs };
        let f = fwt_inverse(&c, &budget()).unwrap();
        let _ = m;
        let vals = f.dense_values(3, &budget()).unwrap();
        assert_eq!(vals[0], rat(4, 1));
        assert_eq!(vals[1], rat(-4, 1));
        for v in &vals[2..] {
            assert_eq!(v, &rat(0, 1));
        }
    }

    #[test]
    fn partial_sum_bounds() {
        let c = WalshPolynomial {
            k_lo: 2,
            coeffs: vec![rat(1, 2); 6],
        };
        assert!(partial_sum(&c, 1, &budget()).is_err());
        let z = partial_sum(&c, 2, &budget()).unwrap();
        assert!(z.is_zero());
        let full = partial_sum(&c, 8, &budget()).unwrap();
        let direct = fwt_inverse(&c, &budget()).unwrap();
        assert_eq!(full, direct);
    }
}
