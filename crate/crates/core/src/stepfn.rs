//! Piecewise-constant functions on [0,1) over dyadic partitions.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::interval::{cmp_left, DyadicInterval, IntervalSet};
use crate::scalar::Rational;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use std::fmt;

/// A function constant on each piece of a dyadic partition of [0,1).
///
/// Canonical form: pieces sorted left to right, covering [0,1) exactly, with
/// adjacent sibling pieces of equal value merged.
#[derive(Clone, PartialEq, Eq)]
pub struct StepFunction {
    pieces: Vec<(DyadicInterval, Rational)>,
}

impl StepFunction {
    pub fn constant(v: Rational) -> Self {
        StepFunction {
            pieces: vec![(DyadicInterval::unit(), v)],
        }
    }

    pub fn zero() -> Self {
        StepFunction::constant(Rational::zero())
    }

    /// Indicator of a set.
    pub fn indicator(s: &IntervalSet) -> Self {
        let mut pieces: Vec<(DyadicInterval, Rational)> = s
            .pieces()
            .iter()
            .map(|p| (p.clone(), Rational::one()))
            .collect();
        for p in s.complement().pieces() {
            pieces.push((p.clone(), Rational::zero()));
        }
        StepFunction::from_pieces(pieces)
    }

    /// Build from disjoint pieces covering [0,1); sorts and canonicalizes.
    pub fn from_pieces(mut pieces: Vec<(DyadicInterval, Rational)>) -> Self {
        assert!(!pieces.is_empty(), "pieces must cover [0,1)");
        pieces.sort_by(|a, b| cmp_left(&a.0, &b.0));
        let mut f = StepFunction { pieces };
        f.canonicalize();
        debug_assert!(f.covers_unit(), "pieces must cover [0,1) exactly");
        f
    }

    /// Values on the uniform partition at `scale`, listed left to right.
    pub fn from_uniform(scale: u32, values: Vec<Rational>) -> Self {
        assert_eq!(values.len() as u128, 1u128 << scale);
        let pieces = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (DyadicInterval::new(scale, i as u64), v))
            .collect();
        StepFunction::from_pieces(pieces)
    }

    fn covers_unit(&self) -> bool {
        let mut expect = BigUint::zero();
        let max_scale = self.resolution();
        for (iv, _) in &self.pieces {
            let left = iv.index() << (max_scale - iv.scale());
            if left != expect {
                return false;
            }
            expect = left + (BigUint::one() << (max_scale - iv.scale()));
        }
        expect == (BigUint::one() << max_scale)
    }

    fn canonicalize(&mut self) {
        let mut stack: Vec<(DyadicInterval, Rational)> = Vec::with_capacity(self.pieces.len());
        for (iv, v) in self.pieces.drain(..) {
            stack.push((iv, v));
            loop {
                let n = stack.len();
                if n < 2 {
                    break;
                }
                let merged = {
                    let (a, b) = (&stack[n - 2], &stack[n - 1]);
                    a.0.scale() == b.0.scale()
                        && a.0.scale() > 0
                        && a.1 == b.1
                        && (a.0.index() >> 1u32) == (b.0.index() >> 1u32)
                        && (a.0.index() & BigUint::one()).is_zero()
                };
                if merged {
                    let (iv_b, v) = stack.pop().unwrap();
                    let (iv_a, _) = stack.pop().unwrap();
                    let _ = iv_b;
                    let parent = DyadicInterval::new(iv_a.scale() - 1, iv_a.index() >> 1u32);
                    stack.push((parent, v));
                } else {
                    break;
                }
            }
        }
        self.pieces = stack;
    }

    pub fn pieces(&self) -> &[(DyadicInterval, Rational)] {
        &self.pieces
    }

    /// Finest scale present.
    pub fn resolution(&self) -> u32 {
        self.pieces.iter().map(|(iv, _)| iv.scale()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|(_, v)| v.is_zero())
    }

    /// Value on a cell contained in one piece.
    pub fn value_on(&self, cell: &DyadicInterval) -> Option<&Rational> {
        self.pieces
            .iter()
            .find(|(iv, _)| iv.contains(cell))
            .map(|(_, v)| v)
    }

    /// The support as a canonical interval set.
    pub fn support(&self) -> IntervalSet {
        IntervalSet::from_pieces(
            self.pieces
                .iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(iv, _)| iv.clone())
                .collect(),
        )
    }

    /// Dense values on the uniform grid at `scale >= resolution()`.
    pub fn dense_values(&self, scale: u32, budget: &Budget) -> Result<Vec<Rational>> {
        budget.check_dense_scale("materializing dense step function", scale)?;
        if scale < self.resolution() {
            return Err(Error::invalid(format!(
                "dense scale {} below resolution {}",
                scale,
                self.resolution()
            )));
        }
        let mut out = Vec::with_capacity(1usize << scale);
        for (iv, v) in &self.pieces {
            let reps = 1usize << (scale - iv.scale());
            for _ in 0..reps {
                out.push(v.clone());
            }
        }
        Ok(out)
    }

    /// Common refinement: both results share one partition and equal the
    /// inputs pointwise. The shared partition is not re-merged, so callers
    /// can rely on piece-by-piece alignment.
    pub fn refine(
        a: &StepFunction,
        b: &StepFunction,
        budget: &Budget,
    ) -> Result<(StepFunction, StepFunction)> {
        let cells = common_partition(a, b, budget)?;
        let pa = cells
            .iter()
            .map(|(cell, va, _)| (cell.clone(), (*va).clone()))
            .collect();
        let pb = cells
            .iter()
            .map(|(cell, _, vb)| (cell.clone(), (*vb).clone()))
            .collect();
        Ok((RawPartition(pa).into_stepfn(), RawPartition(pb).into_stepfn()))
    }

    /// Pointwise combine on the common refinement.
    pub fn zip_with(
        a: &StepFunction,
        b: &StepFunction,
        budget: &Budget,
        f: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Result<StepFunction> {
        let cells = common_partition(a, b, budget)?;
        let pieces = cells
            .into_iter()
            .map(|(cell, va, vb)| {
                let v = f(va, vb);
                (cell, v)
            })
            .collect();
        Ok(StepFunction::from_pieces(pieces))
    }

    pub fn add(a: &StepFunction, b: &StepFunction, budget: &Budget) -> Result<StepFunction> {
        StepFunction::zip_with(a, b, budget, |x, y| x + y)
    }

    pub fn sub(a: &StepFunction, b: &StepFunction, budget: &Budget) -> Result<StepFunction> {
        StepFunction::zip_with(a, b, budget, |x, y| x - y)
    }

    pub fn scale_by(&self, c: &Rational) -> StepFunction {
        StepFunction::from_pieces(
            self.pieces
                .iter()
                .map(|(iv, v)| (iv.clone(), v * c))
                .collect(),
        )
    }

    /// Serialize: one piece per line, "K i numerator/denominator".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (iv, v) in &self.pieces {
            s.push_str(&format!("{} {} {}/{}\n", iv.scale(), iv.index(), v.numer(), v.denom()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse(format!("line {}: {}", lineno + 1, m));
            let mut it = line.split_whitespace();
            let scale: u32 = it
                .next()
                .ok_or_else(|| err("missing scale".into()))?
                .parse()
                .map_err(|e| err(format!("{}", e)))?;
            let index: BigUint = it
                .next()
                .ok_or_else(|| err("missing index".into()))?
                .parse()
                .map_err(|e| err(format!("{}", e)))?;
            let frac = it.next().ok_or_else(|| err("missing value".into()))?;
            let v = parse_rational(frac).map_err(|m| err(m))?;
            pieces.push((DyadicInterval::new(scale, index), v));
        }
        if pieces.is_empty() {
            return Err(Error::Parse("empty step function file".into()));
        }
        Ok(StepFunction::from_pieces(pieces))
    }
}

pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: BigInt = n.parse().map_err(|e| format!("bad numerator: {}", e))?;
    let denom: BigInt = d.parse().map_err(|e| format!("bad denominator: {}", e))?;
    if denom.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(Rational::new(numer, denom))
}

/// A sorted, disjoint, covering piece list that is deliberately not merged.
struct RawPartition(Vec<(DyadicInterval, Rational)>);

impl RawPartition {
    fn into_stepfn(self) -> StepFunction {
        StepFunction { pieces: self.0 }
    }
}

/// Walk the common refinement of two step functions, yielding each shared
/// cell with both values.
pub fn common_partition<'a>(
    a: &'a StepFunction,
    b: &'a StepFunction,
    budget: &Budget,
) -> Result<Vec<(DyadicInterval, &'a Rational, &'a Rational)>> {
    let mut out = Vec::new();
    let mut ai = 0usize;
    let mut bi = 0usize;
    let ap = a.pieces();
    let bp = b.pieces();
    // Positions tracked at the joint finest scale.
    let max_scale = a.resolution().max(b.resolution());
    let mut pos = BigUint::zero();
    let end = BigUint::one() << max_scale;
    while pos < end {
        let (iva, va) = &ap[ai];
        let (ivb, vb) = &bp[bi];
        let cell = if iva.scale() >= ivb.scale() { iva } else { ivb };
        out.push((cell.clone(), va, vb));
        if out.len() as u128 > budget.max_cells as u128 {
            return Err(Error::budget(
                "common refinement",
                out.len() as u128,
                budget.max_cells as u128,
            ));
        }
        pos = (cell.index() + BigUint::one()) << (max_scale - cell.scale());
        // Advance past every piece that ends at or before `pos`.
        while ai < ap.len() {
            let (iv, _) = &ap[ai];
            let piece_end = (iv.index() + BigUint::one()) << (max_scale - iv.scale());
            if piece_end <= pos {
                ai += 1;
            } else {
                break;
            }
        }
        while bi < bp.len() {
            let (iv, _) = &bp[bi];
            let piece_end = (iv.index() + BigUint::one()) << (max_scale - iv.scale());
            if piece_end <= pos {
                bi += 1;
            } else {
                break;
            }
        }
        if pos == end {
            break;
        }
    }
    Ok(out)
}

impl fmt::Debug for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.pieces.iter().map(|(iv, v)| (iv.clone(), v.to_string())))
            .finish()
    }
}
