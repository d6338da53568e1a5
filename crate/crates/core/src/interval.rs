//! Dyadic intervals `[i/2^K, (i+1)/2^K)` and canonical finite unions of them.

use crate::error::{Error, Result};
use crate::scalar::Dyadic;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Half-open dyadic interval `[index/2^scale, (index+1)/2^scale)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    scale: u32,
    index: BigUint,
}

impl DyadicInterval {
    pub fn new(scale: u32, index: impl Into<BigUint>) -> Self {
        let index = index.into();
        debug_assert!(index.bits() <= scale as u64, "index {} out of range at scale {}", index, scale);
        DyadicInterval { scale, index }
    }

    pub fn unit() -> Self {
        DyadicInterval::new(0, 0u32)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn index(&self) -> &BigUint {
        &self.index
    }

    pub fn index_u64(&self) -> Option<u64> {
        u64::try_from(&self.index).ok()
    }

    pub fn length(&self) -> Dyadic {
        Dyadic::pow2(-(self.scale as i64))
    }

    /// Left endpoint as a dyadic scalar.
    pub fn left(&self) -> Dyadic {
        Dyadic::new(self.index.clone().into(), self.scale as i64)
    }

    /// The two scale-(K+1) children.
    pub fn children(&self) -> (DyadicInterval, DyadicInterval) {
        let base = &self.index << 1u32;
        (
            DyadicInterval::new(self.scale + 1, base.clone()),
            DyadicInterval::new(self.scale + 1, base + BigUint::one()),
        )
    }

    /// The child obtained by appending `bits` (of width `extra`) to the index.
    pub fn descend(&self, extra: u32, bits: impl Into<BigUint>) -> DyadicInterval {
        let bits = bits.into();
        debug_assert!(bits.bits() <= extra as u64);
        DyadicInterval::new(self.scale + extra, (&self.index << extra) + bits)
    }

    /// Does `self` contain `other` (other at finer or equal scale)?
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        if other.scale < self.scale {
            return false;
        }
        (&other.index >> (other.scale - self.scale)) == self.index
    }

    pub fn is_disjoint(&self, other: &DyadicInterval) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Intersection; dyadic intervals are nested or disjoint.
    pub fn intersect(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        if self.contains(other) {
            Some(other.clone())
        } else if other.contains(self) {
            Some(self.clone())
        } else {
            None
        }
    }

    /// Order by left endpoint, then by scale (coarser first).
    fn position_key(&self, max_scale: u32) -> (BigUint, u32) {
        ((&self.index) << (max_scale - self.scale), self.scale)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}/2^{})", self.index, self.scale)
    }
}

/// Canonical finite union of disjoint dyadic intervals: sorted by position,
/// with sibling pairs merged into their parent wherever possible.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    pieces: Vec<DyadicInterval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: vec![] }
    }

    pub fn full() -> Self {
        IntervalSet {
            pieces: vec![DyadicInterval::unit()],
        }
    }

    /// Build from arbitrary disjoint pieces; sorts and merges to canonical
    /// form. Panics in debug builds if pieces overlap.
    pub fn from_pieces(mut pieces: Vec<DyadicInterval>) -> Self {
        if pieces.is_empty() {
            return IntervalSet::empty();
        }
        let max_scale = pieces.iter().map(|p| p.scale).max().unwrap();
        pieces.sort_by(|a, b| {
            let ka = a.position_key(max_scale);
            let kb = b.position_key(max_scale);
            ka.cmp(&kb)
        });
        debug_assert!(pieces.windows(2).all(|w| w[0].is_disjoint(&w[1])));
        // Merge sibling pairs bottom-up until a fixpoint.
        let mut stack: Vec<DyadicInterval> = Vec::with_capacity(pieces.len());
        for p in pieces {
            stack.push(p);
            loop {
                let n = stack.len();
                if n < 2 {
                    break;
                }
                let (a, b) = (&stack[n - 2], &stack[n - 1]);
                if a.scale == b.scale
                    && a.scale > 0
                    && (&a.index >> 1u32) == (&b.index >> 1u32)
                    && (&a.index & BigUint::one()).is_zero()
                {
                    let parent = DyadicInterval::new(a.scale - 1, &a.index >> 1u32);
                    stack.truncate(n - 2);
                    stack.push(parent);
                } else {
                    break;
                }
            }
        }
        IntervalSet { pieces: stack }
    }

    pub fn from_interval(iv: DyadicInterval) -> Self {
        IntervalSet { pieces: vec![iv] }
    }

    pub fn pieces(&self) -> &[DyadicInterval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// Exact total length.
    pub fn measure(&self) -> Dyadic {
        let mut acc = Dyadic::zero();
        for p in &self.pieces {
            acc = &acc + &p.length();
        }
        acc
    }

    /// Exact measure of the intersection with one dyadic interval.
    pub fn measure_within(&self, cell: &DyadicInterval) -> Dyadic {
        let mut acc = Dyadic::zero();
        for p in &self.pieces {
            if let Some(i) = p.intersect(cell) {
                acc = &acc + &i.length();
            }
        }
        acc
    }

    pub fn contains_cell(&self, cell: &DyadicInterval) -> bool {
        self.pieces.iter().any(|p| p.contains(cell))
    }

    /// Complement within [0,1).
    pub fn complement(&self) -> IntervalSet {
        self.complement_within(&DyadicInterval::unit())
    }

    /// Complement within a dyadic interval.
    pub fn complement_within(&self, domain: &DyadicInterval) -> IntervalSet {
        let mut out: Vec<DyadicInterval> = Vec::new();
        let mut work = vec![domain.clone()];
        while let Some(cell) = work.pop() {
            let inside: Vec<&DyadicInterval> = self
                .pieces
                .iter()
                .filter(|p| !p.is_disjoint(&cell))
                .collect();
            if inside.is_empty() {
                out.push(cell);
                continue;
            }
            if inside.iter().any(|p| p.contains(&cell)) {
                continue;
            }
            let (l, r) = cell.children();
            work.push(l);
            work.push(r);
        }
        IntervalSet::from_pieces(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        // Overlaps are resolved by splitting down to the finer piece.
        let mut pieces = self.pieces.clone();
        for q in &other.pieces {
            let mut work = vec![q.clone()];
            while let Some(cell) = work.pop() {
                if pieces.iter().any(|p| p.contains(&cell)) {
                    continue;
                }
                if pieces.iter().all(|p| p.is_disjoint(&cell)) {
                    pieces.push(cell);
                    continue;
                }
                let (l, r) = cell.children();
                work.push(l);
                work.push(r);
            }
        }
        IntervalSet::from_pieces(pieces)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.pieces {
            for q in &other.pieces {
                if let Some(i) = p.intersect(q) {
                    out.push(i);
                }
            }
        }
        IntervalSet::from_pieces(out)
    }

    /// Serialize: one piece per line, "K i".
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            s.push_str(&format!("{} {}\n", p.scale(), p.index()));
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
            let mut it = line.split_whitespace();
            let scale: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing scale", lineno + 1)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {}", lineno + 1, e)))?;
            let index: BigUint = it
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing index", lineno + 1)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {}", lineno + 1, e)))?;
            if index.bits() > scale as u64 {
                return Err(Error::Parse(format!(
                    "line {}: index {} out of range at scale {}",
                    lineno + 1,
                    index,
                    scale
                )));
            }
            pieces.push(DyadicInterval::new(scale, index));
        }
        Ok(IntervalSet::from_pieces(pieces))
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.pieces.iter()).finish()
    }
}

/// Compare two intervals purely by left endpoint.
pub fn cmp_left(a: &DyadicInterval, b: &DyadicInterval) -> Ordering {
    let s = a.scale().max(b.scale());
    let ka = a.index() << (s - a.scale());
    let kb = b.index() << (s - b.scale());
    ka.cmp(&kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn iv(scale: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(scale, index)
    }

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalSet::full().measure(), Dyadic::one());
        let s = IntervalSet::from_pieces(vec![iv(2, 0), iv(2, 2)]);
        assert_eq!(s.measure().to_rational(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn canonical_merges_siblings() {
        let s = IntervalSet::from_pieces(vec![iv(2, 0), iv(2, 1), iv(2, 3)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.pieces()[0], iv(1, 0));
        assert_eq!(s.pieces()[1], iv(2, 3));
        // Full cover collapses to the unit interval.
        let t = IntervalSet::from_pieces((0..8).map(|i| iv(3, i)).collect());
        assert_eq!(t.pieces(), &[DyadicInterval::unit()]);
    }

    #[test]
    fn complement_measure() {
        let s = IntervalSet::from_pieces(vec![iv(3, 1), iv(2, 3)]);
        let c = s.complement();
        let total = &s.measure() + &c.measure();
        assert_eq!(total, Dyadic::one());
        assert!(s.intersect(&c).is_empty());
    }

    #[test]
    fn nesting_and_disjointness() {
        let a = iv(1, 0);
        let b = iv(3, 2);
        assert!(a.contains(&b));
        assert!(!a.is_disjoint(&b));
        let c = iv(3, 5);
        assert!(a.is_disjoint(&c));
        assert_eq!(a.intersect(&b), Some(b.clone()));
    }

    #[test]
    fn text_round_trip() {
        let s = IntervalSet::from_pieces(vec![iv(3, 1), iv(2, 3)]);
        let t = IntervalSet::from_text(&s.to_text()).unwrap();
        assert_eq!(s, t);
    }
}
