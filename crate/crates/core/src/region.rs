//! Structural sets and piecewise-constant value maps.
//!
//! The recursive constructions in this crate produce level sets that are
//! unions of astronomically many dyadic cells (one child per window-scale
//! cell of a flat block), which cannot be materialized beyond small scales.
//! They can still be measured exactly: a flat block with window exponent `M`
//! splits every cell of scale <= M exactly in half, and is constant on cells
//! of scale > M. This module represents such sets symbolically and computes
//! exact measures, pairwise intersection measures, and weighted integrals of
//! functions that are constant on them.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::flat::FlatBlock;
use crate::interval::{DyadicInterval, IntervalSet};
use crate::scalar::{Dyadic, Rational};
use crate::stepfn::StepFunction;
use num_traits::Zero;
use std::sync::Arc;

/// `{x in domain : block(x) = sign}` for a flat block and one of its
/// sub-cells. Piece scale is `window_exp + 1`.
#[derive(Clone, Debug)]
pub struct ScatterHalf {
    pub block: Arc<FlatBlock>,
    pub sign: i8,
    pub domain: DyadicInterval,
}

impl ScatterHalf {
    pub fn new(block: Arc<FlatBlock>, sign: i8) -> Self {
        let domain = block.delta().clone();
        ScatterHalf {
            block,
            sign,
            domain,
        }
    }

    pub fn measure(&self) -> Dyadic {
        self.block.level_measure_within(self.sign, &self.domain)
    }

    pub fn measure_within(&self, cell: &DyadicInterval) -> Dyadic {
        match self.domain.intersect(cell) {
            Some(common) => self.block.level_measure_within(self.sign, &common),
            None => Dyadic::zero(),
        }
    }

    fn restricted(&self, cell: &DyadicInterval) -> Option<ScatterHalf> {
        self.domain.intersect(cell).map(|common| ScatterHalf {
            block: self.block.clone(),
            sign: self.sign,
            domain: common,
        })
    }

    /// Materialize as scale-(M+1) cells; budget-guarded.
    pub fn materialize(&self, budget: &Budget) -> Result<IntervalSet> {
        let full = self.block.level_set(self.sign, budget)?;
        if self.domain == *self.block.delta() {
            return Ok(full);
        }
        let mut pieces = Vec::new();
        for p in full.pieces() {
            if let Some(i) = p.intersect(&self.domain) {
                pieces.push(i);
            }
        }
        Ok(IntervalSet::from_pieces(pieces))
    }

    pub fn contains_cell(&self, cell: &DyadicInterval) -> bool {
        if cell.scale() <= self.block.window_exp() {
            return false;
        }
        self.domain.contains(cell) && self.block.value_on_cell(cell) == self.sign
    }
}

/// One structural component: a plain interval or a scattered half.
#[derive(Clone, Debug)]
pub enum Region {
    Interval(DyadicInterval),
    Scatter(ScatterHalf),
}

impl Region {
    pub fn measure(&self) -> Dyadic {
        match self {
            Region::Interval(iv) => iv.length(),
            Region::Scatter(s) => s.measure(),
        }
    }

    pub fn measure_within(&self, cell: &DyadicInterval) -> Dyadic {
        match self {
            Region::Interval(iv) => match iv.intersect(cell) {
                Some(c) => c.length(),
                None => Dyadic::zero(),
            },
            Region::Scatter(s) => s.measure_within(cell),
        }
    }

    pub fn contains_cell(&self, cell: &DyadicInterval) -> bool {
        match self {
            Region::Interval(iv) => iv.contains(cell),
            Region::Scatter(s) => s.contains_cell(cell),
        }
    }

    pub fn materialize(&self, budget: &Budget) -> Result<IntervalSet> {
        match self {
            Region::Interval(iv) => Ok(IntervalSet::from_interval(iv.clone())),
            Region::Scatter(s) => s.materialize(budget),
        }
    }

    /// Exact measure of the pairwise intersection.
    ///
    /// Supported cases cover everything the constructions produce: any pair
    /// involving an interval; scatters of the same block; scatters of
    /// distinct blocks whose windows differ (the deeper block halves every
    /// piece of the shallower one, or is confined to a cell on which the
    /// shallower block is constant).
    pub fn meet_measure(&self, other: &Region) -> Result<Dyadic> {
        match (self, other) {
            (Region::Interval(a), _) => Ok(other.measure_within(a)),
            (_, Region::Interval(b)) => Ok(self.measure_within(b)),
            (Region::Scatter(a), Region::Scatter(b)) => scatter_meet_measure(a, b),
        }
    }

    /// Intersection as a region, where representable.
    pub fn meet_region(&self, other: &Region) -> Result<Option<Region>> {
        match (self, other) {
            (Region::Interval(a), Region::Interval(b)) => {
                Ok(a.intersect(b).map(Region::Interval))
            }
            (Region::Interval(a), Region::Scatter(s))
            | (Region::Scatter(s), Region::Interval(a)) => {
                Ok(s.restricted(a).map(Region::Scatter))
            }
            (Region::Scatter(a), Region::Scatter(b)) => {
                if Arc::ptr_eq(&a.block, &b.block) {
                    if a.sign != b.sign {
                        return Ok(None);
                    }
                    return Ok(a
                        .domain
                        .intersect(&b.domain)
                        .map(|d| {
                            Region::Scatter(ScatterHalf {
                                block: a.block.clone(),
                                sign: a.sign,
                                domain: d,
                            })
                        }));
                }
                // Distinct blocks: representable when one's domain lies in a
                // cell where the other is constant.
                let m = scatter_meet_measure(a, b)?;
                if m.is_zero() {
                    return Ok(None);
                }
                if let Some(r) = constant_over(a, b)? {
                    return Ok(Some(r));
                }
                if let Some(r) = constant_over(b, a)? {
                    return Ok(Some(r));
                }
                Err(Error::invalid(
                    "unrepresentable intersection of scattered sets",
                ))
            }
        }
    }
}

/// If block `a` is constant on `b.domain`, the meet is either `b` restricted
/// or empty.
fn constant_over(a: &ScatterHalf, b: &ScatterHalf) -> Result<Option<Region>> {
    if b.domain.scale() > a.block.window_exp() && a.domain.contains(&b.domain) {
        let v = a.block.value_on_cell(&b.domain);
        if v == a.sign {
            return Ok(Some(Region::Scatter(b.clone())));
        }
        return Ok(None);
    }
    Ok(None)
}

fn scatter_meet_measure(a: &ScatterHalf, b: &ScatterHalf) -> Result<Dyadic> {
    if Arc::ptr_eq(&a.block, &b.block) {
        if a.sign != b.sign {
            return Ok(Dyadic::zero());
        }
        return Ok(match a.domain.intersect(&b.domain) {
            Some(d) => a.block.level_measure_within(a.sign, &d),
            None => Dyadic::zero(),
        });
    }
    let common = match a.domain.intersect(&b.domain) {
        Some(d) => d,
        None => return Ok(Dyadic::zero()),
    };
    // Order so that `deep` has the strictly larger window.
    let (shallow, deep) = if a.block.window_exp() < b.block.window_exp() {
        (a, b)
    } else if b.block.window_exp() < a.block.window_exp() {
        (b, a)
    } else {
        return Err(Error::invalid(
            "overlapping scattered sets share a window exponent",
        ));
    };
    // Case 1: the shallow block is constant on the deep domain.
    if deep.domain.scale() > shallow.block.window_exp() {
        let common_deep = deep
            .domain
            .intersect(&common)
            .expect("common refines both domains");
        let v = if shallow.domain.contains(&common_deep) {
            shallow.block.value_on_cell(&common_deep)
        } else {
            0
        };
        if v != shallow.sign {
            return Ok(Dyadic::zero());
        }
        return Ok(deep.block.level_measure_within(deep.sign, &common_deep));
    }
    // Case 2: the shallow set's pieces all have scale <= deep window, so the
    // deep block halves the shallow region restricted to the common cell.
    if shallow.block.window_exp() + 1 <= deep.block.window_exp() {
        let shallow_mass = shallow.measure_within(&common);
        return Ok(shallow_mass.mul_pow2(-1));
    }
    Err(Error::invalid(
        "unsupported scattered-set intersection geometry",
    ))
}

/// A disjoint union of regions.
#[derive(Clone, Debug, Default)]
pub struct RegionSet {
    parts: Vec<Region>,
}

impl RegionSet {
    pub fn empty() -> Self {
        RegionSet { parts: vec![] }
    }

    pub fn from_parts(parts: Vec<Region>) -> Self {
        RegionSet { parts }
    }

    pub fn from_intervals(s: &IntervalSet) -> Self {
        RegionSet {
            parts: s.pieces().iter().cloned().map(Region::Interval).collect(),
        }
    }

    pub fn parts(&self) -> &[Region] {
        &self.parts
    }

    pub fn push(&mut self, r: Region) {
        self.parts.push(r);
    }

    pub fn extend(&mut self, other: RegionSet) {
        self.parts.extend(other.parts);
    }

    pub fn measure(&self) -> Dyadic {
        let mut acc = Dyadic::zero();
        for p in &self.parts {
            acc = &acc + &p.measure();
        }
        acc
    }

    pub fn measure_within(&self, cell: &DyadicInterval) -> Dyadic {
        let mut acc = Dyadic::zero();
        for p in &self.parts {
            acc = &acc + &p.measure_within(cell);
        }
        acc
    }

    pub fn meet_measure(&self, other: &RegionSet) -> Result<Dyadic> {
        let mut acc = Dyadic::zero();
        for a in &self.parts {
            for b in &other.parts {
                acc = &acc + &a.meet_measure(b)?;
            }
        }
        Ok(acc)
    }

    pub fn contains_cell(&self, cell: &DyadicInterval) -> bool {
        self.parts.iter().any(|p| p.contains_cell(cell))
    }

    /// Materialize to a canonical interval set. Parts are disjoint by the
    /// construction invariant, so pieces are collected and canonicalized in
    /// one pass.
    pub fn materialize(&self, budget: &Budget) -> Result<IntervalSet> {
        let mut estimate: u128 = 0;
        for p in &self.parts {
            estimate += match p {
                Region::Interval(_) => 1,
                Region::Scatter(s) => {
                    let m = s.block.window_exp() - s.block.delta().scale();
                    1u128 << m.min(100)
                }
            };
        }
        budget.check_cells("materializing a region set", estimate)?;
        let mut pieces = Vec::with_capacity(estimate.min(1 << 22) as usize);
        for p in &self.parts {
            pieces.extend(p.materialize(budget)?.pieces().iter().cloned());
        }
        Ok(IntervalSet::from_pieces(pieces))
    }
}

/// A function that is constant on each region of a disjoint family covering
/// [0,1).
#[derive(Clone, Debug, Default)]
pub struct ValueMap {
    parts: Vec<(Region, Rational)>,
}

impl ValueMap {
    pub fn new() -> Self {
        ValueMap { parts: vec![] }
    }

    pub fn from_stepfn(f: &StepFunction) -> Self {
        ValueMap {
            parts: f
                .pieces()
                .iter()
                .map(|(iv, v)| (Region::Interval(iv.clone()), v.clone()))
                .collect(),
        }
    }

    pub fn push(&mut self, region: Region, value: Rational) {
        self.parts.push((region, value));
    }

    pub fn parts(&self) -> &[(Region, Rational)] {
        &self.parts
    }

    pub fn total_measure(&self) -> Dyadic {
        let mut acc = Dyadic::zero();
        for (r, _) in &self.parts {
            acc = &acc + &r.measure();
        }
        acc
    }

    /// Exact signed integral against Lebesgue measure.
    pub fn integral(&self) -> Rational {
        let mut acc = Rational::zero();
        for (r, v) in &self.parts {
            if !v.is_zero() {
                acc += v * r.measure().to_rational();
            }
        }
        acc
    }

    /// Exact `∫ |f|^p` for integer p.
    pub fn lp_pow(&self, p: u32) -> Rational {
        let mut acc = Rational::zero();
        for (r, v) in &self.parts {
            if !v.is_zero() {
                acc += crate::norm::pow_abs(v, p) * r.measure().to_rational();
            }
        }
        acc
    }

    /// Exact `∫_E |f|^p` over a structural set, integer p.
    pub fn lp_pow_on(&self, p: u32, e: &RegionSet) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (r, v) in &self.parts {
            if v.is_zero() {
                continue;
            }
            let mut mass = Dyadic::zero();
            for b in e.parts() {
                mass = &mass + &r.meet_measure(b)?;
            }
            acc += crate::norm::pow_abs(v, p) * mass.to_rational();
        }
        Ok(acc)
    }

    /// Exact `∫ |f|^p dμ` where the weight reports per-region masses.
    pub fn lp_pow_weighted(&self, p: u32, w: &dyn RegionMeasure) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (r, v) in &self.parts {
            if v.is_zero() {
                continue;
            }
            acc += crate::norm::pow_abs(v, p) * w.mass_of_region(r)?;
        }
        Ok(acc)
    }

    /// Pointwise combination against a step function on the product
    /// partition: `out(x) = combine(step(x), self(x))`.
    pub fn combine_with_stepfn(
        &self,
        f: &StepFunction,
        combine: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Result<ValueMap> {
        let mut out = ValueMap::new();
        for (cell, fv) in f.pieces() {
            for (r, v) in &self.parts {
                if let Some(meet) = r.meet_region(&Region::Interval(cell.clone()))? {
                    out.push(meet, combine(fv, v));
                }
            }
        }
        Ok(out)
    }

    /// Sum of two maps on the product partition. Regions of distinct maps
    /// must intersect representably (disjoint supports or nested blocks).
    pub fn add(&self, other: &ValueMap) -> Result<ValueMap> {
        let mut out = ValueMap::new();
        for (a, va) in &self.parts {
            for (b, vb) in &other.parts {
                if let Some(meet) = a.meet_region(b)? {
                    out.push(meet, va + vb);
                }
            }
        }
        Ok(out)
    }

    /// Dense step function; budget-guarded.
    pub fn materialize(&self, budget: &Budget) -> Result<StepFunction> {
        let mut pieces: Vec<(DyadicInterval, Rational)> = Vec::new();
        for (r, v) in &self.parts {
            let set = r.materialize(budget)?;
            for cell in set.pieces() {
                pieces.push((cell.clone(), v.clone()));
            }
            if pieces.len() as u128 > budget.max_cells as u128 {
                return Err(Error::budget(
                    "materializing a value map",
                    pieces.len() as u128,
                    budget.max_cells as u128,
                ));
            }
        }
        Ok(StepFunction::from_pieces(pieces))
    }

    /// Value at a cell fine enough to be inside one region.
    pub fn value_on_cell(&self, cell: &DyadicInterval) -> Option<&Rational> {
        for (r, v) in &self.parts {
            if r.contains_cell(cell) {
                return Some(v);
            }
        }
        None
    }
}

/// Measures that can integrate over structural regions.
pub trait RegionMeasure {
    fn mass_of_region(&self, r: &Region) -> Result<Rational>;
}

/// Lebesgue over regions.
pub struct RegionLebesgue;

impl RegionMeasure for RegionLebesgue {
    fn mass_of_region(&self, r: &Region) -> Result<Rational> {
        Ok(r.measure().to_rational())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint as BU;

    fn budget() -> Budget {
        Budget::default()
    }

    fn block(scale: u32, idx: u64, window: u32) -> Arc<FlatBlock> {
        Arc::new(FlatBlock::construct(DyadicInterval::new(scale, idx), window).unwrap())
    }

    #[test]
    fn scatter_measures_match_materialized() {
        let b = block(1, 0, 5);
        let s = ScatterHalf::new(b, -1);
        let mat = s.materialize(&budget()).unwrap();
        assert_eq!(s.measure(), mat.measure());
        for scale in 0..=7u32 {
            for i in 0..(1u64 << scale) {
                let cell = DyadicInterval::new(scale, i);
                assert_eq!(s.measure_within(&cell), mat.measure_within(&cell));
            }
        }
    }

    #[test]
    fn meet_of_nested_blocks_matches_materialized() {
        // A deep block sitting on one piece of a shallow block's minus half.
        let shallow = block(0, 0, 2);
        let minus = ScatterHalf::new(shallow.clone(), -1);
        let piece = minus
            .materialize(&budget())
            .unwrap()
            .pieces()[0]
            .clone();
        let deep = Arc::new(FlatBlock::construct(piece.clone(), 7).unwrap());
        let deep_minus = ScatterHalf::new(deep.clone(), -1);

        let ra = Region::Scatter(minus.clone());
        let rb = Region::Scatter(deep_minus.clone());
        let meet = ra.meet_measure(&rb).unwrap();
        let ma = minus.materialize(&budget()).unwrap();
        let mb = deep_minus.materialize(&budget()).unwrap();
        assert_eq!(meet, ma.intersect(&mb).measure());

        // The plus side of the shallow block misses the deep set entirely.
        let plus = Region::Scatter(ScatterHalf::new(shallow, 1));
        assert!(plus.meet_measure(&rb).unwrap().is_zero());

        // Half rule: a generic deep block over the whole shallow delta.
        let wide_deep = block(0, 0, 8);
        let wd = Region::Scatter(ScatterHalf::new(wide_deep.clone(), 1));
        let meet2 = ra.meet_measure(&wd).unwrap();
        let mwd = ScatterHalf::new(wide_deep, 1).materialize(&budget()).unwrap();
        assert_eq!(meet2, ma.intersect(&mwd).measure());
    }

    #[test]
    fn value_map_norms_match_dense() {
        let b = block(0, 0, 4);
        let arc = b.clone();
        let mut map = ValueMap::new();
        map.push(
            Region::Scatter(ScatterHalf::new(arc.clone(), 1)),
            Rational::new(1.into(), 4.into()),
        );
        map.push(
            Region::Scatter(ScatterHalf::new(arc, -1)),
            Rational::new((-3).into(), 4.into()),
        );
        let f = map.materialize(&budget()).unwrap();
        let dense = crate::norm::lp_pow_exact(&f, 2, &crate::norm::Lebesgue);
        assert_eq!(map.lp_pow(2), dense);
        assert_eq!(
            map.integral(),
            crate::region::tests::signed_integral(&f)
        );
    }

    pub fn signed_integral(f: &StepFunction) -> Rational {
        let mut acc = Rational::zero();
        for (cell, v) in f.pieces() {
            acc += v * cell.length().to_rational();
        }
        acc
    }

    #[test]
    fn combine_with_step_function() {
        let b = block(1, 1, 5);
        let mut map = ValueMap::new();
        map.push(
            Region::Interval(DyadicInterval::new(1, 0u32)),
            Rational::zero(),
        );
        map.push(
            Region::Scatter(ScatterHalf::new(b.clone(), 1)),
            Rational::new(1.into(), 2.into()),
        );
        map.push(
            Region::Scatter(ScatterHalf::new(b, -1)),
            Rational::new((-1).into(), 2.into()),
        );
        let f = StepFunction::from_pieces(vec![
            (DyadicInterval::new(1, 0u32), Rational::new(1.into(), 8.into())),
            (DyadicInterval::new(1, 1u32), Rational::new(3.into(), 8.into())),
        ]);
        let diff = map.combine_with_stepfn(&f, |fv, mv| fv - mv).unwrap();
        let dense_map = diff.materialize(&budget()).unwrap();
        let dense_f = f;
        let dense_m = map.materialize(&budget()).unwrap();
        let expect = StepFunction::sub(&dense_f, &dense_m, &budget()).unwrap();
        assert_eq!(dense_map, expect);
        let _ = BU::from(0u32);
    }
}
