//! Incremental simplex over δ-rationals in the style of Dutertre and
//! de Moura: a fixed tableau, bound assertion with backtracking, Bland's
//! rule for pivot selection and Farkas explanations for conflicts.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::logic::CmpOp;
use crate::num::Rational;

/// `r + d·δ` for an infinitesimal δ > 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct DeltaRat {
    pub r: Rational,
    pub d: Rational,
}

impl DeltaRat {
    pub fn new(r: Rational, d: Rational) -> DeltaRat {
        DeltaRat { r, d }
    }

    pub fn exact(r: Rational) -> DeltaRat {
        DeltaRat { r, d: Rational::zero() }
    }

    fn zero() -> DeltaRat {
        DeltaRat::exact(Rational::zero())
    }

    fn add_scaled(&mut self, other: &DeltaRat, k: &Rational) {
        self.r += &other.r * k;
        self.d += &other.d * k;
    }

    fn sub(&self, other: &DeltaRat) -> DeltaRat {
        DeltaRat { r: &self.r - &other.r, d: &self.d - &other.d }
    }

    fn scale(&self, k: &Rational) -> DeltaRat {
        DeltaRat { r: &self.r * k, d: &self.d * k }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Bound {
    pub value: DeltaRat,
    pub tag: Option<usize>,
}

/// One bound used in a conflict: `tag`, whether it was the upper bound, and
/// its non-negative multiplier.
#[derive(Clone, Debug)]
pub(crate) struct Explanation {
    pub tag: Option<usize>,
    pub upper: bool,
    pub mult: Rational,
}

#[derive(Clone, Debug)]
struct Row {
    basic: usize,
    coeffs: BTreeMap<usize, Rational>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Simplex {
    values: Vec<DeltaRat>,
    lower: Vec<Option<Bound>>,
    upper: Vec<Option<Bound>>,
    row_of: Vec<Option<usize>>,
    rows: Vec<Row>,
    trail: Vec<(usize, bool, Option<Bound>)>,
    marks: Vec<usize>,
    pub pivots: u64,
}

impl Simplex {
    pub fn new() -> Simplex {
        Simplex::default()
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn new_var(&mut self) -> usize {
        self.values.push(DeltaRat::zero());
        self.lower.push(None);
        self.upper.push(None);
        self.row_of.push(None);
        self.values.len() - 1
    }

    /// A new basic variable equal to `sum(c * x)`.
    pub fn add_row(&mut self, combination: &[(usize, Rational)]) -> usize {
        let s = self.new_var();
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        for (x, c) in combination {
            match self.row_of[*x] {
                Some(r) => {
                    for (y, a) in &self.rows[r].coeffs {
                        add_entry(&mut coeffs, *y, a * c);
                    }
                }
                None => add_entry(&mut coeffs, *x, c.clone()),
            }
        }
        let mut value = DeltaRat::zero();
        for (y, a) in &coeffs {
            value.add_scaled(&self.values[*y], a);
        }
        self.values[s] = value;
        self.row_of[s] = Some(self.rows.len());
        self.rows.push(Row { basic: s, coeffs });
        s
    }

    pub fn push(&mut self) {
        self.marks.push(self.trail.len());
    }

    pub fn pop(&mut self) {
        let mark = self.marks.pop().unwrap_or(0);
        while self.trail.len() > mark {
            let Some((x, is_upper, old)) = self.trail.pop() else { break };
            if is_upper {
                self.upper[x] = old;
            } else {
                self.lower[x] = old;
            }
        }
    }

    pub fn assert_upper(&mut self, x: usize, value: DeltaRat, tag: Option<usize>) -> Result<(), Vec<Explanation>> {
        if self.upper[x].as_ref().is_some_and(|b| b.value <= value) {
            return Ok(());
        }
        if let Some(l) = &self.lower[x] {
            if value < l.value {
                return Err(alloc::vec![
                    Explanation { tag: l.tag, upper: false, mult: Rational::one() },
                    Explanation { tag, upper: true, mult: Rational::one() },
                ]);
            }
        }
        let old = self.upper[x].replace(Bound { value: value.clone(), tag });
        self.trail.push((x, true, old));
        if self.row_of[x].is_none() && self.values[x] > value {
            self.update(x, value);
        }
        Ok(())
    }

    pub fn assert_lower(&mut self, x: usize, value: DeltaRat, tag: Option<usize>) -> Result<(), Vec<Explanation>> {
        if self.lower[x].as_ref().is_some_and(|b| b.value >= value) {
            return Ok(());
        }
        if let Some(u) = &self.upper[x] {
            if value > u.value {
                return Err(alloc::vec![
                    Explanation { tag, upper: false, mult: Rational::one() },
                    Explanation { tag: u.tag, upper: true, mult: Rational::one() },
                ]);
            }
        }
        let old = self.lower[x].replace(Bound { value: value.clone(), tag });
        self.trail.push((x, false, old));
        if self.row_of[x].is_none() && self.values[x] < value {
            self.update(x, value);
        }
        Ok(())
    }

    fn update(&mut self, x: usize, value: DeltaRat) {
        let delta = value.sub(&self.values[x]);
        for row in &self.rows {
            if let Some(a) = row.coeffs.get(&x) {
                let b = row.basic;
                let inc = delta.scale(a);
                self.values[b].add_scaled(&inc, &Rational::one());
            }
        }
        self.values[x] = value;
    }

    fn below_lower(&self, x: usize) -> bool {
        self.lower[x].as_ref().is_some_and(|b| self.values[x] < b.value)
    }

    fn above_upper(&self, x: usize) -> bool {
        self.upper[x].as_ref().is_some_and(|b| self.values[x] > b.value)
    }

    fn can_increase(&self, x: usize) -> bool {
        self.upper[x].as_ref().is_none_or(|b| self.values[x] < b.value)
    }

    fn can_decrease(&self, x: usize) -> bool {
        self.lower[x].as_ref().is_none_or(|b| self.values[x] > b.value)
    }

    pub fn check(&mut self) -> Result<(), Vec<Explanation>> {
        loop {
            let mut violated: Option<usize> = None;
            for row in &self.rows {
                let b = row.basic;
                if (self.below_lower(b) || self.above_upper(b)) && violated.is_none_or(|v| b < v) {
                    violated = Some(b);
                }
            }
            let Some(b) = violated else { return Ok(()) };
            let r = self.row_of[b].expect("violated variable is basic");
            let increase = self.below_lower(b);
            let mut entering = None;
            for (x, a) in &self.rows[r].coeffs {
                let ok = if increase == a.is_positive() { self.can_increase(*x) } else { self.can_decrease(*x) };
                if ok {
                    entering = Some(*x);
                    break;
                }
            }
            let Some(x) = entering else {
                return Err(self.explain(r, increase));
            };
            let target = if increase {
                self.lower[b].as_ref().map(|l| l.value.clone())
            } else {
                self.upper[b].as_ref().map(|u| u.value.clone())
            };
            let target = target.expect("bound exists");
            self.pivot_and_update(r, x, target);
        }
    }

    fn explain(&self, r: usize, increase: bool) -> Vec<Explanation> {
        let row = &self.rows[r];
        let b = row.basic;
        let mut out = Vec::new();
        if increase {
            let l = self.lower[b].as_ref().expect("violated lower bound");
            out.push(Explanation { tag: l.tag, upper: false, mult: Rational::one() });
            for (x, a) in &row.coeffs {
                if a.is_positive() {
                    let u = self.upper[*x].as_ref().expect("blocked at upper bound");
                    out.push(Explanation { tag: u.tag, upper: true, mult: a.clone() });
                } else {
                    let l = self.lower[*x].as_ref().expect("blocked at lower bound");
                    out.push(Explanation { tag: l.tag, upper: false, mult: -a });
                }
            }
        } else {
            let u = self.upper[b].as_ref().expect("violated upper bound");
            out.push(Explanation { tag: u.tag, upper: true, mult: Rational::one() });
            for (x, a) in &row.coeffs {
                if a.is_positive() {
                    let l = self.lower[*x].as_ref().expect("blocked at lower bound");
                    out.push(Explanation { tag: l.tag, upper: false, mult: a.clone() });
                } else {
                    let u = self.upper[*x].as_ref().expect("blocked at upper bound");
                    out.push(Explanation { tag: u.tag, upper: true, mult: -a });
                }
            }
        }
        out
    }

    fn pivot_and_update(&mut self, r: usize, x: usize, target: DeltaRat) {
        let b = self.rows[r].basic;
        let a = self.rows[r].coeffs[&x].clone();
        let theta = target.sub(&self.values[b]).scale(&(Rational::one() / &a));
        self.values[b] = target;
        self.values[x].add_scaled(&theta, &Rational::one());
        for (i, row) in self.rows.iter().enumerate() {
            if i == r {
                continue;
            }
            if let Some(c) = row.coeffs.get(&x) {
                let basic = row.basic;
                let inc = theta.scale(c);
                self.values[basic].add_scaled(&inc, &Rational::one());
            }
        }
        self.pivot(r, x);
    }

    /// Makes `x` basic in row `r`, and the row's basic variable non-basic.
    fn pivot(&mut self, r: usize, x: usize) {
        self.pivots += 1;
        let b = self.rows[r].basic;
        let mut coeffs = core::mem::take(&mut self.rows[r].coeffs);
        let a = coeffs.remove(&x).expect("entering variable in row");
        let inv = Rational::one() / &a;
        // b = a x + rest  =>  x = b/a - rest/a
        let mut new_coeffs: BTreeMap<usize, Rational> = coeffs.into_iter().map(|(y, c)| (y, -c * &inv)).collect();
        new_coeffs.insert(b, inv);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            if let Some(c) = row.coeffs.remove(&x) {
                for (y, d) in &new_coeffs {
                    add_entry(&mut row.coeffs, *y, &c * d);
                }
            }
        }
        self.rows[r] = Row { basic: x, coeffs: new_coeffs };
        self.row_of[b] = None;
        self.row_of[x] = Some(r);
    }

    /// A concrete δ small enough that every bound still holds.
    pub fn concrete_delta(&self) -> Rational {
        let mut delta = Rational::one();
        for x in 0..self.values.len() {
            let v = &self.values[x];
            if let Some(l) = &self.lower[x] {
                // l.r + l.d δ <= v.r + v.d δ
                if l.value.r < v.r && l.value.d > v.d {
                    let cand = (&v.r - &l.value.r) / (&l.value.d - &v.d);
                    if cand < delta {
                        delta = cand;
                    }
                }
            }
            if let Some(u) = &self.upper[x] {
                if v.r < u.value.r && v.d > u.value.d {
                    let cand = (&u.value.r - &v.r) / (&v.d - &u.value.d);
                    if cand < delta {
                        delta = cand;
                    }
                }
            }
        }
        delta
    }

    pub fn concrete(&self, x: usize, delta: &Rational) -> Rational {
        let v = &self.values[x];
        &v.r + &v.d * delta
    }
}

/// Bounds on `s` implied by `a*s + k op 0`, as `(is_upper, value)`.
pub(crate) fn cmp_bounds(op: CmpOp, a: &Rational, k: &Rational) -> Vec<(bool, DeltaRat)> {
    let v = -k / a;
    let upper = a.is_positive();
    match op {
        CmpOp::Le => alloc::vec![(upper, DeltaRat::exact(v))],
        CmpOp::Lt => {
            let d = if upper { -Rational::one() } else { Rational::one() };
            alloc::vec![(upper, DeltaRat::new(v, d))]
        }
        CmpOp::Eq => alloc::vec![(true, DeltaRat::exact(v.clone())), (false, DeltaRat::exact(v))],
    }
}

fn add_entry(map: &mut BTreeMap<usize, Rational>, k: usize, v: Rational) {
    if v.is_zero() {
        return;
    }
    let e = map.entry(k).or_insert_with(Rational::zero);
    *e += v;
    if e.is_zero() {
        map.remove(&k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn infeasible_pair_is_explained() {
        let mut s = Simplex::new();
        let x = s.new_var();
        let y = s.new_var();
        let sum = s.add_row(&[(x, rat(1)), (y, rat(1))]);
        s.assert_lower(x, DeltaRat::exact(rat(2)), Some(0)).unwrap();
        s.assert_lower(y, DeltaRat::exact(rat(2)), Some(1)).unwrap();
        s.assert_upper(sum, DeltaRat::exact(rat(3)), Some(2)).unwrap();
        let expl = s.check().unwrap_err();
        let mut tags: Vec<_> = expl.iter().map(|e| e.tag).collect();
        tags.sort();
        assert_eq!(tags, alloc::vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn feasible_after_pivot_and_backtrack() {
        let mut s = Simplex::new();
        let x = s.new_var();
        let y = s.new_var();
        let d = s.add_row(&[(x, rat(1)), (y, rat(-1))]);
        s.push();
        s.assert_lower(d, DeltaRat::new(rat(1), rat(1)), Some(0)).unwrap();
        s.assert_upper(x, DeltaRat::exact(rat(0)), Some(1)).unwrap();
        assert!(s.check().is_ok());
        let delta = s.concrete_delta();
        let (vx, vy) = (s.concrete(x, &delta), s.concrete(y, &delta));
        assert!(vx - vy > rat(1));
        s.assert_lower(y, DeltaRat::exact(rat(0)), Some(2)).unwrap();
        assert!(s.check().is_err());
        s.pop();
        assert!(s.check().is_ok());
    }
}
