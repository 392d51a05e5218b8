use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};

use super::formula::Formula;
use super::literal::{CmpOp, Literal};
use super::term::{LinTerm, Sort, Var};
use super::LogicError;
use crate::num::{lcm, rat_from, Integer, Rational};

/// How a literal constrains a variable `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    /// `x` does not occur.
    Free,
    /// `term < x`, or `term <= x` when not strict.
    Lower { term: LinTerm, strict: bool },
    /// `x < term`, or `x <= term` when not strict.
    Upper { term: LinTerm, strict: bool },
    /// `x = term`.
    Eq(LinTerm),
    /// `d | x + w` (or `d | -x + w` when `negated_x`), possibly negated.
    Div { d: Integer, positive: bool, negated_x: bool, w: LinTerm },
}

/// Solves `lit` for `x`. Over the rationals this divides by the coefficient
/// of `x`; over the integers that coefficient must be ±1 and non-strict
/// bounds are made strict (`x <= u` is `x < u + 1`).
pub fn normalize_for(x: &Var, lit: &Literal) -> Result<Bound, LogicError> {
    if !lit.contains(x) {
        return Ok(Bound::Free);
    }
    let integer = x.sort() == Sort::Int;
    match lit {
        Literal::Bool { .. } => Err(LogicError::WrongSort(x.name().into())),
        Literal::Cmp { op, term } => {
            let c = term.coeff(x);
            let rest = term.without(x);
            if integer && !(c.is_one() || (-&c).is_one()) {
                return Err(LogicError::NotNormalized(x.name().into()));
            }
            // c*x + rest op 0  <=>  x op' -rest/c
            let pivot = rest.scale(&(-Rational::one() / &c));
            let positive = c.is_positive();
            Ok(match op {
                CmpOp::Eq => Bound::Eq(pivot),
                CmpOp::Lt | CmpOp::Le => {
                    let strict = *op == CmpOp::Lt;
                    if integer && !strict {
                        if positive {
                            Bound::Upper { term: &pivot + &LinTerm::int(1), strict: true }
                        } else {
                            Bound::Lower { term: &pivot - &LinTerm::int(1), strict: true }
                        }
                    } else if positive {
                        Bound::Upper { term: pivot, strict }
                    } else {
                        Bound::Lower { term: pivot, strict }
                    }
                }
            })
        }
        Literal::Div { d, term, positive } => {
            let c = term.coeff(x);
            let w = term.without(x);
            if c.is_one() {
                Ok(Bound::Div { d: d.clone(), positive: *positive, negated_x: false, w })
            } else if c == rat_from(&(d - Integer::one())) || (-&c).is_one() {
                // (d-1)x + w ≡ -x + w (mod d)
                Ok(Bound::Div { d: d.clone(), positive: *positive, negated_x: true, w })
            } else {
                Err(LogicError::NotNormalized(x.name().into()))
            }
        }
    }
}

/// Rescales every literal of `f` mentioning the integer variable `x` so that
/// it mentions `x' = D'·x` with coefficient ±1, and conjoins `D' | x'`.
///
/// Returns the new formula, the variable standing for `D'·x`, and `D'`.
/// When `D' = 1` the formula is returned unchanged with `x` itself.
pub fn lia_normalize(x: &Var, f: &Formula) -> (Formula, Var, Integer) {
    let mut d = Integer::one();
    for l in f.literals() {
        if let Some(t) = l.term() {
            let c = t.coeff(x);
            if !c.is_zero() {
                debug_assert!(c.is_integer());
                d = lcm(&d, &c.numer().abs());
            }
        }
    }
    if d.is_one() {
        return (f.clone(), x.clone(), d);
    }
    let xp = Var::fresh(x.name(), Sort::Int, &f.free_vars());
    let dr = rat_from(&d);
    let body = f.map_literals(&mut |l| {
        if !l.contains(x) {
            return Formula::Lit(l.clone());
        }
        match l {
            Literal::Cmp { op, term } => {
                let c = term.coeff(x);
                let k = &dr / c.abs();
                let mut t = term.without(x).scale(&k);
                t.add_coeff(&xp, &c.signum());
                Literal::cmp(*op, t)
            }
            Literal::Div { d: m, term, positive } => {
                let c = term.coeff(x);
                let k = &dr / &c;
                let mut t = term.without(x).scale(&k);
                t.add_coeff(&xp, &Rational::one());
                Literal::divides(m * k.to_integer().abs(), t, *positive)
            }
            Literal::Bool { .. } => Formula::Lit(l.clone()),
        }
    });
    let out = Formula::and([body, Literal::divides(d.clone(), LinTerm::var(&xp), true)]);
    (out, xp, d)
}

/// Whether `d` divides the integer `v`.
pub fn divides_value(d: &Integer, v: &Integer) -> bool {
    v.mod_floor(d).is_zero()
}
