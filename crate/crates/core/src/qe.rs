//! Quantifier elimination and model-based projection.
//!
//! Rational variables are eliminated by Loos-Weispfenning virtual
//! substitution, integer variables by Cooper's method. The model-based
//! variants pick the single disjunct of the full elimination that the given
//! model satisfies.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::logic::{lia_normalize, normalize_for, Bound, Formula, LinTerm, LogicError, Model, Sort, Subst, Var};
use crate::num::{lcm, modulo, rat_from, Integer, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QeError {
    #[error("variable `{0}` cannot be eliminated by this method")]
    WrongMode(String),
    #[error("model does not satisfy the matrix")]
    ModelMismatch,
    #[error("coefficient of `{0}` is not ±1")]
    NotNormalized(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Full elimination or model-guided projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Mbp,
    Qe,
}

/// The test points of a matrix with respect to one variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Shape {
    /// Terms `e` of equalities `x = e`, including those implied by
    /// non-strict rational bounds.
    pub equalities: BTreeSet<LinTerm>,
    /// Terms `l` of lower bounds `l < x` (or `l <= x`).
    pub lowers: BTreeSet<LinTerm>,
    /// Least common multiple of the divisors of literals mentioning `x`.
    pub modulus: Integer,
}

impl Shape {
    /// Upper bound on the number of distinct projections of one variable.
    pub fn image_bound(&self) -> usize {
        let d: usize = self.modulus.clone().try_into().unwrap_or(usize::MAX);
        self.equalities.len() + d.saturating_mul(self.lowers.len()) + d
    }
}

fn collect_shape(x: &Var, f: &Formula) -> Result<Shape, QeError> {
    let mut shape = Shape { modulus: Integer::one(), ..Shape::default() };
    let rational = x.sort() == Sort::Rat;
    for l in f.literals() {
        match normalize_for(x, &l).map_err(map_norm)? {
            Bound::Free => {}
            Bound::Eq(e) => {
                shape.equalities.insert(e);
            }
            Bound::Lower { term, strict } => {
                if rational && !strict {
                    shape.equalities.insert(term.clone());
                }
                shape.lowers.insert(term);
            }
            Bound::Upper { term, strict } => {
                if rational && !strict {
                    shape.equalities.insert(term);
                }
            }
            Bound::Div { d, .. } => shape.modulus = lcm(&shape.modulus, &d),
        }
    }
    Ok(shape)
}

fn map_norm(e: LogicError) -> QeError {
    match e {
        LogicError::NotNormalized(v) => QeError::NotNormalized(v),
        LogicError::WrongSort(v) => QeError::WrongMode(v),
        other => QeError::Logic(other),
    }
}

fn check_sort(x: &Var, f: &Formula, sort: Sort) -> Result<(), QeError> {
    if x.sort() != sort {
        return Err(QeError::WrongMode(x.name().into()));
    }
    if !f.is_call_free() {
        return Err(QeError::Logic(LogicError::CallInEval));
    }
    if sort == Sort::Int {
        for l in f.literals() {
            if l.contains(x) && l.vars().iter().any(|v| v.sort() != Sort::Int) {
                return Err(QeError::WrongMode(x.name().into()));
            }
        }
    }
    Ok(())
}

/// `f[x := t]`.
fn at_term(x: &Var, f: &Formula, t: &LinTerm) -> Formula {
    let mut s = Subst::new();
    s.bind_term(x, t.clone());
    f.subst(&s)
}

/// `f[l + ε]` for a rational variable.
fn at_epsilon(x: &Var, f: &Formula, l: &LinTerm) -> Result<Formula, QeError> {
    let mut err = None;
    let out = f.map_literals(&mut |lit| match normalize_for(x, lit) {
        Ok(Bound::Free) => Formula::Lit(lit.clone()),
        Ok(Bound::Eq(_)) => Formula::False,
        Ok(Bound::Lower { term, .. }) => Formula::le(&term, l),
        Ok(Bound::Upper { term, .. }) => Formula::lt(l, &term),
        Ok(Bound::Div { .. }) => {
            err = Some(QeError::WrongMode(x.name().into()));
            Formula::False
        }
        Err(e) => {
            err = Some(map_norm(e));
            Formula::False
        }
    });
    err.map_or(Ok(out), Err)
}

/// `f[-∞]`; in integer mode divisibility literals take `x := i`.
fn at_minus_infinity(x: &Var, f: &Formula, i: Option<&Integer>) -> Result<Formula, QeError> {
    let mut err = None;
    let out = f.map_literals(&mut |lit| match normalize_for(x, lit) {
        Ok(Bound::Free) => Formula::Lit(lit.clone()),
        Ok(Bound::Eq(_) | Bound::Lower { .. }) => Formula::False,
        Ok(Bound::Upper { .. }) => Formula::True,
        Ok(Bound::Div { .. }) => match i {
            Some(i) => at_term(x, &Formula::Lit(lit.clone()), &LinTerm::constant(rat_from(i))),
            None => {
                err = Some(QeError::WrongMode(x.name().into()));
                Formula::False
            }
        },
        Err(e) => {
            err = Some(map_norm(e));
            Formula::False
        }
    });
    err.map_or(Ok(out), Err)
}

/// `∃x. f` for a rational `x`.
pub fn lw_qe(x: &Var, f: &Formula) -> Result<Formula, QeError> {
    check_sort(x, f, Sort::Rat)?;
    if !f.mentions(x) {
        return Ok(f.clone());
    }
    let shape = collect_shape(x, f)?;
    let mut parts = Vec::new();
    for e in &shape.equalities {
        parts.push(at_term(x, f, e));
    }
    for l in &shape.lowers {
        parts.push(at_epsilon(x, f, l)?);
    }
    parts.push(at_minus_infinity(x, f, None)?);
    Ok(Formula::or(parts))
}

fn require_model(f: &Formula, m: &Model) -> Result<(), QeError> {
    if m.eval(f)? {
        Ok(())
    } else {
        Err(QeError::ModelMismatch)
    }
}

/// The greatest-valued term among `terms` strictly below `value` in `m`,
/// ties broken by the term order.
fn greatest_below(terms: &BTreeSet<LinTerm>, m: &Model, value: &Rational) -> Result<Option<LinTerm>, QeError> {
    let mut best: Option<(Rational, &LinTerm)> = None;
    for t in terms {
        let v = m.eval_term(t)?;
        if v < *value && best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, t));
        }
    }
    Ok(best.map(|(_, t)| t.clone()))
}

fn equality_in_model(terms: &BTreeSet<LinTerm>, m: &Model, value: &Rational) -> Result<Option<LinTerm>, QeError> {
    for t in terms {
        if m.eval_term(t)? == *value {
            return Ok(Some(t.clone()));
        }
    }
    Ok(None)
}

/// Model-based projection of a rational `x`: the disjunct of `lw_qe` that
/// `m` satisfies.
pub fn lra_proj(x: &Var, f: &Formula, m: &Model) -> Result<Formula, QeError> {
    check_sort(x, f, Sort::Rat)?;
    require_model(f, m)?;
    if !f.mentions(x) {
        return Ok(f.clone());
    }
    let shape = collect_shape(x, f)?;
    let value = m.num(x)?.clone();
    let out = if let Some(e) = equality_in_model(&shape.equalities, m, &value)? {
        at_term(x, f, &e)
    } else if let Some(l) = greatest_below(&shape.lowers, m, &value)? {
        at_epsilon(x, f, &l)?
    } else {
        at_minus_infinity(x, f, None)?
    };
    debug_assert_eq!(m.eval(&out), Ok(true));
    Ok(out)
}

/// `∃x. f` for an integer `x`.
pub fn cooper_qe(x: &Var, f: &Formula) -> Result<Formula, QeError> {
    check_sort(x, f, Sort::Int)?;
    if !f.mentions(x) {
        return Ok(f.clone());
    }
    let (g, xp, _) = lia_normalize(x, f);
    let shape = collect_shape(&xp, &g)?;
    let mut parts = Vec::new();
    for e in &shape.equalities {
        parts.push(at_term(&xp, &g, e));
    }
    let mut i = Integer::zero();
    while i < shape.modulus {
        for l in &shape.lowers {
            parts.push(at_term(&xp, &g, &(l + &LinTerm::constant(rat_from(&(&i + 1u32))))));
        }
        parts.push(at_minus_infinity(&xp, &g, Some(&i))?);
        i += 1u32;
    }
    Ok(Formula::or(parts))
}

/// Model-based projection of an integer `x`: the disjunct of `cooper_qe`
/// selected by `m`.
pub fn lia_proj(x: &Var, f: &Formula, m: &Model) -> Result<Formula, QeError> {
    check_sort(x, f, Sort::Int)?;
    require_model(f, m)?;
    if !f.mentions(x) {
        return Ok(f.clone());
    }
    let (g, xp, dp) = lia_normalize(x, f);
    let mut m2 = m.clone();
    let value = m.num(x)? * rat_from(&dp);
    m2.set_num(&xp, value.clone());
    let shape = collect_shape(&xp, &g)?;
    let d = rat_from(&shape.modulus);
    let out = if let Some(e) = equality_in_model(&shape.equalities, &m2, &value)? {
        at_term(&xp, &g, &e)
    } else if let Some(l) = greatest_below(&shape.lowers, &m2, &value)? {
        let below = &value - m2.eval_term(&l)? - Rational::one();
        let i = modulo(&below.to_integer(), &d.to_integer());
        at_term(&xp, &g, &(&l + &LinTerm::constant(rat_from(&(i + 1u32)))))
    } else {
        let i = modulo(&value.to_integer(), &d.to_integer());
        at_minus_infinity(&xp, &g, Some(&i))?
    };
    debug_assert_eq!(m.eval(&out), Ok(true));
    Ok(out)
}

/// Test points of `f` for `x`; integer variables are normalized first.
pub fn shape(x: &Var, f: &Formula) -> Result<Shape, QeError> {
    match x.sort() {
        Sort::Int => {
            let (g, xp, _) = lia_normalize(x, f);
            collect_shape(&xp, &g)
        }
        _ => collect_shape(x, f),
    }
}

/// Eliminates `vars` from `f`, last variable first. `Mbp` needs a model of
/// `f` and returns a formula it satisfies that implies `∃vars. f`; `Qe`
/// returns a formula equivalent to `∃vars. f`.
pub fn project(vars: &[Var], f: &Formula, model: Option<&Model>, strategy: Strategy) -> Result<Formula, QeError> {
    if strategy == Strategy::Mbp {
        let m = model.ok_or(QeError::ModelMismatch)?;
        require_model(f, m)?;
    }
    let mut out = f.clone();
    for x in vars.iter().rev() {
        if !out.mentions(x) {
            continue;
        }
        out = match (x.sort(), strategy) {
            (Sort::Bool, Strategy::Mbp) => {
                let m = model.ok_or(QeError::ModelMismatch)?;
                let mut s = Subst::new();
                s.bind_bool(x, Formula::constant(m.boolean(x)?));
                out.subst(&s)
            }
            (Sort::Bool, Strategy::Qe) => {
                let mut t = Subst::new();
                t.bind_bool(x, Formula::True);
                let mut e = Subst::new();
                e.bind_bool(x, Formula::False);
                Formula::or([out.subst(&t), out.subst(&e)])
            }
            (Sort::Rat, Strategy::Mbp) => lra_proj(x, &out, model.ok_or(QeError::ModelMismatch)?)?,
            (Sort::Rat, Strategy::Qe) => lw_qe(x, &out)?,
            (Sort::Int, Strategy::Mbp) => lia_proj(x, &out, model.ok_or(QeError::ModelMismatch)?)?,
            (Sort::Int, Strategy::Qe) => cooper_qe(x, &out)?,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::num::{int, rat};

    fn rv(n: &str) -> Var {
        Var::new(n, Sort::Rat)
    }

    fn iv(n: &str) -> Var {
        Var::new(n, Sort::Int)
    }

    fn t(v: &Var) -> LinTerm {
        LinTerm::var(v)
    }

    #[test]
    fn lw_density() {
        let (x, y, z) = (rv("x"), rv("y"), rv("z"));
        let f = Formula::and([Formula::lt(&t(&y), &t(&x)), Formula::lt(&t(&x), &t(&z))]);
        let g = lw_qe(&x, &f).unwrap();
        assert!(Kernel::default().equivalent(&g, &Formula::lt(&t(&y), &t(&z))).unwrap());
        assert_eq!(lw_qe(&x, &Formula::eq(&t(&x), &t(&y))).unwrap(), Formula::True);
    }

    #[test]
    fn lra_proj_picks_branch_by_model() {
        // (x = e ∧ p) ∨ (l < x ∧ x < u) ∨ (x < u ∧ q)
        let (x, e, l, u) = (rv("x"), rv("e"), rv("l"), rv("u"));
        let p = Var::new("p", Sort::Bool);
        let q = Var::new("q", Sort::Bool);
        let f = Formula::or([
            Formula::and([Formula::eq(&t(&x), &t(&e)), Formula::bool_var(&p, true)]),
            Formula::and([Formula::lt(&t(&l), &t(&x)), Formula::lt(&t(&x), &t(&u))]),
            Formula::and([Formula::lt(&t(&x), &t(&u)), Formula::bool_var(&q, true)]),
        ]);
        let mut m = Model::new();
        for (v, k) in [(&x, 5), (&e, 7), (&l, 3), (&u, 9)] {
            m.set_num(v, rat(k));
        }
        m.set_bool(&p, false);
        m.set_bool(&q, true);
        let g = lra_proj(&x, &f, &m).unwrap();
        let lu = Formula::lt(&t(&l), &t(&u));
        let expected = Formula::or([lu.clone(), Formula::and([lu, Formula::bool_var(&q, true)])]);
        assert!(Kernel::default().equivalent(&g, &expected).unwrap());
        m.set_num(&x, rat(1));
        let g = lra_proj(&x, &f, &m).unwrap();
        assert_eq!(g, Formula::bool_var(&q, true));
    }

    #[test]
    fn cooper_examples() {
        let (x, y) = (iv("x"), iv("y"));
        let f = Formula::and([
            Formula::lt(&LinTerm::zero(), &t(&x)),
            Formula::lt(&t(&x), &LinTerm::int(3)),
            Formula::divides(int(2), t(&x)),
        ]);
        assert!(Kernel::default().equivalent(&cooper_qe(&x, &f).unwrap(), &Formula::True).unwrap());
        let g = Formula::and([Formula::lt(&t(&y), &t(&x)), Formula::lt(&t(&x), &(&t(&y) + &LinTerm::int(1)))]);
        assert!(Kernel::default().is_sat(&cooper_qe(&x, &g).unwrap()).unwrap().is_none());
        let h = Formula::eq(&t(&x), &(&t(&y) + &LinTerm::int(2)));
        assert_eq!(cooper_qe(&x, &h).unwrap(), Formula::True);
    }

    #[test]
    fn lia_proj_lower_bound_residue() {
        let (x, l) = (iv("x"), iv("l"));
        let f = Formula::and([Formula::lt(&t(&l), &t(&x)), Formula::divides(int(2), t(&x))]);
        let mut m = Model::new();
        m.set_num(&x, rat(4));
        m.set_num(&l, rat(3));
        let g = lia_proj(&x, &f, &m).unwrap();
        assert_eq!(g, Formula::divides(int(2), &t(&l) + &LinTerm::int(1)));
        let mut m = Model::new();
        m.set_num(&x, rat(6));
        assert_eq!(lia_proj(&x, &Formula::divides(int(2), t(&x)), &m).unwrap(), Formula::True);
    }

    #[test]
    fn boolean_projection() {
        let p = Var::new("p", Sort::Bool);
        let q = Var::new("q", Sort::Bool);
        let (fp, fq) = (Formula::bool_var(&p, true), Formula::bool_var(&q, true));
        let mut m = Model::new();
        m.set_bool(&p, true);
        m.set_bool(&q, false);
        let f = Formula::or([fp.clone(), fq.clone()]);
        assert_eq!(project(core::slice::from_ref(&p), &f, Some(&m), Strategy::Mbp).unwrap(), Formula::True);
        let g = Formula::and([fp, fq.clone()]);
        assert_eq!(project(&[p], &g, None, Strategy::Qe).unwrap(), fq);
    }

    #[test]
    fn wrong_mode_is_reported() {
        let x = iv("x");
        let f = Formula::lt(&t(&x), &LinTerm::zero());
        assert!(matches!(lw_qe(&x, &f), Err(QeError::WrongMode(_))));
    }
}
