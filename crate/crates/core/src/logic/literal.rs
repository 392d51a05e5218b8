use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;

use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};

use super::formula::{Formula, Subst};
use super::term::{fmt_rational, LinTerm, Var};
use crate::num::{ceil, gcd, lcm, rat_from, Integer, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        }
    }

    fn holds(self, lhs: &Rational) -> bool {
        match self {
            CmpOp::Lt => lhs.is_negative(),
            CmpOp::Le => !lhs.is_positive(),
            CmpOp::Eq => lhs.is_zero(),
        }
    }
}

/// An atom with polarity. Arithmetic comparisons are always stored as
/// `term op 0` in canonical form, so their negations are again
/// comparisons and need no polarity flag.
///
/// Canonical form: integral coefficients; for all-integer terms strict
/// comparisons become `t + 1 <= 0` and coefficients are divided by their
/// gcd (rounding the constant up); equalities have a positive leading
/// coefficient. Divisibility literals keep coefficients reduced modulo `d`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Bool { var: Var, positive: bool },
    Cmp { op: CmpOp, term: LinTerm },
    Div { d: Integer, term: LinTerm, positive: bool },
}

fn denominators_lcm(t: &LinTerm) -> Integer {
    let mut l = t.constant_part().denom().clone();
    for c in t.coeffs().values() {
        l = lcm(&l, c.denom());
    }
    l
}

fn coeff_gcd(t: &LinTerm) -> Integer {
    let mut g = Integer::zero();
    for c in t.coeffs().values() {
        g = gcd(&g, c.numer());
    }
    g
}

fn leading_negative(t: &LinTerm) -> bool {
    t.leading().is_some_and(|(_, c)| c.is_negative())
}

impl Literal {
    /// Canonical `term op 0`; folds to a constant when possible.
    pub fn cmp(op: CmpOp, term: LinTerm) -> Formula {
        if term.is_constant() {
            return Formula::constant(op.holds(term.constant_part()));
        }
        let mut t = term.scale(&rat_from(&denominators_lcm(&term)));
        if t.all_int() {
            let g = rat_from(&coeff_gcd(&t));
            match op {
                CmpOp::Lt | CmpOp::Le => {
                    if op == CmpOp::Lt {
                        t.add_constant(&Rational::one());
                    }
                    let k = t.constant_part().clone();
                    let mut out = t.without_constant().scale(&(Rational::one() / &g));
                    out.add_constant(&rat_from(&ceil(&(k / &g))));
                    Formula::Lit(Literal::Cmp { op: CmpOp::Le, term: out })
                }
                CmpOp::Eq => {
                    if !(t.constant_part() / &g).is_integer() {
                        return Formula::False;
                    }
                    let mut out = t.scale(&(Rational::one() / &g));
                    if leading_negative(&out) {
                        out = -out;
                    }
                    Formula::Lit(Literal::Cmp { op, term: out })
                }
            }
        } else {
            let g = rat_from(&gcd(&coeff_gcd(&t), t.constant_part().numer()));
            t = t.scale(&(Rational::one() / g));
            if op == CmpOp::Eq && leading_negative(&t) {
                t = -t;
            }
            Formula::Lit(Literal::Cmp { op, term: t })
        }
    }

    /// Canonical `d | term` (or its negation). `d` must be positive and the
    /// term integral over integer variables.
    pub fn divides(d: Integer, term: LinTerm, positive: bool) -> Formula {
        assert!(d.is_positive(), "divisor must be positive");
        assert!(term.all_int() && term.is_integral(), "divisibility needs an integral integer term");
        let reduce = |c: &Rational| rat_from(&c.numer().mod_floor(&d));
        let mut t = LinTerm::constant(reduce(term.constant_part()));
        for (v, c) in term.coeffs() {
            t.add_coeff(v, &reduce(c));
        }
        let mut g = gcd(&d, t.constant_part().numer());
        for c in t.coeffs().values() {
            g = gcd(&g, c.numer());
        }
        let gr = rat_from(&g);
        let d = d / &g;
        let t = t.scale(&(Rational::one() / gr));
        if d.is_one() {
            return Formula::constant(positive);
        }
        if t.is_constant() {
            return Formula::constant(t.constant_part().is_zero() == positive);
        }
        Formula::Lit(Literal::Div { d, term: t, positive })
    }

    pub fn boolean(var: &Var, positive: bool) -> Literal {
        debug_assert!(var.is_bool());
        Literal::Bool { var: var.clone(), positive }
    }

    pub fn negate(&self) -> Formula {
        match self {
            Literal::Bool { var, positive } => Formula::Lit(Literal::Bool { var: var.clone(), positive: !positive }),
            Literal::Cmp { op: CmpOp::Lt, term } => Literal::cmp(CmpOp::Le, -term),
            Literal::Cmp { op: CmpOp::Le, term } => Literal::cmp(CmpOp::Lt, -term),
            Literal::Cmp { op: CmpOp::Eq, term } => {
                Formula::or([Literal::cmp(CmpOp::Lt, term.clone()), Literal::cmp(CmpOp::Lt, -term)])
            }
            Literal::Div { d, term, positive } => Formula::Lit(Literal::Div { d: d.clone(), term: term.clone(), positive: !positive }),
        }
    }

    pub fn is_arith(&self) -> bool {
        !matches!(self, Literal::Bool { .. })
    }

    pub fn term(&self) -> Option<&LinTerm> {
        match self {
            Literal::Bool { .. } => None,
            Literal::Cmp { term, .. } | Literal::Div { term, .. } => Some(term),
        }
    }

    pub fn contains(&self, v: &Var) -> bool {
        match self {
            Literal::Bool { var, .. } => var == v,
            Literal::Cmp { term, .. } | Literal::Div { term, .. } => term.contains(v),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Literal::Bool { var, .. } => {
                out.insert(var.clone());
            }
            Literal::Cmp { term, .. } | Literal::Div { term, .. } => out.extend(term.vars().cloned()),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn subst(&self, s: &Subst) -> Formula {
        match self {
            Literal::Bool { var, positive } => match s.bools.get(var) {
                None => Formula::Lit(self.clone()),
                Some(f) if *positive => f.clone(),
                Some(f) => f.negate(),
            },
            Literal::Cmp { op, term } => {
                if term.vars().any(|v| s.terms.contains_key(v)) {
                    Literal::cmp(*op, term.substitute_all(&s.terms))
                } else {
                    Formula::Lit(self.clone())
                }
            }
            Literal::Div { d, term, positive } => {
                if term.vars().any(|v| s.terms.contains_key(v)) {
                    Literal::divides(d.clone(), term.substitute_all(&s.terms), *positive)
                } else {
                    Formula::Lit(self.clone())
                }
            }
        }
    }

    pub fn sexpr(&self) -> String {
        match self {
            Literal::Bool { var, positive: true } => alloc::format!("{var}"),
            Literal::Bool { var, positive: false } => alloc::format!("(not {var})"),
            Literal::Cmp { op, term } => {
                let (lhs, rhs) = split_sides(term);
                alloc::format!("({} {} {})", op.symbol(), lhs.sexpr(), rhs.sexpr())
            }
            Literal::Div { d, term, positive } => {
                let atom = alloc::format!("(divides {} {})", fmt_rational(&rat_from(d)), term.sexpr());
                if *positive {
                    atom
                } else {
                    alloc::format!("(not {atom})")
                }
            }
        }
    }
}

/// `t op 0` rewritten as `lhs op rhs` with all coefficients positive.
fn split_sides(t: &LinTerm) -> (LinTerm, LinTerm) {
    let mut lhs = LinTerm::zero();
    let mut rhs = LinTerm::constant(-t.constant_part());
    for (v, c) in t.coeffs() {
        if c.is_positive() {
            lhs.add_coeff(v, c);
        } else {
            rhs.add_coeff(v, &-c);
        }
    }
    (lhs, rhs)
}

impl LinTerm {
    pub(crate) fn without_constant(&self) -> LinTerm {
        let mut t = self.clone();
        t.add_constant(&-self.constant_part());
        t
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sexpr())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sexpr())
    }
}
