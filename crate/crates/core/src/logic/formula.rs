use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::literal::{CmpOp, Literal};
use super::term::{LinTerm, Var};
use crate::num::Integer;

/// Index of a procedure in its program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcId(pub usize);

/// A positive call atom `Σ_callee(args)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallAtom {
    pub callee: ProcId,
    pub args: Vec<Var>,
}

/// A formula in negation normal form. Negation only lives inside literals
/// and call atoms only occur positively.
///
/// Build formulas through the smart constructors, which flatten nested
/// connectives, fold constants and drop duplicate children.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Call(CallAtom),
}

/// Simultaneous substitution: arithmetic variables by terms, boolean
/// variables by (call-free) formulas.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    pub terms: BTreeMap<Var, LinTerm>,
    pub bools: BTreeMap<Var, Formula>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    /// A renaming `from[i] -> to[i]`.
    pub fn rename(from: &[Var], to: &[Var]) -> Subst {
        let mut s = Subst::new();
        for (f, t) in from.iter().zip(to) {
            s.bind_var(f, t);
        }
        s
    }

    pub fn bind_var(&mut self, from: &Var, to: &Var) {
        if from.is_bool() {
            self.bools.insert(from.clone(), Formula::Lit(Literal::boolean(to, true)));
        } else {
            self.terms.insert(from.clone(), LinTerm::var(to));
        }
    }

    pub fn bind_term(&mut self, from: &Var, to: LinTerm) {
        self.terms.insert(from.clone(), to);
    }

    pub fn bind_bool(&mut self, from: &Var, to: Formula) {
        self.bools.insert(from.clone(), to);
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.bools.is_empty()
    }

    fn rename_var(&self, v: &Var) -> Var {
        if let Some(t) = self.terms.get(v) {
            match t.leading() {
                Some((w, c)) if t.coeffs().len() == 1 && num_traits::One::is_one(c) && num_traits::Zero::is_zero(t.constant_part()) => {
                    return w.clone();
                }
                _ => panic!("call argument {v} substituted by non-variable term {t}"),
            }
        }
        if let Some(f) = self.bools.get(v) {
            match f {
                Formula::Lit(Literal::Bool { var, positive: true }) => return var.clone(),
                _ => panic!("call argument {v} substituted by non-variable formula"),
            }
        }
        v.clone()
    }
}

impl Formula {
    pub fn constant(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn lit(l: Literal) -> Formula {
        Formula::Lit(l)
    }

    pub fn bool_var(v: &Var, positive: bool) -> Formula {
        Formula::Lit(Literal::boolean(v, positive))
    }

    pub fn call(callee: ProcId, args: Vec<Var>) -> Formula {
        Formula::Call(CallAtom { callee, args })
    }

    pub fn lt(a: &LinTerm, b: &LinTerm) -> Formula {
        Literal::cmp(CmpOp::Lt, a - b)
    }

    pub fn le(a: &LinTerm, b: &LinTerm) -> Formula {
        Literal::cmp(CmpOp::Le, a - b)
    }

    pub fn eq(a: &LinTerm, b: &LinTerm) -> Formula {
        Literal::cmp(CmpOp::Eq, a - b)
    }

    pub fn divides(d: Integer, t: LinTerm) -> Formula {
        Literal::divides(d, t, true)
    }

    /// Equality for either sort: `a = b` on numbers, `a <-> b` on booleans.
    pub fn var_eq(a: &Var, b: &Var) -> Formula {
        if a.is_bool() {
            Formula::iff(&Formula::bool_var(a, true), &Formula::bool_var(b, true))
        } else {
            Formula::eq(&LinTerm::var(a), &LinTerm::var(b))
        }
    }

    /// `(a ∧ b) ∨ (¬a ∧ ¬b)`; both sides must be call-free.
    pub fn iff(a: &Formula, b: &Formula) -> Formula {
        Formula::or([Formula::and([a.clone(), b.clone()]), Formula::and([a.negate(), b.negate()])])
    }

    pub fn and<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(children) => {
                    for c in children {
                        if seen.insert(c.clone()) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if seen.insert(other.clone()) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap_or(Formula::True),
            _ => Formula::And(out),
        }
    }

    pub fn or<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(children) => {
                    for c in children {
                        if seen.insert(c.clone()) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if seen.insert(other.clone()) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap_or(Formula::False),
            _ => Formula::Or(out),
        }
    }

    pub fn cube(lits: impl IntoIterator<Item = Literal>) -> Formula {
        Formula::and(lits.into_iter().map(Formula::Lit))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Negation of a call-free formula, pushed to the literals.
    ///
    /// # Panics
    /// If the formula contains a call atom.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Lit(l) => l.negate(),
            Formula::And(cs) => Formula::or(cs.iter().map(Formula::negate)),
            Formula::Or(cs) => Formula::and(cs.iter().map(Formula::negate)),
            Formula::Call(c) => panic!("negation of call atom to {:?}", c.callee),
        }
    }

    pub fn subst(&self, s: &Subst) -> Formula {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Lit(l) => l.subst(s),
            Formula::And(cs) => Formula::and(cs.iter().map(|c| c.subst(s))),
            Formula::Or(cs) => Formula::or(cs.iter().map(|c| c.subst(s))),
            Formula::Call(c) => Formula::Call(CallAtom { callee: c.callee, args: c.args.iter().map(|a| s.rename_var(a)).collect() }),
        }
    }

    /// Applies `f` to every literal, rebuilding the formula bottom-up.
    pub fn map_literals(&self, f: &mut dyn FnMut(&Literal) -> Formula) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Call(_) => self.clone(),
            Formula::Lit(l) => f(l),
            Formula::And(cs) => Formula::and(cs.iter().map(|c| c.map_literals(f)).collect::<Vec<_>>()),
            Formula::Or(cs) => Formula::or(cs.iter().map(|c| c.map_literals(f)).collect::<Vec<_>>()),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Lit(l) => l.collect_vars(out),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_vars(out)),
            Formula::Call(c) => out.extend(c.args.iter().cloned()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, v: &Var) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Lit(l) => l.contains(v),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(|c| c.mentions(v)),
            Formula::Call(c) => c.args.contains(v),
        }
    }

    /// Distinct literals in first-occurrence order.
    pub fn literals(&self) -> Vec<Literal> {
        fn go(f: &Formula, seen: &mut BTreeSet<Literal>, out: &mut Vec<Literal>) {
            match f {
                Formula::Lit(l) => {
                    if seen.insert(l.clone()) {
                        out.push(l.clone());
                    }
                }
                Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| go(c, seen, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut BTreeSet::new(), &mut out);
        out
    }

    pub fn calls(&self) -> Vec<&CallAtom> {
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a CallAtom>) {
            match f {
                Formula::Call(c) => out.push(c),
                Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| go(c, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn is_call_free(&self) -> bool {
        match self {
            Formula::Call(_) => false,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(Formula::is_call_free),
            _ => true,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Conjuncts of a top-level conjunction (the formula itself otherwise).
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::True => Vec::new(),
            Formula::And(cs) => cs.clone(),
            other => alloc::vec![other.clone()],
        }
    }

    /// The formula as a conjunction of literals, if it is one.
    pub fn as_cube(&self) -> Option<Vec<Literal>> {
        match self {
            Formula::True => Some(Vec::new()),
            Formula::Lit(l) => Some(alloc::vec![l.clone()]),
            Formula::And(cs) => cs
                .iter()
                .map(|c| match c {
                    Formula::Lit(l) => Some(l.clone()),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }

    /// S-expression text, naming procedures through `name`.
    pub fn sexpr_with(&self, name: &dyn Fn(ProcId) -> String) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out, name);
        out
    }

    fn write_sexpr(&self, out: &mut String, name: &dyn Fn(ProcId) -> String) {
        match self {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Lit(l) => out.push_str(&l.sexpr()),
            Formula::And(cs) | Formula::Or(cs) => {
                out.push_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" });
                for c in cs {
                    out.push(' ');
                    c.write_sexpr(out, name);
                }
                out.push(')');
            }
            Formula::Call(c) => {
                out.push_str("(call ");
                out.push_str(&name(c.callee));
                for a in &c.args {
                    out.push(' ');
                    out.push_str(a.name());
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sexpr_with(&|p| alloc::format!("#{}", p.0)))
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Literal> for Formula {
    fn from(l: Literal) -> Formula {
        Formula::Lit(l)
    }
}
