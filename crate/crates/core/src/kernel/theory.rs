//! Arithmetic theory solver plugged into the CDCL search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::lia::{self, LiaResult};
use super::sat::{lit_neg, lit_var, mk_lit, Lit, Theory, TheoryCheck};
use super::simplex::{cmp_bounds, Explanation, Simplex};
use super::{FarkasCert, TheoryLemma};
use crate::logic::{LinTerm, Literal, Model, Sort, Var};
use crate::num::{is_integral, Rational};

/// How many solver calls the integer core minimization may spend.
const CORE_BUDGET: usize = 48;

/// A SAT literal, its theory literal and its prepared bound.
type Asserted = (Lit, Literal, Option<(usize, Rational)>);

#[derive(Debug)]
struct Prepared {
    lit: Literal,
    /// Column `s` and factor `a` with `term = a*s + constant`.
    bound: Option<(usize, Rational)>,
}

#[derive(Debug)]
struct Atom {
    pos: Prepared,
    neg: Option<Prepared>,
}

#[derive(Debug, Default)]
pub(crate) struct ArithTheory {
    simplex: Simplex,
    columns: BTreeMap<Var, usize>,
    slacks: BTreeMap<LinTerm, usize>,
    atoms: BTreeMap<u32, Atom>,
    /// Asserted literals with their SAT literal and prepared bound.
    asserted: Vec<Asserted>,
    marks: Vec<usize>,
    bb_nodes: u64,
    /// Divisibility literals asserted at the last partial check.
    divs_checked: usize,
    int_model: Option<Model>,
    pub lemmas: Vec<TheoryLemma>,
}

impl ArithTheory {
    pub fn new(bb_nodes: u64) -> ArithTheory {
        ArithTheory { bb_nodes, ..ArithTheory::default() }
    }

    pub fn pivots(&self) -> u64 {
        self.simplex.pivots
    }

    fn column(&mut self, v: &Var) -> usize {
        if let Some(c) = self.columns.get(v) {
            return *c;
        }
        let c = self.simplex.new_var();
        self.columns.insert(v.clone(), c);
        c
    }

    fn prepare(&mut self, lit: Literal) -> Prepared {
        let bound = match &lit {
            Literal::Cmp { term, .. } => {
                let (_, lead) = term.leading().expect("canonical literal has a variable");
                let a = lead.clone();
                let part = term.without_constant().scale(&(Rational::one() / &a));
                let col = if part.coeffs().len() == 1 {
                    let v = part.vars().next().expect("one variable").clone();
                    self.column(&v)
                } else if let Some(c) = self.slacks.get(&part) {
                    *c
                } else {
                    let mut combo = Vec::new();
                    for (v, c) in part.coeffs() {
                        combo.push((self.column(v), c.clone()));
                    }
                    let c = self.simplex.add_row(&combo);
                    self.slacks.insert(part, c);
                    c
                };
                Some((col, a))
            }
            _ => None,
        };
        Prepared { lit, bound }
    }

    /// Registers SAT variable `var` as the atom `pos`, whose negation is
    /// `neg` when that is again a single literal.
    pub fn add_atom(&mut self, var: u32, pos: Literal, neg: Option<Literal>) {
        let pos = self.prepare(pos);
        let neg = neg.map(|n| self.prepare(n));
        self.atoms.insert(var, Atom { pos, neg });
    }

    fn farkas_of(&self, expl: &[Explanation]) -> (Vec<Lit>, FarkasCert) {
        let mut lits = Vec::new();
        let mut mults: BTreeMap<Literal, Rational> = BTreeMap::new();
        for e in expl {
            let tag = e.tag.expect("theory bounds are tagged");
            let (l, lit, bound) = &self.asserted[tag];
            let (_, a) = bound.as_ref().expect("bound literal");
            let lambda = if e.upper { &e.mult / a } else { -(&e.mult / a) };
            *mults.entry(lit.clone()).or_insert_with(Rational::zero) += lambda;
            if !lits.contains(l) {
                lits.push(*l);
            }
        }
        (lits, FarkasCert { terms: mults.into_iter().filter(|(_, m)| !m.is_zero()).collect() })
    }

    fn conflict(&mut self, expl: Vec<Explanation>) -> TheoryCheck {
        let (lits, cert) = self.farkas_of(&expl);
        debug_assert!(cert.replay(), "Farkas certificate does not replay: {cert:?}");
        self.lemmas.push(TheoryLemma::Farkas(cert));
        TheoryCheck::Conflict(lits)
    }

    fn arith_asserted(&self) -> Vec<Literal> {
        self.asserted.iter().map(|(_, l, _)| l.clone()).collect()
    }

    fn concrete_model(&self) -> Model {
        let delta = self.simplex.concrete_delta();
        let mut m = Model::new();
        for (v, c) in &self.columns {
            m.set_num(v, self.simplex.concrete(*c, &delta));
        }
        m
    }

    /// Values for the variables of the asserted literals.
    pub fn model(&self) -> Model {
        if let Some(m) = &self.int_model {
            return m.clone();
        }
        let mut vars = BTreeSet::new();
        for (_, l, _) in &self.asserted {
            l.collect_vars(&mut vars);
        }
        self.concrete_model().restrict(vars.iter())
    }

    fn integer_check(&mut self) -> TheoryCheck {
        let needs = self.asserted.iter().any(|(_, l, _)| {
            matches!(l, Literal::Div { .. }) || l.vars().iter().any(|v| v.sort() == Sort::Int)
        });
        if !needs {
            return TheoryCheck::Consistent;
        }
        let m = self.concrete_model();
        let fast = self.asserted.iter().all(|(_, l, _)| {
            l.vars().iter().all(|v| v.sort() != Sort::Int || m.num(v).is_ok_and(is_integral))
                && m.eval_literal(l) == Ok(true)
        });
        if fast {
            return TheoryCheck::Consistent;
        }
        let lits = self.arith_asserted();
        match lia::solve(&lits, self.bb_nodes) {
            LiaResult::Sat(model) => {
                self.int_model = Some(model);
                TheoryCheck::Consistent
            }
            LiaResult::Unknown => TheoryCheck::Unknown,
            LiaResult::Unsat => {
                let core = minimize_core(&lits, self.bb_nodes);
                let sat_lits = self
                    .asserted
                    .iter()
                    .filter(|(_, l, _)| core.contains(l))
                    .map(|(s, _, _)| *s)
                    .collect::<BTreeSet<Lit>>()
                    .into_iter()
                    .collect();
                self.lemmas.push(TheoryLemma::IntCore(core));
                TheoryCheck::Conflict(sat_lits)
            }
        }
    }
}

impl ArithTheory {
    /// Residue clashes among the asserted divisibility literals, checked
    /// whenever new ones arrived.
    fn divisibility_check(&mut self) -> TheoryCheck {
        let divs: Vec<(Lit, Literal)> = self
            .asserted
            .iter()
            .filter(|(_, l, _)| matches!(l, Literal::Div { .. }))
            .map(|(s, l, _)| (*s, l.clone()))
            .collect();
        if divs.len() <= self.divs_checked {
            self.divs_checked = divs.len();
            return TheoryCheck::Consistent;
        }
        self.divs_checked = divs.len();
        let lits: Vec<Literal> = divs.iter().map(|(_, l)| l.clone()).collect();
        if !lia::residues_clash(&lits) {
            return TheoryCheck::Consistent;
        }
        let core = shrink(lits, lia::residues_clash);
        let sat_lits = divs.iter().filter(|(_, l)| core.contains(l)).map(|(s, _)| *s).collect::<BTreeSet<Lit>>();
        self.lemmas.push(TheoryLemma::IntCore(core));
        TheoryCheck::Conflict(sat_lits.into_iter().collect())
    }
}

/// Deletion-based shrinking of an integer-infeasible conjunction. Each
/// trial gets a fraction of the budget; an undecided trial keeps its
/// chunk.
fn minimize_core(lits: &[Literal], bb_nodes: u64) -> Vec<Literal> {
    let bb_nodes = (bb_nodes / 8).max(1);
    shrink(lits.to_vec(), |trial| matches!(lia::solve(trial, bb_nodes), LiaResult::Unsat))
}

/// Removes chunks that halve in size down to single literals while
/// `infeasible` still holds, within `CORE_BUDGET` calls.
fn shrink(mut core: Vec<Literal>, infeasible: impl Fn(&[Literal]) -> bool) -> Vec<Literal> {
    let mut calls = 0;
    let mut chunk = core.len().div_ceil(2);
    while chunk >= 1 && calls < CORE_BUDGET {
        let mut i = 0;
        while i < core.len() && calls < CORE_BUDGET {
            let end = (i + chunk).min(core.len());
            let trial: Vec<Literal> = core[..i].iter().chain(&core[end..]).cloned().collect();
            calls += 1;
            if infeasible(&trial) {
                core = trial;
            } else {
                i = end;
            }
        }
        if chunk == 1 {
            break;
        }
        chunk = chunk.div_ceil(2);
    }
    core
}

impl Theory for ArithTheory {
    fn assert_lit(&mut self, lit: Lit) -> TheoryCheck {
        let atom = &self.atoms[&lit_var(lit)];
        let prepared = if lit_neg(lit) { atom.neg.as_ref() } else { Some(&atom.pos) };
        let Some(p) = prepared else { return TheoryCheck::Consistent };
        let (literal, bound) = (p.lit.clone(), p.bound.clone());
        let tag = self.asserted.len();
        self.asserted.push((lit, literal.clone(), bound.clone()));
        self.int_model = None;
        if let (Literal::Cmp { op, term }, Some((col, a))) = (&literal, bound) {
            for (upper, value) in cmp_bounds(*op, &a, term.constant_part()) {
                let r = if upper {
                    self.simplex.assert_upper(col, value, Some(tag))
                } else {
                    self.simplex.assert_lower(col, value, Some(tag))
                };
                if let Err(expl) = r {
                    return self.conflict(expl);
                }
            }
        }
        TheoryCheck::Consistent
    }

    fn check(&mut self, complete: bool) -> TheoryCheck {
        if let Err(expl) = self.simplex.check() {
            return self.conflict(expl);
        }
        if complete {
            return self.integer_check();
        }
        self.divisibility_check()
    }

    fn push_level(&mut self) {
        self.marks.push(self.asserted.len());
        self.simplex.push();
    }

    fn pop_to_level(&mut self, level: usize) {
        while self.marks.len() > level {
            let mark = self.marks.pop().expect("level mark");
            self.asserted.truncate(mark);
            self.simplex.pop();
        }
        self.divs_checked = 0;
        self.int_model = None;
    }

    fn is_atom(&self, var: u32) -> bool {
        self.atoms.contains_key(&var)
    }
}

/// Farkas certificate for a conjunction of comparison literals that is
/// infeasible over the rationals.
pub(crate) fn farkas_for(lits: &[Literal]) -> Option<FarkasCert> {
    let mut t = ArithTheory::new(0);
    for (i, l) in lits.iter().enumerate() {
        if !matches!(l, Literal::Cmp { .. }) {
            continue;
        }
        t.add_atom(i as u32, l.clone(), None);
        if let TheoryCheck::Conflict(_) = t.assert_lit(mk_lit(i as u32, false)) {
            break;
        }
    }
    if t.lemmas.is_empty() {
        if let Err(expl) = t.simplex.check() {
            return Some(t.farkas_of(&expl).1);
        }
    }
    match t.lemmas.pop() {
        Some(TheoryLemma::Farkas(c)) => Some(c),
        _ => None,
    }
}
