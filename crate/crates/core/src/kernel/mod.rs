//! Satisfiability for call-free formulas over booleans, linear rational
//! and linear integer arithmetic.
//!
//! Formulas are clausified with a polarity-aware Tseitin encoding and
//! searched by CDCL; arithmetic atoms go to an exact simplex, and integer
//! constraints are finished by branch-and-bound.

mod cooper;
mod lia;
mod sat;
mod simplex;
mod theory;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::logic::{CmpOp, Formula, LinTerm, Literal, Model};
use crate::num::Rational;
use sat::{mk_lit, not, Lit, SatOutcome, SatSolver};
use theory::ArithTheory;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("solver resource limit reached")]
    ResourceLimit,
    #[error("formula contains a call atom")]
    CallInFormula,
}

/// A weighted sum of comparison literals that is contradictory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarkasCert {
    pub terms: Vec<(Literal, Rational)>,
}

impl FarkasCert {
    /// Sums `λ·term` over the literals and checks that the result is a
    /// constant contradicting the combined comparison.
    pub fn replay(&self) -> bool {
        let mut sum = LinTerm::zero();
        let mut strict = false;
        for (lit, lambda) in &self.terms {
            let Literal::Cmp { op, term } = lit else { return false };
            if *op != CmpOp::Eq && lambda.is_negative() {
                return false;
            }
            if *op == CmpOp::Lt && lambda.is_positive() {
                strict = true;
            }
            sum = &sum + &term.scale(lambda);
        }
        if !sum.is_constant() {
            return false;
        }
        let c = sum.constant_part();
        if strict {
            !c.is_negative()
        } else {
            c.is_positive()
        }
    }

    /// The literals with a non-zero multiplier.
    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.terms.iter().filter(|(_, m)| !m.is_zero()).map(|(l, _)| l)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryLemma {
    Farkas(FarkasCert),
    /// A conjunction with no integer solution, found by branch-and-bound.
    IntCore(Vec<Literal>),
}

/// Theory conflicts met while refuting a formula. Purely propositional
/// refutations have no lemmas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnsatCert {
    pub lemmas: Vec<TheoryLemma>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat(UnsatCert),
    Unknown,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelConfig {
    pub max_conflicts: u64,
    /// Branch-and-bound nodes per integer check.
    pub bb_nodes: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { max_conflicts: 200_000, bb_nodes: 5_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub calls: u64,
    pub conflicts: u64,
    pub pivots: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Kernel {
    pub config: KernelConfig,
    pub stats: KernelStats,
}

struct Encoder {
    sat: SatSolver,
    theory: ArithTheory,
    bools: BTreeMap<crate::logic::Var, u32>,
    atoms: BTreeMap<Literal, Lit>,
    gates: BTreeMap<Formula, Lit>,
}

impl Encoder {
    fn literal(&mut self, l: &Literal) -> Lit {
        if let Literal::Bool { var, positive } = l {
            let v = match self.bools.get(var) {
                Some(v) => *v,
                None => {
                    let v = self.sat.new_var();
                    self.bools.insert(var.clone(), v);
                    v
                }
            };
            return mk_lit(v, !positive);
        }
        if let Some(s) = self.atoms.get(l) {
            return *s;
        }
        let neg = match l.negate() {
            Formula::Lit(n) => Some(n),
            _ => None,
        };
        let v = self.sat.new_var();
        self.theory.add_atom(v, l.clone(), neg.clone());
        self.atoms.insert(l.clone(), mk_lit(v, false));
        if let Some(n) = neg {
            self.atoms.insert(n, mk_lit(v, true));
        }
        mk_lit(v, false)
    }

    fn gate(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Lit(l) => return self.literal(l),
            Formula::True | Formula::False => {
                let g = mk_lit(self.sat.new_var(), false);
                self.sat.add_clause(&[if f.is_true() { g } else { not(g) }]);
                return g;
            }
            _ => {}
        }
        if let Some(g) = self.gates.get(f) {
            return *g;
        }
        let children: Vec<Lit> = match f {
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(|c| self.gate(c)).collect(),
            _ => unreachable!("calls are rejected before encoding"),
        };
        let g = mk_lit(self.sat.new_var(), false);
        if let Formula::And(_) = f {
            for c in children {
                self.sat.add_clause(&[not(g), c]);
            }
        } else {
            let mut clause = alloc::vec![not(g)];
            clause.extend(children);
            self.sat.add_clause(&clause);
        }
        self.gates.insert(f.clone(), g);
        g
    }

    fn assert(&mut self, f: &Formula) {
        match f {
            Formula::True => {}
            Formula::False => self.sat.add_clause(&[]),
            Formula::And(cs) => cs.iter().for_each(|c| self.assert(c)),
            Formula::Or(cs) => {
                let clause: Vec<Lit> = cs.iter().map(|c| self.gate(c)).collect();
                self.sat.add_clause(&clause);
            }
            Formula::Lit(l) => {
                let s = self.literal(l);
                self.sat.add_clause(&[s]);
            }
            Formula::Call(_) => unreachable!("calls are rejected before encoding"),
        }
    }
}

impl Kernel {
    pub fn new(config: KernelConfig) -> Kernel {
        Kernel { config, stats: KernelStats::default() }
    }

    /// Decides `f`, which must be call-free. Arithmetic variables are
    /// integer or rational according to their sort; both may be mixed.
    pub fn check_sat(&mut self, f: &Formula) -> Result<SatResult, KernelError> {
        if !f.is_call_free() {
            return Err(KernelError::CallInFormula);
        }
        self.stats.calls += 1;
        let mut enc = Encoder {
            sat: SatSolver::new(),
            theory: ArithTheory::new(self.config.bb_nodes),
            bools: BTreeMap::new(),
            atoms: BTreeMap::new(),
            gates: BTreeMap::new(),
        };
        enc.assert(f);
        let outcome = enc.sat.solve(&mut enc.theory, self.config.max_conflicts);
        self.stats.conflicts += enc.sat.conflicts;
        self.stats.pivots += enc.theory.pivots();
        Ok(match outcome {
            SatOutcome::Unknown => SatResult::Unknown,
            SatOutcome::Unsat => SatResult::Unsat(UnsatCert { lemmas: core::mem::take(&mut enc.theory.lemmas) }),
            SatOutcome::Sat => {
                let mut model = enc.theory.model();
                for (v, s) in &enc.bools {
                    model.set_bool(v, enc.sat.var_value(*s) == Some(true));
                }
                for v in f.free_vars() {
                    if model.get(&v).is_none() {
                        if v.is_bool() {
                            model.set_bool(&v, false);
                        } else {
                            model.set_num(&v, Rational::zero());
                        }
                    }
                }
                debug_assert_eq!(model.eval(f), Ok(true), "kernel model does not satisfy {f}");
                SatResult::Sat(model)
            }
        })
    }

    /// A model of `f`, `None` when unsatisfiable.
    pub fn is_sat(&mut self, f: &Formula) -> Result<Option<Model>, KernelError> {
        match self.check_sat(f)? {
            SatResult::Sat(m) => Ok(Some(m)),
            SatResult::Unsat(_) => Ok(None),
            SatResult::Unknown => Err(KernelError::ResourceLimit),
        }
    }

    /// `a ⇒ b` is valid.
    pub fn entails(&mut self, a: &Formula, b: &Formula) -> Result<bool, KernelError> {
        Ok(self.is_sat(&Formula::and([a.clone(), b.negate()]))?.is_none())
    }

    pub fn equivalent(&mut self, a: &Formula, b: &Formula) -> Result<bool, KernelError> {
        Ok(self.entails(a, b)? && self.entails(b, a)?)
    }

    /// Up to `limit` models of `f`; after each model `m` the negation of
    /// `blocking(m)` is conjoined.
    pub fn enumerate_models(
        &mut self,
        f: &Formula,
        blocking: &mut dyn FnMut(&Model) -> Formula,
        limit: usize,
    ) -> Result<Vec<Model>, KernelError> {
        let mut out = Vec::new();
        let mut g = f.clone();
        while out.len() < limit {
            let Some(m) = self.is_sat(&g)? else { break };
            g = Formula::and([g, blocking(&m).negate()]);
            out.push(m);
        }
        Ok(out)
    }

    /// A Farkas certificate for a conjunction of comparisons with no
    /// rational solution; `None` when the relaxation is feasible.
    pub fn farkas(&mut self, lits: &[Literal]) -> Option<FarkasCert> {
        theory::farkas_for(lits)
    }
}
