//! Programs, assertion maps and the environments built from them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::logic::{dnf_paths, CallAtom, Formula, LogicError, Model, Path, Sort, Subst, Var, DEFAULT_PATH_LIMIT};

pub use crate::logic::ProcId;

/// Which theory a program's arithmetic lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Bool,
    Rat,
    Int,
}

impl Mode {
    /// Whether a variable of sort `s` may appear in a program of this mode.
    /// Boolean variables are allowed everywhere.
    pub fn admits(self, s: Sort) -> bool {
        matches!((self, s), (_, Sort::Bool) | (Mode::Rat, Sort::Rat) | (Mode::Int, Sort::Int))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bool => "bool",
            Mode::Rat => "rat",
            Mode::Int => "int",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("procedure `{0}` is defined twice")]
    DuplicateProcedure(String),
    #[error("main procedure `{0}` is not defined")]
    NoMain(String),
    #[error("`{caller}` calls unknown procedure #{callee}")]
    UnknownProcedure { caller: String, callee: usize },
    #[error("`{caller}` calls `{callee}` with {got} arguments, expected {expected}")]
    ArityMismatch { caller: String, callee: String, expected: usize, got: usize },
    #[error("`{caller}` passes `{arg}` where `{callee}` expects a {expected} value")]
    ArgumentSort { caller: String, callee: String, arg: String, expected: Sort },
    #[error("variable `{var}` is used in `{proc}` but not declared")]
    UndeclaredVar { proc: String, var: String },
    #[error("variable `{var}` is declared twice in `{proc}`")]
    DuplicateVar { proc: String, var: String },
    #[error("variable `{var}` of `{proc}` has sort {sort}, not allowed in {mode} mode")]
    ModeSort { proc: String, var: String, sort: Sort, mode: Mode },
    #[error("procedure `{proc}`: {source}")]
    Logic { proc: String, source: LogicError },
    #[error("`{proc}` has {vars} variables, too many to enumerate")]
    TooLarge { proc: String, vars: usize },
    #[error("bounded semantics needs a boolean program")]
    NotBoolean,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub inputs: Vec<Var>,
    pub outputs: Vec<Var>,
    pub locals: Vec<Var>,
    pub body: Formula,
    /// The DNF disjuncts of `body`, in a fixed order.
    pub paths: Vec<Path>,
}

impl Procedure {
    pub fn new(name: &str, inputs: Vec<Var>, outputs: Vec<Var>, locals: Vec<Var>, body: Formula) -> Result<Procedure, ProgramError> {
        let paths = dnf_paths(&body, DEFAULT_PATH_LIMIT).map_err(|source| ProgramError::Logic { proc: name.into(), source })?;
        Ok(Procedure { name: name.into(), inputs, outputs, locals, body, paths })
    }

    /// Inputs followed by outputs; call arguments bind to these in order.
    pub fn formals(&self) -> Vec<Var> {
        self.inputs.iter().chain(&self.outputs).cloned().collect()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.inputs.iter().chain(&self.outputs).chain(&self.locals)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub mode: Mode,
    procs: Vec<Procedure>,
    main: ProcId,
}

impl Program {
    /// Checks well-formedness: unique names, declared variables of the
    /// right sorts, calls to existing procedures with matching arguments.
    pub fn new(mode: Mode, procs: Vec<Procedure>, main: &str) -> Result<Program, ProgramError> {
        let mut names = BTreeSet::new();
        for p in &procs {
            if !names.insert(p.name.as_str()) {
                return Err(ProgramError::DuplicateProcedure(p.name.clone()));
            }
        }
        let main = procs.iter().position(|p| p.name == main).ok_or_else(|| ProgramError::NoMain(main.into()))?;
        let program = Program { mode, procs, main: ProcId(main) };
        for p in &program.procs {
            program.validate(p)?;
        }
        Ok(program)
    }

    fn validate(&self, p: &Procedure) -> Result<(), ProgramError> {
        let mut declared: BTreeMap<&str, &Var> = BTreeMap::new();
        for v in p.vars() {
            if declared.insert(v.name(), v).is_some() {
                return Err(ProgramError::DuplicateVar { proc: p.name.clone(), var: v.name().into() });
            }
            if !self.mode.admits(v.sort()) {
                return Err(ProgramError::ModeSort { proc: p.name.clone(), var: v.name().into(), sort: v.sort(), mode: self.mode });
            }
        }
        for v in p.body.free_vars() {
            if declared.get(v.name()) != Some(&&v) {
                return Err(ProgramError::UndeclaredVar { proc: p.name.clone(), var: v.name().into() });
            }
        }
        for c in p.body.calls() {
            let callee = self
                .procs
                .get(c.callee.0)
                .ok_or(ProgramError::UnknownProcedure { caller: p.name.clone(), callee: c.callee.0 })?;
            let formals = callee.formals();
            if formals.len() != c.args.len() {
                return Err(ProgramError::ArityMismatch {
                    caller: p.name.clone(),
                    callee: callee.name.clone(),
                    expected: formals.len(),
                    got: c.args.len(),
                });
            }
            for (f, a) in formals.iter().zip(&c.args) {
                if f.sort() != a.sort() {
                    return Err(ProgramError::ArgumentSort {
                        caller: p.name.clone(),
                        callee: callee.name.clone(),
                        arg: a.name().into(),
                        expected: f.sort(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn main(&self) -> ProcId {
        self.main
    }

    pub fn proc(&self, id: ProcId) -> &Procedure {
        &self.procs[id.0]
    }

    pub fn procs(&self) -> impl Iterator<Item = (ProcId, &Procedure)> {
        self.procs.iter().enumerate().map(|(i, p)| (ProcId(i), p))
    }

    pub fn len(&self) -> usize {
        self.procs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<ProcId> {
        self.procs.iter().position(|p| p.name == name).map(ProcId)
    }

    pub fn name(&self, id: ProcId) -> &str {
        &self.procs[id.0].name
    }

    /// `f`, a formula over the formals of `call.callee`, restated over the
    /// call's arguments.
    pub fn call_instance(&self, call: &CallAtom, f: &Formula) -> Formula {
        f.subst(&Subst::rename(&self.proc(call.callee).formals(), &call.args))
    }

    /// Replaces every call atom in `f` by the environment's formula for the
    /// callee.
    pub fn instantiate(&self, f: &Formula, env: &Environment) -> Formula {
        match f {
            Formula::Call(c) => self.call_instance(c, env.get(c.callee)),
            Formula::And(cs) => Formula::and(cs.iter().map(|c| self.instantiate(c, env))),
            Formula::Or(cs) => Formula::or(cs.iter().map(|c| self.instantiate(c, env))),
            _ => f.clone(),
        }
    }

    /// A path with its `i`-th call instantiated from `envs(i)`.
    pub fn instantiate_path<'e>(&self, path: &Path, envs: impl Fn(usize) -> &'e Environment) -> Formula {
        let calls = path.calls.iter().enumerate().map(|(i, c)| self.call_instance(c, envs(i).get(c.callee)));
        Formula::and(path.literals.iter().cloned().map(Formula::Lit).chain(calls))
    }
}

/// Index of a fact in an `AssertionMap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub usize);

/// How a reachability fact was derived: the path of the body and, per call
/// of that path, the callee fact it relied on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub path: usize,
    pub calls: Vec<FactId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub proc: ProcId,
    pub bound: u32,
    pub formula: Formula,
    pub provenance: Option<Provenance>,
}

/// Facts per procedure and bound. Facts are never removed; inserting a
/// formula already present at the same place is a no-op.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssertionMap {
    facts: Vec<Fact>,
    index: BTreeMap<(ProcId, u32), Vec<FactId>>,
}

impl AssertionMap {
    pub fn new() -> AssertionMap {
        AssertionMap::default()
    }

    /// Adds a fact unless the same formula is already stored at
    /// `(proc, bound)`. Returns its id and whether it is new.
    pub fn insert(&mut self, proc: ProcId, bound: u32, formula: Formula, provenance: Option<Provenance>) -> (FactId, bool) {
        let ids = self.index.entry((proc, bound)).or_default();
        if let Some(id) = ids.iter().find(|id| self.facts[id.0].formula == formula) {
            return (*id, false);
        }
        let id = FactId(self.facts.len());
        self.facts.push(Fact { proc, bound, formula, provenance });
        ids.push(id);
        (id, true)
    }

    pub fn get(&self, id: FactId) -> &Fact {
        &self.facts[id.0]
    }

    pub fn at(&self, proc: ProcId, bound: u32) -> impl Iterator<Item = (FactId, &Fact)> {
        self.index.get(&(proc, bound)).into_iter().flatten().map(|id| (*id, &self.facts[id.0]))
    }

    /// Facts of `proc` at any bound in `range`.
    pub fn within(&self, proc: ProcId, range: impl core::ops::RangeBounds<u32>) -> impl Iterator<Item = (FactId, &Fact)> {
        self.index
            .range((proc, 0)..=(proc, u32::MAX))
            .filter(move |((_, b), _)| range.contains(b))
            .flat_map(|(_, ids)| ids.iter().map(|id| (*id, &self.facts[id.0])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &Fact)> {
        self.facts.iter().enumerate().map(|(i, f)| (FactId(i), f))
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn max_bound(&self) -> Option<u32> {
        self.index.keys().map(|(_, b)| *b).max()
    }
}

/// A formula per procedure over its formals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Environment {
    map: Vec<Formula>,
}

impl Environment {
    pub fn constant(program: &Program, value: bool) -> Environment {
        Environment { map: alloc::vec![Formula::constant(value); program.len()] }
    }

    pub fn from_vec(map: Vec<Formula>) -> Environment {
        Environment { map }
    }

    pub fn get(&self, p: ProcId) -> &Formula {
        &self.map[p.0]
    }

    pub fn set(&mut self, p: ProcId, f: Formula) {
        self.map[p.0] = f;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcId, &Formula)> {
        self.map.iter().enumerate().map(|(i, f)| (ProcId(i), f))
    }
}

/// Disjunction of the facts at bounds up to `b`; `⊥` everywhere at `b < 0`.
pub fn u_env(program: &Program, rho: &AssertionMap, b: i64) -> Environment {
    let mut env = Environment::constant(program, false);
    if b < 0 {
        return env;
    }
    for (p, _) in program.procs() {
        env.set(p, Formula::or(rho.within(p, ..=b as u32).map(|(_, f)| f.formula.clone())));
    }
    env
}

/// Conjunction of the facts at bounds from `b` on; `⊥` everywhere at
/// `b < 0`.
pub fn o_env(program: &Program, sigma: &AssertionMap, b: i64) -> Environment {
    let mut env = Environment::constant(program, false);
    if b < 0 {
        return env;
    }
    for (p, _) in program.procs() {
        env.set(p, Formula::and(sigma.within(p, b as u32..).map(|(_, f)| f.formula.clone())));
    }
    env
}

/// Largest number of variables per procedure `bool_bounded_semantics`
/// enumerates.
pub const ENUMERATION_LIMIT: usize = 16;

/// Values of the formals of a procedure, in `formals()` order.
pub type Valuation = Vec<bool>;

/// The input/output relation of every procedure of a boolean program with
/// call stacks of depth at most `b`, by explicit enumeration.
pub fn bool_bounded_semantics(program: &Program, b: u32) -> Result<Vec<BTreeSet<Valuation>>, ProgramError> {
    if program.mode != Mode::Bool {
        return Err(ProgramError::NotBoolean);
    }
    for (_, p) in program.procs() {
        let n = p.vars().count();
        if n > ENUMERATION_LIMIT || p.vars().any(|v| v.sort() != Sort::Bool) {
            return Err(ProgramError::TooLarge { proc: p.name.clone(), vars: n });
        }
    }
    let mut sem: Vec<BTreeSet<Valuation>> = alloc::vec![BTreeSet::new(); program.len()];
    for level in 0..=b {
        let prev = sem;
        sem = Vec::new();
        for (_, p) in program.procs() {
            let vars: Vec<&Var> = p.vars().collect();
            let formals = p.formals();
            let mut out = BTreeSet::new();
            for bits in 0u32..(1 << vars.len()) {
                let mut m = Model::new();
                for (i, v) in vars.iter().enumerate() {
                    m.set_bool(v, bits & (1 << i) != 0);
                }
                // At depth 0 no call can return.
                let holds = eval_with_calls(&p.body, &m, &|c: &CallAtom| {
                    level > 0 && prev[c.callee.0].contains(&valuation(&m, &c.args))
                });
                if holds {
                    out.insert(valuation(&m, &formals));
                }
            }
            sem.push(out);
        }
    }
    Ok(sem)
}

/// Boolean values of `vars` under `m`; unassigned variables read as false.
pub fn valuation(m: &Model, vars: &[Var]) -> Valuation {
    vars.iter().map(|v| m.boolean(v).unwrap_or(false)).collect()
}

fn eval_with_calls(f: &Formula, m: &Model, call: &dyn Fn(&CallAtom) -> bool) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Lit(l) => m.eval_literal(l).expect("enumerated model assigns every variable"),
        Formula::And(cs) => cs.iter().all(|c| eval_with_calls(c, m, call)),
        Formula::Or(cs) => cs.iter().any(|c| eval_with_calls(c, m, call)),
        Formula::Call(c) => call(c),
    }
}
