//! Bounded safety: decides whether `main` has an execution within a fixed
//! call-stack bound that violates the property.
//!
//! The engine keeps a queue of reachability queries `⟨P, φ, b⟩` and two
//! assertion maps, reachability facts (`ρ`) and summary facts (`σ`). Each
//! step picks the query with the smallest bound and applies exactly one of
//! three rules:
//!
//! * Sum: the body under `σ` contradicts `φ`; an interpolant becomes a new
//!   summary fact.
//! * Reach: some path under `ρ` meets `φ`; its projection onto the formals
//!   becomes a new reachability fact.
//! * Query: neither; a callee on a path that may meet `φ` is asked a new
//!   query one bound lower.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::itp::{itp, InterpolationQuery, ItpError, ItpStrategy};
use crate::kernel::{Kernel, KernelConfig, KernelError};
use crate::logic::{Formula, LogicError, Model, Subst, Var};
use crate::program::{o_env, u_env, AssertionMap, Environment, Mode, ProcId, Program, Provenance};
use crate::qe::{project, QeError, Strategy};

/// How Reach and Query eliminate variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Projection {
    /// Model-based projection of the model's implicant.
    #[default]
    Mbp,
    /// Full quantifier elimination.
    Qe,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Projection::Mbp => "mbp",
            Projection::Qe => "qe",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub projection: Projection,
    /// `None` picks by mode: Farkas for arithmetic, literal dropping for
    /// boolean programs.
    pub itp: Option<ItpStrategy>,
    /// Rule applications per run before giving up.
    pub step_budget: u64,
    /// Re-checks the rule preconditions and the pending-query invariant
    /// after every step. Costs a few solver calls per step.
    pub check_invariants: bool,
    pub record_trace: bool,
    pub kernel: KernelConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            projection: Projection::Mbp,
            itp: None,
            step_budget: 200_000,
            check_invariants: cfg!(debug_assertions),
            record_trace: false,
            kernel: KernelConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn itp_for(&self, mode: Mode) -> ItpStrategy {
        self.itp.unwrap_or(match mode {
            Mode::Bool => ItpStrategy::Boolean,
            Mode::Rat | Mode::Int => ItpStrategy::Farkas,
        })
    }
}

/// Where a query came from: the query whose Query step created it, the
/// path taken and the call on that path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Origin {
    pub query: usize,
    pub path: usize,
    pub call: usize,
}

/// `⟨proc, phi, bound⟩`: can `proc` reach `phi` over its formals within
/// `bound` nested calls?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub id: usize,
    pub proc: ProcId,
    pub phi: Formula,
    pub bound: u32,
    pub origin: Option<Origin>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Sum,
    Reach,
    Query,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Sum => "sum",
            Rule::Reach => "reach",
            Rule::Query => "query",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// A fact was added (`new` is false when it was already present) and
    /// the listed queries were answered by it.
    Fact { formula: Formula, new: bool, path: Option<usize>, answered: Vec<usize> },
    Spawned { query: Query },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    /// The bound of the run the step belongs to.
    pub run: u32,
    pub step: u64,
    pub rule: Rule,
    pub query: usize,
    pub proc: ProcId,
    pub bound: u32,
    pub phi: Formula,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub sum: u64,
    pub reach: u64,
    pub query: u64,
    pub projections: u64,
    pub interpolants: u64,
    pub solver_calls: u64,
}

impl EngineStats {
    pub fn steps(&self) -> u64 {
        self.sum + self.reach + self.query
    }

    pub fn add(&mut self, o: &EngineStats) {
        self.sum += o.sum;
        self.reach += o.reach;
        self.query += o.query;
        self.projections += o.projections;
        self.interpolants += o.interpolants;
        self.solver_calls += o.solver_calls;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("step budget of {0} rule applications exhausted")]
    Budget(u64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("interpolation failed: {0}")]
    Itp(#[from] ItpError),
    #[error("projection failed: {0}")]
    Qe(#[from] QeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("engine invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundedVerdict {
    Safe,
    Unsafe,
}

/// The state of one bounded-safety run. `rho` and `sigma` only grow.
#[derive(Debug)]
pub struct Engine<'p> {
    program: &'p Program,
    config: EngineConfig,
    kernel: Kernel,
    pub rho: AssertionMap,
    pub sigma: AssertionMap,
    queue: Vec<Query>,
    next_id: usize,
    run: u32,
    steps: u64,
    stats: EngineStats,
    trace: Vec<TraceEvent>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, config: EngineConfig, rho: AssertionMap, sigma: AssertionMap) -> Engine<'p> {
        let kernel = Kernel::new(config.kernel.clone());
        Engine { program, config, kernel, rho, sigma, queue: Vec::new(), next_id: 0, run: 0, steps: 0, stats: EngineStats::default(), trace: Vec::new() }
    }

    /// Queues `⟨proc, phi, bound⟩` and returns its id.
    pub fn enqueue(&mut self, proc: ProcId, phi: Formula, bound: u32, origin: Option<Origin>) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        self.queue.push(Query { id, proc, phi, bound, origin });
        id
    }

    pub fn queue(&self) -> &[Query] {
        &self.queue
    }

    pub fn stats(&self) -> EngineStats {
        EngineStats { solver_calls: self.kernel.stats.calls, ..self.stats.clone() }
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn into_maps(self) -> (AssertionMap, AssertionMap) {
        (self.rho, self.sigma)
    }

    /// Decides whether `main` satisfies `phi_safe` within bound `n`.
    pub fn run(&mut self, phi_safe: &Formula, n: u32) -> Result<BoundedVerdict, EngineError> {
        let main = self.program.main();
        self.run = n;
        self.enqueue(main, phi_safe.negate(), n, None);
        while !self.queue.is_empty() {
            if self.steps >= self.config.step_budget {
                return Err(EngineError::Budget(self.config.step_budget));
            }
            self.step()?;
        }
        let u = u_env(self.program, &self.rho, n as i64);
        let violation = Formula::and([u.get(main).clone(), phi_safe.negate()]);
        if self.kernel.is_sat(&violation)?.is_some() {
            Ok(BoundedVerdict::Unsafe)
        } else {
            Ok(BoundedVerdict::Safe)
        }
    }

    /// The queued query with the smallest bound, oldest first on ties.
    pub fn pick_next(&self) -> Option<usize> {
        (0..self.queue.len()).min_by_key(|&i| (self.queue[i].bound, self.queue[i].id))
    }

    /// Applies one rule to the next query. Returns `None` on an empty
    /// queue.
    pub fn step(&mut self) -> Result<Option<TraceEvent>, EngineError> {
        let Some(i) = self.pick_next() else { return Ok(None) };
        let q = self.queue[i].clone();
        self.steps += 1;
        let prev = q.bound as i64 - 1;
        let o = o_env(self.program, &self.sigma, prev);
        let body_sigma = self.body(q.proc, &o);
        let (rule, outcome) = if self.kernel.is_sat(&Formula::and([body_sigma.clone(), q.phi.clone()]))?.is_none() {
            if self.config.check_invariants {
                let u = u_env(self.program, &self.rho, prev);
                if self.reach_path(&q, &u)?.is_some() {
                    return Err(EngineError::Invariant(format!("query {} is answered both ways", q.id)));
                }
            }
            (Rule::Sum, self.apply_sum(&q, body_sigma)?)
        } else {
            let u = u_env(self.program, &self.rho, prev);
            match self.reach_path(&q, &u)? {
                Some((path, m)) => (Rule::Reach, self.apply_reach(&q, &u, path, &m)?),
                None => (Rule::Query, self.apply_query(&q, &o, &u)?),
            }
        };
        match rule {
            Rule::Sum => self.stats.sum += 1,
            Rule::Reach => self.stats.reach += 1,
            Rule::Query => self.stats.query += 1,
        }
        let event = TraceEvent { run: self.run, step: self.steps, rule, query: q.id, proc: q.proc, bound: q.bound, phi: q.phi, outcome };
        if self.config.record_trace {
            self.trace.push(event.clone());
        }
        Ok(Some(event))
    }

    /// `Body_P` with every call instantiated from `env`.
    fn body(&self, p: ProcId, env: &Environment) -> Formula {
        Formula::or(self.program.proc(p).paths.iter().map(|path| self.program.instantiate_path(path, |_| env)))
    }

    /// The first path that meets `φ` under `ρ`, with a witness.
    fn reach_path(&mut self, q: &Query, u: &Environment) -> Result<Option<(usize, Model)>, EngineError> {
        for (i, path) in self.program.proc(q.proc).paths.iter().enumerate() {
            let f = Formula::and([self.program.instantiate_path(path, |_| u), q.phi.clone()]);
            if let Some(m) = self.kernel.is_sat(&f)? {
                return Ok(Some((i, m)));
            }
        }
        Ok(None)
    }

    fn apply_sum(&mut self, q: &Query, body_sigma: Formula) -> Result<Outcome, EngineError> {
        let proc = self.program.proc(q.proc);
        let shared: BTreeSet<Var> = proc.formals().into_iter().collect();
        let iq = InterpolationQuery { a: body_sigma, b: q.phi.clone(), shared };
        let psi = itp(&mut self.kernel, &iq, self.config.itp_for(self.program.mode))?;
        self.stats.interpolants += 1;
        let (_, new) = self.sigma.insert(q.proc, q.bound, psi.clone(), None);
        let answered = self.sweep_summaries(q.proc, q.bound)?;
        self.expect_answered(q, &answered)?;
        Ok(Outcome::Fact { formula: psi, new, path: None, answered })
    }

    fn apply_reach(&mut self, q: &Query, u: &Environment, path_idx: usize, m: &Model) -> Result<Outcome, EngineError> {
        let proc = self.program.proc(q.proc);
        let path = &proc.paths[path_idx];
        let reach = self.program.instantiate_path(path, |_| u);
        let psi = self.project(&proc.locals, &reach, m)?;
        let mut calls = Vec::with_capacity(path.calls.len());
        for c in &path.calls {
            let fact = self
                .rho
                .within(c.callee, ..q.bound)
                .find(|(_, f)| m.eval(&self.program.call_instance(c, &f.formula)) == Ok(true))
                .map(|(id, _)| id)
                .ok_or_else(|| EngineError::Invariant(format!("no reachability fact of `{}` explains the witness", self.program.name(c.callee))))?;
            calls.push(fact);
        }
        let (_, new) = self.rho.insert(q.proc, q.bound, psi.clone(), Some(Provenance { path: path_idx, calls }));
        let mut answered = Vec::new();
        let mut keep = Vec::with_capacity(self.queue.len());
        for other in core::mem::take(&mut self.queue) {
            if other.proc == q.proc
                && other.bound >= q.bound
                && self.kernel.is_sat(&Formula::and([psi.clone(), other.phi.clone()]))?.is_some()
            {
                answered.push(other.id);
            } else {
                keep.push(other);
            }
        }
        self.queue = keep;
        self.expect_answered(q, &answered)?;
        Ok(Outcome::Fact { formula: psi, new, path: Some(path_idx), answered })
    }

    fn apply_query(&mut self, q: &Query, o: &Environment, u: &Environment) -> Result<Outcome, EngineError> {
        let program = self.program;
        let proc = program.proc(q.proc);
        let mut chosen = None;
        for (i, path) in proc.paths.iter().enumerate() {
            let f = Formula::and([program.instantiate_path(path, |_| o), q.phi.clone()]);
            if let Some(m) = self.kernel.is_sat(&f)? {
                chosen = Some((i, m));
                break;
            }
        }
        let Some((path_idx, mut m)) = chosen else {
            return Err(EngineError::Invariant(format!("no rule applies to query {}", q.id)));
        };
        let path = &proc.paths[path_idx];
        // Calls before `j` use σ, the rest ρ. All-ρ is unsat and all-σ is
        // sat; find the largest `j` that is still unsat.
        let mixed = |j: usize, skip: Option<usize>| {
            let calls = path.calls.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(i, c)| {
                let env = if i < j { o } else { u };
                program.call_instance(c, env.get(c.callee))
            });
            Formula::and(path.literals.iter().cloned().map(Formula::Lit).chain(calls).chain([q.phi.clone()]))
        };
        let mut split = None;
        for j in (0..path.calls.len()).rev() {
            match self.kernel.is_sat(&mixed(j, None))? {
                Some(next) => m = next,
                None => {
                    split = Some(j);
                    break;
                }
            }
        }
        let j = split.ok_or_else(|| EngineError::Invariant(format!("query {} has no split point", q.id)))?;
        let call = &path.calls[j];
        let context = mixed(j + 1, Some(j));
        let args: BTreeSet<&Var> = call.args.iter().collect();
        let elim: Vec<Var> = proc.vars().filter(|v| !args.contains(v)).cloned().collect();
        let psi = self.project(&elim, &context, &m)?;
        let eta = self.restate(call.callee, &call.args, &psi);
        let origin = Origin { query: q.id, path: path_idx, call: j };
        let id = self.enqueue(call.callee, eta.clone(), q.bound - 1, Some(origin));
        if self.config.check_invariants {
            self.check_pending(id)?;
        }
        Ok(Outcome::Spawned { query: Query { id, proc: call.callee, phi: eta, bound: q.bound - 1, origin: Some(origin) } })
    }

    /// `psi` over the call's arguments, restated over the callee's formals.
    fn restate(&self, callee: ProcId, args: &[Var], psi: &Formula) -> Formula {
        let formals = self.program.proc(callee).formals();
        let mut s = Subst::new();
        let mut eqs = Vec::new();
        for (i, a) in args.iter().enumerate() {
            match args[..i].iter().position(|b| b == a) {
                Some(k) => eqs.push(Formula::var_eq(&formals[k], &formals[i])),
                None => s.bind_var(a, &formals[i]),
            }
        }
        Formula::and(core::iter::once(psi.subst(&s)).chain(eqs))
    }

    fn project(&mut self, elim: &[Var], f: &Formula, m: &Model) -> Result<Formula, EngineError> {
        self.stats.projections += 1;
        Ok(match self.config.projection {
            Projection::Qe => project(elim, f, None, Strategy::Qe)?,
            Projection::Mbp => {
                let cube = Formula::cube(m.implicant(f)?);
                project(elim, &cube, Some(m), Strategy::Mbp)?
            }
        })
    }

    /// Drops the queries of `p` at bounds up to `b` that `σ` now refutes.
    fn sweep_summaries(&mut self, p: ProcId, b: u32) -> Result<Vec<usize>, EngineError> {
        let mut answered = Vec::new();
        let mut keep = Vec::with_capacity(self.queue.len());
        for other in core::mem::take(&mut self.queue) {
            if other.proc == p && other.bound <= b {
                let o = o_env(self.program, &self.sigma, other.bound as i64);
                let f = Formula::and([o.get(p).clone(), other.phi.clone()]);
                if self.kernel.is_sat(&f)?.is_none() {
                    answered.push(other.id);
                    continue;
                }
            }
            keep.push(other);
        }
        self.queue = keep;
        Ok(answered)
    }

    fn expect_answered(&self, q: &Query, answered: &[usize]) -> Result<(), EngineError> {
        if answered.contains(&q.id) {
            Ok(())
        } else {
            Err(EngineError::Invariant(format!("query {} survived the rule applied to it", q.id)))
        }
    }

    /// A pending query can neither be refuted by `σ` nor confirmed by `ρ`.
    fn check_pending(&mut self, id: usize) -> Result<(), EngineError> {
        let q = self.queue.iter().find(|q| q.id == id).cloned().expect("query was just queued");
        let o = o_env(self.program, &self.sigma, q.bound as i64);
        let u = u_env(self.program, &self.rho, q.bound as i64);
        let f = o.get(q.proc).clone();
        if self.kernel.is_sat(&Formula::and([f, q.phi.clone()]))?.is_none() {
            return Err(EngineError::Invariant(format!("new query {} is already refuted by σ", q.id)));
        }
        let f = u.get(q.proc).clone();
        if self.kernel.is_sat(&Formula::and([f, q.phi.clone()]))?.is_some() {
            return Err(EngineError::Invariant(format!("new query {} is already confirmed by ρ", q.id)));
        }
        Ok(())
    }
}

/// Runs bounded safety once, extending `rho` and `sigma`. On error the maps
/// hold whatever was derived before it.
pub fn run(
    program: &Program,
    phi_safe: &Formula,
    n: u32,
    rho: &mut AssertionMap,
    sigma: &mut AssertionMap,
    config: &EngineConfig,
) -> (Result<BoundedVerdict, EngineError>, EngineStats, Vec<TraceEvent>) {
    let mut engine = Engine::new(program, config.clone(), core::mem::take(rho), core::mem::take(sigma));
    let verdict = engine.run(phi_safe, n);
    let stats = engine.stats();
    let trace = core::mem::take(&mut engine.trace);
    (*rho, *sigma) = engine.into_maps();
    (verdict, stats, trace)
}
