//! Iterative deepening over the call-stack bound, with proofs and
//! counterexamples checked before they are returned.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::engine::{self, BoundedVerdict, EngineConfig, EngineStats, TraceEvent};
use crate::kernel::{Kernel, KernelError};
use crate::logic::{Formula, LinTerm, Model, Var};
use crate::num::Rational;
use crate::program::{
    bool_bounded_semantics, o_env, u_env, valuation, AssertionMap, Environment, Mode, ProcId, Program, ProgramError,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    /// Largest call-stack bound tried before answering unknown.
    pub max_bound: u32,
    pub engine: EngineConfig,
    /// Drop proof conjuncts that are not needed for safety or
    /// inductiveness.
    pub minimize_proof: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { max_bound: 64, engine: EngineConfig::default(), minimize_proof: true }
    }
}

/// An environment that implies the property at `main` and is preserved by
/// every body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyProof {
    pub env: Environment,
    /// The bound at which the summaries became inductive.
    pub bound: u32,
}

/// One procedure activation of a counterexample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CexNode {
    pub proc: ProcId,
    /// Index into the procedure's paths.
    pub path: usize,
    /// Values of the formals and locals.
    pub model: Model,
    /// One child per call of the path, in path order.
    pub children: Vec<CexNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexampleTree {
    pub root: CexNode,
    pub bound: u32,
}

impl CexNode {
    pub fn depth(&self) -> u32 {
        1 + self.children.iter().map(CexNode::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(CexNode::size).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe(SafetyProof),
    Unsafe(CounterexampleTree),
    Unknown(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Safe(_) => "SAFE",
            Verdict::Unsafe(_) => "UNSAFE",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    /// The last bound a bounded run was started at.
    pub bound: u32,
    pub stats: EngineStats,
    pub rho: AssertionMap,
    pub sigma: AssertionMap,
    /// Rule applications of all bounded runs, when recorded.
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CexError {
    #[error("no path of `{0}` explains a reachability fact")]
    ProvenanceGap(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Checks `phi_safe`, a formula over the formals of `main`, for bounds
/// `0..=max_bound`.
pub fn check(program: &Program, phi_safe: &Formula, config: &CheckConfig) -> CheckOutcome {
    let mut out = CheckOutcome {
        verdict: Verdict::Unknown(String::new()),
        bound: 0,
        stats: EngineStats::default(),
        rho: AssertionMap::new(),
        sigma: AssertionMap::new(),
        trace: Vec::new(),
    };
    let mut kernel = Kernel::new(config.engine.kernel.clone());
    for n in 0..=config.max_bound {
        out.bound = n;
        let (verdict, stats, trace) = engine::run(program, phi_safe, n, &mut out.rho, &mut out.sigma, &config.engine);
        out.stats.add(&stats);
        out.trace.extend(trace);
        out.verdict = match verdict {
            Err(e) => Verdict::Unknown(e.to_string()),
            Ok(BoundedVerdict::Unsafe) => match build_cex(program, &out.rho, phi_safe, n, &mut kernel) {
                Ok(tree) if validate_cex(program, &tree, phi_safe) => Verdict::Unsafe(tree),
                Ok(_) => Verdict::Unknown("counterexample failed validation".into()),
                Err(e) => Verdict::Unknown(e.to_string()),
            },
            Ok(BoundedVerdict::Safe) => match check_inductive(program, &mut out.sigma, n, &mut kernel) {
                Err(e) => Verdict::Unknown(e.to_string()),
                Ok(false) => continue,
                Ok(true) => proof(program, &out.sigma, phi_safe, n, config),
            },
        };
        return out;
    }
    out.verdict = Verdict::Unknown("bound exhausted".into());
    out
}

fn proof(program: &Program, sigma: &AssertionMap, phi_safe: &Formula, n: u32, config: &CheckConfig) -> Verdict {
    let mut p = SafetyProof { env: o_env(program, sigma, n as i64), bound: n };
    if config.minimize_proof {
        let mut k = Kernel::new(config.engine.kernel.clone());
        match minimize_proof(program, &p.env, phi_safe, &mut k) {
            Ok(env) => p.env = env,
            Err(e) => return Verdict::Unknown(e.to_string()),
        }
    }
    if validate_proof(program, &p, phi_safe) {
        Verdict::Safe(p)
    } else {
        Verdict::Unknown("proof failed validation".into())
    }
}

/// Pushes summary facts one level up wherever the body under the current
/// level's summaries implies them, lowest level first. Inductive when
/// every fact at level `n` moved up.
pub fn check_inductive(program: &Program, sigma: &mut AssertionMap, n: u32, k: &mut Kernel) -> Result<bool, KernelError> {
    let mut inductive = true;
    for level in 0..=n {
        let env = o_env(program, sigma, level as i64);
        for (p, proc) in program.procs() {
            let body = program.instantiate(&proc.body, &env);
            let facts: Vec<Formula> = sigma.at(p, level).map(|(_, f)| f.formula.clone()).collect();
            for delta in facts {
                if k.entails(&body, &delta)? {
                    sigma.insert(p, level + 1, delta, None);
                } else if level == n {
                    inductive = false;
                }
            }
        }
    }
    Ok(inductive)
}

/// Procedures whose bodies call `p`.
fn callers(program: &Program, p: ProcId) -> Vec<ProcId> {
    program.procs().filter(|(_, q)| q.body.calls().iter().any(|c| c.callee == p)).map(|(id, _)| id).collect()
}

/// Removes conjuncts one at a time as long as the environment stays safe
/// and inductive. The result has no removable conjunct.
pub fn minimize_proof(program: &Program, env: &Environment, phi_safe: &Formula, k: &mut Kernel) -> Result<Environment, KernelError> {
    let mut parts: Vec<Vec<Formula>> = env.iter().map(|(_, f)| f.conjuncts()).collect();
    let build = |parts: &[Vec<Formula>]| Environment::from_vec(parts.iter().map(|c| Formula::and(c.iter().cloned())).collect());
    // Weakening one procedure's formula can make a conjunct of a caller
    // removable, so repeat until nothing changes.
    let mut changed = true;
    while changed {
        changed = false;
        for (p, _) in program.procs() {
            let users = callers(program, p);
            let mut i = 0;
            while i < parts[p.0].len() {
                let removed = parts[p.0].remove(i);
                let candidate = build(&parts);
                let mut ok = p != program.main() || k.entails(candidate.get(p), phi_safe)?;
                for &q in &users {
                    if !ok {
                        break;
                    }
                    let body = program.instantiate(&program.proc(q).body, &candidate);
                    ok = k.entails(&body, candidate.get(q))?;
                }
                if ok {
                    changed = true;
                } else {
                    parts[p.0].insert(i, removed);
                    i += 1;
                }
            }
        }
    }
    Ok(build(&parts))
}

/// Checks with a fresh kernel that the proof implies the property at
/// `main` and that every body implies its procedure's formula.
pub fn validate_proof(program: &Program, proof: &SafetyProof, phi_safe: &Formula) -> bool {
    let mut k = Kernel::default();
    let safe = k.entails(proof.env.get(program.main()), phi_safe);
    if safe != Ok(true) {
        return false;
    }
    program.procs().all(|(p, proc)| {
        let body = program.instantiate(&proc.body, &proof.env);
        k.entails(&body, proof.env.get(p)) == Ok(true)
    })
}

fn complete(m: &Model, vars: impl IntoIterator<Item = Var>) -> Model {
    let mut out = Model::new();
    for v in vars {
        match m.get(&v) {
            Some(val) => out.set(&v, val.clone()),
            None if v.is_bool() => out.set_bool(&v, false),
            None => out.set_num(&v, Rational::from_integer(0.into())),
        }
    }
    out
}

/// Formula fixing `vars[i]` to the value `m` gives `from[i]`.
fn pin_as(m: &Model, from: &[Var], vars: &[Var]) -> Formula {
    Formula::and(from.iter().zip(vars).map(|(a, f)| {
        if f.is_bool() {
            Formula::bool_var(f, m.boolean(a).unwrap_or(false))
        } else {
            let v = m.num(a).cloned().unwrap_or_else(|_| Rational::from_integer(0.into()));
            Formula::eq(&LinTerm::var(f), &LinTerm::constant(v))
        }
    }))
}

/// A counterexample from the reachability facts of `main` at bounds up to
/// `n` that violate the property. Node models are solved again here, one
/// activation at a time, with the formals pinned to the caller's values.
pub fn build_cex(
    program: &Program,
    rho: &AssertionMap,
    phi_safe: &Formula,
    n: u32,
    k: &mut Kernel,
) -> Result<CounterexampleTree, CexError> {
    let main = program.main();
    let formals = program.proc(main).formals();
    for (id, fact) in rho.within(main, ..=n) {
        if let Some(m) = k.is_sat(&Formula::and([fact.formula.clone(), phi_safe.negate()]))? {
            let pin = pin_as(&m, &formals, &formals);
            let root = expand(program, rho, main, fact.bound, pin, rho.get(id).provenance.as_ref().map(|p| p.path), k)?;
            return Ok(CounterexampleTree { root, bound: n });
        }
    }
    Err(CexError::ProvenanceGap(program.name(main).into()))
}

fn expand(
    program: &Program,
    rho: &AssertionMap,
    p: ProcId,
    bound: u32,
    pin: Formula,
    hint: Option<usize>,
    k: &mut Kernel,
) -> Result<CexNode, CexError> {
    let proc = program.proc(p);
    let u = u_env(program, rho, bound as i64 - 1);
    let order = hint.into_iter().chain((0..proc.paths.len()).filter(|i| Some(*i) != hint));
    for i in order {
        let path = &proc.paths[i];
        let f = Formula::and([program.instantiate_path(path, |_| &u), pin.clone()]);
        let Some(m) = k.is_sat(&f)? else { continue };
        let mut children = Vec::with_capacity(path.calls.len());
        for c in &path.calls {
            let (id, fact) = rho
                .within(c.callee, ..bound)
                .find(|(_, g)| m.eval(&program.call_instance(c, &g.formula)) == Ok(true))
                .ok_or_else(|| CexError::ProvenanceGap(program.name(c.callee).into()))?;
            let callee_formals = program.proc(c.callee).formals();
            let child_pin = pin_as(&m, &c.args, &callee_formals);
            let hint = rho.get(id).provenance.as_ref().map(|p| p.path);
            children.push(expand(program, rho, c.callee, fact.bound, child_pin, hint, k)?);
        }
        let model = complete(&m, proc.vars().cloned());
        return Ok(CexNode { proc: p, path: i, model, children });
    }
    Err(CexError::ProvenanceGap(proc.name.clone()))
}

/// Checks a counterexample against the program alone: every node's model
/// satisfies its path, children agree with the call arguments, leaves make
/// no calls and the root violates the property. Boolean counterexamples
/// are also checked against explicit enumeration.
pub fn validate_cex(program: &Program, tree: &CounterexampleTree, phi_safe: &Formula) -> bool {
    let root = &tree.root;
    if root.proc != program.main() || root.depth() > tree.bound + 1 || !node_ok(program, root) {
        return false;
    }
    if root.model.eval(phi_safe) != Ok(false) {
        return false;
    }
    if program.mode == Mode::Bool {
        if let Ok(sem) = bool_bounded_semantics(program, tree.bound) {
            let v = valuation(&root.model, &program.proc(root.proc).formals());
            return sem[root.proc.0].contains(&v);
        }
    }
    true
}

fn node_ok(program: &Program, node: &CexNode) -> bool {
    let proc = program.proc(node.proc);
    let Some(path) = proc.paths.get(node.path) else { return false };
    if path.calls.len() != node.children.len() || proc.vars().any(|v| node.model.get(v).is_none()) {
        return false;
    }
    if !path.literals.iter().all(|l| node.model.eval_literal(l) == Ok(true)) {
        return false;
    }
    path.calls.iter().zip(&node.children).all(|(c, child)| {
        child.proc == c.callee
            && program.proc(c.callee).formals().iter().zip(&c.args).all(|(f, a)| {
                let (x, y) = (child.model.get(f), node.model.get(a));
                x.is_some() && x == y
            })
            && node_ok(program, child)
    })
}

/// Facts of a boolean program that break `ρ ⊆ [[P]]^b ⊆ σ` at their own
/// bound, described for a failure message.
pub fn sandwich_violations(program: &Program, rho: &AssertionMap, sigma: &AssertionMap) -> Result<Vec<String>, ProgramError> {
    let top = rho.max_bound().into_iter().chain(sigma.max_bound()).max().unwrap_or(0);
    let mut sems = Vec::new();
    for b in 0..=top {
        sems.push(bool_bounded_semantics(program, b)?);
    }
    let mut bad = Vec::new();
    for (map, under) in [(rho, true), (sigma, false)] {
        for (_, fact) in map.iter() {
            let formals = program.proc(fact.proc).formals();
            let sem = &sems[fact.bound as usize][fact.proc.0];
            for bits in 0u64..(1 << formals.len()) {
                let mut m = Model::new();
                for (i, v) in formals.iter().enumerate() {
                    m.set_bool(v, bits & (1 << i) != 0);
                }
                let holds = m.eval(&fact.formula) == Ok(true);
                let real = sem.contains(&valuation(&m, &formals));
                if (under && holds && !real) || (!under && real && !holds) {
                    let kind = if under { "reachability" } else { "summary" };
                    bad.push(format!("{kind} fact {} of `{}` at {}, valuation {m}", fact.formula, program.name(fact.proc), fact.bound));
                    break;
                }
            }
        }
    }
    Ok(bad)
}
