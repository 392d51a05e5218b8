//! Line-oriented witness, statistics and trace output.
//!
//! A witness starts with `recmc-witness 1`, then `verdict SAFE|UNSAFE|UNKNOWN`.
//! Safe witnesses list one proof formula per procedure, in declaration
//! order, between `proof` and `end`:
//!
//! ```text
//! recmc-witness 1
//! verdict SAFE
//! bound 1
//! proof
//! M (<= (+ 4 (* 2 m)) m0)
//! T (<= (* 2 t) t0)
//! D (<= (+ 1 d) d0)
//! end
//! ```
//!
//! Unsafe witnesses list the counterexample's activations in preorder
//! between `counterexample` and `end`, one per line:
//!
//! ```text
//! node 1 parent 0 call 0 proc T path 0 t0=0 t=0 l0=0 l1=0
//! ```
//!
//! with the root's parent and call written as `-`. Values follow the
//! procedure's inputs, outputs and locals. Unknown witnesses carry only a
//! `reason` line.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::str::FromStr;

use recmc_core::driver::{CexNode, CounterexampleTree, SafetyProof, Verdict};
use recmc_core::engine::{EngineStats, Outcome, TraceEvent};
use recmc_core::logic::{Model, Value};
use recmc_core::num::{Integer, Rational};
use recmc_core::program::{Environment, ProcId, Program};

use crate::rpl::{formula_text, parse_formula, ParseError};

pub const HEADER: &str = "recmc-witness 1";

#[derive(Debug, thiserror::Error)]
pub enum WitnessError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {source}")]
    Formula { line: usize, source: ParseError },
}

pub fn emit_witness(program: &Program, verdict: &Verdict, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "verdict {}", verdict.name())?;
    match verdict {
        Verdict::Safe(proof) => {
            writeln!(out, "bound {}", proof.bound)?;
            writeln!(out, "proof")?;
            for (p, f) in proof.env.iter() {
                writeln!(out, "{} {}", program.name(p), formula_text(program, f))?;
            }
            writeln!(out, "end")
        }
        Verdict::Unsafe(tree) => {
            writeln!(out, "bound {}", tree.bound)?;
            writeln!(out, "counterexample")?;
            let mut next = 0;
            emit_node(program, &tree.root, None, &mut next, out)?;
            writeln!(out, "end")
        }
        Verdict::Unknown(reason) => writeln!(out, "reason {reason}"),
    }
}

fn emit_node(program: &Program, node: &CexNode, parent: Option<(usize, usize)>, next: &mut usize, out: &mut dyn Write) -> io::Result<()> {
    let id = *next;
    *next += 1;
    let (p, c) = match parent {
        Some((p, c)) => (p.to_string(), c.to_string()),
        None => ("-".into(), "-".into()),
    };
    write!(out, "node {id} parent {p} call {c} proc {} path {}", program.name(node.proc), node.path)?;
    for v in program.proc(node.proc).vars() {
        match node.model.get(v) {
            Some(val) => write!(out, " {v}={val}")?,
            None => write!(out, " {v}=?")?,
        }
    }
    writeln!(out)?;
    for (i, child) in node.children.iter().enumerate() {
        emit_node(program, child, Some((id, i)), next, out)?;
    }
    Ok(())
}

fn bad(line: usize, message: impl Into<String>) -> WitnessError {
    WitnessError::Format { line, message: message.into() }
}

/// Reads a witness back against the program it was produced for.
pub fn read_witness(program: &Program, text: &str) -> Result<Verdict, WitnessError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut expect = |what: &str| -> Result<(usize, &str), WitnessError> {
        lines.next().ok_or_else(|| bad(0, format!("missing {what}")))
    };
    let (n, header) = expect("header")?;
    if header != HEADER {
        return Err(bad(n, "not a recmc witness"));
    }
    let (n, verdict) = expect("verdict")?;
    let verdict = verdict.strip_prefix("verdict ").ok_or_else(|| bad(n, "expected `verdict`"))?;
    if verdict == "UNKNOWN" {
        let (n, reason) = expect("reason")?;
        let reason = reason.strip_prefix("reason ").ok_or_else(|| bad(n, "expected `reason`"))?;
        return Ok(Verdict::Unknown(reason.into()));
    }
    let (n, bound) = expect("bound")?;
    let bound: u32 = bound.strip_prefix("bound ").and_then(|b| b.parse().ok()).ok_or_else(|| bad(n, "expected `bound N`"))?;
    let (n, section) = expect("section")?;
    let mut body = Vec::new();
    loop {
        let (n, l) = expect("`end`")?;
        if l == "end" {
            break;
        }
        body.push((n, l));
    }
    match (verdict, section) {
        ("SAFE", "proof") => {
            let mut env = Environment::constant(program, true);
            let mut seen = vec![false; program.len()];
            for (n, l) in body {
                let (name, f) = l.split_once(' ').ok_or_else(|| bad(n, "expected `PROC FORMULA`"))?;
                let p = program.lookup(name).ok_or_else(|| bad(n, format!("unknown procedure `{name}`")))?;
                let f = parse_formula(program, p, f).map_err(|source| WitnessError::Formula { line: n, source })?;
                env.set(p, f);
                seen[p.0] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(bad(n, "proof misses a procedure"));
            }
            Ok(Verdict::Safe(SafetyProof { env, bound }))
        }
        ("UNSAFE", "counterexample") => {
            let mut nodes: Vec<(Option<(usize, usize)>, CexNode)> = Vec::new();
            for (n, l) in body {
                nodes.push(read_node(program, n, l, nodes.len())?);
            }
            // Preorder: every parent precedes its children.
            while nodes.len() > 1 {
                let (parent, node) = nodes.pop().expect("more than one node");
                let (p, _) = parent.ok_or_else(|| bad(0, "second root"))?;
                let slot = nodes.get_mut(p).ok_or_else(|| bad(0, "parent after child"))?;
                slot.1.children.insert(0, node);
            }
            let (_, root) = nodes.pop().ok_or_else(|| bad(n, "empty counterexample"))?;
            Ok(Verdict::Unsafe(CounterexampleTree { root, bound }))
        }
        _ => Err(bad(n, format!("unexpected section `{section}` for {verdict}"))),
    }
}

fn read_node(program: &Program, n: usize, line: &str, expected_id: usize) -> Result<(Option<(usize, usize)>, CexNode), WitnessError> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let [kw_node, id, kw_parent, parent, kw_call, call, kw_proc, proc, kw_path, path, values @ ..] = words.as_slice() else {
        return Err(bad(n, "malformed node"));
    };
    if [*kw_node, *kw_parent, *kw_call, *kw_proc, *kw_path] != ["node", "parent", "call", "proc", "path"] {
        return Err(bad(n, "malformed node"));
    }
    if id.parse::<usize>().ok() != Some(expected_id) {
        return Err(bad(n, "nodes must be numbered in order"));
    }
    let parent = match (*parent, *call) {
        ("-", "-") => None,
        (p, c) => Some((p.parse().map_err(|_| bad(n, "bad parent"))?, c.parse().map_err(|_| bad(n, "bad call"))?)),
    };
    let proc: ProcId = program.lookup(proc).ok_or_else(|| bad(n, format!("unknown procedure `{proc}`")))?;
    let path = path.parse().map_err(|_| bad(n, "bad path index"))?;
    let vars: BTreeMap<&str, _> = program.proc(proc).vars().map(|v| (v.name(), v)).collect();
    let mut model = Model::new();
    for kv in values {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(n, format!("expected `var=value`, got `{kv}`")))?;
        let var = vars.get(k).ok_or_else(|| bad(n, format!("unknown variable `{k}`")))?;
        let value = match v {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::Num(parse_value(v).ok_or_else(|| bad(n, format!("bad value `{v}`")))?),
        };
        model.set(var, value);
    }
    Ok((parent, CexNode { proc, path, model, children: Vec::new() }))
}

fn parse_value(s: &str) -> Option<Rational> {
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    Some(Rational::new(Integer::from_str(a).ok()?, Integer::from_str(b).ok()?))
}

pub fn emit_stats(stats: &EngineStats, bound: u32, wall_ms: u128, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "steps {}", stats.steps())?;
    writeln!(out, "sum {}", stats.sum)?;
    writeln!(out, "reach {}", stats.reach)?;
    writeln!(out, "query {}", stats.query)?;
    writeln!(out, "projections {}", stats.projections)?;
    writeln!(out, "interpolants {}", stats.interpolants)?;
    writeln!(out, "solver-calls {}", stats.solver_calls)?;
    writeln!(out, "bound {bound}")?;
    writeln!(out, "wall-ms {wall_ms}")
}

/// `RUN STEP RULE QUERY PROC BOUND OUTCOME`, one line per rule application.
pub fn trace_line(program: &Program, e: &TraceEvent) -> String {
    let head = format!("{} {} {} q{} {} {}", e.run, e.step, e.rule, e.query, program.name(e.proc), e.bound);
    match &e.outcome {
        Outcome::Fact { formula, new, answered, .. } => {
            let answered: Vec<String> = answered.iter().map(|q| format!("q{q}")).collect();
            format!(
                "{head} fact{} answers={} {}",
                if *new { "" } else { "(dup)" },
                answered.join(","),
                formula_text(program, formula)
            )
        }
        Outcome::Spawned { query } => format!(
            "{head} spawn q{} {} {} {}",
            query.id,
            program.name(query.proc),
            query.bound,
            formula_text(program, &query.phi)
        ),
    }
}
