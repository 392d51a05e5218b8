//! Program generators: scalable families and random programs for testing.

use rand::seq::SliceRandom;
use rand::Rng;

use recmc_core::logic::{CallAtom, Formula, LinTerm, Sort, Var};
use recmc_core::num::rat;
use recmc_core::program::{Mode, Procedure, ProcId, Program};

use crate::rpl::SourceUnit;

fn b(v: &Var) -> Formula {
    Formula::bool_var(v, true)
}

/// `main` calls `P1` twice, each `Pi` calls `P(i+1)` twice and `PN` flips
/// its bit. Every `Pi` thus composes an even number of flips except `PN`,
/// and `main` is the identity. The safe variant asserts `y = x`, the
/// unsafe one `y ≠ x`.
pub fn gen_bebop(n: usize, safe: bool) -> SourceUnit {
    assert!(n >= 1, "the family starts at one procedure");
    let (x, y, z) = (Var::new("x", Sort::Bool), Var::new("y", Sort::Bool), Var::new("z", Sort::Bool));
    let twice = |callee: usize| {
        Formula::and([
            Formula::call(ProcId(callee), vec![x.clone(), z.clone()]),
            Formula::call(ProcId(callee), vec![z.clone(), y.clone()]),
        ])
    };
    let mut procs = vec![Procedure::new("main", vec![x.clone()], vec![y.clone()], vec![z.clone()], twice(1)).expect("no path explosion")];
    for i in 1..=n {
        let name = format!("P{i}");
        let p = if i < n {
            Procedure::new(&name, vec![x.clone()], vec![y.clone()], vec![z.clone()], twice(i + 1))
        } else {
            Procedure::new(&name, vec![x.clone()], vec![y.clone()], vec![], Formula::iff(&b(&y), &b(&x).negate()))
        };
        procs.push(p.expect("no path explosion"));
    }
    let program = Program::new(Mode::Bool, procs, "main").expect("well-formed by construction");
    let same = Formula::iff(&b(&y), &b(&x));
    SourceUnit { program, property: if safe { same } else { same.negate() } }
}

/// A counter `L` that builds `x = y = i` one step per call, used by `M`
/// as `L(n) ; G` with property `y0 ≤ y`. Safe at every bound.
pub fn gen_gpdr_divergence() -> SourceUnit {
    let iv = |n: &str| Var::new(n, Sort::Int);
    let t = |n: &str| LinTerm::var(&Var::new(n, Sort::Int));
    let one = LinTerm::int(1);
    let (l, g) = (ProcId(1), ProcId(2));
    let main_body = Formula::and([
        Formula::call(l, vec![iv("n"), iv("x"), iv("y0"), iv("n")]),
        Formula::call(g, vec![iv("x"), iv("y")]),
        Formula::lt(&LinTerm::zero(), &t("n")),
    ]);
    let main = Procedure::new("M", vec![iv("y0")], vec![iv("y")], vec![iv("x"), iv("n")], main_body);
    let l_body = Formula::or([
        Formula::and([
            Formula::eq(&t("i"), &LinTerm::zero()),
            Formula::eq(&t("x"), &LinTerm::zero()),
            Formula::eq(&t("y"), &LinTerm::zero()),
        ]),
        Formula::and([
            Formula::call(l, vec![iv("n"), iv("x0"), iv("y0"), iv("i0")]),
            Formula::eq(&t("x"), &(&t("x0") + &one)),
            Formula::eq(&t("y"), &(&t("y0") + &one)),
            Formula::eq(&t("i"), &(&t("i0") + &one)),
            Formula::lt(&LinTerm::zero(), &t("i")),
        ]),
    ]);
    let lp = Procedure::new("L", vec![iv("n")], vec![iv("x"), iv("y"), iv("i")], vec![iv("x0"), iv("y0"), iv("i0")], l_body);
    let gp = Procedure::new("G", vec![iv("x0")], vec![iv("x1")], vec![], Formula::eq(&t("x1"), &(&t("x0") + &one)));
    let procs = vec![main.expect("small"), lp.expect("small"), gp.expect("small")];
    let program = Program::new(Mode::Int, procs, "M").expect("well-formed by construction");
    SourceUnit { program, property: Formula::le(&t("y0"), &t("y")) }
}

/// Size limits for `random_program`.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub procs: usize,
    /// Inputs plus outputs per procedure.
    pub params: usize,
    pub locals: usize,
    pub paths: usize,
    pub calls_per_path: usize,
    pub literals_per_path: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { procs: 3, params: 3, locals: 2, paths: 4, calls_per_path: 2, literals_per_path: 2 }
    }
}

fn random_literal(rng: &mut impl Rng, mode: Mode, vars: &[Var]) -> Formula {
    match mode {
        Mode::Bool => {
            let v = vars.choose(rng).expect("procedures have variables");
            if rng.gen_bool(0.3) {
                let w = vars.choose(rng).expect("procedures have variables");
                let eq = Formula::iff(&b(v), &b(w));
                if rng.gen_bool(0.5) {
                    eq
                } else {
                    eq.negate()
                }
            } else {
                Formula::bool_var(v, rng.gen_bool(0.5))
            }
        }
        Mode::Rat | Mode::Int => {
            let mut t = LinTerm::int(rng.gen_range(-3..=3));
            for _ in 0..rng.gen_range(1..=2) {
                let v = vars.choose(rng).expect("procedures have variables");
                let c = *[-2i64, -1, 1, 2].choose(rng).expect("nonempty");
                t = &t + &LinTerm::monomial(rat(c), v);
            }
            match rng.gen_range(0..3) {
                0 => Formula::lt(&t, &LinTerm::zero()),
                1 => Formula::le(&t, &LinTerm::zero()),
                _ => Formula::eq(&t, &LinTerm::zero()),
            }
        }
    }
}

/// A random well-formed program of the given mode. Calls may go to any
/// procedure, including recursive ones; the property is a random
/// combination of literals over `main`'s formals.
pub fn random_program(rng: &mut impl Rng, mode: Mode, limits: &Limits) -> SourceUnit {
    let sort = match mode {
        Mode::Bool => Sort::Bool,
        Mode::Rat => Sort::Rat,
        Mode::Int => Sort::Int,
    };
    let nprocs = rng.gen_range(1..=limits.procs);
    let mut shapes = Vec::new();
    for _ in 0..nprocs {
        let params = rng.gen_range(2..=limits.params.max(2));
        let ins = rng.gen_range(1..params);
        let locals = rng.gen_range(0..=limits.locals);
        let vs: Vec<Var> = (0..params + locals).map(|i| Var::new(&format!("v{i}"), sort)).collect();
        shapes.push((ins, params, vs));
    }
    let mut procs = Vec::new();
    for (i, (ins, params, vs)) in shapes.iter().enumerate() {
        let mut paths = Vec::new();
        for k in 0..rng.gen_range(1..=limits.paths) {
            let mut conj = Vec::new();
            for _ in 0..rng.gen_range(0..=limits.literals_per_path) {
                conj.push(random_literal(rng, mode, vs));
            }
            // Keep the first path call-free so every procedure has a base
            // case.
            let calls = if k == 0 { 0 } else { rng.gen_range(0..=limits.calls_per_path) };
            for _ in 0..calls {
                let callee = rng.gen_range(0..nprocs);
                let arity = shapes[callee].1;
                let args = (0..arity).map(|_| vs.choose(rng).expect("nonempty").clone()).collect();
                conj.push(Formula::Call(CallAtom { callee: ProcId(callee), args }));
            }
            paths.push(Formula::and(conj));
        }
        let (inputs, rest) = vs.split_at(*ins);
        let (outputs, locals) = rest.split_at(params - ins);
        let name = if i == 0 { "main".to_string() } else { format!("p{i}") };
        procs.push(Procedure::new(&name, inputs.to_vec(), outputs.to_vec(), locals.to_vec(), Formula::or(paths)).expect("small bodies"));
    }
    let formals = procs[0].formals();
    let mut property = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        property.push(random_literal(rng, mode, &formals));
    }
    let property = if rng.gen_bool(0.75) { Formula::or(property) } else { Formula::and(property) };
    let program = Program::new(mode, procs, "main").expect("well-formed by construction");
    SourceUnit { program, property }
}
