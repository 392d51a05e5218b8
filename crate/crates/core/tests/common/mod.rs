#![allow(dead_code)]

pub mod overview;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use recmc_core::logic::{CmpOp, Formula, LinTerm, Literal, Model, Sort, Var};
use recmc_core::num::{int, rat, Rational};

pub fn vars(sort: Sort, n: usize) -> Vec<Var> {
    (0..n).map(|i| Var::new(&format!("v{i}"), sort)).collect()
}

pub fn random_term(rng: &mut ChaCha8Rng, vars: &[Var], max_coeff: i64) -> LinTerm {
    let mut t = LinTerm::int(rng.gen_range(-max_coeff..=max_coeff));
    let k = rng.gen_range(1..=vars.len().min(3));
    for _ in 0..k {
        let v = &vars[rng.gen_range(0..vars.len())];
        let c = rng.gen_range(-max_coeff..=max_coeff);
        t = &t + &LinTerm::monomial(rat(c), v);
    }
    t
}

pub fn random_literal(rng: &mut ChaCha8Rng, vars: &[Var]) -> Formula {
    if vars[0].is_bool() {
        let v = &vars[rng.gen_range(0..vars.len())];
        return Formula::bool_var(v, rng.gen_bool(0.5));
    }
    let t = random_term(rng, vars, 4);
    let integer = vars[0].sort() == Sort::Int;
    match rng.gen_range(0..10) {
        0..=3 => Literal::cmp(CmpOp::Le, t),
        4..=6 => Literal::cmp(CmpOp::Lt, t),
        7 | 8 => Literal::cmp(CmpOp::Eq, t),
        _ if integer => Literal::divides(int(rng.gen_range(2..5)), t, rng.gen_bool(0.5)),
        _ => Literal::cmp(CmpOp::Eq, t).negate(),
    }
}

pub fn random_formula(rng: &mut ChaCha8Rng, vars: &[Var], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return random_literal(rng, vars);
    }
    let n = rng.gen_range(2..=3);
    let children: Vec<Formula> = (0..n).map(|_| random_formula(rng, vars, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        Formula::and(children)
    } else {
        Formula::or(children)
    }
}

/// Every assignment of the boolean variables.
pub fn truth_table_sat(f: &Formula, vars: &[Var]) -> bool {
    (0u32..1 << vars.len()).any(|bits| {
        let mut m = Model::new();
        for (i, v) in vars.iter().enumerate() {
            m.set_bool(v, bits >> i & 1 == 1);
        }
        m.eval(f).unwrap()
    })
}

/// Every integer point of the box `[-b, b]^n`.
pub fn box_points(vars: &[Var], b: i64) -> Vec<Model> {
    let mut out = vec![Model::new()];
    for v in vars {
        let mut next = Vec::new();
        for m in &out {
            for x in -b..=b {
                let mut m2 = m.clone();
                m2.set_num(v, rat(x));
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

pub fn box_formula(vars: &[Var], b: i64) -> Formula {
    Formula::and(vars.iter().flat_map(|v| {
        let t = LinTerm::var(v);
        [Formula::le(&LinTerm::int(-b), &t), Formula::le(&t, &LinTerm::int(b))]
    }))
}

/// `sum(coeffs) + constant < 0` (strict) or `<= 0`.
#[derive(Clone, Debug)]
struct Ineq {
    coeffs: BTreeMap<Var, Rational>,
    constant: Rational,
    strict: bool,
}

fn ineqs_of(lit: &Literal) -> Vec<Ineq> {
    let Literal::Cmp { op, term } = lit else { panic!("not a comparison") };
    let mk = |t: &LinTerm, strict| Ineq { coeffs: t.coeffs().clone(), constant: t.constant_part().clone(), strict };
    match op {
        CmpOp::Lt => vec![mk(term, true)],
        CmpOp::Le => vec![mk(term, false)],
        CmpOp::Eq => vec![mk(term, false), mk(&-term.clone(), false)],
    }
}

/// Fourier-Motzkin feasibility of a conjunction over the rationals.
pub fn fm_feasible(lits: &[Literal]) -> bool {
    let mut sys: Vec<Ineq> = lits.iter().flat_map(ineqs_of).collect();
    while let Some(x) = sys.iter().flat_map(|i| i.coeffs.keys()).next().cloned() {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for i in sys {
            match i.coeffs.get(&x).map(|c| c > &rat(0)) {
                Some(true) => pos.push(i),
                Some(false) => neg.push(i),
                None => rest.push(i),
            }
        }
        for p in &pos {
            for n in &neg {
                let a = p.coeffs[&x].clone();
                let b = -n.coeffs[&x].clone();
                let mut coeffs: BTreeMap<Var, Rational> = BTreeMap::new();
                for (v, c) in &p.coeffs {
                    *coeffs.entry(v.clone()).or_insert_with(|| rat(0)) += c * &b;
                }
                for (v, c) in &n.coeffs {
                    *coeffs.entry(v.clone()).or_insert_with(|| rat(0)) += c * &a;
                }
                coeffs.retain(|_, c| *c != rat(0));
                rest.push(Ineq {
                    coeffs,
                    constant: &p.constant * &b + &n.constant * &a,
                    strict: p.strict || n.strict,
                });
            }
        }
        sys = rest;
    }
    sys.iter().all(|i| if i.strict { i.constant < rat(0) } else { i.constant <= rat(0) })
}

/// Disjunctive normal form of a call-free NNF formula.
pub fn dnf(f: &Formula) -> Vec<Vec<Literal>> {
    match f {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Lit(l) => vec![vec![l.clone()]],
        Formula::Or(cs) => cs.iter().flat_map(dnf).collect(),
        Formula::And(cs) => {
            let mut acc = vec![vec![]];
            for c in cs {
                let d = dnf(c);
                acc = acc
                    .iter()
                    .flat_map(|a| {
                        d.iter().map(move |b| {
                            let mut x: Vec<Literal> = a.clone();
                            x.extend(b.iter().cloned());
                            x
                        })
                    })
                    .collect();
            }
            acc
        }
        Formula::Call(_) => panic!("call in formula"),
    }
}

pub fn lra_sat(f: &Formula) -> bool {
    dnf(f).iter().any(|c| fm_feasible(c))
}

/// A random and/or combination of exactly `lits` literals.
pub fn random_small_formula(rng: &mut ChaCha8Rng, vars: &[Var], lits: usize) -> Formula {
    if lits <= 1 {
        return random_literal(rng, vars);
    }
    let left = rng.gen_range(1..lits);
    let a = random_small_formula(rng, vars, left);
    let b = random_small_formula(rng, vars, lits - left);
    if rng.gen_bool(0.6) {
        Formula::and([a, b])
    } else {
        Formula::or([a, b])
    }
}
