//! Integer satisfiability for a conjunction of arithmetic literals:
//! divisibility is compiled to equalities, equalities are eliminated by
//! Euclid steps, and the remaining inequalities go to branch-and-bound.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::cooper::{self, Decision};
use super::simplex::{cmp_bounds, DeltaRat, Simplex};
use crate::logic::{divides_value, CmpOp, Formula, LinTerm, Literal, Model, Sort, Subst, Var};
use crate::num::{floor, is_integral, lcm, rat_from, Integer, Rational};

pub(crate) enum LiaResult {
    Sat(Model),
    Unsat,
    Unknown,
}

struct Problem {
    eqs: Vec<LinTerm>,
    ineqs: Vec<(CmpOp, LinTerm)>,
    defs: Vec<(Var, LinTerm)>,
    avoid: BTreeSet<Var>,
}

impl Problem {
    fn fresh(&mut self, stem: &str) -> Var {
        let v = Var::fresh_from(stem, Sort::Int, &self.avoid, self.avoid.len());
        self.avoid.insert(v.clone());
        v
    }

    fn eliminate(&mut self, x: &Var, by: &LinTerm) {
        for e in &mut self.eqs {
            if e.contains(x) {
                *e = e.substitute(x, by);
            }
        }
        for (_, t) in &mut self.ineqs {
            if t.contains(x) {
                *t = t.substitute(x, by);
            }
        }
        self.defs.push((x.clone(), by.clone()));
    }

    /// Solves one equality. Returns false on a divisibility clash.
    fn solve_eq(&mut self, e: LinTerm) -> bool {
        if e.is_constant() {
            return e.constant_part().is_zero();
        }
        if let Some((x, a)) = e.coeffs().iter().find(|(v, _)| v.sort() != Sort::Int) {
            let (x, a) = (x.clone(), a.clone());
            let by = e.without(&x).scale(&(-Rational::one() / a));
            self.eliminate(&x, &by);
            return true;
        }
        let e = match Literal::cmp(CmpOp::Eq, e) {
            Formula::True => return true,
            Formula::False => return false,
            Formula::Lit(Literal::Cmp { term, .. }) => term,
            other => unreachable!("equality canonicalized to {other:?}"),
        };
        let (x, a) = e
            .coeffs()
            .iter()
            .min_by(|(_, p), (_, q)| p.abs().cmp(&q.abs()))
            .map(|(v, c)| (v.clone(), c.clone()))
            .expect("non-constant equality");
        if a.abs().is_one() {
            let by = e.without(&x).scale(&(-Rational::one() / a));
            self.eliminate(&x, &by);
            return true;
        }
        let e = if a.is_negative() { -e } else { e };
        let a = a.abs();
        // x = t - sum(q_i y_i) - q_c with q = floor(coeff / a).
        let t = self.fresh("t");
        let mut by = LinTerm::var(&t);
        for (y, c) in e.coeffs() {
            if *y != x {
                by.add_coeff(y, &-rat_from(&floor(&(c / &a))));
            }
        }
        by.add_constant(&-rat_from(&floor(&(e.constant_part() / &a))));
        let reduced = e.substitute(&x, &by);
        self.eliminate(&x, &by);
        self.eqs.push(reduced);
        true
    }
}

/// Decides a conjunction of arithmetic literals over mixed integer and
/// rational variables. `budget` bounds the number of branch-and-bound nodes.
pub(crate) fn solve(lits: &[Literal], budget: u64) -> LiaResult {
    let mut vars = BTreeSet::new();
    for l in lits {
        l.collect_vars(&mut vars);
    }
    if let Some(res) = residue_classes(lits, RESIDUE_CLASSES) {
        return split_residues(lits, &vars, res, budget);
    }
    let pure = vars.iter().all(|v| v.sort() == Sort::Int);
    let mut p = Problem { eqs: Vec::new(), ineqs: Vec::new(), defs: Vec::new(), avoid: vars.clone() };
    for l in lits {
        match l {
            Literal::Bool { .. } => panic!("boolean literal in arithmetic solver"),
            Literal::Cmp { op: CmpOp::Eq, term } => p.eqs.push(term.clone()),
            Literal::Cmp { op, term } => p.ineqs.push((*op, term.clone())),
            Literal::Div { d, term, positive } => {
                let k = p.fresh("k");
                let mut t = term - &LinTerm::monomial(rat_from(d), &k);
                if !positive {
                    let r = p.fresh("r");
                    t = &t - &LinTerm::var(&r);
                    p.ineqs.push((CmpOp::Le, &LinTerm::int(1) - &LinTerm::var(&r)));
                    p.ineqs.push((CmpOp::Le, &LinTerm::var(&r) - &LinTerm::constant(rat_from(&(d - 1u32)))));
                }
                p.eqs.push(t);
            }
        }
    }
    let assignment = match decide_problem(p, pure, budget) {
        Decision::Sat(m) => m,
        Decision::Unsat => return LiaResult::Unsat,
        Decision::Unknown if pure => return by_test_points(lits, &vars, budget),
        Decision::Unknown => return LiaResult::Unknown,
    };
    let mut model = Model::new();
    for v in &vars {
        model.set_num(v, assignment.get(v).cloned().unwrap_or_else(Rational::zero));
    }
    debug_assert!(lits.iter().all(|l| model.eval_literal(l) == Ok(true)));
    LiaResult::Sat(model)
}

/// Widest band `c <= t <= c + w` that is split into `w + 1` equalities.
const BAND: i64 = 8;

/// Eliminates the equalities, then looks for a solution of the remaining
/// inequalities. The assignment covers the eliminated variables too.
fn decide_problem(mut p: Problem, pure: bool, budget: u64) -> Decision {
    let ineqs = loop {
        while let Some(e) = p.eqs.pop() {
            if !p.solve_eq(e) {
                return Decision::Unsat;
            }
        }
        let mut ineqs: BTreeSet<(CmpOp, LinTerm)> = BTreeSet::new();
        for (op, t) in core::mem::take(&mut p.ineqs) {
            match Literal::cmp(op, t) {
                Formula::True => {}
                Formula::False => return Decision::Unsat,
                Formula::Lit(Literal::Cmp { op, term }) => {
                    ineqs.insert((op, term));
                }
                other => unreachable!("inequality canonicalized to {other:?}"),
            }
        }
        // t <= 0 and -t <= 0 together are an equality.
        let opposite = ineqs.iter().find(|(op, t)| *op == CmpOp::Le && ineqs.contains(&(CmpOp::Le, -t.clone()))).cloned();
        match opposite {
            Some((_, t)) => {
                ineqs.remove(&(CmpOp::Le, -t.clone()));
                ineqs.remove(&(CmpOp::Le, t.clone()));
                p.eqs.push(t);
                p.ineqs = ineqs.into_iter().collect();
            }
            None => break ineqs.into_iter().collect::<Vec<_>>(),
        }
    };
    let mut columns: BTreeMap<Var, usize> = BTreeMap::new();
    for (_, t) in &ineqs {
        for v in t.vars() {
            let next = columns.len();
            columns.entry(v.clone()).or_insert(next);
        }
    }
    let ints: Vec<(Var, usize)> =
        columns.iter().filter(|(v, _)| v.sort() == Sort::Int).map(|(v, c)| (v.clone(), *c)).collect();
    let mut assignment = match cube_test(&ineqs, &columns) {
        Some(values) => to_map(&values, &columns),
        None => match search(&ineqs, &columns, &ints, budget, pure) {
            Decision::Sat(m) => m,
            Decision::Unsat => return Decision::Unsat,
            Decision::Unknown => return split_band(p, ineqs, pure, budget),
        },
    };
    for (x, by) in p.defs.iter().rev() {
        let mut value = by.constant_part().clone();
        for (y, c) in by.coeffs() {
            value += c * assignment.get(y).cloned().unwrap_or_else(Rational::zero);
        }
        assignment.insert(x.clone(), value);
    }
    Decision::Sat(assignment)
}

/// Splits the narrowest integer band `k' <= t <= -k` into equalities and
/// decides each case.
fn split_band(p: Problem, ineqs: Vec<(CmpOp, LinTerm)>, pure: bool, budget: u64) -> Decision {
    let mut best: Option<(Rational, LinTerm, Rational)> = None;
    for (op, t) in &ineqs {
        if *op != CmpOp::Le || t.vars().any(|v| v.sort() != Sort::Int) {
            continue;
        }
        let part = t.without_constant();
        let Some((_, u)) = ineqs.iter().find(|(o, u)| *o == CmpOp::Le && u.without_constant() == -part.clone()) else {
            continue;
        };
        let low = u.constant_part().clone();
        let width = -t.constant_part() - &low;
        if width <= rat_from(&BAND.into()) && best.as_ref().is_none_or(|(w, _, _)| width < *w) {
            best = Some((width, part, low));
        }
    }
    let Some((width, part, low)) = best else { return Decision::Unknown };
    let mut unknown = false;
    let mut j = Rational::zero();
    while j <= width {
        let mut q = Problem { eqs: vec![&part - &LinTerm::constant(&low + &j)], ineqs: ineqs.clone(), defs: p.defs.clone(), avoid: p.avoid.clone() };
        q.ineqs.retain(|(_, t)| t.without_constant() != part && t.without_constant() != -part.clone());
        match decide_problem(q, pure, budget) {
            Decision::Sat(m) => return Decision::Sat(m),
            Decision::Unsat => {}
            Decision::Unknown => unknown = true,
        }
        j += Rational::one();
    }
    if unknown { Decision::Unknown } else { Decision::Unsat }
}

/// The LP relaxation, with columns numbered as in `columns`. With
/// `shrink`, each inequality is tightened by half the sum of its integer
/// coefficients' magnitudes.
fn relaxation(ineqs: &[(CmpOp, LinTerm)], columns: &BTreeMap<Var, usize>, shrink: bool) -> Option<Simplex> {
    let mut simplex = Simplex::new();
    for _ in 0..columns.len() {
        simplex.new_var();
    }
    for (op, t) in ineqs {
        let mut k = t.constant_part().clone();
        if shrink {
            for (v, c) in t.coeffs() {
                if v.sort() == Sort::Int {
                    k += c.abs() / Rational::from_integer(2.into());
                }
            }
        }
        let (col, a) = if t.coeffs().len() == 1 {
            let (v, a) = t.coeffs().iter().next().expect("one variable");
            (columns[v], a.clone())
        } else {
            let combo: Vec<(usize, Rational)> = t.coeffs().iter().map(|(v, c)| (columns[v], c.clone())).collect();
            (simplex.add_row(&combo), Rational::one())
        };
        for (upper, value) in cmp_bounds(*op, &a, &k) {
            let r = if upper { simplex.assert_upper(col, value, None) } else { simplex.assert_lower(col, value, None) };
            if r.is_err() {
                return None;
            }
        }
    }
    simplex.check().ok()?;
    Some(simplex)
}

/// How many partial residue assignments `residue_classes` may visit.
const RESIDUE_NODES: u64 = 4096;

/// How many residue classes are split on before falling back to encoding
/// divisibility with fresh variables.
const RESIDUE_CLASSES: usize = 64;

/// Residue classes modulo `m` of the variables in `vars` under which the
/// divisibility literals hold.
struct Residues {
    m: Integer,
    vars: Vec<Var>,
    classes: Vec<Vec<Integer>>,
}

/// Enumerates the residue classes satisfying the divisibility literals,
/// or gives `None` when there are none of those literals or too many
/// classes to list.
fn residue_classes(lits: &[Literal], max_classes: usize) -> Option<Residues> {
    let divs: Vec<(&Integer, &LinTerm, bool)> = lits
        .iter()
        .filter_map(|l| match l {
            Literal::Div { d, term, positive } => Some((d, term, *positive)),
            _ => None,
        })
        .collect();
    if divs.is_empty() {
        return None;
    }
    let mut m = Integer::one();
    let mut vars = BTreeSet::new();
    for (d, t, _) in &divs {
        m = lcm(&m, d);
        vars.extend(t.vars().cloned());
    }
    let vars: Vec<Var> = vars.into_iter().collect();
    // A literal is checked once its last variable has a residue.
    let mut ready: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
    for (j, (_, t, _)) in divs.iter().enumerate() {
        let last = t.vars().filter_map(|v| vars.iter().position(|w| w == v)).max();
        if let Some(i) = last {
            ready[i].push(j);
        }
    }
    let holds = |j: usize, values: &BTreeMap<Var, Rational>| {
        let (d, t, positive) = divs[j];
        let mut v = t.constant_part().clone();
        for (x, c) in t.coeffs() {
            v += c * &values[x];
        }
        divides_value(d, &v.to_integer()) == positive
    };
    let mut values = BTreeMap::new();
    let mut classes = Vec::new();
    let mut nodes = 0;
    let mut stack: Vec<Integer> = Vec::new();
    let mut next = Integer::zero();
    loop {
        let i = stack.len();
        if i == vars.len() {
            classes.push(stack.clone());
            if classes.len() > max_classes {
                return None;
            }
            next = m.clone();
        }
        if next >= m {
            let Some(r) = stack.pop() else { break };
            values.remove(&vars[stack.len()]);
            next = r + 1u32;
            continue;
        }
        nodes += 1;
        if nodes > RESIDUE_NODES {
            return None;
        }
        values.insert(vars[i].clone(), rat_from(&next));
        if ready[i].iter().all(|j| holds(*j, &values)) {
            stack.push(core::mem::replace(&mut next, Integer::zero()));
        } else {
            values.remove(&vars[i]);
            next += 1u32;
        }
    }
    Some(Residues { m, vars, classes })
}

/// Whether the divisibility literals among `lits` provably have no common
/// solution.
pub(crate) fn residues_clash(lits: &[Literal]) -> bool {
    residue_classes(lits, 0).is_some_and(|r| r.classes.is_empty())
}

/// Solves one residue class at a time, with each variable `x` of the
/// divisibility literals replaced by `m*x' + r`.
fn split_residues(lits: &[Literal], vars: &BTreeSet<Var>, res: Residues, budget: u64) -> LiaResult {
    let rest: Vec<&Literal> = lits.iter().filter(|l| !matches!(l, Literal::Div { .. })).collect();
    let mut avoid = vars.clone();
    let primed: Vec<Var> = res
        .vars
        .iter()
        .map(|x| {
            let y = Var::fresh(x.name(), Sort::Int, &avoid);
            avoid.insert(y.clone());
            y
        })
        .collect();
    let mut unknown = false;
    'class: for class in &res.classes {
        let mut s = Subst::new();
        let mut defs = Vec::new();
        for ((x, y), r) in res.vars.iter().zip(&primed).zip(class) {
            let t = &LinTerm::monomial(rat_from(&res.m), y) + &LinTerm::constant(rat_from(r));
            s.bind_term(x, t.clone());
            defs.push((x, t));
        }
        let mut sub = Vec::new();
        for l in &rest {
            match Formula::Lit((*l).clone()).subst(&s) {
                Formula::True => {}
                Formula::False => continue 'class,
                Formula::Lit(k) => sub.push(k),
                other => unreachable!("literal substituted to {other:?}"),
            }
        }
        match solve(&sub, budget) {
            LiaResult::Sat(m) => {
                let mut model = Model::new();
                for v in vars {
                    let value = match defs.iter().find(|(x, _)| *x == v) {
                        Some((_, t)) => m.eval_term(t).unwrap_or_else(|_| t.constant_part().clone()),
                        None => m.num(v).cloned().unwrap_or_else(|_| Rational::zero()),
                    };
                    model.set_num(v, value);
                }
                return LiaResult::Sat(model);
            }
            LiaResult::Unsat => {}
            LiaResult::Unknown => unknown = true,
        }
    }
    if unknown { LiaResult::Unknown } else { LiaResult::Unsat }
}

/// A point of the rational relaxation of the comparison literals, or
/// `None` when there is none. Divisibility literals are ignored.
pub(crate) fn lp_point(lits: &[Literal]) -> Option<BTreeMap<Var, Rational>> {
    let mut columns: BTreeMap<Var, usize> = BTreeMap::new();
    let mut ineqs = Vec::new();
    for l in lits {
        if let Literal::Cmp { op, term } = l {
            for v in term.vars() {
                let next = columns.len();
                columns.entry(v.clone()).or_insert(next);
            }
            ineqs.push((*op, term.clone()));
        }
    }
    let s = relaxation(&ineqs, &columns, false)?;
    let delta = s.concrete_delta();
    Some(columns.iter().map(|(v, c)| (v.clone(), s.concrete(*c, &delta))).collect())
}

/// If the polyhedron contains a unit cube around some point, rounding that
/// point's integer coordinates gives a solution without any branching.
fn cube_test(ineqs: &[(CmpOp, LinTerm)], columns: &BTreeMap<Var, usize>) -> Option<Vec<Rational>> {
    let s = relaxation(ineqs, columns, true)?;
    let delta = s.concrete_delta();
    let mut values: Vec<Rational> = (0..s.num_vars()).map(|c| s.concrete(c, &delta)).collect();
    for (v, c) in columns {
        if v.sort() == Sort::Int {
            values[*c] = rat_from(&floor(&(&values[*c] + Rational::new(1.into(), 2.into()))));
        }
    }
    Some(values)
}

/// Cooper's test points on the original literals, which keep
/// divisibility intact. Decides pure integer problems only.
fn by_test_points(lits: &[Literal], vars: &BTreeSet<Var>, budget: u64) -> LiaResult {
    match cooper::decide(lits, budget) {
        Decision::Sat(m) => {
            debug_assert!(cooper::satisfies(lits, &m));
            let mut model = Model::new();
            for v in vars {
                model.set_num(v, m.get(v).cloned().unwrap_or_else(Rational::zero));
            }
            LiaResult::Sat(model)
        }
        Decision::Unsat => LiaResult::Unsat,
        Decision::Unknown => LiaResult::Unknown,
    }
}

/// Branch-and-bound nodes spent on pure integer problems before
/// switching to test points.
const PURE_NODES: u64 = 200;

/// Half-widths of the boxes tried when plain branch-and-bound gives up.
const BOXES: [i64; 2] = [16, 256];

fn to_map(values: &[Rational], columns: &BTreeMap<Var, usize>) -> BTreeMap<Var, Rational> {
    columns.iter().map(|(v, c)| (v.clone(), values[*c].clone())).collect()
}

/// Branch-and-bound on the relaxation. Branching can run away along an
/// unbounded direction, so after that gives up the search is repeated
/// inside growing boxes, which can only find solutions. Pure integer
/// problems skip the boxes and get a short budget, since test points
/// decide them.
fn search(
    ineqs: &[(CmpOp, LinTerm)],
    columns: &BTreeMap<Var, usize>,
    ints: &[(Var, usize)],
    budget: u64,
    pure: bool,
) -> Decision {
    let Some(mut simplex) = relaxation(ineqs, columns, false) else { return Decision::Unsat };
    let mut nodes = 0;
    let first = if pure { budget.min(PURE_NODES) } else { budget };
    match branch(&mut simplex, ints, &mut nodes, first) {
        Branch::Sat(values) => return Decision::Sat(to_map(&values, columns)),
        Branch::Unsat => return Decision::Unsat,
        Branch::Unknown if pure => return Decision::Unknown,
        Branch::Unknown => {}
    }
    for b in BOXES {
        simplex.push();
        let bound = rat_from(&b.into());
        for (_, c) in ints {
            let lo = simplex.assert_lower(*c, DeltaRat::exact(-bound.clone()), None);
            let hi = simplex.assert_upper(*c, DeltaRat::exact(bound.clone()), None);
            if lo.is_err() || hi.is_err() {
                break;
            }
        }
        let mut nodes = 0;
        if let Branch::Sat(values) = branch(&mut simplex, ints, &mut nodes, budget) {
            return Decision::Sat(to_map(&values, columns));
        }
        simplex.pop();
    }
    Decision::Unknown
}

enum Branch {
    Sat(Vec<Rational>),
    Unsat,
    Unknown,
}

/// Depth-first branch-and-bound with an explicit stack of pending bounds.
/// Leaves the simplex at the depth it was called with.
fn branch(s: &mut Simplex, ints: &[(Var, usize)], nodes: &mut u64, budget: u64) -> Branch {
    let mut depth = 0usize;
    let r = branch_inner(s, ints, nodes, budget, &mut depth);
    for _ in 0..depth {
        s.pop();
    }
    r
}

fn branch_inner(s: &mut Simplex, ints: &[(Var, usize)], nodes: &mut u64, budget: u64, depth: &mut usize) -> Branch {
    // (depth of the node, column, upper?, bound)
    let mut pending: Vec<(usize, usize, bool, Rational)> = Vec::new();
    let mut node_ok = true;
    loop {
        if node_ok {
            *nodes += 1;
            if *nodes > budget {
                return Branch::Unknown;
            }
            if s.check().is_ok() {
                let delta = s.concrete_delta();
                let fractional = ints.iter().map(|(_, c)| (*c, s.concrete(*c, &delta))).find(|(_, v)| !is_integral(v));
                let Some((col, v)) = fractional else {
                    return Branch::Sat((0..s.num_vars()).map(|c| s.concrete(c, &delta)).collect());
                };
                let f = rat_from(&floor(&v));
                pending.push((*depth + 1, col, false, &f + Rational::one()));
                pending.push((*depth + 1, col, true, f));
            }
        }
        let Some((d, col, upper, bound)) = pending.pop() else { return Branch::Unsat };
        while *depth >= d {
            s.pop();
            *depth -= 1;
        }
        s.push();
        *depth += 1;
        let value = DeltaRat::exact(bound);
        node_ok = if upper { s.assert_upper(col, value, None) } else { s.assert_lower(col, value, None) }.is_ok();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(f: Formula) -> Literal {
        match f {
            Formula::Lit(l) => l,
            other => panic!("not a literal: {other:?}"),
        }
    }

    fn x() -> Var {
        Var::new("x", Sort::Int)
    }

    fn y() -> Var {
        Var::new("y", Sort::Int)
    }

    #[test]
    fn no_integer_between_bounds() {
        // 0 < 2x < 2
        let t = LinTerm::monomial(rat_from(&Integer::from(2)), &x());
        let a = lit(Formula::lt(&LinTerm::zero(), &t));
        let b = lit(Formula::lt(&t, &LinTerm::int(2)));
        assert!(matches!(solve(&[a, b], 100), LiaResult::Unsat));
    }

    #[test]
    fn euclid_steps_find_solution() {
        // 3x + 5y = 7, 0 <= x <= 10
        let t = &LinTerm::monomial(rat_from(&Integer::from(3)), &x()) + &LinTerm::monomial(rat_from(&Integer::from(5)), &y());
        let e = lit(Formula::eq(&t, &LinTerm::int(7)));
        let lo = lit(Formula::le(&LinTerm::zero(), &LinTerm::var(&x())));
        let hi = lit(Formula::le(&LinTerm::var(&x()), &LinTerm::int(10)));
        match solve(&[e.clone(), lo, hi], 100) {
            LiaResult::Sat(m) => assert!(m.eval_literal(&e).unwrap()),
            _ => panic!("expected sat"),
        }
    }

    #[test]
    fn divisibility_parity_clash() {
        // 2 | x and 2 | x + 1
        let a = lit(Formula::divides(Integer::from(2), LinTerm::var(&x())));
        let b = lit(Literal::divides(Integer::from(2), &LinTerm::var(&x()) + &LinTerm::int(1), true));
        assert!(matches!(solve(&[a, b], 100), LiaResult::Unsat));
    }
}
