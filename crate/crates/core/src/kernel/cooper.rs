//! Complete fallback for integer conjunctions: Cooper's test points,
//! explored depth-first, one variable at a time, with witnesses
//! reconstructed on the way back.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::logic::{lia_normalize, CmpOp, normalize_for, Bound, Formula, LinTerm, Literal, Model, Sort, Subst, Var};
use super::lia::lp_point;
use crate::num::{floor, is_integral, lcm, modulo, rat_from, Integer, Rational};

pub(crate) enum Decision {
    Sat(BTreeMap<Var, Rational>),
    Unsat,
    Unknown,
}

struct Points {
    lowers: BTreeSet<LinTerm>,
    /// Every term bounding `x`, for the unbounded witness.
    bounds: Vec<LinTerm>,
    modulus: Integer,
}

fn points(x: &Var, lits: &[Literal]) -> Points {
    let mut p = Points { lowers: BTreeSet::new(), bounds: Vec::new(), modulus: Integer::one() };
    for l in lits {
        match normalize_for(x, l).expect("normalized literal") {
            Bound::Free => {}
            Bound::Eq(t) => p.bounds.push(t),
            Bound::Lower { term, .. } => {
                p.bounds.push(term.clone());
                p.lowers.insert(term);
            }
            Bound::Upper { term, .. } => p.bounds.push(term),
            Bound::Div { d, .. } => p.modulus = lcm(&p.modulus, &d),
        }
    }
    p
}

fn cube(f: Formula) -> Option<Vec<Literal>> {
    match f {
        Formula::False => None,
        other => Some(other.as_cube().expect("substitution keeps conjunctions")),
    }
}

fn eval(t: &LinTerm, m: &BTreeMap<Var, Rational>) -> Rational {
    let mut v = t.constant_part().clone();
    for (x, c) in t.coeffs() {
        v += c * m.get(x).cloned().unwrap_or_else(Rational::zero);
    }
    v
}

/// Decides a conjunction of integer literals. `budget` bounds the number
/// of explored branches.
pub(crate) fn decide(lits: &[Literal], budget: u64) -> Decision {
    let mut nodes = 0;
    let mut avoid = BTreeSet::new();
    for l in lits {
        l.collect_vars(&mut avoid);
    }
    match search(lits.to_vec(), &mut avoid, &mut nodes, budget) {
        Ok(Some(m)) => Decision::Sat(m),
        Ok(None) => Decision::Unsat,
        Err(()) => Decision::Unknown,
    }
}

fn search(
    lits: Vec<Literal>,
    avoid: &mut BTreeSet<Var>,
    nodes: &mut u64,
    budget: u64,
) -> Result<Option<BTreeMap<Var, Rational>>, ()> {
    *nodes += 1;
    if *nodes > budget {
        return Err(());
    }
    // Rationally infeasible nodes are pruned; an integral relaxation
    // point that also meets the divisibility literals ends the search.
    let Some(point) = lp_point(&lits) else { return Ok(None) };
    if point.values().all(is_integral) && satisfies(&lits, &point) {
        return Ok(Some(point));
    }
    let mut vars = BTreeSet::new();
    for l in &lits {
        l.collect_vars(&mut vars);
    }
    let Some(x) = pick(&lits, &vars) else {
        // Canonical literals without variables are folded away.
        return Ok(Some(BTreeMap::new()));
    };
    let (lowers, uppers) = sides(&x, &lits);
    let flip = uppers < lowers;
    // With fewer upper bounds, work on y = -x instead.
    let (y, lits) = if flip {
        let y = Var::fresh(x.name(), Sort::Int, avoid);
        avoid.insert(y.clone());
        let mut s = Subst::new();
        s.bind_term(&x, -LinTerm::var(&y));
        let Some(c) = cube(Formula::cube(lits).subst(&s)) else { return Ok(None) };
        (y, c)
    } else {
        (x.clone(), lits)
    };
    let (g, yp, dp) = lia_normalize(&y, &Formula::cube(lits));
    avoid.insert(yp.clone());
    let Some(g) = cube(g) else { return Ok(None) };
    let p = points(&yp, &g);
    let d = p.modulus.clone();

    let finish = |mut m: BTreeMap<Var, Rational>, yp_value: Rational| {
        let yv = yp_value / rat_from(&dp);
        m.insert(x.clone(), if flip { -yv } else { yv });
        m
    };

    let mut i = Integer::zero();
    while i < d {
        // Every residue counts against the budget, even when all of its
        // test points simplify to false.
        *nodes += 1;
        if *nodes > budget {
            return Err(());
        }
        for l in &p.lowers {
            let t = l + &LinTerm::constant(rat_from(&(&i + 1u32)));
            let mut s = Subst::new();
            s.bind_term(&yp, t.clone());
            if let Some(c) = cube(Formula::cube(g.clone()).subst(&s)) {
                if let Some(m) = search(c, avoid, nodes, budget)? {
                    let v = eval(&t, &m);
                    return Ok(Some(finish(m, v)));
                }
            }
        }
        let mut minus_inf = Vec::new();
        let mut dead = false;
        for l in &g {
            match normalize_for(&yp, l).expect("normalized literal") {
                Bound::Free => minus_inf.push(l.clone()),
                Bound::Eq(_) | Bound::Lower { .. } => dead = true,
                Bound::Upper { .. } => {}
                Bound::Div { .. } => {
                    let mut s = Subst::new();
                    s.bind_term(&yp, LinTerm::constant(rat_from(&i)));
                    match Formula::Lit(l.clone()).subst(&s) {
                        Formula::False => dead = true,
                        Formula::True => {}
                        Formula::Lit(k) => minus_inf.push(k),
                        other => unreachable!("literal substituted to {other:?}"),
                    }
                }
            }
        }
        if !dead {
            if let Some(m) = search(minus_inf, avoid, nodes, budget)? {
                // Below every bound term, with the right residue.
                let mut low = Rational::zero();
                for b in &p.bounds {
                    let v = eval(b, &m);
                    if v < low {
                        low = v;
                    }
                }
                let below = floor(&low) - 1u32;
                let v = &below - modulo(&(&below - &i), &d);
                return Ok(Some(finish(m, rat_from(&v))));
            }
        }
        i += 1u32;
    }
    Ok(None)
}

/// Number of lower and upper bounds on `x`; equalities count as both.
fn sides(x: &Var, lits: &[Literal]) -> (usize, usize) {
    let (mut lowers, mut uppers) = (0, 0);
    for l in lits {
        if let Literal::Cmp { op, term } = l {
            let c = term.coeff(x);
            if c.is_zero() {
                continue;
            }
            if *op == CmpOp::Eq || c.is_negative() {
                lowers += 1;
            }
            if *op == CmpOp::Eq || c.is_positive() {
                uppers += 1;
            }
        }
    }
    (lowers, uppers)
}

/// The variable with the fewest test points.
fn pick(lits: &[Literal], vars: &BTreeSet<Var>) -> Option<Var> {
    let mut best: Option<(usize, Var)> = None;
    for x in vars {
        let mut d = Integer::one();
        for l in lits {
            if let Some(t) = l.term() {
                let c = t.coeff(x);
                if !c.is_zero() {
                    d = lcm(&d, c.numer());
                }
            }
        }
        let (lowers, uppers) = sides(x, lits);
        let d: usize = d.try_into().unwrap_or(usize::MAX);
        let cost = d.saturating_mul(lowers.min(uppers) + 1);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, x.clone()));
        }
    }
    best.map(|(_, x)| x)
}

/// Checks a witness; used by debug assertions.
pub(crate) fn satisfies(lits: &[Literal], m: &BTreeMap<Var, Rational>) -> bool {
    let mut model = Model::new();
    for (v, r) in m {
        model.set_num(v, r.clone());
    }
    for l in lits {
        for v in l.vars() {
            if model.get(&v).is_none() {
                model.set_num(&v, Rational::zero());
            }
        }
    }
    lits.iter().all(|l| model.eval_literal(l) == Ok(true))
}
