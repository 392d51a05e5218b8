mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::overview::{overview, property, D, M, T};
use common::{random_literal, random_small_formula, vars};
use recmc_core::driver::{check, check_inductive, CheckConfig};
use recmc_core::engine::{Engine, EngineConfig};
use recmc_core::kernel::{Kernel, SatResult, TheoryLemma};
use recmc_core::logic::{dnf_paths, lia_normalize, to_nnf, Expr, Formula, LinTerm, Model, Rel, Sort, Var};
use recmc_core::num::{int, rat, Rational};
use recmc_core::program::{o_env, u_env, AssertionMap, Environment};
use recmc_core::qe::{lia_proj, lra_proj};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_model(rng: &mut ChaCha8Rng, vs: &[Var]) -> Model {
    let mut m = Model::new();
    for v in vs {
        match v.sort() {
            Sort::Bool => m.set_bool(v, rng.gen_bool(0.5)),
            Sort::Int => m.set_num(v, rat(rng.gen_range(-5..=5))),
            Sort::Rat => m.set_num(v, Rational::new(int(rng.gen_range(-10..=10)), int(rng.gen_range(1..=3)))),
        }
    }
    m
}

fn random_expr(rng: &mut ChaCha8Rng, vs: &[Var], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        let a = common::random_term(rng, vs, 3);
        let b = common::random_term(rng, vs, 3);
        let rel = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Ge, Rel::Gt][rng.gen_range(0..6)];
        return Expr::Cmp(rel, a, b);
    }
    let kind = rng.gen_range(0..5);
    let a = Box::new(random_expr(rng, vs, depth - 1));
    let b = Box::new(random_expr(rng, vs, depth - 1));
    match kind {
        0 => Expr::Not(a),
        1 => Expr::And(vec![*a, *b]),
        2 => Expr::Or(vec![*a, *b]),
        3 => Expr::Implies(a, b),
        _ => Expr::Iff(a, b),
    }
}

/// Direct evaluation of a user expression.
fn eval_expr(e: &Expr, m: &Model) -> bool {
    match e {
        Expr::True => true,
        Expr::False => false,
        Expr::BoolVar(v) => m.boolean(v).unwrap(),
        Expr::Cmp(rel, a, b) => {
            let (a, b) = (m.eval_term(a).unwrap(), m.eval_term(b).unwrap());
            match rel {
                Rel::Lt => a < b,
                Rel::Le => a <= b,
                Rel::Eq => a == b,
                Rel::Ne => a != b,
                Rel::Ge => a >= b,
                Rel::Gt => a > b,
            }
        }
        Expr::Divides(..) | Expr::Call(_) => unreachable!("not generated"),
        Expr::Not(x) => !eval_expr(x, m),
        Expr::And(xs) => xs.iter().all(|x| eval_expr(x, m)),
        Expr::Or(xs) => xs.iter().any(|x| eval_expr(x, m)),
        Expr::Implies(a, b) => !eval_expr(a, m) || eval_expr(b, m),
        Expr::Iff(a, b) => eval_expr(a, m) == eval_expr(b, m),
    }
}

fn sort_of(i: u8) -> Sort {
    [Sort::Bool, Sort::Rat, Sort::Int][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn nnf_preserves_models(seed: u64, int_sort: bool) {
        let mut r = rng(seed);
        let vs = vars(if int_sort { Sort::Int } else { Sort::Rat }, 3);
        let e = random_expr(&mut r, &vs, 3);
        let f = to_nnf(&e).unwrap();
        for _ in 0..8 {
            let m = random_model(&mut r, &vs);
            prop_assert_eq!(m.eval(&f).unwrap(), eval_expr(&e, &m));
        }
    }

    #[test]
    fn negation_flips_every_model(seed: u64, s: u8) {
        let mut r = rng(seed);
        let vs = vars(sort_of(s), 3);
        let n = r.gen_range(1..=6);
        let f = random_small_formula(&mut r, &vs, n);
        for _ in 0..8 {
            let m = random_model(&mut r, &vs);
            prop_assert_eq!(m.eval(&f.negate()).unwrap(), !m.eval(&f).unwrap());
        }
    }

    #[test]
    fn paths_cover_the_body(seed: u64, s: u8) {
        let mut r = rng(seed);
        let vs = vars(sort_of(s), 3);
        let n = r.gen_range(1..=6);
        let body = random_small_formula(&mut r, &vs, n);
        let paths = dnf_paths(&body, 4096).unwrap();
        let mut k = Kernel::default();
        for p in &paths {
            prop_assert!(k.entails(&p.to_formula(), &body).unwrap());
        }
        let all = Formula::or(paths.iter().map(|p| p.to_formula()));
        prop_assert!(k.equivalent(&all, &body).unwrap());
    }

    #[test]
    fn lia_normalization_keeps_solutions(seed: u64) {
        let mut r = rng(seed);
        let vs = vars(Sort::Int, 3);
        let x = &vs[0];
        let n = r.gen_range(1..=5);
        let f = Formula::and((0..n).map(|_| random_literal(&mut r, &vs)));
        let (g, xp, d) = lia_normalize(x, &f);
        let d: i64 = d.try_into().unwrap();
        let mut m = random_model(&mut r, &vs);
        for xv in -3 * d..=3 * d {
            m.set_num(x, rat(xv));
            m.set_num(&xp, rat(d * xv));
            let before = m.eval(&f).unwrap();
            prop_assert_eq!(before, m.eval(&g).unwrap(), "x = {}", xv);
        }
        // Values of x' off the multiples of D' are excluded.
        if d > 1 {
            m.set_num(&xp, rat(d + 1));
            prop_assert!(!m.eval(&g).unwrap());
        }
    }

    #[test]
    fn projection_is_deterministic(seed: u64, int_sort: bool) {
        let mut r = rng(seed);
        let vs = vars(if int_sort { Sort::Int } else { Sort::Rat }, 3);
        let n = r.gen_range(1..=6);
        let f = random_small_formula(&mut r, &vs, n);
        let mut k = Kernel::default();
        if let Some(m) = k.is_sat(&f).unwrap() {
            let proj = |m: &Model| if int_sort { lia_proj(&vs[0], &f, m) } else { lra_proj(&vs[0], &f, m) };
            prop_assert_eq!(proj(&m).unwrap(), proj(&m).unwrap());
        }
    }

    #[test]
    fn instantiation_distributes(seed: u64) {
        let mut r = rng(seed);
        let p = overview();
        let mut env = Environment::constant(&p, true);
        env.set(T, Formula::le(&LinTerm::var(&Var::new("t", Sort::Int)).scale(&rat(2)), &LinTerm::var(&Var::new("t0", Sort::Int))));
        env.set(D, Formula::eq(&LinTerm::var(&Var::new("d", Sort::Int)), &LinTerm::var(&Var::new("d0", Sort::Int))));
        let local = vars(Sort::Int, 2);
        let lit = random_literal(&mut r, &local);
        prop_assert_eq!(p.instantiate(&lit, &env), lit.clone());
        let call = Formula::call(T, local.clone());
        let call2 = Formula::call(D, vec![local[1].clone(), local[0].clone()]);
        let (a, b) = (Formula::and([lit.clone(), call.clone()]), Formula::or([call2.clone(), lit.clone()]));
        prop_assert_eq!(
            p.instantiate(&Formula::and([a.clone(), b.clone()]), &env),
            Formula::and([p.instantiate(&a, &env), p.instantiate(&b, &env)])
        );
        prop_assert_eq!(
            p.instantiate(&Formula::or([a.clone(), b.clone()]), &env),
            Formula::or([p.instantiate(&a, &env), p.instantiate(&b, &env)])
        );
    }

    #[test]
    fn facts_are_never_retracted_and_environments_are_monotone(k in 0i64..8, n in 0u32..3) {
        let p = overview();
        let phi = property(k);
        let config = EngineConfig { check_invariants: true, ..EngineConfig::default() };
        let mut engine = Engine::new(&p, config, AssertionMap::new(), AssertionMap::new());
        engine.enqueue(M, phi.negate(), n, None);
        let mut steps = 0;
        loop {
            let (rho, sigma) = (engine.rho.clone(), engine.sigma.clone());
            if engine.step().unwrap().is_none() {
                break;
            }
            steps += 1;
            prop_assert!(steps < 10_000);
            for (old, new) in [(&rho, &engine.rho), (&sigma, &engine.sigma)] {
                for (id, f) in old.iter() {
                    prop_assert_eq!(new.get(id), f);
                }
            }
        }
        let mut kernel = Kernel::default();
        // Both environments grow with the bound: more depth admits more
        // behaviours, and sigma facts at a bound hold at every smaller one.
        for b in -1..n as i64 {
            let (u0, u1) = (u_env(&p, &engine.rho, b), u_env(&p, &engine.rho, b + 1));
            let (o0, o1) = (o_env(&p, &engine.sigma, b), o_env(&p, &engine.sigma, b + 1));
            for q in [M, T, D] {
                prop_assert!(kernel.entails(u0.get(q), u1.get(q)).unwrap());
                prop_assert!(kernel.entails(o0.get(q), o1.get(q)).unwrap());
            }
        }
    }

    #[test]
    fn inductive_check_only_adds_facts(k in 0i64..8, n in 0u32..3) {
        let p = overview();
        let out = check(&p, &property(k), &CheckConfig { max_bound: n, ..CheckConfig::default() });
        let mut sigma = out.sigma.clone();
        check_inductive(&p, &mut sigma, n, &mut Kernel::default()).unwrap();
        for (id, f) in out.sigma.iter() {
            prop_assert_eq!(sigma.get(id), f);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn models_satisfy_and_certificates_replay(seed: u64, s: u8) {
        let mut r = rng(seed);
        let vs = vars(sort_of(s), 3);
        let n = r.gen_range(1..=6);
        let f = random_small_formula(&mut r, &vs, n);
        match Kernel::default().check_sat(&f).unwrap() {
            SatResult::Sat(m) => prop_assert!(m.eval(&f).unwrap()),
            SatResult::Unsat(cert) => {
                for lemma in &cert.lemmas {
                    if let TheoryLemma::Farkas(c) = lemma {
                        prop_assert!(c.replay());
                    }
                }
            }
            SatResult::Unknown => prop_assert!(false, "unknown on {}", f),
        }
    }
}
