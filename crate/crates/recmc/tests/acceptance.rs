//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recmc::gen::{gen_bebop, gen_gpdr_divergence, random_program, Limits};
use recmc::rpl::{parse, SourceUnit};
use recmc_core::driver::{check, sandwich_violations, validate_cex, validate_proof, CheckConfig, SafetyProof, Verdict};
use recmc_core::engine::{self, BoundedVerdict, EngineConfig, Outcome, Projection, Rule};
use recmc_core::itp::{itp, InterpolationQuery, ItpStrategy};
use recmc_core::kernel::Kernel;
use recmc_core::logic::{Formula, LinTerm, Model, Sort, Var};
use recmc_core::num::rat;
use recmc_core::program::{bool_bounded_semantics, AssertionMap, Environment, Mode, Program};
use recmc_core::qe::{cooper_qe, lia_proj, lra_proj, lw_qe, shape};

const OVERVIEW: &str = include_str!("../examples/overview.rpl");

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn int_var(n: &str) -> LinTerm {
    LinTerm::var(&Var::new(n, Sort::Int))
}

fn overview() -> SourceUnit {
    parse(OVERVIEW).expect("shipped example parses")
}

fn c1_overview() -> Check {
    let unit = overview();
    let p = &unit.program;
    let start = Instant::now();
    let out = check(p, &unit.property, &CheckConfig::default());
    let took = start.elapsed();
    let Verdict::Safe(proof) = &out.verdict else { return Err(format!("verdict {}", out.verdict.name())) };
    ensure(proof.bound == 1, || format!("proved at bound {}", proof.bound))?;
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    ensure(validate_proof(p, proof, &unit.property), || "proof does not validate".into())?;
    let mut k = Kernel::default();
    let two = rat(2);
    let expected = [
        ("M", Formula::le(&(&int_var("m").scale(&two) + &LinTerm::int(4)), &int_var("m0"))),
        ("T", Formula::le(&int_var("t").scale(&two), &int_var("t0"))),
        ("D", Formula::le(&int_var("d"), &(&int_var("d0") - &LinTerm::int(1)))),
    ];
    for (name, f) in &expected {
        let id = p.lookup(name).expect("declared");
        ensure(k.entails(proof.env.get(id), f).map_err(|e| e.to_string())?, || format!("proof of {name} misses {f}"))?;
    }
    Ok(format!("SAFE at n=1 in {took:.2?}, {} rule applications", out.stats.steps()))
}

fn c2_trace() -> Check {
    let unit = overview();
    let p = &unit.program;
    let mut config = CheckConfig::default();
    config.engine.projection = Projection::Qe;
    config.engine.record_trace = true;
    let out = check(p, &unit.property, &config);
    let (d, t) = (p.lookup("D").expect("declared"), p.lookup("T").expect("declared"));
    let decrement = Formula::eq(&int_var("d"), &(&int_var("d0") - &LinTerm::int(1)));
    let query = Formula::lt(&int_var("t0"), &int_var("t").scale(&rat(2)));
    let mut k = Kernel::default();
    let reach = out.trace.iter().find(|e| {
        e.rule == Rule::Reach
            && e.proc == d
            && e.bound == 0
            && matches!(&e.outcome, Outcome::Fact { formula, .. } if k.equivalent(formula, &decrement) == Ok(true))
    });
    let spawn = out.trace.iter().find(|e| {
        e.rule == Rule::Query
            && matches!(&e.outcome, Outcome::Spawned { query: q }
                if q.proc == t && q.bound == 0 && k.equivalent(&q.phi, &query) == Ok(true))
    });
    match (reach, spawn) {
        (Some(r), Some(s)) => Ok(format!("reach at step {} of run {}, query at step {} of run {}", r.step, r.run, s.step, s.run)),
        (None, _) => Err("no Reach step adds d = d0 - 1 at (D, 0)".into()),
        (_, None) => Err("no Query step creates <T, t0 < 2t, 0>".into()),
    }
}

/// A random literal over `vars` with small coefficients, or a boolean
/// literal for boolean variables.
fn random_literal(rng: &mut ChaCha8Rng, vars: &[Var]) -> Formula {
    let v = vars.choose(rng).expect("nonempty");
    if v.is_bool() {
        return Formula::bool_var(v, rng.gen_bool(0.5));
    }
    let mut t = LinTerm::int(rng.gen_range(-4..=4));
    for w in vars {
        if rng.gen_bool(0.5) {
            t = &t + &LinTerm::monomial(rat(rng.gen_range(-3..=3)), w);
        }
    }
    match rng.gen_range(0..4) {
        0 => Formula::lt(&t, &LinTerm::zero()),
        1 => Formula::le(&t, &LinTerm::zero()),
        2 => Formula::eq(&t, &LinTerm::zero()),
        _ if v.sort() == Sort::Int && rng.gen_bool(0.5) => Formula::divides(rng.gen_range(2..=3).into(), t),
        _ => Formula::lt(&LinTerm::zero(), &t),
    }
}

/// A random and/or combination of `n` literals.
fn random_formula(rng: &mut ChaCha8Rng, vars: &[Var], n: usize) -> Formula {
    if n <= 1 {
        return random_literal(rng, vars);
    }
    let left = rng.gen_range(1..n);
    let a = random_formula(rng, vars, left);
    let b = random_formula(rng, vars, n - left);
    if rng.gen_bool(0.6) {
        Formula::and([a, b])
    } else {
        Formula::or([a, b])
    }
}

fn vars(sort: Sort, n: usize) -> Vec<Var> {
    (0..n).map(|i| Var::new(&format!("v{i}"), sort)).collect()
}

fn c3_mbp() -> Check {
    let start = Instant::now();
    let mut k = Kernel::default();
    let mut report = Vec::new();
    for (sort, seed) in [(Sort::Rat, 31), (Sort::Int, 32)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vs = vars(sort, 3);
        let x = &vs[0];
        let (mut done, mut images) = (0, 0);
        while done < 500 {
            let n = rng.gen_range(1..=6);
            let f = random_formula(&mut rng, &vs, n);
            if !f.mentions(x) {
                continue;
            }
            let Some(m) = k.is_sat(&f).map_err(|e| e.to_string())? else { continue };
            done += 1;
            let proj = |m: &Model| match sort {
                Sort::Int => lia_proj(x, &f, m),
                _ => lra_proj(x, &f, m),
            };
            let qe = match sort {
                Sort::Int => cooper_qe(x, &f),
                _ => lw_qe(x, &f),
            }
            .map_err(|e| e.to_string())?;
            let p = proj(&m).map_err(|e| e.to_string())?;
            ensure(m.eval(&p) == Ok(true), || format!("{m} does not satisfy Proj = {p} of {f}"))?;
            ensure(k.entails(&p, &qe) == Ok(true), || format!("{p} does not imply {qe}"))?;
            let bound = shape(x, &f).map_err(|e| e.to_string())?.image_bound();
            let mut image = Vec::new();
            loop {
                let rest = Formula::and([f.clone(), Formula::or(image.clone()).negate()]);
                let Some(m) = k.is_sat(&rest).map_err(|e| e.to_string())? else { break };
                let p = proj(&m).map_err(|e| e.to_string())?;
                ensure(m.eval(&p) == Ok(true), || format!("{m} does not satisfy {p}"))?;
                image.push(p);
                ensure(image.len() <= bound, || format!("image of {f} exceeds {bound}"))?;
            }
            images += image.len();
            ensure(k.equivalent(&Formula::or(image), &qe) == Ok(true), || format!("image of {f} differs from {qe}"))?;
        }
        report.push(format!("{sort}: 500 matrices, {images} projections"));
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{} in {took:.1?}", report.join(", ")))
}

fn c4_lra_example() -> Check {
    let r = |n: &str| Var::new(n, Sort::Rat);
    let t = |n: &str| LinTerm::var(&r(n));
    let (p1, p2) = (Var::new("p1", Sort::Bool), Var::new("p2", Sort::Bool));
    let (phi1, phi2) = (Formula::bool_var(&p1, true), Formula::bool_var(&p2, true));
    let lt = |a: &str, b: &str| Formula::lt(&t(a), &t(b));
    let lambda = Formula::or([
        Formula::and([Formula::eq(&t("x"), &t("e")), phi1.clone()]),
        Formula::and([lt("l", "x"), lt("x", "u")]),
        Formula::and([lt("x", "u"), phi2.clone()]),
    ]);
    let branches = [
        ("e", 7, Formula::or([phi1.clone(), Formula::and([lt("l", "e"), lt("e", "u")]), Formula::and([lt("e", "u"), phi2.clone()])])),
        ("l+eps", 5, Formula::or([lt("l", "u"), Formula::and([lt("l", "u"), phi2.clone()])])),
        ("-inf", 1, phi2.clone()),
    ];
    let mut k = Kernel::default();
    for (name, xv, expected) in &branches {
        let mut m = Model::new();
        for (v, val) in [("x", *xv), ("e", 7), ("l", 3), ("u", 9)] {
            m.set_num(&r(v), rat(val));
        }
        m.set_bool(&p1, true);
        m.set_bool(&p2, true);
        let got = lra_proj(&r("x"), &lambda, &m).map_err(|e| e.to_string())?;
        ensure(k.equivalent(&got, expected) == Ok(true), || format!("branch {name}: {got} is not {expected}"))?;
    }
    let full = lw_qe(&r("x"), &lambda).map_err(|e| e.to_string())?;
    let summary = Formula::or([phi1, lt("l", "u"), phi2]);
    ensure(k.equivalent(&full, &summary) == Ok(true), || format!("elimination gives {full}"))?;
    Ok("three branches and the full elimination match".into())
}

/// Least fixpoint of the explicit boolean semantics.
fn bool_oracle(program: &Program, property: &Formula) -> bool {
    let mut b = 0;
    let mut prev = bool_bounded_semantics(program, 0).expect("small boolean program");
    loop {
        b += 1;
        let next = bool_bounded_semantics(program, b).expect("small boolean program");
        if next == prev {
            break;
        }
        prev = next;
    }
    let formals = program.proc(program.main()).formals();
    prev[program.main().0].iter().all(|vals| {
        let mut m = Model::new();
        for (v, x) in formals.iter().zip(vals) {
            m.set_bool(v, *x);
        }
        m.eval(property) == Ok(true)
    })
}

fn c5_boolean() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let limits = Limits { procs: 3, params: 3, locals: 2, paths: 4, ..Limits::default() };
    let (mut safe, mut unsafe_) = (0, 0);
    for i in 0..200 {
        let unit = random_program(&mut rng, Mode::Bool, &limits);
        let p = &unit.program;
        let expected = bool_oracle(p, &unit.property);
        let out = check(p, &unit.property, &CheckConfig::default());
        let got = match &out.verdict {
            Verdict::Safe(_) => true,
            Verdict::Unsafe(_) => false,
            Verdict::Unknown(r) => return Err(format!("program {i}: unknown ({r})")),
        };
        ensure(got == expected, || format!("program {i}: verdict {} but the oracle says {}", out.verdict.name(), if expected { "SAFE" } else { "UNSAFE" }))?;
        let bad = sandwich_violations(p, &out.rho, &out.sigma).map_err(|e| e.to_string())?;
        ensure(bad.is_empty(), || format!("program {i}: {}", bad.join("; ")))?;
        if got {
            safe += 1;
        } else {
            unsafe_ += 1;
        }
    }
    Ok(format!("200/200 agree ({safe} safe, {unsafe_} unsafe), no sandwich violations"))
}

fn c6_bebop() -> Check {
    let start = Instant::now();
    let mut steps = BTreeMap::new();
    for n in 2..=12 {
        let unit = gen_bebop(n, true);
        let out = check(&unit.program, &unit.property, &CheckConfig::default());
        ensure(matches!(out.verdict, Verdict::Safe(_)), || format!("N={n}: {}", out.verdict.name()))?;
        steps.insert(n, out.stats.steps());
    }
    let ratio = |n: usize| steps[&n] as f64 / (n * n) as f64;
    let took = start.elapsed();
    ensure(ratio(12) <= 4.0 * ratio(4), || format!("steps {steps:?}: ratio at 12 is {:.2}, at 4 is {:.2}", ratio(12), ratio(4)))?;
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    let listed: Vec<String> = steps.iter().map(|(n, s)| format!("{n}:{s}")).collect();
    Ok(format!("steps {} in {took:.1?}", listed.join(" ")))
}

fn c7_gpdr() -> Check {
    let unit = gen_gpdr_divergence();
    let config = EngineConfig { step_budget: 50_000, ..EngineConfig::default() };
    let (mut rho, mut sigma) = (AssertionMap::new(), AssertionMap::new());
    let (verdict, stats, _) = engine::run(&unit.program, &unit.property, 2, &mut rho, &mut sigma, &config);
    match verdict {
        Ok(BoundedVerdict::Safe) => Ok(format!("SAFE at bound 2 after {} rule applications", stats.steps())),
        Ok(BoundedVerdict::Unsafe) => Err("UNSAFE at bound 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn c8_termination() -> Check {
    let limits = Limits { procs: 3, params: 3, locals: 2, paths: 3, ..Limits::default() };
    let mut counts = BTreeMap::new();
    for (mode, seed) in [(Mode::Rat, 81), (Mode::Int, 82)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..100 {
            let unit = random_program(&mut rng, mode, &limits);
            let p = &unit.program;
            let out = check(p, &unit.property, &CheckConfig { max_bound: 2, ..CheckConfig::default() });
            match &out.verdict {
                Verdict::Safe(proof) => ensure(validate_proof(p, proof, &unit.property), || format!("{mode} {i}: proof rejected"))?,
                Verdict::Unsafe(tree) => ensure(validate_cex(p, tree, &unit.property), || format!("{mode} {i}: counterexample rejected"))?,
                Verdict::Unknown(r) if r == "bound exhausted" => {}
                Verdict::Unknown(r) => return Err(format!("{mode} program {i}: {r}")),
            }
            *counts.entry((mode, out.verdict.name())).or_insert(0) += 1;
        }
    }
    let listed: Vec<String> = counts.iter().map(|((m, v), c)| format!("{m} {v} {c}")).collect();
    Ok(listed.join(", "))
}

fn c9_interpolation() -> Check {
    let mut k = Kernel::default();
    let mut report = Vec::new();
    for (sort, seed) in [(Sort::Bool, 91), (Sort::Rat, 92), (Sort::Int, 93)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all = vars(sort, 4);
        let shared: BTreeSet<Var> = all[1..3].iter().cloned().collect();
        let strategies: &[ItpStrategy] = match sort {
            Sort::Bool => &[ItpStrategy::Boolean, ItpStrategy::Strongest],
            _ => &[ItpStrategy::Farkas, ItpStrategy::Strongest],
        };
        let mut done = 0;
        while done < 500 {
            let n = rng.gen_range(1..=4);
            let a = random_formula(&mut rng, &all[..3], n);
            let n = rng.gen_range(1..=4);
            let b = random_formula(&mut rng, &all[1..], n);
            if k.is_sat(&Formula::and([a.clone(), b.clone()])).map_err(|e| e.to_string())?.is_some() {
                continue;
            }
            done += 1;
            let q = InterpolationQuery { a: a.clone(), b: b.clone(), shared: shared.clone() };
            for s in strategies {
                let i = itp(&mut k, &q, *s).map_err(|e| format!("{s:?} on {a} / {b}: {e}"))?;
                ensure(i.free_vars().is_subset(&shared), || format!("{i} mentions a non-shared variable"))?;
                ensure(k.entails(&a, &i) == Ok(true), || format!("{a} does not imply {i}"))?;
                ensure(k.is_sat(&Formula::and([i.clone(), b.clone()])) == Ok(None), || format!("{i} is consistent with {b}"))?;
            }
        }
        report.push(format!("{sort} 500"));
    }
    Ok(format!("{} pairs meet the contract", report.join(", ")))
}

fn c10_mutation() -> Check {
    let mut proofs: Vec<(Program, Formula, SafetyProof)> = Vec::new();
    let unit = overview();
    if let Verdict::Safe(p) = check(&unit.program, &unit.property, &CheckConfig::default()).verdict {
        proofs.push((unit.program, unit.property, p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let limits = Limits::default();
    while proofs.len() < 40 {
        let mode = *[Mode::Bool, Mode::Rat, Mode::Int].choose(&mut rng).expect("nonempty");
        let unit = random_program(&mut rng, mode, &limits);
        let out = check(&unit.program, &unit.property, &CheckConfig { max_bound: 4, ..CheckConfig::default() });
        if let Verdict::Safe(p) = out.verdict {
            if p.env.iter().any(|(_, f)| !f.conjuncts().is_empty()) {
                proofs.push((unit.program, unit.property, p));
            }
        }
    }
    let (mut mutants, mut caught) = (0, 0);
    while mutants < 100 {
        let (program, property, proof) = proofs.choose(&mut rng).expect("nonempty");
        let candidates: Vec<_> = proof.env.iter().filter(|(_, f)| !f.conjuncts().is_empty()).map(|(p, _)| p).collect();
        let Some(&victim) = candidates.choose(&mut rng) else { continue };
        let mut parts = proof.env.get(victim).conjuncts();
        parts.remove(rng.gen_range(0..parts.len()));
        let mut env: Environment = proof.env.clone();
        env.set(victim, Formula::and(parts));
        mutants += 1;
        if !validate_proof(program, &SafetyProof { env, bound: proof.bound }, property) {
            caught += 1;
        }
    }
    ensure(caught >= 95, || format!("only {caught} of {mutants} mutants rejected"))?;
    Ok(format!("{caught}/{mutants} mutants rejected"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("overview end to end", c1_overview),
        ("trace regression", c2_trace),
        ("MBP properties", c3_mbp),
        ("LRA worked example", c4_lra_example),
        ("boolean differential", c5_boolean),
        ("bebop scaling", c6_bebop),
        ("counter divergence regression", c7_gpdr),
        ("termination", c8_termination),
        ("interpolation contract", c9_interpolation),
        ("proof mutation", c10_mutation),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("criterion {} ({name}): PASS [{took:.1?}] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{took:.1?}] {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
