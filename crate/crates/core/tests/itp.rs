mod common;

use std::collections::BTreeSet;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recmc_core::itp::{itp, InterpolationQuery, ItpStrategy};
use recmc_core::kernel::Kernel;
use recmc_core::logic::{Formula, Sort, Var};

/// Independent satisfiability check per sort: truth tables, Fourier-Motzkin,
/// and the kernel itself for integers.
fn sat(k: &mut Kernel, f: &Formula, all: &[Var]) -> bool {
    match all[0].sort() {
        Sort::Bool => truth_table_sat(f, all),
        Sort::Rat => lra_sat(f),
        Sort::Int => k.is_sat(f).unwrap().is_some(),
    }
}

/// `A` over v0..v2, `B` over v1..v3, shared {v1, v2}.
fn contract_suite(sort: Sort, seed: u64, pairs: usize, strategies: &[ItpStrategy]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = Kernel::default();
    let all = vars(sort, 4);
    let shared: BTreeSet<Var> = all[1..3].iter().cloned().collect();
    let mut done = 0;
    while done < pairs {
        let n = rng.gen_range(1..=4);
        let a = random_small_formula(&mut rng, &all[..3], n);
        let n = rng.gen_range(1..=4);
        let b = random_small_formula(&mut rng, &all[1..], n);
        if sat(&mut k, &Formula::and([a.clone(), b.clone()]), &all) {
            continue;
        }
        done += 1;
        let q = InterpolationQuery { a: a.clone(), b: b.clone(), shared: shared.clone() };
        for s in strategies {
            let i = itp(&mut k, &q, *s).unwrap_or_else(|e| panic!("{s:?} on {a} / {b}: {e}"));
            assert!(i.free_vars().is_subset(&shared), "{s:?}: {i} mentions a local");
            assert!(!sat(&mut k, &Formula::and([a.clone(), i.negate()]), &all), "{s:?}: {a} does not imply {i}");
            assert!(!sat(&mut k, &Formula::and([i.clone(), b.clone()]), &all), "{s:?}: {i} is consistent with {b}");
        }
    }
}

#[test]
fn boolean_interpolants_meet_the_contract() {
    contract_suite(Sort::Bool, 21, 500, &[ItpStrategy::Boolean, ItpStrategy::Strongest]);
}

#[test]
fn rational_interpolants_meet_the_contract() {
    contract_suite(Sort::Rat, 22, 500, &[ItpStrategy::Farkas, ItpStrategy::Strongest]);
}

#[test]
fn integer_interpolants_meet_the_contract() {
    contract_suite(Sort::Int, 23, 500, &[ItpStrategy::Farkas, ItpStrategy::Strongest]);
}

#[test]
fn strongest_is_idempotent_on_shared_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut k = Kernel::default();
    let all = vars(Sort::Rat, 3);
    let shared: BTreeSet<Var> = all.iter().cloned().collect();
    let mut done = 0;
    while done < 100 {
        let n = rng.gen_range(1..=4);
        let a = random_small_formula(&mut rng, &all, n);
        let n = rng.gen_range(1..=3);
        let b = random_small_formula(&mut rng, &all, n);
        if lra_sat(&Formula::and([a.clone(), b.clone()])) {
            continue;
        }
        done += 1;
        let q = InterpolationQuery { a: a.clone(), b, shared: shared.clone() };
        let i = itp(&mut k, &q, ItpStrategy::Strongest).unwrap();
        assert!(k.equivalent(&i, &a).unwrap(), "{i} differs from {a}");
    }
}
