mod common;

use common::overview::*;
use recmc_core::driver::{check, check_inductive, validate_cex, validate_proof, CheckConfig, SafetyProof, Verdict};
use recmc_core::kernel::Kernel;
use recmc_core::logic::{Formula, Value};
use recmc_core::num::rat;
use recmc_core::program::{AssertionMap, Environment};

fn config() -> CheckConfig {
    let mut c = CheckConfig::default();
    c.engine.check_invariants = true;
    c
}

#[test]
fn overview_is_proved_at_one() {
    let p = overview();
    let out = check(&p, &property(4), &config());
    let Verdict::Safe(proof) = &out.verdict else { panic!("{:?}", out.verdict) };
    assert_eq!(proof.bound, 1);
    assert!(validate_proof(&p, proof, &property(4)));
    let mut k = Kernel::default();
    assert!(k.entails(proof.env.get(M), &property(4)).unwrap());
    let t_sum = Formula::le(&t("t").scale(&rat(2)), &t("t0"));
    assert!(k.entails(proof.env.get(T), &t_sum).unwrap(), "{}", proof.env.get(T));
}

#[test]
fn overview_with_tighter_property_is_unsafe() {
    let p = overview();
    let out = check(&p, &property(5), &config());
    let Verdict::Unsafe(tree) = &out.verdict else { panic!("{:?}", out.verdict) };
    assert!(validate_cex(&p, tree, &property(5)));
    assert_eq!(tree.root.children.len(), 3);
    assert_eq!(tree.root.children[0].proc, T);
    assert_eq!(tree.root.children[1].proc, D);

    let mut bad = tree.clone();
    let leaf = &mut bad.root.children[2];
    let d = leaf.model.num(&iv("d")).unwrap() + rat(1);
    leaf.model.set(&iv("d"), Value::Num(d));
    assert!(!validate_cex(&p, &bad, &property(5)));
}

#[test]
fn bound_zero_is_not_enough() {
    let p = overview();
    let out = check(&p, &property(4), &CheckConfig { max_bound: 0, ..config() });
    assert_eq!(out.verdict, Verdict::Unknown("bound exhausted".into()));
}

#[test]
fn overview_summaries_propagate() {
    let p = overview();
    let mut sigma = AssertionMap::new();
    sigma.insert(M, 1, property(4), None);
    sigma.insert(T, 0, Formula::le(&t("t").scale(&rat(2)), &t("t0")), None);
    sigma.insert(D, 0, Formula::le(&t("d"), &(&t("d0") - &c(1))), None);
    let bogus = Formula::le(&t("d"), &(&t("d0") - &c(2)));
    sigma.insert(D, 1, bogus.clone(), None);
    let mut k = Kernel::default();
    assert!(!check_inductive(&p, &mut sigma, 1, &mut k).unwrap());
    assert!(sigma.at(M, 2).any(|(_, f)| f.formula == property(4)));
    assert!(!sigma.at(D, 2).any(|(_, f)| f.formula == bogus));
    assert!(sigma.at(D, 2).count() == 1);
}

#[test]
fn vacuous_proofs_are_rejected() {
    let p = overview();
    let proof = SafetyProof { env: Environment::constant(&p, true), bound: 0 };
    assert!(!validate_proof(&p, &proof, &property(4)));
    assert!(validate_proof(&p, &proof, &Formula::True));
}
