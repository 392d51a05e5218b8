mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recmc_core::kernel::Kernel;
use recmc_core::logic::{Formula, Model, Sort, Var};
use recmc_core::num::rat;
use recmc_core::qe::{cooper_qe, lia_proj, lra_proj, lw_qe, project, shape, Strategy};

fn proj(x: &Var, f: &Formula, m: &Model) -> Formula {
    match x.sort() {
        Sort::Int => lia_proj(x, f, m).unwrap(),
        _ => lra_proj(x, f, m).unwrap(),
    }
}

fn full(x: &Var, f: &Formula) -> Formula {
    match x.sort() {
        Sort::Int => cooper_qe(x, f).unwrap(),
        _ => lw_qe(x, f).unwrap(),
    }
}

/// Projection of one variable: under-approximation, finite image within the
/// bound, and the image covering the full elimination.
fn mbp_suite(sort: Sort, seed: u64, rounds: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = Kernel::default();
    let vs = vars(sort, 3);
    let x = &vs[0];
    let mut done = 0;
    while done < rounds {
        let lits = rng.gen_range(1..=6);
        let f = random_small_formula(&mut rng, &vs, lits);
        if !f.mentions(x) {
            continue;
        }
        let Some(m) = k.is_sat(&f).unwrap() else { continue };
        done += 1;
        let qe = full(x, &f);
        assert!(!qe.mentions(x));
        let p = proj(x, &f, &m);
        assert!(!p.mentions(x));
        assert_eq!(m.eval(&p), Ok(true), "{f} {m} {p}");
        assert!(k.entails(&p, &qe).unwrap(), "{p} does not imply {qe}");
        assert_eq!(p, proj(x, &f, &m), "projection is not deterministic");

        let bound = shape(x, &f).unwrap().image_bound();
        let mut image: Vec<Formula> = Vec::new();
        loop {
            let g = Formula::and([f.clone(), Formula::or(image.clone()).negate()]);
            let Some(m) = k.is_sat(&g).unwrap() else { break };
            let p = proj(x, &f, &m);
            assert_eq!(m.eval(&p), Ok(true));
            image.push(p);
            assert!(image.len() <= bound, "image of {f} exceeds {bound}");
        }
        assert!(k.equivalent(&Formula::or(image), &qe).unwrap(), "image of {f} does not cover {qe}");
    }
}

#[test]
fn lra_mbp_properties() {
    mbp_suite(Sort::Rat, 11, 500);
}

#[test]
fn lia_mbp_properties() {
    mbp_suite(Sort::Int, 12, 500);
}

#[test]
fn cooper_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vs = vars(Sort::Int, 3);
    let (x, y, z) = (&vs[0], &vs[1], &vs[2]);
    for _ in 0..300 {
        let lits = rng.gen_range(1..=5);
        let f = Formula::and([random_small_formula(&mut rng, &vs, lits), box_formula(&vs[..1], 8)]);
        let g = cooper_qe(x, &f).unwrap();
        for a in -8..=8 {
            for b in -8..=8 {
                let mut m = Model::new();
                m.set_num(y, rat(a));
                m.set_num(z, rat(b));
                let expected = (-8..=8).any(|c| {
                    let mut m2 = m.clone();
                    m2.set_num(x, rat(c));
                    m2.eval(&f).unwrap()
                });
                assert_eq!(m.eval(&g), Ok(expected), "{f} at y={a} z={b}: {g}");
            }
        }
    }
}

#[test]
fn multi_variable_projection_stays_under_qe() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut k = Kernel::default();
    for sort in [Sort::Rat, Sort::Int] {
        let vs = vars(sort, 4);
        for _ in 0..100 {
            let f = random_small_formula(&mut rng, &vs, 5);
            let Some(m) = k.is_sat(&f).unwrap() else { continue };
            let elim = &vs[..2];
            let p = project(elim, &f, Some(&m), Strategy::Mbp).unwrap();
            let q = project(elim, &f, None, Strategy::Qe).unwrap();
            assert!(elim.iter().all(|v| !p.mentions(v) && !q.mentions(v)));
            assert_eq!(m.eval(&p), Ok(true));
            assert!(k.entails(&p, &q).unwrap());
            assert!(k.entails(&f, &q).unwrap());
        }
    }
}

#[test]
fn empty_projection_is_identity() {
    let vs = vars(Sort::Rat, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let f = random_small_formula(&mut rng, &vs, 4);
    assert_eq!(project(&[], &f, None, Strategy::Qe).unwrap(), f);
}
