//! Interpolants for unsatisfiable pairs `A ∧ B`, built one model of `A` at
//! a time.
//!
//! Each round takes a model of `A ∧ ¬ψ`, shrinks it to a cube of `A`'s
//! literals and generalizes the cube to a formula over the shared
//! vocabulary that still contradicts `B`. The loop ends once `A ⇒ ψ`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::kernel::{Kernel, KernelError};
use crate::logic::{dnf_paths, CmpOp, Formula, LinTerm, Literal, LogicError, Model, Var};
use crate::qe::{project, QeError, Strategy};

/// Most cubes of `B` the Farkas generalization combines before falling
/// back to projection.
const FARKAS_CUBES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItpStrategy {
    /// Exact projection of `A` onto the shared variables.
    Strongest,
    /// Linear combinations read off Farkas certificates, projection where
    /// there is none.
    Farkas,
    /// Drop literals over non-shared variables. Only sound for purely
    /// boolean cubes; arithmetic cubes are projected instead.
    Boolean,
}

#[derive(Clone, Debug)]
pub struct InterpolationQuery {
    pub a: Formula,
    pub b: Formula,
    pub shared: BTreeSet<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ItpError {
    #[error("A ∧ B is satisfiable")]
    NotUnsat,
    #[error("interpolant breaks its contract: {0}")]
    Contract(&'static str),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Computes an interpolant and checks it: `A ⇒ ψ`, `ψ ∧ B` unsat and
/// `ψ` only mentions shared variables.
pub fn itp(k: &mut Kernel, q: &InterpolationQuery, strategy: ItpStrategy) -> Result<Formula, ItpError> {
    if k.is_sat(&Formula::and([q.a.clone(), q.b.clone()]))?.is_some() {
        return Err(ItpError::NotUnsat);
    }
    let mut psi = Formula::False;
    while let Some(m) = k.is_sat(&Formula::and([q.a.clone(), psi.negate()]))? {
        let cube = m.implicant(&q.a)?;
        let g = generalize(k, &cube, &m, q, strategy)?;
        psi = Formula::or([psi, g]);
    }
    check_contract(k, q, &psi)?;
    Ok(psi)
}

fn check_contract(k: &mut Kernel, q: &InterpolationQuery, psi: &Formula) -> Result<(), ItpError> {
    if !psi.free_vars().is_subset(&q.shared) {
        return Err(ItpError::Contract("mentions a non-shared variable"));
    }
    if !k.entails(&q.a, psi)? {
        return Err(ItpError::Contract("not implied by A"));
    }
    if k.is_sat(&Formula::and([psi.clone(), q.b.clone()]))?.is_some() {
        return Err(ItpError::Contract("consistent with B"));
    }
    Ok(())
}

fn generalize(
    k: &mut Kernel,
    cube: &[Literal],
    m: &Model,
    q: &InterpolationQuery,
    strategy: ItpStrategy,
) -> Result<Formula, ItpError> {
    match strategy {
        ItpStrategy::Strongest => strongest(cube, m, &q.shared),
        ItpStrategy::Boolean if cube.iter().all(|l| matches!(l, Literal::Bool { .. })) => {
            Ok(Formula::cube(cube.iter().filter(|l| l.vars().is_subset(&q.shared)).cloned()))
        }
        ItpStrategy::Boolean => strongest(cube, m, &q.shared),
        ItpStrategy::Farkas => match farkas(k, cube, &q.b) {
            Some(g) => Ok(g),
            None => strongest(cube, m, &q.shared),
        },
    }
}

/// Model-based projection of the cube onto the shared variables.
fn strongest(cube: &[Literal], m: &Model, shared: &BTreeSet<Var>) -> Result<Formula, ItpError> {
    let f = Formula::cube(cube.iter().cloned());
    let locals: Vec<Var> = f.free_vars().into_iter().filter(|v| !shared.contains(v)).collect();
    Ok(project(&locals, &f, Some(m), Strategy::Mbp)?)
}

/// Conjunction over the cubes of `B` of the `A` side of a Farkas
/// refutation, or a clashing shared boolean literal. `None` when some cube
/// has no such refutation.
fn farkas(k: &mut Kernel, cube: &[Literal], b: &Formula) -> Option<Formula> {
    let paths = dnf_paths(b, FARKAS_CUBES).ok()?;
    let mut parts = Vec::new();
    for p in &paths {
        if !p.calls.is_empty() {
            return None;
        }
        parts.push(farkas_cube(k, cube, &p.literals)?);
    }
    Some(Formula::and(parts))
}

fn farkas_cube(k: &mut Kernel, a: &[Literal], b: &[Literal]) -> Option<Formula> {
    for l in a {
        if let Literal::Bool { .. } = l {
            if b.iter().any(|m| Formula::Lit(m.clone()) == l.negate()) {
                return Some(Formula::Lit(l.clone()));
            }
        }
    }
    let lits: Vec<Literal> = a.iter().chain(b).filter(|l| matches!(l, Literal::Cmp { .. })).cloned().collect();
    let cert = k.farkas(&lits)?;
    let mut sum = LinTerm::zero();
    let mut strict = false;
    for (lit, lambda) in &cert.terms {
        if !a.contains(lit) || lambda.is_zero() {
            continue;
        }
        let Literal::Cmp { op, term } = lit else { continue };
        if *op == CmpOp::Lt && lambda.is_positive() {
            strict = true;
        }
        sum = &sum + &term.scale(lambda);
    }
    Some(Literal::cmp(if strict { CmpOp::Lt } else { CmpOp::Le }, sum))
}
