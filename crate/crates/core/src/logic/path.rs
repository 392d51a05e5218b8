use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::formula::{CallAtom, Formula};
use super::literal::Literal;
use super::LogicError;

pub const DEFAULT_PATH_LIMIT: usize = 4096;

/// One disjunct of the DNF of a body: literals plus calls in body order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub literals: Vec<Literal>,
    pub calls: Vec<CallAtom>,
}

impl Path {
    pub fn to_formula(&self) -> Formula {
        Formula::and(self.literals.iter().cloned().map(Formula::Lit).chain(self.calls.iter().cloned().map(Formula::Call)))
    }

    pub fn literals_formula(&self) -> Formula {
        Formula::cube(self.literals.iter().cloned())
    }

    fn join(&self, other: &Path) -> Path {
        let mut p = self.clone();
        for l in &other.literals {
            if !p.literals.contains(l) {
                p.literals.push(l.clone());
            }
        }
        p.calls.extend(other.calls.iter().cloned());
        p
    }
}

/// Paths of an NNF body by distributive expansion. The disjunction of the
/// result is equivalent to the body.
pub fn dnf_paths(body: &Formula, limit: usize) -> Result<Vec<Path>, LogicError> {
    let paths = expand(body, limit)?;
    let mut seen = BTreeSet::new();
    Ok(paths.into_iter().filter(|p| seen.insert(p.clone())).collect())
}

fn expand(f: &Formula, limit: usize) -> Result<Vec<Path>, LogicError> {
    Ok(match f {
        Formula::True => alloc::vec![Path::default()],
        Formula::False => Vec::new(),
        Formula::Lit(l) => alloc::vec![Path { literals: alloc::vec![l.clone()], calls: Vec::new() }],
        Formula::Call(c) => alloc::vec![Path { literals: Vec::new(), calls: alloc::vec![c.clone()] }],
        Formula::Or(cs) => {
            let mut out = Vec::new();
            for c in cs {
                out.extend(expand(c, limit)?);
                if out.len() > limit {
                    return Err(LogicError::PathExplosion { limit });
                }
            }
            out
        }
        Formula::And(cs) => {
            let mut acc = alloc::vec![Path::default()];
            for c in cs {
                let part = expand(c, limit)?;
                if acc.len().saturating_mul(part.len()) > limit {
                    return Err(LogicError::PathExplosion { limit });
                }
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for p in &part {
                        next.push(a.join(p));
                    }
                }
                acc = next;
            }
            acc
        }
    })
}
