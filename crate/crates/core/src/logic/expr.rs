use alloc::boxed::Box;
use alloc::vec::Vec;

use super::formula::{CallAtom, Formula};
use super::literal::{CmpOp, Literal};
use super::term::{LinTerm, Var};
use super::LogicError;
use crate::num::Integer;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

/// An arbitrary boolean combination, as written by a user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    True,
    False,
    BoolVar(Var),
    Cmp(Rel, LinTerm, LinTerm),
    Divides(Integer, LinTerm),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Call(CallAtom),
}

/// Pushes negations down to the atoms.
///
/// `¬(a<b)` becomes `b≤a`, `¬(a≤b)` becomes `b<a` and `¬(a=b)` becomes
/// `a<b ∨ b<a`. A call under a negation is an error.
pub fn to_nnf(e: &Expr) -> Result<Formula, LogicError> {
    nnf(e, true)
}

fn cmp(rel: Rel, a: &LinTerm, b: &LinTerm) -> Formula {
    match rel {
        Rel::Lt => Literal::cmp(CmpOp::Lt, a - b),
        Rel::Le => Literal::cmp(CmpOp::Le, a - b),
        Rel::Eq => Literal::cmp(CmpOp::Eq, a - b),
        Rel::Gt => Literal::cmp(CmpOp::Lt, b - a),
        Rel::Ge => Literal::cmp(CmpOp::Le, b - a),
        Rel::Ne => Formula::or([Literal::cmp(CmpOp::Lt, a - b), Literal::cmp(CmpOp::Lt, b - a)]),
    }
}

fn negated(rel: Rel) -> Rel {
    match rel {
        Rel::Lt => Rel::Ge,
        Rel::Le => Rel::Gt,
        Rel::Eq => Rel::Ne,
        Rel::Ne => Rel::Eq,
        Rel::Ge => Rel::Lt,
        Rel::Gt => Rel::Le,
    }
}

fn nnf(e: &Expr, pos: bool) -> Result<Formula, LogicError> {
    Ok(match e {
        Expr::True => Formula::constant(pos),
        Expr::False => Formula::constant(!pos),
        Expr::BoolVar(v) => Formula::bool_var(v, pos),
        Expr::Cmp(rel, a, b) => cmp(if pos { *rel } else { negated(*rel) }, a, b),
        Expr::Divides(d, t) => Literal::divides(d.clone(), t.clone(), pos),
        Expr::Not(inner) => nnf(inner, !pos)?,
        Expr::And(cs) => {
            let parts = cs.iter().map(|c| nnf(c, pos)).collect::<Result<Vec<_>, _>>()?;
            if pos {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Expr::Or(cs) => {
            let parts = cs.iter().map(|c| nnf(c, pos)).collect::<Result<Vec<_>, _>>()?;
            if pos {
                Formula::or(parts)
            } else {
                Formula::and(parts)
            }
        }
        Expr::Implies(a, b) => {
            let lhs = nnf(a, !pos)?;
            let rhs = nnf(b, pos)?;
            if pos {
                Formula::or([lhs, rhs])
            } else {
                Formula::and([lhs, rhs])
            }
        }
        Expr::Iff(a, b) => {
            let (ap, an) = (nnf(a, true)?, nnf(a, false)?);
            let (bp, bn) = (nnf(b, true)?, nnf(b, false)?);
            if pos {
                Formula::or([Formula::and([ap, bp]), Formula::and([an, bn])])
            } else {
                Formula::or([Formula::and([ap, bn]), Formula::and([an, bp])])
            }
        }
        Expr::Call(c) => {
            if !pos {
                return Err(LogicError::NegatedCall);
            }
            Formula::Call(c.clone())
        }
    })
}
