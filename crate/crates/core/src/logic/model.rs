use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer as _;
use num_traits::Zero;

use super::formula::Formula;
use super::literal::Literal;
use super::term::{fmt_rational, LinTerm, Var};
use super::LogicError;
use crate::num::Rational;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Num(Rational),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Num(_) => None,
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Value::Num(r) => Some(r),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(r) => f.write_str(&fmt_rational(r)),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A total assignment on the variables it mentions.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Model {
    values: BTreeMap<Var, Value>,
}

impl Model {
    pub fn new() -> Model {
        Model::default()
    }

    pub fn set(&mut self, v: &Var, val: Value) {
        self.values.insert(v.clone(), val);
    }

    pub fn set_num(&mut self, v: &Var, r: Rational) {
        self.values.insert(v.clone(), Value::Num(r));
    }

    pub fn set_bool(&mut self, v: &Var, b: bool) {
        self.values.insert(v.clone(), Value::Bool(b));
    }

    pub fn get(&self, v: &Var) -> Option<&Value> {
        self.values.get(v)
    }

    pub fn num(&self, v: &Var) -> Result<&Rational, LogicError> {
        self.values
            .get(v)
            .and_then(Value::as_num)
            .ok_or_else(|| LogicError::UnassignedVar(v.name().into()))
    }

    pub fn boolean(&self, v: &Var) -> Result<bool, LogicError> {
        self.values
            .get(v)
            .and_then(Value::as_bool)
            .ok_or_else(|| LogicError::UnassignedVar(v.name().into()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The restriction to `vars` (missing ones are skipped).
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Model {
        let mut m = Model::new();
        for v in vars {
            if let Some(val) = self.values.get(v) {
                m.set(v, val.clone());
            }
        }
        m
    }

    pub fn eval_term(&self, t: &LinTerm) -> Result<Rational, LogicError> {
        let mut acc = t.constant_part().clone();
        for (v, c) in t.coeffs() {
            acc += c * self.num(v)?;
        }
        Ok(acc)
    }

    pub fn eval_literal(&self, l: &Literal) -> Result<bool, LogicError> {
        Ok(match l {
            Literal::Bool { var, positive } => self.boolean(var)? == *positive,
            Literal::Cmp { op, term } => {
                let v = self.eval_term(term)?;
                match op {
                    super::CmpOp::Lt => v < Rational::zero(),
                    super::CmpOp::Le => v <= Rational::zero(),
                    super::CmpOp::Eq => v.is_zero(),
                }
            }
            Literal::Div { d, term, positive } => {
                let v = self.eval_term(term)?;
                let divisible = v.is_integer() && v.numer().mod_floor(d).is_zero();
                divisible == *positive
            }
        })
    }

    /// Truth value of a call-free formula.
    pub fn eval(&self, f: &Formula) -> Result<bool, LogicError> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Lit(l) => self.eval_literal(l),
            Formula::And(cs) => {
                for c in cs {
                    if !self.eval(c)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(cs) => {
                for c in cs {
                    if self.eval(c)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Call(_) => Err(LogicError::CallInEval),
        }
    }

    /// A conjunction of literals of `f`, all true here, that implies `f`.
    /// Disjunctions contribute their first true child.
    pub fn implicant(&self, f: &Formula) -> Result<Vec<Literal>, LogicError> {
        fn go(m: &Model, f: &Formula, out: &mut Vec<Literal>) -> Result<bool, LogicError> {
            match f {
                Formula::True => Ok(true),
                Formula::False => Ok(false),
                Formula::Lit(l) => {
                    if m.eval_literal(l)? {
                        if !out.contains(l) {
                            out.push(l.clone());
                        }
                        Ok(true)
                    } else {
                        Ok(false)
                    }
                }
                Formula::And(cs) => {
                    for c in cs {
                        if !go(m, c, out)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                Formula::Or(cs) => {
                    for c in cs {
                        if m.eval(c)? {
                            return go(m, c, out);
                        }
                    }
                    Ok(false)
                }
                Formula::Call(_) => Err(LogicError::CallInEval),
            }
        }
        let mut out = Vec::new();
        if go(self, f, &mut out)? {
            Ok(out)
        } else {
            Err(LogicError::ModelMismatch)
        }
    }

    /// Formula pinning every variable in `vars` to its value here.
    pub fn pin<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Result<Formula, LogicError> {
        let mut parts = Vec::new();
        for v in vars {
            match self.values.get(v) {
                Some(Value::Bool(b)) => parts.push(Formula::bool_var(v, *b)),
                Some(Value::Num(r)) => parts.push(Formula::eq(&LinTerm::var(v), &LinTerm::constant(r.clone()))),
                None => return Err(LogicError::UnassignedVar(v.name().into())),
            }
        }
        Ok(Formula::and(parts))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, val) in &self.values {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{v}={val}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}
