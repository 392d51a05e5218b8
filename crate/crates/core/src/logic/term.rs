use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::num::{rat, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Rat,
    Int,
}

impl Sort {
    pub fn is_arith(self) -> bool {
        !matches!(self, Sort::Bool)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "bool",
            Sort::Rat => "rat",
            Sort::Int => "int",
        })
    }
}

/// A named, sorted variable. Roles (input, output, local) are tracked by the
/// owning procedure, not by the variable itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    name: Arc<str>,
    sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var { name: Arc::from(name), sort }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn is_bool(&self) -> bool {
        self.sort == Sort::Bool
    }

    /// A variable named after `base` that does not occur in `avoid`.
    ///
    /// Fresh names contain `'`, which the input syntax rejects, so they never
    /// clash with user variables.
    pub fn fresh(base: &str, sort: Sort, avoid: &BTreeSet<Var>) -> Var {
        Var::fresh_from(base, sort, avoid, 0)
    }

    /// Like `fresh`, trying numbered names from `start` on.
    pub fn fresh_from(base: &str, sort: Sort, avoid: &BTreeSet<Var>, start: usize) -> Var {
        let stem = base.split('\'').next().unwrap_or(base);
        let taken = |name: &str| {
            [Sort::Bool, Sort::Rat, Sort::Int].into_iter().any(|s| avoid.contains(&Var::new(name, s)))
        };
        let mut n = start;
        loop {
            let name = if n == 0 { alloc::format!("{stem}'") } else { alloc::format!("{stem}'{n}") };
            if !taken(&name) {
                return Var::new(&name, sort);
            }
            n += 1;
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.sort)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `sum(coeffs[v] * v) + constant`. Zero coefficients are never stored.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl LinTerm {
    pub fn zero() -> LinTerm {
        LinTerm::default()
    }

    pub fn constant(c: Rational) -> LinTerm {
        LinTerm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn int(c: i64) -> LinTerm {
        LinTerm::constant(rat(c))
    }

    pub fn var(v: &Var) -> LinTerm {
        debug_assert!(v.sort().is_arith(), "boolean variable {v} used as a term");
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.clone(), Rational::one());
        LinTerm { coeffs, constant: Rational::zero() }
    }

    pub fn monomial(c: Rational, v: &Var) -> LinTerm {
        LinTerm::var(v).scale(&c)
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (Var, Rational)>, constant: Rational) -> LinTerm {
        let mut t = LinTerm::constant(constant);
        for (v, c) in coeffs {
            t.add_coeff(&v, &c);
        }
        t
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rational> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.coeffs.contains_key(v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn add_coeff(&mut self, v: &Var, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(v);
        }
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    pub fn scale(&self, k: &Rational) -> LinTerm {
        if k.is_zero() {
            return LinTerm::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    /// The term with `v` removed.
    pub fn without(&self, v: &Var) -> LinTerm {
        let mut t = self.clone();
        t.coeffs.remove(v);
        t
    }

    pub fn substitute(&self, v: &Var, by: &LinTerm) -> LinTerm {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => &self.without(v) + &by.scale(c),
        }
    }

    /// Simultaneous substitution.
    pub fn substitute_all(&self, map: &BTreeMap<Var, LinTerm>) -> LinTerm {
        let mut out = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match map.get(v) {
                Some(t) => out = &out + &t.scale(c),
                None => out.add_coeff(v, c),
            }
        }
        out
    }

    pub fn is_integral(&self) -> bool {
        self.constant.is_integer() && self.coeffs.values().all(|c| c.is_integer())
    }

    pub fn all_int(&self) -> bool {
        self.coeffs.keys().all(|v| v.sort() == Sort::Int)
    }

    /// First variable in term order with its coefficient.
    pub fn leading(&self) -> Option<(&Var, &Rational)> {
        self.coeffs.iter().next()
    }
}

impl Add for &LinTerm {
    type Output = LinTerm;
    fn add(self, rhs: &LinTerm) -> LinTerm {
        let mut out = self.clone();
        for (v, c) in &rhs.coeffs {
            out.add_coeff(v, c);
        }
        out.constant += &rhs.constant;
        out
    }
}

impl Add for LinTerm {
    type Output = LinTerm;
    fn add(self, rhs: LinTerm) -> LinTerm {
        &self + &rhs
    }
}

impl Sub for &LinTerm {
    type Output = LinTerm;
    fn sub(self, rhs: &LinTerm) -> LinTerm {
        self + &(-rhs)
    }
}

impl Sub for LinTerm {
    type Output = LinTerm;
    fn sub(self, rhs: LinTerm) -> LinTerm {
        &self - &rhs
    }
}

impl Neg for &LinTerm {
    type Output = LinTerm;
    fn neg(self) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            constant: -&self.constant,
        }
    }
}

impl Neg for LinTerm {
    type Output = LinTerm;
    fn neg(self) -> LinTerm {
        -&self
    }
}

impl Mul<&Rational> for &LinTerm {
    type Output = LinTerm;
    fn mul(self, k: &Rational) -> LinTerm {
        self.scale(k)
    }
}

pub(crate) fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        alloc::format!("{}", r.numer())
    } else {
        alloc::format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_monomial(c: &Rational, v: &Var) -> String {
    if c.is_one() {
        alloc::format!("{v}")
    } else {
        alloc::format!("(* {} {v})", fmt_rational(c))
    }
}

impl LinTerm {
    /// The term in the input syntax, with negative parts moved behind a `-`.
    pub(crate) fn sexpr(&self) -> String {
        let mut parts: alloc::vec::Vec<String> = alloc::vec::Vec::new();
        let mut neg: alloc::vec::Vec<String> = alloc::vec::Vec::new();
        for (v, c) in &self.coeffs {
            if c.is_negative() {
                neg.push(fmt_monomial(&-c, v));
            } else {
                parts.push(fmt_monomial(c, v));
            }
        }
        if !self.constant.is_zero() || (parts.is_empty() && neg.is_empty()) {
            if self.constant.is_negative() && !parts.is_empty() {
                neg.push(fmt_rational(&-&self.constant));
            } else {
                parts.push(fmt_rational(&self.constant));
            }
        }
        let pos = match parts.len() {
            0 => String::from("0"),
            1 => parts.pop().unwrap_or_default(),
            _ => alloc::format!("(+ {})", parts.join(" ")),
        };
        if neg.is_empty() {
            pos
        } else if pos == "0" && neg.len() == 1 {
            alloc::format!("(- {})", neg[0])
        } else {
            let n = if neg.len() == 1 { neg.pop().unwrap_or_default() } else { alloc::format!("(+ {})", neg.join(" ")) };
            alloc::format!("(- {pos} {n})")
        }
    }
}

impl fmt::Debug for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sexpr())
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sexpr())
    }
}
