//! The RPL input format: programs as s-expressions.
//!
//! ```text
//! (program
//!   (mode int)
//!   (procedure D (in d0) (out d) (local) (body (= d (- d0 1))))
//!   (main D)
//!   (assert-safe (< d d0)))
//! ```
//!
//! Variables take the sort of the mode unless declared as `(name sort)`.
//! Calls bind arguments to the callee's inputs followed by its outputs.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use recmc_core::logic::{to_nnf, CallAtom, Expr, Formula, LinTerm, LogicError, Rel, Sort, Var};
use recmc_core::num::{Integer, Rational};
use recmc_core::program::{Mode, Procedure, ProcId, Program, ProgramError};

/// A parsed program file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceUnit {
    pub program: Program,
    /// Over the formals of `main`.
    pub property: Formula,
}

impl SourceUnit {
    pub fn mode(&self) -> Mode {
        self.program.mode
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error(transparent)]
    Validation(#[from] ProgramError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    /// The items of a list that starts with `head`.
    fn form(&self, head: &str) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) if items.first().and_then(Sexp::atom) == Some(head) => Some(&items[1..]),
            _ => None,
        }
    }
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax { line: pos.line, col: pos.col, message: message.into() })
}

fn read(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = vec![(Vec::new(), Pos { line: 1, col: 1 })];
    let (mut line, mut col) = (1, 0);
    let mut chars = text.chars().peekable();
    let mut atom: Option<(String, Pos)> = None;
    let flush = |atom: &mut Option<(String, Pos)>, stack: &mut Vec<(Vec<Sexp>, Pos)>| {
        if let Some((s, p)) = atom.take() {
            stack.last_mut().expect("reader stack is never empty").0.push(Sexp::Atom(s, p));
        }
    };
    while let Some(ch) = chars.next() {
        if ch == '\n' {
            line += 1;
            col = 0;
        } else {
            col += 1;
        }
        let pos = Pos { line, col };
        match ch {
            ';' => {
                flush(&mut atom, &mut stack);
                while chars.peek().is_some_and(|c| *c != '\n') {
                    chars.next();
                }
            }
            '(' => {
                flush(&mut atom, &mut stack);
                stack.push((Vec::new(), pos));
            }
            ')' => {
                flush(&mut atom, &mut stack);
                if stack.len() == 1 {
                    return err(pos, "unbalanced `)`");
                }
                let (items, start) = stack.pop().expect("checked above");
                stack.last_mut().expect("reader stack is never empty").0.push(Sexp::List(items, start));
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack),
            c => match &mut atom {
                Some((s, _)) => s.push(c),
                None => atom = Some((c.to_string(), pos)),
            },
        }
    }
    flush(&mut atom, &mut stack);
    if stack.len() > 1 {
        let (_, start) = stack.pop().expect("checked above");
        return err(start, "unclosed `(`");
    }
    Ok(stack.pop().expect("reader stack is never empty").0)
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_alphanumeric() || "_.$@#!?".contains(c))
}

fn parse_rational(s: &str) -> Option<Rational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = Integer::from_str(num).ok()?;
    let den = Integer::from_str(den).ok()?;
    if den == Integer::from(0) || den < Integer::from(0) {
        return None;
    }
    Some(Rational::new(num, den))
}

fn sort_name(s: &str) -> Option<Sort> {
    match s {
        "bool" => Some(Sort::Bool),
        "rat" | "real" => Some(Sort::Rat),
        "int" => Some(Sort::Int),
        _ => None,
    }
}

fn mode_name(s: &str) -> Option<Mode> {
    match s {
        "bool" => Some(Mode::Bool),
        "rat" | "real" => Some(Mode::Rat),
        "int" => Some(Mode::Int),
        _ => None,
    }
}

fn default_sort(mode: Mode) -> Sort {
    match mode {
        Mode::Bool => Sort::Bool,
        Mode::Rat => Sort::Rat,
        Mode::Int => Sort::Int,
    }
}

struct Decl<'a> {
    name: String,
    inputs: Vec<Var>,
    outputs: Vec<Var>,
    locals: Vec<Var>,
    body: &'a Sexp,
}

/// Variables in scope and procedure names, for one body.
struct Scope<'a> {
    vars: BTreeMap<String, Var>,
    procs: &'a BTreeMap<String, ProcId>,
}

impl Scope<'_> {
    fn var(&self, s: &Sexp) -> Result<Var, ParseError> {
        let Some(name) = s.atom() else { return err(s.pos(), "expected a variable") };
        match self.vars.get(name) {
            Some(v) => Ok(v.clone()),
            None => err(s.pos(), format!("undeclared variable `{name}`")),
        }
    }

    fn term(&self, s: &Sexp) -> Result<LinTerm, ParseError> {
        match s {
            Sexp::Atom(a, pos) => {
                if let Some(r) = parse_rational(a) {
                    return Ok(LinTerm::constant(r));
                }
                let v = self.var(s)?;
                if v.is_bool() {
                    return err(*pos, format!("`{a}` is boolean, expected a number"));
                }
                Ok(LinTerm::var(&v))
            }
            Sexp::List(items, pos) => {
                let head = items.first().and_then(Sexp::atom).unwrap_or("");
                let args = &items[1.min(items.len())..];
                match head {
                    "+" => {
                        let mut t = LinTerm::zero();
                        for a in args {
                            t = &t + &self.term(a)?;
                        }
                        Ok(t)
                    }
                    "-" => match args {
                        [a] => Ok(-&self.term(a)?),
                        [a, rest @ ..] if !rest.is_empty() => {
                            let mut t = self.term(a)?;
                            for b in rest {
                                t = &t - &self.term(b)?;
                            }
                            Ok(t)
                        }
                        _ => err(*pos, "`-` needs one or more arguments"),
                    },
                    "*" => {
                        let mut t = LinTerm::constant(Rational::from_integer(1.into()));
                        for a in args {
                            let u = self.term(a)?;
                            if u.is_constant() {
                                t = t.scale(u.constant_part());
                            } else if t.is_constant() {
                                t = u.scale(t.constant_part());
                            } else {
                                return err(a.pos(), "nonlinear product");
                            }
                        }
                        Ok(t)
                    }
                    _ => err(*pos, format!("unknown term operator `{head}`")),
                }
            }
        }
    }

    fn is_bool_operand(&self, s: &Sexp) -> bool {
        match s {
            Sexp::Atom(a, _) => a == "true" || a == "false" || self.vars.get(a.as_str()).is_some_and(Var::is_bool),
            Sexp::List(items, _) => matches!(
                items.first().and_then(Sexp::atom),
                Some("and" | "or" | "not" | "=>" | "<" | "<=" | ">" | ">=" | "=" | "divides" | "call")
            ),
        }
    }

    fn expr(&self, s: &Sexp) -> Result<Expr, ParseError> {
        match s {
            Sexp::Atom(a, pos) => match a.as_str() {
                "true" => Ok(Expr::True),
                "false" => Ok(Expr::False),
                _ => {
                    let v = self.var(s)?;
                    if !v.is_bool() {
                        return err(*pos, format!("`{a}` is numeric, expected a boolean"));
                    }
                    Ok(Expr::BoolVar(v))
                }
            },
            Sexp::List(items, pos) => {
                let head = items.first().and_then(Sexp::atom).unwrap_or("");
                let args = &items[1.min(items.len())..];
                let two = |rel: Rel| -> Result<Expr, ParseError> {
                    match args {
                        [a, b] => Ok(Expr::Cmp(rel, self.term(a)?, self.term(b)?)),
                        _ => err(*pos, format!("`{head}` takes two arguments")),
                    }
                };
                match head {
                    "and" => Ok(Expr::And(args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?)),
                    "or" => Ok(Expr::Or(args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?)),
                    "not" => match args {
                        [a] => Ok(Expr::Not(Box::new(self.expr(a)?))),
                        _ => err(*pos, "`not` takes one argument"),
                    },
                    "=>" => match args {
                        [a, b] => Ok(Expr::Implies(Box::new(self.expr(a)?), Box::new(self.expr(b)?))),
                        _ => err(*pos, "`=>` takes two arguments"),
                    },
                    "<" => two(Rel::Lt),
                    "<=" => two(Rel::Le),
                    ">" => two(Rel::Gt),
                    ">=" => two(Rel::Ge),
                    "=" => match args {
                        [a, b] if self.is_bool_operand(a) || self.is_bool_operand(b) => {
                            Ok(Expr::Iff(Box::new(self.expr(a)?), Box::new(self.expr(b)?)))
                        }
                        _ => two(Rel::Eq),
                    },
                    "divides" => match args {
                        [d, t] => {
                            let d = match d.atom().and_then(parse_rational) {
                                Some(r) if r.is_integer() && r > Rational::from_integer(0.into()) => r.to_integer(),
                                _ => return err(d.pos(), "divisor must be a positive integer"),
                            };
                            Ok(Expr::Divides(d, self.term(t)?))
                        }
                        _ => err(*pos, "`divides` takes a divisor and a term"),
                    },
                    "call" => {
                        let Some((name, rest)) = args.split_first() else { return err(*pos, "`call` needs a procedure") };
                        let Some(callee) = name.atom().and_then(|n| self.procs.get(n)) else {
                            return err(name.pos(), "unknown procedure");
                        };
                        let args = rest.iter().map(|a| self.var(a)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Expr::Call(CallAtom { callee: *callee, args }))
                    }
                    _ => err(*pos, format!("unknown operator `{head}`")),
                }
            }
        }
    }

    fn formula(&self, s: &Sexp) -> Result<Formula, ParseError> {
        let e = self.expr(s)?;
        to_nnf(&e).map_err(|e| match e {
            LogicError::NegatedCall => ParseError::Syntax { line: s.pos().line, col: s.pos().col, message: "call under negation".into() },
            other => ParseError::Validation(ProgramError::Logic { proc: String::new(), source: other }),
        })
    }
}

fn var_list(items: &[Sexp], mode: Mode) -> Result<Vec<Var>, ParseError> {
    items
        .iter()
        .map(|s| match s {
            Sexp::Atom(a, pos) => {
                if !is_ident(a) || parse_rational(a).is_some() {
                    return err(*pos, format!("invalid variable name `{a}`"));
                }
                Ok(Var::new(a, default_sort(mode)))
            }
            Sexp::List(parts, pos) => match parts.as_slice() {
                [Sexp::Atom(a, _), Sexp::Atom(sort, spos)] if is_ident(a) => match sort_name(sort) {
                    Some(sort) => Ok(Var::new(a, sort)),
                    None => err(*spos, format!("unknown sort `{sort}`")),
                },
                _ => err(*pos, "expected `name` or `(name sort)`"),
            },
        })
        .collect()
}

/// Parses a program, using the mode written in the file.
pub fn parse(text: &str) -> Result<SourceUnit, ParseError> {
    parse_with_mode(text, None)
}

/// Parses a program. `mode` overrides the file's mode declaration.
pub fn parse_with_mode(text: &str, mode: Option<Mode>) -> Result<SourceUnit, ParseError> {
    let top = read(text)?;
    let [root] = top.as_slice() else {
        let pos = top.get(1).map(Sexp::pos).unwrap_or(Pos { line: 1, col: 1 });
        return err(pos, "expected exactly one `(program ...)` form");
    };
    let Some(items) = root.form("program") else { return err(root.pos(), "expected `(program ...)`") };

    let mut file_mode = None;
    let mut main = None;
    let mut safe = None;
    let mut decls_src = Vec::new();
    for item in items {
        if let Some(args) = item.form("mode") {
            match args {
                [m] => match m.atom().and_then(mode_name) {
                    Some(md) => file_mode = Some(md),
                    None => return err(m.pos(), "mode must be bool, rat or int"),
                },
                _ => return err(item.pos(), "`mode` takes one argument"),
            }
        } else if let Some(args) = item.form("main") {
            match args {
                [Sexp::Atom(n, p)] => main = Some((n.clone(), *p)),
                _ => return err(item.pos(), "`main` takes a procedure name"),
            }
        } else if let Some(args) = item.form("assert-safe") {
            match args {
                [e] => safe = Some(e),
                _ => return err(item.pos(), "`assert-safe` takes one expression"),
            }
        } else if item.form("procedure").is_some() {
            decls_src.push(item);
        } else {
            return err(item.pos(), "expected `mode`, `procedure`, `main` or `assert-safe`");
        }
    }
    let Some(mode) = mode.or(file_mode) else { return err(root.pos(), "missing `(mode ...)`") };
    let Some((main, main_pos)) = main else { return err(root.pos(), "missing `(main ...)`") };

    let mut decls = Vec::new();
    let mut procs = BTreeMap::new();
    for d in decls_src {
        let args = d.form("procedure").expect("filtered above");
        let Some((name, rest)) = args.split_first() else { return err(d.pos(), "procedure needs a name") };
        let Some(n) = name.atom().filter(|n| is_ident(n)) else { return err(name.pos(), "invalid procedure name") };
        let section = |key: &str| -> Result<Option<&Sexp>, ParseError> {
            let found: Vec<&Sexp> = rest.iter().filter(|s| s.form(key).is_some()).collect();
            match found.as_slice() {
                [] => Ok(None),
                [one] => Ok(Some(*one)),
                [_, two, ..] => err(two.pos(), format!("duplicate `{key}`")),
            }
        };
        let vars = |s: Option<&Sexp>, key: &str| match s {
            Some(s) => var_list(s.form(key).expect("found by key"), mode),
            None => Ok(Vec::new()),
        };
        let inputs = vars(section("in")?, "in")?;
        let outputs = vars(section("out")?, "out")?;
        let locals = vars(section("local")?, "local")?;
        let body = match section("body")? {
            Some(b) => match b.form("body").expect("found by key") {
                [e] => e,
                _ => return err(b.pos(), "`body` takes one expression"),
            },
            None => return err(d.pos(), "procedure has no body"),
        };
        for s in rest {
            if !["in", "out", "local", "body"].iter().any(|k| s.form(k).is_some()) {
                return err(s.pos(), "expected `in`, `out`, `local` or `body`");
            }
        }
        if procs.insert(n.to_string(), ProcId(decls.len())).is_some() {
            return Err(ProgramError::DuplicateProcedure(n.into()).into());
        }
        decls.push(Decl { name: n.into(), inputs, outputs, locals, body });
    }
    if !procs.contains_key(&main) {
        return err(main_pos, format!("main procedure `{main}` is not defined"));
    }

    let mut built = Vec::new();
    let mut property = Formula::True;
    for d in &decls {
        let mut scope = Scope { vars: BTreeMap::new(), procs: &procs };
        for v in d.inputs.iter().chain(&d.outputs).chain(&d.locals) {
            if scope.vars.insert(v.name().into(), v.clone()).is_some() {
                return Err(ProgramError::DuplicateVar { proc: d.name.clone(), var: v.name().into() }.into());
            }
        }
        let body = scope.formula(d.body)?;
        if d.name == main {
            let formals: Vec<&Var> = d.inputs.iter().chain(&d.outputs).collect();
            scope.vars.retain(|_, v| formals.contains(&&*v));
            if let Some(e) = safe {
                property = scope.formula(e)?;
                if !property.is_call_free() {
                    return err(e.pos(), "the property cannot call procedures");
                }
            }
        }
        built.push(Procedure::new(&d.name, d.inputs.clone(), d.outputs.clone(), d.locals.clone(), body)?);
    }
    let program = Program::new(mode, built, &main)?;
    Ok(SourceUnit { program, property })
}

fn write_vars(out: &mut String, key: &str, vars: &[Var], mode: Mode) {
    write!(out, "({key}").expect("writing to a string");
    for v in vars {
        if v.sort() == default_sort(mode) {
            write!(out, " {v}").expect("writing to a string");
        } else {
            write!(out, " ({v} {})", v.sort()).expect("writing to a string");
        }
    }
    out.push(')');
}

/// Formula text with procedures named as in `program`.
pub fn formula_text(program: &Program, f: &Formula) -> String {
    f.sexpr_with(&|p| program.name(p).to_string())
}

/// Prints a unit in RPL; `parse` reads it back to the same program.
pub fn print(unit: &SourceUnit) -> String {
    let p = &unit.program;
    let mut out = String::new();
    writeln!(out, "(program").expect("writing to a string");
    writeln!(out, "  (mode {})", p.mode).expect("writing to a string");
    for (_, proc) in p.procs() {
        write!(out, "  (procedure {} ", proc.name).expect("writing to a string");
        write_vars(&mut out, "in", &proc.inputs, p.mode);
        out.push(' ');
        write_vars(&mut out, "out", &proc.outputs, p.mode);
        out.push(' ');
        write_vars(&mut out, "local", &proc.locals, p.mode);
        writeln!(out, "\n    (body {}))", formula_text(p, &proc.body)).expect("writing to a string");
    }
    writeln!(out, "  (main {})", p.name(p.main())).expect("writing to a string");
    writeln!(out, "  (assert-safe {}))", formula_text(p, &unit.property)).expect("writing to a string");
    out
}

impl fmt::Display for SourceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

/// Parses a formula over the formals of `proc`, e.g. a proof entry.
pub fn parse_formula(program: &Program, proc: ProcId, text: &str) -> Result<Formula, ParseError> {
    let top = read(text)?;
    let [e] = top.as_slice() else { return err(Pos { line: 1, col: 1 }, "expected one expression") };
    let procs = program.procs().map(|(id, p)| (p.name.clone(), id)).collect();
    let vars = program.proc(proc).formals().into_iter().map(|v| (v.name().to_string(), v)).collect();
    Scope { vars, procs: &procs }.formula(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OVERVIEW: &str = include_str!("../examples/overview.rpl");

    #[test]
    fn overview_shape() {
        let u = parse(OVERVIEW).unwrap();
        assert_eq!(u.program.len(), 3);
        let m = u.program.lookup("M").unwrap();
        assert_eq!(u.program.proc(m).paths.len(), 1);
        assert_eq!(u.program.proc(u.program.lookup("T").unwrap()).paths.len(), 2);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("(program (mode int)\n  (main M) (bogus))").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, .. }), "{e}");
        let e = parse("(program (mode int) (procedure P (in x) (out) (local) (body (not (call P x)))) (main P))").unwrap_err();
        assert!(e.to_string().contains("negation"), "{e}");
        assert!(parse("(program (mode int)").is_err());
        let e = parse("(program (mode int) (procedure P (in x') (out) (local) (body true)) (main P))").unwrap_err();
        assert!(e.to_string().contains("invalid variable"), "{e}");
    }

    #[test]
    fn terms_and_sorts() {
        let u = parse(
            "(program (mode rat) (procedure P (in x (b bool)) (out y) (local) \
             (body (and (= b (> x 1/2)) (= y (- (* 3 x) (+ x -2)))))) (main P) (assert-safe (>= y 0)))",
        )
        .unwrap();
        let p = u.program.proc(ProcId(0));
        assert_eq!(p.inputs[1].sort(), Sort::Bool);
        let again = parse(&print(&u)).unwrap();
        assert_eq!(again, u);
    }
}
