//! CDCL search with two watched literals and first-UIP learning. The
//! theory is consulted after every propagation fixpoint.

use alloc::vec::Vec;

/// `2 * var + negated`.
pub(crate) type Lit = u32;

pub(crate) fn mk_lit(var: u32, negated: bool) -> Lit {
    2 * var + negated as u32
}

pub(crate) fn lit_var(l: Lit) -> u32 {
    l >> 1
}

pub(crate) fn lit_neg(l: Lit) -> bool {
    l & 1 == 1
}

pub(crate) fn not(l: Lit) -> Lit {
    l ^ 1
}

pub(crate) enum TheoryCheck {
    Consistent,
    /// Literals currently true whose conjunction is theory-inconsistent.
    Conflict(Vec<Lit>),
    Unknown,
}

pub(crate) trait Theory {
    /// Called for every literal that becomes true on a theory atom.
    fn assert_lit(&mut self, lit: Lit) -> TheoryCheck;
    fn check(&mut self, complete: bool) -> TheoryCheck;
    fn push_level(&mut self);
    fn pop_to_level(&mut self, level: usize);
    fn is_atom(&self, var: u32) -> bool;
}

pub(crate) enum SatOutcome {
    Sat,
    Unsat,
    Unknown,
}

struct Clause {
    lits: Vec<Lit>,
}

pub(crate) struct SatSolver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    /// 0 unassigned, 1 true, -1 false.
    assign: Vec<i8>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    theory_head: usize,
    activity: Vec<u64>,
    var_inc: u64,
    seen: Vec<bool>,
    unsat: bool,
    pub(crate) conflicts: u64,
}

impl SatSolver {
    pub(crate) fn new() -> SatSolver {
        SatSolver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            theory_head: 0,
            activity: Vec::new(),
            var_inc: 1,
            seen: Vec::new(),
            unsat: false,
            conflicts: 0,
        }
    }

    pub(crate) fn new_var(&mut self) -> u32 {
        let v = self.assign.len() as u32;
        self.assign.push(0);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    pub(crate) fn value(&self, l: Lit) -> i8 {
        let a = self.assign[lit_var(l) as usize];
        if lit_neg(l) {
            -a
        } else {
            a
        }
    }

    pub(crate) fn var_value(&self, v: u32) -> Option<bool> {
        match self.assign[v as usize] {
            1 => Some(true),
            -1 => Some(false),
            _ => None,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause before search starts.
    pub(crate) fn add_clause(&mut self, lits: &[Lit]) {
        if self.unsat {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.value(l) {
                1 => return,
                -1 => {}
                _ => {
                    if c.contains(&not(l)) {
                        return;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => self.unsat = true,
            1 => self.enqueue(c[0], None),
            _ => {
                self.attach(c);
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[lits[0] as usize].push(idx);
        self.watches[lits[1] as usize].push(idx);
        self.clauses.push(Clause { lits });
        idx
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = lit_var(l) as usize;
        debug_assert_eq!(self.assign[v], 0);
        self.assign[v] = if lit_neg(l) { -1 } else { 1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = not(p);
            let ws = core::mem::take(&mut self.watches[false_lit as usize]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let cref = ws[i];
                i += 1;
                if self.clauses[cref].lits[0] == false_lit {
                    self.clauses[cref].lits.swap(0, 1);
                }
                let first = self.clauses[cref].lits[0];
                if self.value(first) == 1 {
                    kept.push(cref);
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != -1 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l as usize].push(cref);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(cref);
                if self.value(first) == -1 {
                    conflict = Some(cref);
                    kept.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, Some(cref));
            }
            self.watches[false_lit as usize] = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1 << 60 {
            for a in &mut self.activity {
                *a >>= 30;
            }
            self.var_inc = (self.var_inc >> 30).max(1);
        }
    }

    fn analyze(&mut self, confl: usize) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = alloc::vec![0];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut confl = confl;
        let current = self.decision_level();
        loop {
            let start = if p.is_some() { 1 } else { 0 };
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[start..] {
                let v = lit_var(q) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[lit_var(self.trail[idx]) as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = lit_var(lit) as usize;
            self.seen[v] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            confl = self.reason[v].expect("implied literal without reason");
        }
        learnt[0] = not(p.unwrap_or(0));
        for &l in &learnt[1..] {
            self.seen[lit_var(l) as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[lit_var(learnt[i]) as usize] > self.level[lit_var(learnt[max_i]) as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[lit_var(learnt[1]) as usize];
        }
        self.var_inc += self.var_inc / 16 + 1;
        (learnt, bt)
    }

    fn backtrack<T: Theory>(&mut self, level: usize, theory: &mut T) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let v = lit_var(self.trail[i]) as usize;
            self.assign[v] = 0;
            self.reason[v] = None;
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = self.qhead.min(lim);
        self.theory_head = self.theory_head.min(lim);
        theory.pop_to_level(level);
    }

    /// Learns from a conflicting clause. Returns false when unsatisfiable.
    fn resolve_conflict<T: Theory>(&mut self, confl: usize, theory: &mut T) -> bool {
        self.conflicts += 1;
        if self.decision_level() == 0 {
            return false;
        }
        let (learnt, bt) = self.analyze(confl);
        self.backtrack(bt, theory);
        if learnt.len() == 1 {
            self.enqueue(learnt[0], None);
        } else {
            let first = learnt[0];
            let cref = self.attach(learnt);
            self.enqueue(first, Some(cref));
        }
        true
    }

    /// Turns a theory explanation into a conflicting clause and learns from it.
    fn theory_conflict<T: Theory>(&mut self, core: Vec<Lit>, theory: &mut T) -> bool {
        let mut clause: Vec<Lit> = core.iter().map(|&l| not(l)).collect();
        clause.sort_unstable();
        clause.dedup();
        debug_assert!(clause.iter().all(|&l| self.value(l) == -1));
        if clause.is_empty() {
            return false;
        }
        clause.sort_by_key(|&l| core::cmp::Reverse(self.level[lit_var(l) as usize]));
        let top = self.level[lit_var(clause[0]) as usize];
        if top == 0 {
            return false;
        }
        self.backtrack(top, theory);
        if clause.len() == 1 {
            // A unit explanation: the atom is false at every level.
            self.conflicts += 1;
            self.backtrack(0, theory);
            self.enqueue(clause[0], None);
            return true;
        }
        let cref = self.attach(clause);
        self.resolve_conflict(cref, theory)
    }

    fn pick_branch(&self) -> Option<u32> {
        let mut best: Option<(u64, usize)> = None;
        for v in 0..self.assign.len() {
            if self.assign[v] == 0 && best.is_none_or(|(a, _)| self.activity[v] > a) {
                best = Some((self.activity[v], v));
            }
        }
        best.map(|(_, v)| v as u32)
    }

    pub(crate) fn solve<T: Theory>(&mut self, theory: &mut T, max_conflicts: u64) -> SatOutcome {
        if self.unsat {
            return SatOutcome::Unsat;
        }
        let mut restart_at = 64u64;
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                since_restart += 1;
                if !self.resolve_conflict(confl, theory) {
                    self.unsat = true;
                    return SatOutcome::Unsat;
                }
                if self.conflicts > max_conflicts {
                    return SatOutcome::Unknown;
                }
                continue;
            }
            let mut theory_conflict = None;
            while self.theory_head < self.trail.len() {
                let l = self.trail[self.theory_head];
                self.theory_head += 1;
                if theory.is_atom(lit_var(l)) {
                    match theory.assert_lit(l) {
                        TheoryCheck::Consistent => {}
                        TheoryCheck::Conflict(core) => {
                            theory_conflict = Some(core);
                            break;
                        }
                        TheoryCheck::Unknown => return SatOutcome::Unknown,
                    }
                }
            }
            if theory_conflict.is_none() {
                let complete = self.trail.len() == self.assign.len();
                match theory.check(complete) {
                    TheoryCheck::Consistent => {
                        if complete {
                            return SatOutcome::Sat;
                        }
                    }
                    TheoryCheck::Conflict(core) => theory_conflict = Some(core),
                    TheoryCheck::Unknown => return SatOutcome::Unknown,
                }
            }
            if let Some(core) = theory_conflict {
                since_restart += 1;
                if !self.theory_conflict(core, theory) {
                    self.unsat = true;
                    return SatOutcome::Unsat;
                }
                if self.conflicts > max_conflicts {
                    return SatOutcome::Unknown;
                }
                continue;
            }
            if since_restart >= restart_at {
                since_restart = 0;
                restart_at += restart_at / 2;
                self.backtrack(0, theory);
                continue;
            }
            let Some(v) = self.pick_branch() else {
                // Everything assigned and consistent was handled above.
                return SatOutcome::Sat;
            };
            self.trail_lim.push(self.trail.len());
            theory.push_level();
            self.enqueue(mk_lit(v, true), None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NoTheory;
    impl Theory for NoTheory {
        fn assert_lit(&mut self, _: Lit) -> TheoryCheck {
            TheoryCheck::Consistent
        }
        fn check(&mut self, _: bool) -> TheoryCheck {
            TheoryCheck::Consistent
        }
        fn push_level(&mut self) {}
        fn pop_to_level(&mut self, _: usize) {}
        fn is_atom(&self, _: u32) -> bool {
            false
        }
    }

    fn pigeonhole(n: u32) -> SatSolver {
        // n+1 pigeons into n holes.
        let mut s = SatSolver::new();
        let var = |p: u32, h: u32| p * n + h;
        for _ in 0..(n + 1) * n {
            s.new_var();
        }
        for p in 0..=n {
            let c: Vec<Lit> = (0..n).map(|h| mk_lit(var(p, h), false)).collect();
            s.add_clause(&c);
        }
        for h in 0..n {
            for p in 0..=n {
                for q in p + 1..=n {
                    s.add_clause(&[mk_lit(var(p, h), true), mk_lit(var(q, h), true)]);
                }
            }
        }
        s
    }

    #[test]
    fn pigeonhole_is_unsat() {
        let mut s = pigeonhole(4);
        assert!(matches!(s.solve(&mut NoTheory, u64::MAX), SatOutcome::Unsat));
    }

    #[test]
    fn satisfiable_chain() {
        let mut s = SatSolver::new();
        for _ in 0..4 {
            s.new_var();
        }
        s.add_clause(&[mk_lit(0, false), mk_lit(1, false)]);
        s.add_clause(&[mk_lit(0, true)]);
        s.add_clause(&[mk_lit(1, true), mk_lit(2, false)]);
        s.add_clause(&[mk_lit(2, true), mk_lit(3, true)]);
        assert!(matches!(s.solve(&mut NoTheory, u64::MAX), SatOutcome::Sat));
        assert_eq!(s.var_value(0), Some(false));
        assert_eq!(s.var_value(1), Some(true));
        assert_eq!(s.var_value(2), Some(true));
        assert_eq!(s.var_value(3), Some(false));
    }
}
