//! A small conflict-driven solver: two watched literals, first-UIP learning
//! and non-chronological backjumping. Decisions take the lowest-index free
//! variable with a random phase, so unconstrained inputs come out random.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::cnf::Cnf;
use crate::seed::Rng;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        let v = l.unsigned_abs() - 1;
        Lit(v << 1 | (l < 0) as u32)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }
    fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
}

const UNASSIGNED: u8 = 2;

/// A total assignment; `values[v - 1]` is DIMACS variable `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    pub fn value(&self, lit: i32) -> bool {
        self.values[lit.unsigned_abs() as usize - 1] == (lit > 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Assignment),
    Unsat,
    /// The conflict budget ran out.
    Unknown,
}

pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assign: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    free_hint: usize,
    inconsistent: bool,
}

impl Solver {
    pub fn new(cnf: &Cnf) -> Solver {
        let n = cnf.variable_count;
        let mut s = Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assign: vec![UNASSIGNED; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; n],
            free_hint: 0,
            inconsistent: false,
        };
        for c in &cnf.clauses {
            let mut lits: Vec<Lit> = c.iter().map(|&l| Lit::from_dimacs(l)).collect();
            lits.sort_unstable();
            lits.dedup();
            if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
                continue; // tautology
            }
            s.add_clause(lits);
        }
        if !s.inconsistent && s.propagate().is_some() {
            s.inconsistent = true;
        }
        s
    }

    fn add_clause(&mut self, lits: Vec<Lit>) {
        match lits.len() {
            0 => self.inconsistent = true,
            1 => match self.value(lits[0]) {
                Some(true) => {}
                Some(false) => self.inconsistent = true,
                None => self.enqueue(lits[0], None),
            },
            _ => {
                let ci = self.clauses.len();
                self.watches[lits[0].index()].push(ci);
                self.watches[lits[1].index()].push(ci);
                self.clauses.push(lits);
            }
        }
    }

    fn value(&self, l: Lit) -> Option<bool> {
        match self.assign[l.var()] {
            UNASSIGNED => None,
            v => Some((v == 1) != l.is_neg()),
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        self.assign[v] = (!l.is_neg()) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns a conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p.neg();
            let ws = core::mem::take(&mut self.watches[false_lit.index()]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut iter = ws.into_iter();
            for ci in iter.by_ref() {
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = match self.assign[first.var()] {
                    UNASSIGNED => None,
                    v => Some((v == 1) != first.is_neg()),
                };
                if first_val == Some(true) {
                    kept.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let lv = self.assign[l.var()];
                    if lv == UNASSIGNED || (lv == 1) != l.is_neg() {
                        clause.swap(1, k);
                        self.watches[clause[1].index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                if first_val == Some(false) {
                    conflict = Some(ci);
                    break;
                }
                self.enqueue(first, Some(ci));
            }
            kept.extend(iter);
            self.watches[false_lit.index()] = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let skip = p.is_some() as usize;
            for k in skip..self.clauses[confl].len() {
                let q = self.clauses[confl][k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] == current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[lit.var()] = false;
            p = Some(lit);
            counter -= 1;
            if counter == 0 {
                break;
            }
            confl = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = p.expect("conflict at a decision level").neg();
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (best, lvl) = learnt[1..]
                .iter()
                .enumerate()
                .map(|(i, l)| (i + 1, self.level[l.var()]))
                .max_by_key(|&(_, lvl)| lvl)
                .unwrap();
            learnt.swap(1, best);
            back = lvl;
        }
        (learnt, back)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for l in self.trail.drain(lim..) {
            let v = l.var();
            self.assign[v] = UNASSIGNED;
            self.reason[v] = None;
            self.free_hint = self.free_hint.min(v);
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    /// Solves under `assumptions` (DIMACS literals). `rng` picks decision
    /// phases; `conflict_budget` bounds the work.
    pub fn solve(
        &mut self,
        assumptions: &[i32],
        rng: &mut Rng,
        conflict_budget: Option<u64>,
    ) -> SolveOutcome {
        if self.inconsistent {
            return SolveOutcome::Unsat;
        }
        let assumptions: Vec<Lit> = assumptions.iter().map(|&l| Lit::from_dimacs(l)).collect();
        let mut conflicts = 0u64;
        let outcome = loop {
            if let Some(confl) = self.propagate() {
                if self.decision_level() == 0 {
                    self.inconsistent = true;
                    break SolveOutcome::Unsat;
                }
                conflicts += 1;
                if conflict_budget.is_some_and(|b| conflicts > b) {
                    break SolveOutcome::Unknown;
                }
                let (learnt, back) = self.analyze(confl);
                self.cancel_until(back);
                let unit = learnt[0];
                if learnt.len() == 1 {
                    self.enqueue(unit, None);
                } else {
                    let ci = self.clauses.len();
                    self.watches[learnt[0].index()].push(ci);
                    self.watches[learnt[1].index()].push(ci);
                    self.clauses.push(learnt);
                    self.enqueue(unit, Some(ci));
                }
                continue;
            }
            let dl = self.decision_level() as usize;
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.value(a) {
                    Some(true) => self.trail_lim.push(self.trail.len()),
                    Some(false) => break SolveOutcome::Unsat,
                    None => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, None);
                    }
                }
                continue;
            }
            while self.free_hint < self.assign.len() && self.assign[self.free_hint] != UNASSIGNED {
                self.free_hint += 1;
            }
            if self.free_hint == self.assign.len() {
                let values = self.assign.iter().map(|&v| v == 1).collect();
                break SolveOutcome::Sat(Assignment { values });
            }
            let v = self.free_hint as u32;
            let neg: bool = rng.gen();
            self.trail_lim.push(self.trail.len());
            self.enqueue(Lit(v << 1 | neg as u32), None);
        };
        self.cancel_until(0);
        outcome
    }
}

impl Lit {
    fn index(self) -> usize {
        self.0 as usize
    }
}

/// One-shot solve with a fixed phase seed and no budget.
pub fn solve(cnf: &Cnf, assumptions: &[i32]) -> Option<Assignment> {
    let mut rng = crate::seed::rng(0);
    match Solver::new(cnf).solve(assumptions, &mut rng, None) {
        SolveOutcome::Sat(a) => Some(a),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(vars: usize, clauses: &[&[i32]]) -> Cnf {
        Cnf {
            variable_count: vars,
            clauses: clauses.iter().map(|c| c.to_vec()).collect(),
            node_var: Vec::new(),
        }
    }

    #[test]
    fn and_forced() {
        let f = cnf(3, &[&[-3, 1], &[-3, 2], &[3, -1, -2]]);
        let a = solve(&f, &[3]).unwrap();
        assert!(a.value(1) && a.value(2));
        assert!(solve(&f, &[3, -1]).is_none());
    }

    #[test]
    fn pigeonhole_3_into_2_is_unsat() {
        // p(i,h) = 2*i + h + 1
        let mut cl: Vec<Vec<i32>> = (0..3).map(|i| vec![2 * i + 1, 2 * i + 2]).collect();
        for h in 0..2 {
            for i in 0..3 {
                for j in i + 1..3 {
                    cl.push(vec![-(2 * i + h + 1), -(2 * j + h + 1)]);
                }
            }
        }
        let refs: Vec<&[i32]> = cl.iter().map(|c| c.as_slice()).collect();
        assert!(solve(&cnf(6, &refs), &[]).is_none());
    }

    #[test]
    fn empty_clause_is_unsat() {
        assert!(solve(&cnf(1, &[&[]]), &[]).is_none());
        assert!(solve(&cnf(1, &[&[1], &[-1]]), &[]).is_none());
    }
}
