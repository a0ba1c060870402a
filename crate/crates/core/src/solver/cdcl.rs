//! Conflict-driven clause learning over two-watched-literal propagation.
//!
//! Variables are 0-based internally; literal `2v` is `v` and `2v + 1` is
//! `¬v`. Decisions follow activity, breaking ties toward the lowest
//! variable index, with saved phases starting at false. Restarts follow
//! the Luby sequence and learnt clauses are pruned by activity at restart
//! points. The procedure is deterministic.

use std::time::Instant;

use super::{Budget, Stats};

type Lit = u32;
const NO_REASON: u32 = u32::MAX;
const RESTART_UNIT: u64 = 32;

#[inline]
fn var(l: Lit) -> usize {
    (l >> 1) as usize
}

#[inline]
fn from_dimacs(lit: i32) -> Lit {
    let v = lit.unsigned_abs() - 1;
    (v << 1) | (lit < 0) as u32
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    True,
    False,
    Unassigned,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Binary max-heap over variables keyed by activity, ties to lower index.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap {
            heap: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
        }
    }

    #[inline]
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NOT_IN_HEAP
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(act, v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let len = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && Self::better(act, self.heap[right], self.heap[left]) {
                right
            } else {
                left
            };
            if !Self::better(act, self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = i as u32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.pos[v] = i as u32;
        self.sift_up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top as usize)
    }
}

pub(super) enum Outcome {
    Sat(Vec<bool>),
    Unsat,
    BudgetExceeded,
}

pub(super) struct Cdcl {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    to_clear: Vec<Lit>,
    order: VarHeap,
    learnts: usize,
    max_learnts: f64,
    unsat: bool,
    pending_units: Vec<Lit>,
    pub(super) stats: Stats,
}

impl Cdcl {
    pub(super) fn new(var_count: usize, clauses: &[Vec<i32>]) -> Self {
        let mut s = Cdcl {
            clauses: Vec::with_capacity(clauses.len()),
            watches: vec![Vec::new(); 2 * var_count],
            assigns: vec![Value::Unassigned; var_count],
            level: vec![0; var_count],
            reason: vec![NO_REASON; var_count],
            trail: Vec::with_capacity(var_count),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; var_count],
            var_inc: 1.0,
            cla_inc: 1.0,
            phase: vec![false; var_count],
            seen: vec![false; var_count],
            to_clear: Vec::new(),
            order: VarHeap::new(var_count),
            learnts: 0,
            max_learnts: 0.0,
            unsat: false,
            pending_units: Vec::new(),
            stats: Stats::default(),
        };
        for c in clauses {
            s.add_original(c);
        }
        s.max_learnts = (s.clauses.len() as f64 / 3.0).max(1000.0);
        s
    }

    fn add_original(&mut self, clause: &[i32]) {
        let mut lits: Vec<Lit> = clause.iter().map(|&l| from_dimacs(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return; // tautology
        }
        match lits.len() {
            0 => self.unsat = true,
            1 => self.pending_units.push(lits[0]),
            _ => {
                self.attach(Clause {
                    lits,
                    learnt: false,
                    deleted: false,
                    activity: 0.0,
                });
            }
        }
    }

    fn attach(&mut self, c: Clause) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[c.lits[0] as usize].push(Watcher {
            cref,
            blocker: c.lits[1],
        });
        self.watches[c.lits[1] as usize].push(Watcher {
            cref,
            blocker: c.lits[0],
        });
        if c.learnt {
            self.learnts += 1;
        }
        self.clauses.push(c);
        cref
    }

    #[inline]
    fn value(&self, l: Lit) -> Value {
        match self.assigns[var(l)] {
            Value::Unassigned => Value::Unassigned,
            Value::True if l & 1 == 0 => Value::True,
            Value::False if l & 1 == 1 => Value::True,
            _ => Value::False,
        }
    }

    #[inline]
    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = var(l);
        self.assigns[v] = if l & 1 == 0 {
            Value::True
        } else {
            Value::False
        };
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == Value::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].lits[0] == false_lit {
                    self.clauses[cref].lits.swap(0, 1);
                }
                let first = self.clauses[cref].lits[0];
                let watcher = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == Value::True {
                    ws[j] = watcher;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != Value::False {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[lk as usize].push(watcher);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = watcher;
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP learning. Returns the learnt clause (asserting literal at
    /// index 0, highest remaining level at index 1) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;

        loop {
            self.bump_clause(confl as usize);
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[var(self.trail[index])] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            confl = self.reason[var(pl)];
            self.seen[var(pl)] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap() ^ 1;

        // drop literals implied by the rest of the clause
        let snapshot: Vec<Lit> = learnt.clone();
        let levels = learnt[1..]
            .iter()
            .fold(0u64, |acc, &l| acc | abstract_level(self.level[var(l)]));
        let mut kept = 1;
        for k in 1..learnt.len() {
            let l = learnt[k];
            if self.reason[var(l)] == NO_REASON || !self.lit_redundant(l, levels) {
                learnt[kept] = l;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for &l in snapshot.iter().chain(&self.to_clear) {
            self.seen[var(l)] = false;
        }
        self.to_clear.clear();

        let backjump = if learnt.len() == 1 {
            0
        } else {
            let (best, _) = learnt
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|(i, &l)| (self.level[var(l)], std::cmp::Reverse(*i)))
                .unwrap();
            learnt.swap(1, best);
            self.level[var(learnt[1])] as usize
        };
        (learnt, backjump)
    }

    /// Whether `p` follows from literals already marked `seen`, searching
    /// back through reasons. Marks proven literals in `seen`, recording
    /// them in `to_clear`.
    fn lit_redundant(&mut self, p: Lit, levels: u64) -> bool {
        let mut stack = vec![p];
        let top = self.to_clear.len();
        while let Some(q) = stack.pop() {
            let r = self.reason[var(q)] as usize;
            for k in 1..self.clauses[r].lits.len() {
                let l = self.clauses[r].lits[k];
                let v = var(l);
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] != NO_REASON && abstract_level(self.level[v]) & levels != 0 {
                    self.seen[v] = true;
                    stack.push(l);
                    self.to_clear.push(l);
                } else {
                    for &l in &self.to_clear[top..] {
                        self.seen[var(l)] = false;
                    }
                    self.to_clear.truncate(top);
                    return false;
                }
            }
        }
        true
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = var(l);
            self.assigns[v] = Value::Unassigned;
            self.reason[v] = NO_REASON;
            self.phase[v] = l & 1 == 0;
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v] == Value::Unassigned {
                return Some(((v as u32) << 1) | (!self.phase[v]) as u32);
            }
        }
        None
    }

    fn locked(&self, cref: usize) -> bool {
        let c = &self.clauses[cref];
        let l0 = c.lits[0];
        self.reason[var(l0)] == cref as u32 && self.value(l0) == Value::True
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lits.len() > 2
            })
            .filter(|&i| !self.locked(i))
            .collect();
        cands.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in &cands[..cands.len() / 2] {
            let c = &mut self.clauses[i];
            c.deleted = true;
            c.lits = Vec::new();
            self.learnts -= 1;
        }
        for w in &mut self.watches {
            w.clear();
        }
        for (i, c) in self.clauses.iter().enumerate().filter(|(_, c)| !c.deleted) {
            self.watches[c.lits[0] as usize].push(Watcher {
                cref: i as u32,
                blocker: c.lits[1],
            });
            self.watches[c.lits[1] as usize].push(Watcher {
                cref: i as u32,
                blocker: c.lits[0],
            });
        }
    }

    fn budget_hit(&self, budget: &Budget, started: Instant) -> bool {
        budget
            .max_conflicts
            .is_some_and(|max| self.stats.conflicts >= max)
            || budget.max_time.is_some_and(|max| started.elapsed() >= max)
    }

    pub(super) fn solve(&mut self, budget: &Budget) -> Outcome {
        let started = Instant::now();
        if self.unsat {
            return Outcome::Unsat;
        }
        for l in std::mem::take(&mut self.pending_units) {
            match self.value(l) {
                Value::False => return Outcome::Unsat,
                Value::True => {}
                Value::Unassigned => self.enqueue(l, NO_REASON),
            }
        }

        let mut restart_index = 0u32;
        let mut conflicts_until_restart = luby(restart_index) * RESTART_UNIT;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    return Outcome::Unsat;
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let asserting = learnt[0];
                    let cref = self.attach(Clause {
                        lits: learnt,
                        learnt: true,
                        deleted: false,
                        activity: 0.0,
                    });
                    self.bump_clause(cref as usize);
                    self.enqueue(asserting, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                conflicts_until_restart = conflicts_until_restart.saturating_sub(1);
                if self.budget_hit(budget, started) {
                    return Outcome::BudgetExceeded;
                }
            } else {
                if conflicts_until_restart == 0 {
                    self.stats.restarts += 1;
                    restart_index += 1;
                    conflicts_until_restart = luby(restart_index) * RESTART_UNIT;
                    self.cancel_until(0);
                    if self.learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                        self.reduce_db();
                        self.max_learnts *= 1.1;
                    }
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let model = self.assigns.iter().map(|&v| v == Value::True).collect();
                        return Outcome::Sat(model);
                    }
                    Some(l) => {
                        self.stats.decisions += 1;
                        if self.stats.decisions.is_multiple_of(4096)
                            && self.budget_hit(budget, started)
                        {
                            return Outcome::BudgetExceeded;
                        }
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, NO_REASON);
                    }
                }
            }
        }
    }
}

#[inline]
fn abstract_level(level: u32) -> u64 {
    1 << (level & 63)
}

/// Luby sequence 1, 1, 2, 1, 1, 2, 4, ... at 0-based index `i`.
fn luby(mut i: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i as u64;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    i = seq;
    1u64 << i
}
