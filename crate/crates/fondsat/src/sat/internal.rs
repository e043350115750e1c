//! Built-in CDCL solver: two-watched-literal propagation, first-UIP clause
//! learning, VSIDS-style activities with phase saving, and Luby restarts.
//! Fully deterministic: no randomness anywhere, ties break on variable index.

use std::time::Instant;

use super::{Budget, SolveResult, SolveStats, Status};
use crate::encoder::Cnf;

/// Literal encoded as `var << 1 | sign` with vars starting at 0 internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit(u32);

impl Lit {
    fn new(var: usize, negated: bool) -> Lit {
        Lit((var as u32) << 1 | negated as u32)
    }
    fn from_dimacs(lit: i32) -> Lit {
        Lit::new(lit.unsigned_abs() as usize - 1, lit < 0)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn negated(self) -> bool {
        self.0 & 1 == 1
    }
    fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

type ClauseRef = usize;

struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<ClauseRef>>,
    assign: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseRef>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    prop_head: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    saved_phase: Vec<bool>,
    heap: VarHeap,
    seen: Vec<bool>,
    stats: SolveStats,
    ok: bool,
    num_learnts: usize,
}

/// Indexed max-heap over variable activities; ties resolve to the smaller
/// variable index so runs are reproducible.
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> VarHeap {
        VarHeap {
            heap: (0..n).collect(),
            pos: (0..n).map(Some).collect(),
        }
    }

    fn build(&mut self, act: &[f64]) {
        for i in (0..self.heap.len() / 2).rev() {
            self.sift_down(i, act);
        }
    }

    fn better(&self, a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.better(self.heap[i], self.heap[parent], act) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && self.better(self.heap[l], self.heap[best], act) {
                best = l;
            }
            if r < self.heap.len() && self.better(self.heap[r], self.heap[best], act) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = Some(i);
        self.pos[self.heap[j]] = Some(j);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.pos[top] = None;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos[v].is_some() {
            return;
        }
        self.pos[v] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
        }
    }
}

const VAR_DECAY: f64 = 1.0 / 0.95;
const CLA_DECAY: f64 = 1.0 / 0.999;
const RESCALE: f64 = 1e100;

impl Solver {
    fn new(num_vars: usize) -> Solver {
        let mut heap = VarHeap::new(num_vars);
        heap.build(&vec![0.0; num_vars]);
        Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            assign: vec![LBool::Undef; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            prop_head: 0,
            activity: vec![0.0; num_vars],
            var_inc: 1.0,
            cla_inc: 1.0,
            saved_phase: vec![false; num_vars],
            heap,
            seen: vec![false; num_vars],
            stats: SolveStats::default(),
            ok: true,
            num_learnts: 0,
        }
    }

    fn value(&self, l: Lit) -> LBool {
        match self.assign[l.var()] {
            LBool::Undef => LBool::Undef,
            LBool::True => {
                if l.negated() {
                    LBool::False
                } else {
                    LBool::True
                }
            }
            LBool::False => {
                if l.negated() {
                    LBool::True
                } else {
                    LBool::False
                }
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, from: Option<ClauseRef>) {
        debug_assert_eq!(self.value(l), LBool::Undef);
        self.assign[l.var()] = if l.negated() {
            LBool::False
        } else {
            LBool::True
        };
        self.level[l.var()] = self.decision_level();
        self.reason[l.var()] = from;
        self.saved_phase[l.var()] = !l.negated();
        self.trail.push(l);
    }

    /// Loads one input clause: dedups literals, drops tautologies, handles
    /// empty and unit clauses. Returns false when the formula is already
    /// unsatisfiable at level 0.
    fn add_input_clause(&mut self, lits: &[i32]) -> bool {
        let mut cl: Vec<Lit> = lits.iter().map(|&l| Lit::from_dimacs(l)).collect();
        cl.sort_by_key(|l| l.0);
        cl.dedup();
        for w in cl.windows(2) {
            if w[0].var() == w[1].var() {
                return true; // tautology: p ∨ ¬p
            }
        }
        // drop literals already false at level 0, satisfied clauses
        let mut kept = Vec::with_capacity(cl.len());
        for &l in &cl {
            match self.value(l) {
                LBool::True => return true,
                LBool::False => {}
                LBool::Undef => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(kept[0], None);
                self.propagate().is_none() || {
                    self.ok = false;
                    false
                }
            }
            _ => {
                self.attach(kept, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> ClauseRef {
        let idx = self.clauses.len();
        self.watches[lits[0].negate().index()].push(idx);
        self.watches[lits[1].negate().index()].push(idx);
        if learnt {
            self.num_learnts += 1;
        }
        self.clauses.push(Clause {
            lits,
            learnt,
            activity: 0.0,
        });
        idx
    }

    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.prop_head < self.trail.len() {
            let p = self.trail[self.prop_head];
            self.prop_head += 1;
            self.stats.propagations += 1;
            let mut i = 0;
            let mut watch_list = std::mem::take(&mut self.watches[p.index()]);
            while i < watch_list.len() {
                let cr = watch_list[i];
                let (w0, w1) = {
                    let c = &self.clauses[cr];
                    (c.lits[0], c.lits[1])
                };
                // normalize: false watched literal at slot 1
                let false_lit = p.negate();
                if w0 == false_lit {
                    self.clauses[cr].lits.swap(0, 1);
                }
                let first = self.clauses[cr].lits[0];
                debug_assert_eq!(self.clauses[cr].lits[1], false_lit);
                let _ = (w0, w1);
                if self.value(first) == LBool::True {
                    i += 1;
                    continue;
                }
                // look for a new watch
                let mut moved = false;
                for j in 2..self.clauses[cr].lits.len() {
                    let l = self.clauses[cr].lits[j];
                    if self.value(l) != LBool::False {
                        self.clauses[cr].lits.swap(1, j);
                        self.watches[l.negate().index()].push(cr);
                        watch_list.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if self.value(first) == LBool::False {
                    // conflict
                    self.watches[p.index()] = watch_list;
                    self.prop_head = self.trail.len();
                    return Some(cr);
                }
                self.enqueue(first, Some(cr));
                i += 1;
            }
            self.watches[p.index()] = watch_list;
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > RESCALE {
            for a in &mut self.activity {
                *a /= RESCALE;
            }
            self.var_inc /= RESCALE;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cr: ClauseRef) {
        self.clauses[cr].activity += self.cla_inc;
        if self.clauses[cr].activity > RESCALE {
            for c in &mut self.clauses {
                c.activity /= RESCALE;
            }
            self.cla_inc /= RESCALE;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, confl: ClauseRef) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![Lit(0)]; // slot 0 for asserting literal
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut confl = confl;
        let mut trail_idx = self.trail.len();

        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[start..] {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // next literal to resolve on
            loop {
                trail_idx -= 1;
                if self.seen[self.trail[trail_idx].var()] {
                    break;
                }
            }
            let lit = self.trail[trail_idx];
            self.seen[lit.var()] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = lit.negate();
                break;
            }
            p = Some(lit);
            confl = self.reason[lit.var()].expect("non-decision must have a reason");
        }
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let back_level = if learnt.len() == 1 {
            0
        } else {
            // move the highest-level literal to slot 1
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var()]
        };
        (learnt, back_level)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let bound = self.trail_lim[level as usize];
        while self.trail.len() > bound {
            let l = self.trail.pop().unwrap();
            let v = l.var();
            self.assign[v] = LBool::Undef;
            self.reason[v] = None;
            self.heap.insert(v, &self.activity);
        }
        self.trail_lim.truncate(level as usize);
        self.prop_head = self.trail.len();
    }

    fn pick_branch_var(&mut self) -> Option<usize> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assign[v] == LBool::Undef {
                return Some(v);
            }
        }
        None
    }

    fn locked(&self, cr: ClauseRef) -> bool {
        let first = self.clauses[cr].lits[0];
        self.reason[first.var()] == Some(cr) && self.value(first) == LBool::True
    }

    /// Drops the lower-activity half of the learnt clauses.
    fn reduce_db(&mut self) {
        let mut learnt_refs: Vec<ClauseRef> = (0..self.clauses.len())
            .filter(|&i| self.clauses[i].learnt && !self.locked(i) && self.clauses[i].lits.len() > 2)
            .collect();
        learnt_refs.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let remove: std::collections::HashSet<ClauseRef> =
            learnt_refs[..learnt_refs.len() / 2].iter().copied().collect();
        if remove.is_empty() {
            return;
        }
        // compact the arena and rebuild watches and reasons
        let mut remap = vec![usize::MAX; self.clauses.len()];
        let mut kept = Vec::with_capacity(self.clauses.len() - remove.len());
        for (i, c) in self.clauses.drain(..).enumerate() {
            if !remove.contains(&i) {
                remap[i] = kept.len();
                kept.push(c);
            }
        }
        self.clauses = kept;
        self.num_learnts -= remove.len();
        for w in &mut self.watches {
            w.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            self.watches[c.lits[0].negate().index()].push(i);
            self.watches[c.lits[1].negate().index()].push(i);
        }
        for r in &mut self.reason {
            if let Some(cr) = *r {
                *r = Some(remap[cr]);
            }
        }
    }

    /// Luby restart sequence: 1 1 2 1 1 2 4 1 1 2 ...
    fn luby(mut i: u64) -> u64 {
        let mut size = 1u64;
        let mut seq = 0u32;
        while size < i + 1 {
            seq += 1;
            size = 2 * size + 1;
        }
        while size - 1 != i {
            size = (size - 1) / 2;
            seq -= 1;
            i %= size;
        }
        1u64 << seq
    }

    fn search(&mut self, budget: &Budget, started: Instant) -> Status {
        let mut restart_round: u64 = 0;
        let mut conflicts_until_restart = 100 * Self::luby(0);
        let mut conflicts_this_round: u64 = 0;
        let mut max_learnts = (self.clauses.len() / 3).max(4000);

        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_this_round += 1;
                if self.decision_level() == 0 {
                    return Status::Unsat;
                }
                let (learnt, back) = self.analyze(confl);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let cr = self.attach(learnt, true);
                    self.bump_clause(cr);
                    self.enqueue(asserting, Some(cr));
                }
                self.var_inc *= VAR_DECAY;
                self.cla_inc *= CLA_DECAY;
                if self.stats.conflicts % 256 == 0 {
                    if let Some(max) = budget.max_conflicts {
                        if self.stats.conflicts >= max {
                            return Status::Unknown;
                        }
                    }
                    if let Some(max) = budget.max_seconds {
                        if started.elapsed().as_secs_f64() >= max {
                            return Status::Unknown;
                        }
                    }
                }
            } else {
                if conflicts_this_round >= conflicts_until_restart {
                    restart_round += 1;
                    conflicts_this_round = 0;
                    conflicts_until_restart = 100 * Self::luby(restart_round);
                    self.cancel_until(0);
                }
                if self.num_learnts > max_learnts {
                    self.reduce_db();
                    max_learnts += max_learnts / 2;
                }
                match self.pick_branch_var() {
                    None => return Status::Sat,
                    Some(v) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        let phase = self.saved_phase[v];
                        self.enqueue(Lit::new(v, !phase), None);
                    }
                }
            }
        }
    }
}

/// Complete CDCL solve of a CNF. Budget exhaustion reports `Unknown`; the
/// result is deterministic for a given formula.
pub fn solve_internal(cnf: &Cnf, budget: Budget) -> SolveResult {
    let started = Instant::now();
    let mut solver = Solver::new(cnf.num_vars);
    let mut status = Status::Sat; // empty formula
    for clause in cnf.clauses() {
        if clause.is_empty() || !solver.add_input_clause(clause) {
            status = Status::Unsat;
            break;
        }
    }
    if status != Status::Unsat && !cnf.clauses().is_empty() {
        status = solver.search(&budget, started);
    }
    let model: Option<Vec<bool>> = if status == Status::Sat {
        Some(
            (0..cnf.num_vars)
                .map(|v| solver.assign[v] == LBool::True)
                .collect(),
        )
    } else {
        None
    };
    let mut stats = solver.stats;
    stats.wall = started.elapsed();
    if let Some(m) = &model {
        debug_assert!(matches!(super::evaluate(cnf, m), Ok(true)));
    }
    SolveResult {
        status,
        model,
        stats,
    }
}
