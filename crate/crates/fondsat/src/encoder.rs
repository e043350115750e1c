//! CNF encoding of a FOND problem over `k` controller nodes, for
//! strong-cyclic, strong and dual (mixed fair/unfair) modes, with the
//! compact `(n,B,n')` transition variables, the optimized forward
//! propagation of negative information, and node symmetry breaking.
//!
//! Node 0 is the initial node `n0`, node 1 the goal node `nG`, the
//! remaining nodes 2..k-1 are free.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{FondProblem, Fairness, OutcomeId};

pub const NODE_INIT: usize = 0;
pub const NODE_GOAL: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    StrongCyclic,
    Strong,
    Dual,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::StrongCyclic => write!(f, "strong-cyclic"),
            Mode::Strong => write!(f, "strong"),
            Mode::Dual => write!(f, "dual"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmoEncoding {
    Pairwise,
    Ladder,
}

#[derive(Debug, Clone, Copy)]
pub struct EncodeOptions {
    pub mode: Mode,
    pub use_optimized7: bool,
    pub symmetry_breaking: bool,
    pub amo_encoding: AmoEncoding,
    pub include_reverse13: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            mode: Mode::StrongCyclic,
            use_optimized7: true,
            symmetry_breaking: true,
            amo_encoding: AmoEncoding::Pairwise,
            include_reverse13: true,
        }
    }
}

impl EncodeOptions {
    pub fn with_mode(mode: Mode) -> Self {
        EncodeOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("controller bound k must be at least 2, got {0}")]
    KTooSmall(usize),
}

/// Origin of a clause: the numbered clause family or a documented
/// optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C7Prime,
    C7DoublePrime,
    C8,
    C9,
    C10,
    C11,
    C12,
    C13,
    C13Justify,
    C13Reverse,
    C13Prime,
    C14,
    C15,
    C16,
    C17,
    EdgeDef,
    GoalFreeze,
    ReachActs,
    Symmetry,
    Adhoc,
}

impl Provenance {
    /// Numbered clause family, if any.
    pub fn family(self) -> Option<u8> {
        use Provenance::*;
        Some(match self {
            C1 => 1,
            C2 => 2,
            C3 => 3,
            C4 => 4,
            C5 => 5,
            C6 => 6,
            C7 | C7Prime | C7DoublePrime => 7,
            C8 => 8,
            C9 => 9,
            C10 => 10,
            C11 => 11,
            C12 => 12,
            C13 | C13Justify | C13Reverse | C13Prime => 13,
            C14 => 14,
            C15 => 15,
            C16 => 16,
            C17 => 17,
            EdgeDef | GoalFreeze | ReachActs | Symmetry | Adhoc => return None,
        })
    }
}

/// Clause database in DIMACS sign convention, with per-clause provenance.
#[derive(Debug, Clone)]
pub struct Cnf {
    pub num_vars: usize,
    clauses: Vec<Vec<i32>>,
    tags: Vec<Provenance>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn add_clause(&mut self, lits: Vec<i32>, tag: Provenance) {
        debug_assert!(
            lits.iter()
                .all(|&l| l != 0 && (l.unsigned_abs() as usize) <= self.num_vars),
            "literal out of range"
        );
        self.clauses.push(lits);
        self.tags.push(tag);
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn tags(&self) -> &[Provenance] {
        &self.tags
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn count_tag(&self, tag: Provenance) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }
}

/// Semantic SAT variable, the key of the [`VarMap`] registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKey {
    /// Atom true in controller node `n`.
    P { n: usize, atom: usize },
    /// Deterministic outcome applied in node `n`.
    Act { n: usize, outcome: usize },
    /// Control passes from `n` to `succ` under outcome name `bname`.
    Grp { n: usize, bname: usize, succ: usize },
    /// Some transition from `n` to `succ`.
    Edge { n: usize, succ: usize },
    /// Node reachable from the initial node.
    ReachI { n: usize },
    /// Goal node reachable from `n` in at most `j` steps.
    ReachG { n: usize, j: usize },
    /// Dual mode: the action chosen in `n` is fair.
    Fair { n: usize },
    /// Auxiliary: the edge `(n,succ)` justifies `ReachG(n, j+1)`.
    Justify { n: usize, succ: usize, j: usize },
    /// Ladder at-most-one auxiliary for node `n`.
    Ladder { n: usize, i: usize },
}

/// Bijection between semantic variables and DIMACS variables `1..=count`.
#[derive(Debug, Clone)]
pub struct VarMap {
    map: HashMap<VarKey, i32>,
    names: Vec<String>,
    pub k: usize,
    /// Distinct outcome names `B` (schema name + ordinal, no arguments).
    pub bnames: Vec<String>,
    /// Outcome id -> index into `bnames`.
    pub outcome_bname: Vec<usize>,
    /// Mode actually encoded (dual degenerates to strong-cyclic when the
    /// problem has no unfair group).
    pub effective_mode: Mode,
    pub warnings: Vec<String>,
}

impl VarMap {
    fn new(problem: &FondProblem, k: usize, mode: Mode) -> Self {
        let mut bnames = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut outcome_bname = Vec::with_capacity(problem.outcomes.len());
        for b in &problem.outcomes {
            let idx = *index.entry(b.group_name.as_str()).or_insert_with(|| {
                bnames.push(b.group_name.clone());
                bnames.len() - 1
            });
            outcome_bname.push(idx);
        }
        VarMap {
            map: HashMap::new(),
            names: Vec::new(),
            k,
            bnames,
            outcome_bname,
            effective_mode: mode,
            warnings: Vec::new(),
        }
    }

    fn register(&mut self, key: VarKey, name: String) -> i32 {
        if let Some(&v) = self.map.get(&key) {
            return v;
        }
        self.names.push(name);
        let v = self.names.len() as i32;
        self.map.insert(key, v);
        v
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Looks up an already-registered variable.
    pub fn get(&self, key: VarKey) -> Option<i32> {
        self.map.get(&key).copied()
    }

    pub fn name(&self, var: i32) -> &str {
        &self.names[(var - 1) as usize]
    }

    /// Sidecar text mapping variable ids to semantic names.
    pub fn sidecar(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "var {}\t{}", i + 1, name);
        }
        out
    }
}

struct Builder<'a> {
    problem: &'a FondProblem,
    vars: VarMap,
    clauses: Vec<(Vec<i32>, Provenance)>,
    k: usize,
}

impl<'a> Builder<'a> {
    fn p(&mut self, n: usize, atom: usize) -> i32 {
        let name = format!("p({},{})", n, self.problem.atoms[atom].name);
        self.vars.register(VarKey::P { n, atom }, name)
    }

    fn act(&mut self, n: usize, outcome: OutcomeId) -> i32 {
        let name = format!("act({},{})", n, self.problem.groups[self.problem.outcomes[outcome].group].name);
        let name = format!("{}[{}]", name, self.problem.outcomes[outcome].group_name);
        self.vars.register(VarKey::Act { n, outcome }, name)
    }

    fn grp(&mut self, n: usize, bname: usize, succ: usize) -> i32 {
        let name = format!("grp({},{},{})", n, self.vars.bnames[bname], succ);
        self.vars.register(VarKey::Grp { n, bname, succ }, name)
    }

    fn edge(&mut self, n: usize, succ: usize) -> i32 {
        let name = format!("edge({},{})", n, succ);
        self.vars.register(VarKey::Edge { n, succ }, name)
    }

    fn reach_i(&mut self, n: usize) -> i32 {
        let name = format!("reachI({})", n);
        self.vars.register(VarKey::ReachI { n }, name)
    }

    fn reach_g(&mut self, n: usize, j: usize) -> i32 {
        let name = format!("reachG({},{})", n, j);
        self.vars.register(VarKey::ReachG { n, j }, name)
    }

    fn fair(&mut self, n: usize) -> i32 {
        let name = format!("fair({})", n);
        self.vars.register(VarKey::Fair { n }, name)
    }

    fn justify(&mut self, n: usize, succ: usize, j: usize) -> i32 {
        let name = format!("justify({},{},{})", n, succ, j);
        self.vars.register(VarKey::Justify { n, succ, j }, name)
    }

    fn ladder(&mut self, n: usize, i: usize) -> i32 {
        let name = format!("ladder({},{})", n, i);
        self.vars.register(VarKey::Ladder { n, i }, name)
    }

    fn add(&mut self, lits: Vec<i32>, tag: Provenance) {
        debug_assert!(!lits.is_empty() || tag == Provenance::Adhoc);
        self.clauses.push((lits, tag));
    }

    /// Nodes with outgoing structure: every node except the goal node.
    fn source_nodes(&self) -> impl Iterator<Item = usize> {
        let k = self.k;
        (0..k).filter(|&n| n != NODE_GOAL)
    }
}

/// Builds `C(P,k)`. Satisfying assignments correspond to `k`-node compact
/// controllers for the requested mode.
pub fn encode(
    problem: &FondProblem,
    k: usize,
    opts: &EncodeOptions,
) -> Result<(Cnf, VarMap), EncodeError> {
    if k < 2 {
        return Err(EncodeError::KTooSmall(k));
    }
    let mut mode = opts.mode;
    let mut warnings = Vec::new();
    if mode == Mode::Dual
        && !problem.groups.iter().any(|g| g.fairness == Fairness::Unfair)
    {
        warnings.push(
            "dual mode requested but no group is tagged unfair; encoding as strong-cyclic"
                .to_string(),
        );
        mode = Mode::StrongCyclic;
    }

    let mut b = Builder {
        problem,
        vars: VarMap::new(problem, k, mode),
        clauses: Vec::new(),
        k,
    };
    b.vars.warnings = warnings;

    let num_atoms = problem.num_atoms();
    let num_bnames = b.vars.bnames.len();
    // outcomes grouped by B name, in outcome order
    let mut by_bname: Vec<Vec<OutcomeId>> = vec![Vec::new(); num_bnames];
    for (oid, &bn) in b.vars.outcome_bname.clone().iter().enumerate() {
        by_bname[bn].push(oid);
    }

    // (1) negative info in s0
    for atom in 0..num_atoms {
        if !problem.init.contains(atom) {
            let v = b.p(NODE_INIT, atom);
            b.add(vec![-v], Provenance::C1);
        }
    }
    // (2) goal atoms true in nG
    for atom in problem.goal.iter() {
        let v = b.p(NODE_GOAL, atom);
        b.add(vec![v], Provenance::C2);
    }
    // goal node applies no action
    for oid in 0..problem.outcomes.len() {
        let v = b.act(NODE_GOAL, oid);
        b.add(vec![-v], Provenance::GoalFreeze);
    }

    for n in b.source_nodes().collect::<Vec<_>>() {
        // (3) preconditions
        for oid in 0..problem.outcomes.len() {
            let a = b.act(n, oid);
            for atom in problem.outcomes[oid].pre.iter().collect::<Vec<_>>() {
                let p = b.p(n, atom);
                b.add(vec![-a, p], Provenance::C3);
            }
        }
        // (4) all siblings apply together
        for g in &problem.groups {
            if g.outcomes.len() > 1 {
                for &b1 in &g.outcomes {
                    for &b2 in &g.outcomes {
                        if b1 != b2 {
                            let a1 = b.act(n, b1);
                            let a2 = b.act(n, b2);
                            b.add(vec![-a1, a2], Provenance::C4);
                        }
                    }
                }
            }
        }
        // (5) at most one group per node. Clause 4 makes the outcomes of a
        // group equivalent at n, so one representative per group suffices.
        let reps: Vec<i32> = problem
            .groups
            .iter()
            .map(|g| b.act(n, g.outcomes[0]))
            .collect();
        match opts.amo_encoding {
            AmoEncoding::Pairwise => {
                for i in 0..reps.len() {
                    for j in (i + 1)..reps.len() {
                        b.add(vec![-reps[i], -reps[j]], Provenance::C5);
                    }
                }
            }
            AmoEncoding::Ladder => {
                // sequential counter: ladder(n,i) = "some rep <= i chosen"
                if reps.len() > 1 {
                    for i in 0..reps.len() - 1 {
                        let s = b.ladder(n, i);
                        b.add(vec![-reps[i], s], Provenance::C5);
                        if i > 0 {
                            let prev = b.ladder(n, i - 1);
                            b.add(vec![-prev, s], Provenance::C5);
                            b.add(vec![-reps[i], -prev], Provenance::C5);
                        }
                    }
                    let last = b.ladder(n, reps.len() - 2);
                    let _ = last;
                    let rep_last = reps[reps.len() - 1];
                    let prev = b.ladder(n, reps.len() - 2);
                    b.add(vec![-rep_last, -prev], Provenance::C5);
                }
            }
        }
        // (6) successor selection per outcome name
        for oid in 0..problem.outcomes.len() {
            let a = b.act(n, oid);
            let bn = b.vars.outcome_bname[oid];
            let mut clause = vec![-a];
            for succ in 0..k {
                clause.push(b.grp(n, bn, succ));
            }
            b.add(clause, Provenance::C6);
        }
        for bn in 0..num_bnames {
            for succ in 0..k {
                let g = b.grp(n, bn, succ);
                let mut clause = vec![-g];
                for &oid in &by_bname[bn] {
                    clause.push(b.act(n, oid));
                }
                b.add(clause, Provenance::C6);
            }
            // at most one successor per (n,B)
            for s1 in 0..k {
                for s2 in (s1 + 1)..k {
                    let g1 = b.grp(n, bn, s1);
                    let g2 = b.grp(n, bn, s2);
                    b.add(vec![-g1, -g2], Provenance::C6);
                }
            }
        }
        // edge definition: edge(n,n') <-> some grp(n,B,n')
        for succ in 0..k {
            let e = b.edge(n, succ);
            let mut clause = vec![-e];
            for bn in 0..num_bnames {
                let g = b.grp(n, bn, succ);
                b.add(vec![-g, e], Provenance::EdgeDef);
                clause.push(g);
            }
            b.add(clause, Provenance::EdgeDef);
        }
        // (7) forward propagation of negative information
        if opts.use_optimized7 {
            for succ in 0..k {
                let e = b.edge(n, succ);
                for atom in 0..num_atoms {
                    // 7': edge ∧ ¬p(n) → ¬p(n') ∨ some adder applied at n
                    let pn = b.p(n, atom);
                    let ps = b.p(succ, atom);
                    let mut clause = vec![-e, pn, -ps];
                    for oid in 0..problem.outcomes.len() {
                        if problem.outcomes[oid].add.contains(atom) {
                            clause.push(b.act(n, oid));
                        }
                    }
                    b.add(clause, Provenance::C7Prime);
                }
            }
            // 7'': outcomes that do not add p but have a sibling that does
            for oid in 0..problem.outcomes.len() {
                let group = &problem.groups[problem.outcomes[oid].group];
                if group.outcomes.len() < 2 {
                    continue;
                }
                for atom in 0..num_atoms {
                    if problem.outcomes[oid].add.contains(atom) {
                        continue;
                    }
                    let sibling_adds = group
                        .outcomes
                        .iter()
                        .any(|&s| s != oid && problem.outcomes[s].add.contains(atom));
                    if !sibling_adds {
                        continue;
                    }
                    let bn = b.vars.outcome_bname[oid];
                    for succ in 0..k {
                        let g = b.grp(n, bn, succ);
                        let a = b.act(n, oid);
                        let pn = b.p(n, atom);
                        let ps = b.p(succ, atom);
                        b.add(vec![-g, -a, pn, -ps], Provenance::C7DoublePrime);
                    }
                }
            }
        } else {
            // basic clause 7 via the (n,B,n') ∧ (n,b) conjunction
            for oid in 0..problem.outcomes.len() {
                let bn = b.vars.outcome_bname[oid];
                for atom in 0..num_atoms {
                    if problem.outcomes[oid].add.contains(atom) {
                        continue;
                    }
                    for succ in 0..k {
                        let g = b.grp(n, bn, succ);
                        let a = b.act(n, oid);
                        let pn = b.p(n, atom);
                        let ps = b.p(succ, atom);
                        b.add(vec![-g, -a, pn, -ps], Provenance::C7);
                    }
                }
            }
        }
        // (8) deletes force negative info forward
        for oid in 0..problem.outcomes.len() {
            let bn = b.vars.outcome_bname[oid];
            for atom in problem.outcomes[oid].del.iter().collect::<Vec<_>>() {
                for succ in 0..k {
                    let g = b.grp(n, bn, succ);
                    let a = b.act(n, oid);
                    let ps = b.p(succ, atom);
                    b.add(vec![-a, -g, -ps], Provenance::C8);
                }
            }
        }
    }

    // (9) initial node reachable
    let r0 = b.reach_i(NODE_INIT);
    b.add(vec![r0], Provenance::C9);
    // (10) reachability propagates along edges
    for n in b.source_nodes().collect::<Vec<_>>() {
        for succ in 0..k {
            let e = b.edge(n, succ);
            let rn = b.reach_i(n);
            let rs = b.reach_i(succ);
            b.add(vec![-e, -rn, rs], Provenance::C10);
        }
    }
    // (11) goal node reaches itself in any number of steps
    for j in 0..=k {
        let v = b.reach_g(NODE_GOAL, j);
        b.add(vec![v], Provenance::C11);
    }
    // (12) other nodes need at least one step
    for n in 0..k {
        if n != NODE_GOAL {
            let v = b.reach_g(n, 0);
            b.add(vec![-v], Provenance::C12);
        }
    }

    // (13) / (13') / (13''): bounded goal reachability
    let dual = mode == Mode::Dual;
    for n in b.source_nodes().collect::<Vec<_>>() {
        let fair_lit = if dual { Some(b.fair(n)) } else { None };
        for j in 0..k {
            let rg_next = b.reach_g(n, j + 1);
            if mode == Mode::StrongCyclic || dual {
                // forward: ReachG(n,j+1) -> some justified successor
                let mut clause = vec![-rg_next];
                for succ in 0..k {
                    clause.push(b.justify(n, succ, j));
                }
                if let Some(f) = fair_lit {
                    clause.push(-f); // binds only when the node is fair
                }
                b.add(clause, Provenance::C13);
                for succ in 0..k {
                    let jv = b.justify(n, succ, j);
                    let e = b.edge(n, succ);
                    let rg_s = b.reach_g(succ, j);
                    b.add(vec![-jv, e], Provenance::C13Justify);
                    b.add(vec![-jv, rg_s], Provenance::C13Justify);
                }
                if opts.include_reverse13 {
                    for succ in 0..k {
                        let e = b.edge(n, succ);
                        let rg_s = b.reach_g(succ, j);
                        let mut clause = vec![-e, -rg_s, rg_next];
                        if let Some(f) = fair_lit {
                            clause.push(-f);
                        }
                        b.add(clause, Provenance::C13Reverse);
                    }
                }
            }
            if mode == Mode::Strong || dual {
                // 13': all successors must be strictly closer to the goal
                for succ in 0..k {
                    let e = b.edge(n, succ);
                    let rg_s = b.reach_g(succ, j);
                    let mut clause = vec![-rg_next, -e, rg_s];
                    if let Some(f) = fair_lit {
                        clause.push(f); // binds only when the node is unfair
                    }
                    b.add(clause, Provenance::C13Prime);
                }
            }
        }
    }
    // (14) monotonicity in j
    for n in 0..k {
        if n == NODE_GOAL {
            continue;
        }
        for j in 0..k {
            let a = b.reach_g(n, j);
            let c = b.reach_g(n, j + 1);
            b.add(vec![-a, c], Provenance::C14);
        }
    }
    // (15) reachable nodes reach the goal node
    for n in b.source_nodes().collect::<Vec<_>>() {
        let ri = b.reach_i(n);
        let rg = b.reach_g(n, k);
        b.add(vec![-ri, rg], Provenance::C15);
    }

    // strong and dual: reachable non-goal nodes must apply an action,
    // otherwise an edge-less node satisfies 13' vacuously
    if mode == Mode::Strong || dual {
        for n in b.source_nodes().collect::<Vec<_>>() {
            let ri = b.reach_i(n);
            let mut clause = vec![-ri];
            for oid in 0..problem.outcomes.len() {
                clause.push(b.act(n, oid));
            }
            b.add(clause, Provenance::ReachActs);
        }
    }

    // (16)/(17) fairness of the chosen action, away from nG
    if dual {
        for n in b.source_nodes().collect::<Vec<_>>() {
            let f = b.fair(n);
            let mut fair_acts = Vec::new();
            let mut unfair_acts = Vec::new();
            for (oid, outcome) in problem.outcomes.iter().enumerate() {
                let a = b.act(n, oid);
                match problem.groups[outcome.group].fairness {
                    Fairness::Fair => {
                        b.add(vec![-a, f], Provenance::C16);
                        fair_acts.push(a);
                    }
                    Fairness::Unfair => {
                        b.add(vec![-a, -f], Provenance::C17);
                        unfair_acts.push(a);
                    }
                }
            }
            let mut c16 = vec![-f];
            c16.extend(&fair_acts);
            b.add(c16, Provenance::C16);
            let mut c17 = vec![f];
            c17.extend(&unfair_acts);
            b.add(c17, Provenance::C17);
        }
    }

    if opts.symmetry_breaking {
        add_symmetry_breaking(&mut b);
    }

    let mut cnf = Cnf::new(b.vars.num_vars());
    for (lits, tag) in b.clauses {
        cnf.add_clause(lits, tag);
    }
    Ok((cnf, b.vars))
}

/// Orders the free nodes 2..k-1 by their first incoming edge: node `m ≥ 3`
/// may only receive an edge from source `j` if node `m-1` receives one from
/// some source `i ≤ j`. Preserves satisfiability for the same `k`.
fn add_symmetry_breaking(b: &mut Builder<'_>) {
    let k = b.k;
    for m in 3..k {
        for j in b.source_nodes().collect::<Vec<_>>() {
            let e = b.edge(j, m);
            let mut clause = vec![-e];
            for i in 0..=j {
                if i == NODE_GOAL {
                    continue;
                }
                clause.push(b.edge(i, m - 1));
            }
            b.add(clause, Provenance::Symmetry);
        }
    }
}

/// Standard DIMACS text: `p cnf V C` header, 0-terminated clauses, and
/// `c` comment lines naming each variable when a map is supplied.
pub fn emit_dimacs(cnf: &Cnf, vars: Option<&VarMap>) -> String {
    let mut out = String::new();
    if let Some(vars) = vars {
        for v in 1..=cnf.num_vars as i32 {
            let _ = writeln!(out, "c {} {}", v, vars.name(v));
        }
    }
    let _ = writeln!(out, "p cnf {} {}", cnf.num_vars, cnf.num_clauses());
    for clause in cnf.clauses() {
        for lit in clause {
            let _ = write!(out, "{} ", lit);
        }
        let _ = writeln!(out, "0");
    }
    out
}

/// Reference DIMACS parser (used by tests and the external-solver path).
pub fn parse_dimacs(text: &str) -> Result<Cnf, String> {
    let mut cnf: Option<Cnf> = None;
    let mut declared_clauses = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let mut it = rest.split_whitespace();
            let v: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| format!("line {}: bad header", lineno + 1))?;
            declared_clauses = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| format!("line {}: bad header", lineno + 1))?;
            cnf = Some(Cnf::new(v));
            continue;
        }
        let cnf = cnf
            .as_mut()
            .ok_or_else(|| format!("line {}: clause before header", lineno + 1))?;
        let mut clause = Vec::new();
        for tok in line.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| format!("line {}: bad literal `{}`", lineno + 1, tok))?;
            if lit == 0 {
                cnf.add_clause(std::mem::take(&mut clause), Provenance::Adhoc);
            } else {
                clause.push(lit);
            }
        }
        if !clause.is_empty() {
            return Err(format!("line {}: clause not 0-terminated", lineno + 1));
        }
    }
    let cnf = cnf.ok_or("missing p cnf header")?;
    if cnf.num_clauses() != declared_clauses {
        return Err(format!(
            "header declares {} clauses, found {}",
            declared_clauses,
            cnf.num_clauses()
        ));
    }
    Ok(cnf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fairness, OutcomeSpec};
    use crate::sat::{solve_internal, Budget, Status};

    fn one_action_problem() -> FondProblem {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        prob.set_goal([p]).unwrap();
        prob.add_group(
            "a",
            Fairness::Fair,
            vec![OutcomeSpec {
                pre: vec![],
                add: vec![p],
                del: vec![],
            }],
        )
        .unwrap();
        prob
    }

    #[test]
    fn rejects_small_k() {
        let prob = one_action_problem();
        assert!(encode(&prob, 1, &EncodeOptions::default()).is_err());
    }

    #[test]
    fn one_action_k2_sat_with_expected_shape() {
        let prob = one_action_problem();
        let (cnf, vars) = encode(&prob, 2, &EncodeOptions::default()).unwrap();
        let r = solve_internal(&cnf, Budget::default());
        assert_eq!(r.status, Status::Sat);
        let act = vars.get(VarKey::Act { n: 0, outcome: 0 }).unwrap();
        assert!(r.lit_true(act));
        let grp = vars
            .get(VarKey::Grp {
                n: 0,
                bname: 0,
                succ: 1,
            })
            .unwrap();
        assert!(r.lit_true(grp));
    }

    #[test]
    fn clause_family_counts() {
        let prob = one_action_problem();
        let k = 2;
        let (cnf, _) = encode(&prob, k, &EncodeOptions::default()).unwrap();
        assert_eq!(cnf.count_tag(Provenance::C2), 1);
        assert_eq!(cnf.count_tag(Provenance::C9), 1);
        assert_eq!(cnf.count_tag(Provenance::C11), k + 1);
    }

    #[test]
    fn unsolvable_goal_unsat() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        prob.set_goal([q]).unwrap();
        prob.add_group(
            "a",
            Fairness::Fair,
            vec![OutcomeSpec {
                pre: vec![],
                add: vec![p],
                del: vec![],
            }],
        )
        .unwrap();
        for k in 2..=4 {
            let (cnf, _) = encode(&prob, k, &EncodeOptions::default()).unwrap();
            let r = solve_internal(&cnf, Budget::default());
            assert_eq!(r.status, Status::Unsat, "k={}", k);
        }
    }

    #[test]
    fn family_coverage_generic_instance() {
        // generic instance touching every numbered family 1..15
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        let q = prob.add_atom("q").unwrap();
        let r = prob.add_atom("r").unwrap();
        prob.set_init([p]).unwrap();
        prob.set_goal([q]).unwrap();
        prob.add_group(
            "flip",
            Fairness::Fair,
            vec![
                OutcomeSpec {
                    pre: vec![p],
                    add: vec![q],
                    del: vec![p],
                },
                OutcomeSpec {
                    pre: vec![p],
                    add: vec![r],
                    del: vec![],
                },
            ],
        )
        .unwrap();
        prob.add_group(
            "reset",
            Fairness::Fair,
            vec![OutcomeSpec {
                pre: vec![r],
                add: vec![p],
                del: vec![r],
            }],
        )
        .unwrap();
        let (cnf, _) = encode(&prob, 3, &EncodeOptions::default()).unwrap();
        for family in 1..=15u8 {
            assert!(
                cnf.tags().iter().any(|t| t.family() == Some(family)),
                "family {} missing",
                family
            );
        }
    }

    #[test]
    fn symmetry_k2_adds_nothing() {
        let prob = one_action_problem();
        let with = encode(&prob, 2, &EncodeOptions::default()).unwrap().0;
        assert_eq!(with.count_tag(Provenance::Symmetry), 0);
    }

    #[test]
    fn dual_without_unfair_degrades() {
        let prob = one_action_problem();
        let (_, vars) = encode(&prob, 2, &EncodeOptions::with_mode(Mode::Dual)).unwrap();
        assert_eq!(vars.effective_mode, Mode::StrongCyclic);
        assert!(!vars.warnings.is_empty());
    }

    #[test]
    fn dimacs_emission() {
        let empty = Cnf::new(0);
        assert_eq!(emit_dimacs(&empty, None), "p cnf 0 0\n");
        let mut unit = Cnf::new(1);
        unit.add_clause(vec![1], Provenance::Adhoc);
        assert_eq!(emit_dimacs(&unit, None), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn dimacs_round_trip() {
        let prob = one_action_problem();
        let (cnf, vars) = encode(&prob, 2, &EncodeOptions::default()).unwrap();
        let text = emit_dimacs(&cnf, Some(&vars));
        let parsed = parse_dimacs(&text).unwrap();
        assert_eq!(parsed.num_vars, cnf.num_vars);
        assert_eq!(parsed.clauses(), cnf.clauses());
    }
}
