//! Controllers decoded from satisfying assignments, their execution, and
//! the explicit product graph used for verification.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{VarKey, VarMap, NODE_GOAL, NODE_INIT};
use crate::model::{Fairness, FondProblem, GroupId, OutcomeId, State};

/// Three-valued atom label carried by a controller node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub group: String,
    pub to: usize,
}

/// Compact controller with `k` nodes. Node 0 is the initial node and node 1
/// the goal node, except for the trivial goal-in-init controller which
/// starts at node 1 directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Controller {
    pub k: usize,
    pub initial: usize,
    pub atom_names: Vec<String>,
    /// `node_labels[n][atom]`
    pub node_labels: Vec<Vec<Label>>,
    /// Group applied at each node; always `None` at node 1.
    pub node_action: Vec<Option<GroupId>>,
    pub node_action_name: Vec<Option<String>>,
    /// Reachable from the initial node according to the model.
    pub reached: Vec<bool>,
    /// Sorted by (from, group) for stable serialization.
    pub transitions: Vec<Transition>,
}

impl Controller {
    /// Controller for a problem whose initial state already satisfies the
    /// goal: start (and stay) at the goal node.
    pub fn trivial(problem: &FondProblem) -> Self {
        Controller {
            k: 2,
            initial: NODE_GOAL,
            atom_names: problem.atoms.iter().map(|a| a.name.clone()).collect(),
            node_labels: vec![vec![Label::Unknown; problem.num_atoms()]; 2],
            node_action: vec![None; 2],
            node_action_name: vec![None; 2],
            reached: vec![false, true],
            transitions: Vec::new(),
        }
    }

    pub fn transition(&self, node: usize, group: &str) -> Option<usize> {
        self.transitions
            .iter()
            .find(|t| t.from == node && t.group == group)
            .map(|t| t.to)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("controller serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("node {node}: outcomes of distinct groups `{a}` and `{b}` both active")]
    TwoGroups { node: usize, a: String, b: String },
    #[error("node {node}: outcome name `{group}` has {count} successors")]
    BadSuccessorCount {
        node: usize,
        group: String,
        count: usize,
    },
    #[error("model does not cover all encoding variables")]
    ShortModel,
}

/// Reads a controller out of a satisfying assignment of `C(P,k)`.
pub fn decode(
    model: &[bool],
    vars: &VarMap,
    problem: &FondProblem,
) -> Result<Controller, DecodeError> {
    if model.len() < vars.num_vars() {
        return Err(DecodeError::ShortModel);
    }
    let truth = |v: i32| model[(v - 1) as usize];
    let k = vars.k;

    let reached: Vec<bool> = (0..k)
        .map(|n| vars.get(VarKey::ReachI { n }).map(&truth).unwrap_or(false))
        .collect();

    let mut node_action = vec![None; k];
    let mut node_action_name = vec![None; k];
    for n in 0..k {
        if n == NODE_GOAL {
            continue;
        }
        for (oid, outcome) in problem.outcomes.iter().enumerate() {
            let Some(v) = vars.get(VarKey::Act { n, outcome: oid }) else {
                continue;
            };
            if !truth(v) {
                continue;
            }
            let g = outcome.group;
            match node_action[n] {
                None => {
                    node_action[n] = Some(g);
                    node_action_name[n] = Some(problem.groups[g].name.clone());
                }
                Some(prev) if prev == g => {}
                Some(prev) => {
                    return Err(DecodeError::TwoGroups {
                        node: n,
                        a: problem.groups[prev].name.clone(),
                        b: problem.groups[g].name.clone(),
                    })
                }
            }
        }
    }

    let mut transitions = Vec::new();
    for n in 0..k {
        if n == NODE_GOAL {
            continue;
        }
        for (bn, bname) in vars.bnames.iter().enumerate() {
            let succs: Vec<usize> = (0..k)
                .filter(|&succ| {
                    vars.get(VarKey::Grp { n, bname: bn, succ })
                        .map(&truth)
                        .unwrap_or(false)
                })
                .collect();
            if succs.len() > 1 {
                return Err(DecodeError::BadSuccessorCount {
                    node: n,
                    group: bname.clone(),
                    count: succs.len(),
                });
            }
            if let Some(&to) = succs.first() {
                transitions.push(Transition {
                    from: n,
                    group: bname.clone(),
                    to,
                });
            }
        }
    }
    transitions.sort_by(|a, b| (a.from, &a.group).cmp(&(b.from, &b.group)));

    // reached nodes with an action must cover every outcome of that action
    for n in 0..k {
        if !reached[n] {
            continue;
        }
        if let Some(g) = node_action[n] {
            for &oid in &problem.groups[g].outcomes {
                let bname = &problem.outcomes[oid].group_name;
                if !transitions.iter().any(|t| t.from == n && &t.group == bname) {
                    return Err(DecodeError::BadSuccessorCount {
                        node: n,
                        group: bname.clone(),
                        count: 0,
                    });
                }
            }
        }
    }

    let node_labels = (0..k)
        .map(|n| {
            (0..problem.num_atoms())
                .map(|atom| match vars.get(VarKey::P { n, atom }) {
                    Some(v) if truth(v) => Label::True,
                    Some(_) => Label::False,
                    None => Label::Unknown,
                })
                .collect()
        })
        .collect();

    Ok(Controller {
        k,
        initial: NODE_INIT,
        atom_names: problem.atoms.iter().map(|a| a.name.clone()).collect(),
        node_labels,
        node_action,
        node_action_name,
        reached,
        transitions,
    })
}

pub type Vertex = (usize, State);

#[derive(Debug, Error)]
pub enum StepError {
    #[error("node {0} has no action")]
    NoAction(usize),
    #[error("node {node} has no transition for outcome name `{group}`")]
    PolicyOpen { node: usize, group: String },
    #[error("outcome {0} does not belong to the node's action")]
    WrongOutcome(OutcomeId),
    #[error("outcome {0} not applicable in the current state")]
    Inapplicable(OutcomeId),
}

/// One controller step: applies outcome `b` of the node's action. When two
/// siblings lead to the same state, the outcome identity still selects the
/// transition.
pub fn step(
    problem: &FondProblem,
    c: &Controller,
    v: &Vertex,
    b: OutcomeId,
) -> Result<Vertex, StepError> {
    let (n, s) = v;
    let group = c.node_action[*n].ok_or(StepError::NoAction(*n))?;
    let outcome = &problem.outcomes[b];
    if outcome.group != group {
        return Err(StepError::WrongOutcome(b));
    }
    if !s.is_superset(&outcome.pre) {
        return Err(StepError::Inapplicable(b));
    }
    let s2 = problem.apply_outcome(outcome, s);
    let n2 = c
        .transition(*n, &outcome.group_name)
        .ok_or_else(|| StepError::PolicyOpen {
            node: *n,
            group: outcome.group_name.clone(),
        })?;
    Ok((n2, s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum TrajectoryStatus {
    Goal,
    OpenPolicy,
    StepLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// `vertices[i] --outcomes[i]--> vertices[i+1]`
    pub vertices: Vec<Vertex>,
    pub outcomes: Vec<OutcomeId>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Resolves the environment's choice among a group's outcomes.
pub trait Chooser {
    fn choose(&mut self, v: &Vertex, outcomes: &[OutcomeId]) -> usize;
}

pub struct RandomChooser {
    rng: ChaCha8Rng,
}

impl RandomChooser {
    pub fn new(seed: u64) -> Self {
        RandomChooser {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Chooser for RandomChooser {
    fn choose(&mut self, _v: &Vertex, outcomes: &[OutcomeId]) -> usize {
        self.rng.gen_range(0..outcomes.len())
    }
}

/// Always picks the given index (clamped), e.g. 0 for "first outcome".
pub struct FixedIndexChooser(pub usize);

impl Chooser for FixedIndexChooser {
    fn choose(&mut self, _v: &Vertex, outcomes: &[OutcomeId]) -> usize {
        self.0.min(outcomes.len() - 1)
    }
}

/// Replays a fixed script of indices, then falls back to 0.
pub struct ScriptedChooser {
    script: Vec<usize>,
    pos: usize,
}

impl ScriptedChooser {
    pub fn new(script: Vec<usize>) -> Self {
        ScriptedChooser { script, pos: 0 }
    }
}

impl Chooser for ScriptedChooser {
    fn choose(&mut self, _v: &Vertex, outcomes: &[OutcomeId]) -> usize {
        let i = self.script.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        i.min(outcomes.len() - 1)
    }
}

/// Walks the controller from the initial state until a goal vertex, an
/// undefined action or transition, or the step limit.
pub fn simulate(
    problem: &FondProblem,
    c: &Controller,
    chooser: &mut dyn Chooser,
    max_steps: usize,
) -> Trajectory {
    let mut v: Vertex = (c.initial, problem.init.clone());
    let mut vertices = vec![v.clone()];
    let mut outcomes = Vec::new();
    loop {
        if v.0 == NODE_GOAL {
            return Trajectory {
                vertices,
                outcomes,
                status: TrajectoryStatus::Goal,
            };
        }
        if outcomes.len() >= max_steps {
            return Trajectory {
                vertices,
                outcomes,
                status: TrajectoryStatus::StepLimit,
            };
        }
        let open = Trajectory {
            vertices: vertices.clone(),
            outcomes: outcomes.clone(),
            status: TrajectoryStatus::OpenPolicy,
        };
        let Some(group) = c.node_action[v.0] else {
            return open;
        };
        if !problem.applicable(&problem.groups[group], &v.1) {
            return open;
        }
        let opts = &problem.groups[group].outcomes;
        let pick = chooser.choose(&v, opts);
        let b = opts[pick];
        match step(problem, c, &v, b) {
            Ok(next) => {
                outcomes.push(b);
                vertices.push(next.clone());
                v = next;
            }
            Err(_) => return open,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Violation {
    /// No action or missing transition at a reachable non-goal vertex.
    OpenPolicy { vertex: usize },
    /// Action chosen at the vertex is inapplicable in its state.
    PrecondViolation { vertex: usize },
    /// Vertex at the goal node whose state misses a goal atom.
    GoalMislabel { vertex: usize },
}

#[derive(Debug, Clone)]
pub struct ProductGraph {
    /// Deduplicated by (node, state); index 0 is the initial vertex.
    pub vertices: Vec<Vertex>,
    pub initial: usize,
    pub goal_vertices: Vec<usize>,
    pub edges: Vec<(usize, OutcomeId, usize)>,
    /// Vertex applies a fair action. Vertices without successors are marked
    /// fair, which makes goal-free dead ends show up as traps.
    pub fair: Vec<bool>,
    pub violations: Vec<Violation>,
    succs: Vec<Vec<usize>>,
}

impl ProductGraph {
    /// Builds a product graph directly from its pieces, for analyses of trap
    /// structure that do not start from a problem/controller pair. Goal
    /// vertices are labelled with the goal node, everything else with the
    /// initial node.
    pub fn synthetic(
        num_vertices: usize,
        goal_vertices: Vec<usize>,
        edges: Vec<(usize, usize)>,
        fair: Vec<bool>,
    ) -> Self {
        assert_eq!(fair.len(), num_vertices);
        let vertices: Vec<Vertex> = (0..num_vertices)
            .map(|v| {
                let node = if goal_vertices.contains(&v) {
                    NODE_GOAL
                } else {
                    NODE_INIT
                };
                (node, State::empty(0))
            })
            .collect();
        let mut succs = vec![Vec::new(); num_vertices];
        for &(a, b) in &edges {
            if !succs[a].contains(&b) {
                succs[a].push(b);
            }
        }
        ProductGraph {
            vertices,
            initial: 0,
            goal_vertices,
            edges: edges.into_iter().map(|(a, b)| (a, 0, b)).collect(),
            fair,
            violations: Vec::new(),
            succs,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succs[v]
    }

    pub fn is_goal_vertex(&self, v: usize) -> bool {
        self.vertices[v].0 == NODE_GOAL
    }
}

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("product graph exceeds the vertex budget of {0}")]
    Budget(usize),
}

pub const DEFAULT_PRODUCT_BUDGET: usize = 1_000_000;

/// BFS closure of `step` over all outcomes from the initial vertex.
/// Well-formedness violations are recorded, not fatal.
pub fn build_product(
    problem: &FondProblem,
    c: &Controller,
    budget: usize,
) -> Result<ProductGraph, ProductError> {
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut index: HashMap<Vertex, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut fair = Vec::new();
    let mut violations = Vec::new();

    let root: Vertex = (c.initial, problem.init.clone());
    vertices.push(root.clone());
    index.insert(root, 0);
    fair.push(true);
    let mut frontier = 0;
    while frontier < vertices.len() {
        let vi = frontier;
        frontier += 1;
        let (n, s) = vertices[vi].clone();
        if n == NODE_GOAL {
            if !problem.is_goal(&s) {
                violations.push(Violation::GoalMislabel { vertex: vi });
            }
            continue;
        }
        let Some(group) = c.node_action[n] else {
            violations.push(Violation::OpenPolicy { vertex: vi });
            continue;
        };
        fair[vi] = problem.groups[group].fairness == Fairness::Fair;
        if !problem.applicable(&problem.groups[group], &s) {
            violations.push(Violation::PrecondViolation { vertex: vi });
            continue;
        }
        for &b in &problem.groups[group].outcomes.clone() {
            match step(problem, c, &(n, s.clone()), b) {
                Ok(next) => {
                    let ti = *index.entry(next.clone()).or_insert_with(|| {
                        vertices.push(next);
                        fair.push(true);
                        vertices.len() - 1
                    });
                    if vertices.len() > budget {
                        return Err(ProductError::Budget(budget));
                    }
                    edges.push((vi, b, ti));
                }
                Err(StepError::PolicyOpen { .. }) => {
                    violations.push(Violation::OpenPolicy { vertex: vi });
                }
                Err(_) => {
                    violations.push(Violation::PrecondViolation { vertex: vi });
                }
            }
        }
    }

    let goal_vertices = (0..vertices.len())
        .filter(|&v| vertices[v].0 == NODE_GOAL)
        .collect();
    let mut succs = vec![Vec::new(); vertices.len()];
    for &(a, _, b) in &edges {
        if !succs[a].contains(&b) {
            succs[a].push(b);
        }
    }
    Ok(ProductGraph {
        vertices,
        initial: 0,
        goal_vertices,
        edges,
        fair,
        violations,
        succs,
    })
}

/// Vertices whose state contradicts a `true` node label. Theorem-level
/// soundness of the encoding: must be empty for decoded controllers.
pub fn label_violations(g: &ProductGraph, c: &Controller) -> Vec<usize> {
    g.vertices
        .iter()
        .enumerate()
        .filter(|(_, (n, s))| {
            c.node_labels[*n]
                .iter()
                .enumerate()
                .any(|(atom, &l)| l == Label::True && !s.contains(atom))
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode, EncodeOptions};
    use crate::model::OutcomeSpec;
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

    fn coin_flip_problem() -> FondProblem {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        prob.set_goal([p]).unwrap();
        prob.add_group(
            "flip",
            Fairness::Fair,
            vec![
                OutcomeSpec {
                    pre: vec![],
                    add: vec![p],
                    del: vec![],
                },
                OutcomeSpec {
                    pre: vec![],
                    add: vec![],
                    del: vec![],
                },
            ],
        )
        .unwrap();
        prob
    }

    fn solve_and_decode(problem: &FondProblem, k: usize) -> Controller {
        let (cnf, vars) = encode(problem, k, &EncodeOptions::default()).unwrap();
        let r = solve_internal(&cnf, Budget::default());
        assert_eq!(r.status, Status::Sat);
        decode(r.model.as_ref().unwrap(), &vars, problem).unwrap()
    }

    #[test]
    fn decode_one_action_controller() {
        let prob = one_action_problem();
        let c = solve_and_decode(&prob, 2);
        assert_eq!(c.k, 2);
        assert_eq!(c.node_action[0], Some(0));
        assert_eq!(c.node_action[1], None);
        assert_eq!(c.transition(0, "a#1"), Some(1));
        assert!(c.reached[0]);
    }

    #[test]
    fn decode_coin_flip_self_loop() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        assert_eq!(c.node_action[0], Some(0));
        assert_eq!(c.transition(0, "flip#1"), Some(1));
        assert_eq!(c.transition(0, "flip#2"), Some(0));
    }

    #[test]
    fn step_follows_outcome_identity() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        let v0 = (0usize, prob.init.clone());
        let hit = step(&prob, &c, &v0, 0).unwrap();
        assert_eq!(hit.0, 1);
        assert!(hit.1.contains(0));
        let miss = step(&prob, &c, &v0, 1).unwrap();
        assert_eq!(miss, v0);
    }

    #[test]
    fn simulate_lucky_and_unlucky() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        let t = simulate(&prob, &c, &mut FixedIndexChooser(0), 50);
        assert_eq!(t.status, TrajectoryStatus::Goal);
        assert_eq!(t.len(), 1);
        let t = simulate(&prob, &c, &mut FixedIndexChooser(1), 10);
        assert_eq!(t.status, TrajectoryStatus::StepLimit);
        assert_eq!(t.len(), 10);
    }

    #[test]
    fn simulate_goal_in_init_is_empty() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        prob.set_init([p]).unwrap();
        prob.set_goal([p]).unwrap();
        let c = Controller::trivial(&prob);
        let t = simulate(&prob, &c, &mut FixedIndexChooser(0), 10);
        assert_eq!(t.status, TrajectoryStatus::Goal);
        assert!(t.is_empty());
    }

    #[test]
    fn simulate_random_reaches_goal() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        let mut goals = 0;
        for seed in 0..100 {
            let mut ch = RandomChooser::new(seed);
            let t = simulate(&prob, &c, &mut ch, 200);
            if t.status == TrajectoryStatus::Goal {
                goals += 1;
            }
        }
        assert!(goals >= 99, "{goals}/100");
    }

    #[test]
    fn product_coin_flip() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        let g = build_product(&prob, &c, DEFAULT_PRODUCT_BUDGET).unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges.len(), 2);
        assert!(g.violations.is_empty());
        assert!(label_violations(&g, &c).is_empty());
        assert_eq!(g.goal_vertices.len(), 1);
    }

    #[test]
    fn product_chain() {
        let mut prob = FondProblem::new();
        let a0 = prob.add_atom("x0").unwrap();
        let a1 = prob.add_atom("x1").unwrap();
        let a2 = prob.add_atom("x2").unwrap();
        let a3 = prob.add_atom("x3").unwrap();
        prob.set_init([a0]).unwrap();
        prob.set_goal([a3]).unwrap();
        for (i, (pre, add)) in [(a0, a1), (a1, a2), (a2, a3)].iter().enumerate() {
            prob.add_group(
                format!("s{}", i),
                Fairness::Fair,
                vec![OutcomeSpec {
                    pre: vec![*pre],
                    add: vec![*add],
                    del: vec![*pre],
                }],
            )
            .unwrap();
        }
        let c = solve_and_decode(&prob, 4);
        let g = build_product(&prob, &c, DEFAULT_PRODUCT_BUDGET).unwrap();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.edges.len(), 3);
        assert!(g.violations.is_empty());
    }

    #[test]
    fn product_records_open_policy() {
        let prob = coin_flip_problem();
        let mut c = solve_and_decode(&prob, 2);
        c.node_action[0] = None;
        let g = build_product(&prob, &c, DEFAULT_PRODUCT_BUDGET).unwrap();
        assert!(g
            .violations
            .iter()
            .any(|v| matches!(v, Violation::OpenPolicy { .. })));
    }

    #[test]
    fn controller_json_round_trip() {
        let prob = coin_flip_problem();
        let c = solve_and_decode(&prob, 2);
        let json = c.to_json();
        let c2 = Controller::from_json(&json).unwrap();
        assert_eq!(c2.k, c.k);
        assert_eq!(c2.transitions, c.transitions);
        assert_eq!(c2.node_action, c.node_action);
    }
}
