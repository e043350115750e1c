//! Shared generators and oracles for the integration tests.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fondsat::analysis::reachable_states;
use fondsat::benchgen::{generate, Instance};
use fondsat::encoder::Cnf;
use fondsat::model::{Fairness, FondProblem, OutcomeSpec};
use fondsat::pddl::ground::ground;
use fondsat::pddl::parser::{parse_domain, parse_problem};
use fondsat::policy::ProductGraph;

/// Parses and grounds a generated instance the same way the CLI does.
pub fn build_instance(inst: &Instance) -> FondProblem {
    let d = parse_domain(&inst.domain).expect("domain parses");
    let p = parse_problem(&inst.problem).expect("problem parses");
    ground(&d, &p).expect("grounds").prune_statically_inapplicable()
}

pub fn build_default(name: &str) -> FondProblem {
    build_instance(&generate(name, &BTreeMap::new()).expect("known domain"))
}

pub fn build_with(name: &str, param: &str, value: usize) -> FondProblem {
    let mut overrides = BTreeMap::new();
    overrides.insert(param.to_string(), value);
    build_instance(&generate(name, &overrides).expect("known domain"))
}

/// The one-action coin flip: fair `flip` either sets the goal atom or does
/// nothing. Strong-cyclic solvable at k = 2, strong unsolvable at every k.
pub fn coin_flip() -> FondProblem {
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

/// Random problem with at most 8 atoms and 6 groups, rejection-sampled so
/// the reachable state space has at most `max_states` states. Keeping the
/// space at 7 states bounds the minimal controller by 8 nodes (one node per
/// non-goal state plus the goal node), so iterative deepening to k = 8 is a
/// complete solvability check.
pub fn random_tiny_fond(rng: &mut ChaCha8Rng, max_states: usize) -> FondProblem {
    loop {
        let num_atoms = rng.gen_range(2..=5);
        let mut prob = FondProblem::new();
        let atoms: Vec<_> = (0..num_atoms)
            .map(|i| prob.add_atom(format!("a{i}")).unwrap())
            .collect();
        let init: Vec<_> = atoms
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.35))
            .collect();
        prob.set_init(init).unwrap();
        let mut goal: Vec<_> = atoms
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.3))
            .collect();
        if goal.is_empty() {
            goal.push(atoms[rng.gen_range(0..num_atoms)]);
        }
        prob.set_goal(goal).unwrap();
        let num_groups = rng.gen_range(1..=6);
        for g in 0..num_groups {
            let pre: Vec<_> = atoms
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.25))
                .collect();
            let num_outcomes = rng.gen_range(1..=3);
            let mut specs = Vec::new();
            for _ in 0..num_outcomes {
                let mut add = Vec::new();
                let mut del = Vec::new();
                for &a in &atoms {
                    match rng.gen_range(0..100) {
                        0..=24 => add.push(a),
                        25..=44 => del.push(a),
                        _ => {}
                    }
                }
                specs.push(OutcomeSpec {
                    pre: pre.clone(),
                    add,
                    del,
                });
            }
            prob.add_group(format!("g{g}"), Fairness::Fair, specs)
                .expect("add and delete lists are disjoint by construction");
        }
        match reachable_states(&prob, max_states) {
            Ok(space) if space.states.len() <= max_states => return prob,
            _ => continue,
        }
    }
}

/// Random product graph with 2..=12 vertices, mixed fairness tags and a
/// random goal set.
pub fn random_product(rng: &mut ChaCha8Rng) -> ProductGraph {
    let n = rng.gen_range(2..=12);
    let goal_vertices: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
    let fair: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let density = rng.gen_range(0.05..0.4);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    ProductGraph::synthetic(n, goal_vertices, edges, fair)
}

/// Exhaustive-enumeration oracle for L_m: tries every memoryless policy
/// (one applicable group per non-goal state), keeps those that solve the
/// problem strong-cyclically, and returns the minimum over them of the
/// shortest goal-reaching execution. `None` when no policy solves.
pub fn lm_by_policy_enumeration(prob: &FondProblem) -> Option<usize> {
    let space = reachable_states(prob, 64).expect("state space within budget");
    let n = space.states.len();
    assert!(n <= 6, "oracle limited to 6 reachable states, got {n}");
    if space.goal[0] {
        return Some(0);
    }
    // options[s]: candidate group choices at s; goal states act as sinks
    let options: Vec<usize> = (0..n)
        .map(|s| if space.goal[s] { 1 } else { space.moves[s].len() })
        .collect();
    // states with no applicable group keep choice 0; they fail a policy
    // only when it actually visits them
    let mut best: Option<usize> = None;
    let mut choice = vec![0usize; n];
    loop {
        if let Some(len) = policy_execution_length(&space, &choice) {
            best = Some(best.map_or(len, |b: usize| b.min(len)));
        }
        // odometer over the choice vector
        let mut s = 0;
        loop {
            if s == n {
                return best;
            }
            if options[s] <= 1 {
                s += 1;
                continue;
            }
            choice[s] += 1;
            if choice[s] < options[s] {
                break;
            }
            choice[s] = 0;
            s += 1;
        }
    }
}

/// Shortest execution of the fixed policy when it solves, `None` otherwise.
/// Solving means: every state reachable under the policy either is a goal
/// or has a chosen action, and the goal is reachable from all of them.
fn policy_execution_length(
    space: &fondsat::analysis::StateSpace,
    choice: &[usize],
) -> Option<usize> {
    let n = space.states.len();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    let mut reached = vec![false; n];
    reached[0] = true;
    let mut goal_dist = None;
    while let Some(s) = queue.pop_front() {
        if space.goal[s] {
            goal_dist.get_or_insert(dist[s]);
            continue;
        }
        if space.moves[s].is_empty() {
            return None;
        }
        let (_, edges) = &space.moves[s][choice[s]];
        for &(_, t) in edges {
            if !reached[t] {
                reached[t] = true;
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        }
    }
    // strong-cyclic check: goal reachable from every policy-reachable state
    for s in 0..n {
        if !reached[s] || space.goal[s] {
            continue;
        }
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        let mut hits_goal = false;
        while let Some(u) = q.pop_front() {
            if space.goal[u] {
                hits_goal = true;
                break;
            }
            let (_, edges) = &space.moves[u][choice[u]];
            for &(_, t) in edges {
                if !seen[t] {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        if !hits_goal {
            return None;
        }
    }
    goal_dist
}

/// Random CNF over at most 12 variables for backend integrity checks.
pub fn random_cnf(rng: &mut ChaCha8Rng) -> Cnf {
    use fondsat::encoder::Provenance;
    let vars = rng.gen_range(1..=12);
    let clauses = rng.gen_range(1..=4 * vars);
    let mut cnf = Cnf::new(vars);
    for _ in 0..clauses {
        let width = rng.gen_range(1..=3.min(vars));
        let mut lits = Vec::new();
        for _ in 0..width {
            let v = rng.gen_range(1..=vars) as i32;
            lits.push(if rng.gen_bool(0.5) { v } else { -v });
        }
        cnf.add_clause(lits, Provenance::Adhoc);
    }
    cnf
}

/// Truth-table satisfiability for CNFs with at most 20 variables.
pub fn truth_table_sat(cnf: &Cnf) -> bool {
    let v = cnf.num_vars;
    assert!(v <= 20);
    'outer: for mask in 0u32..(1 << v) {
        for clause in cnf.clauses() {
            let sat = clause.iter().any(|&lit| {
                let bit = mask >> (lit.unsigned_abs() - 1) & 1 == 1;
                if lit > 0 {
                    bit
                } else {
                    !bit
                }
            });
            if !sat {
                continue 'outer;
            }
        }
        return true;
    }
    false
}
