//! Independent semantic validation of a controller on the explicit product
//! graph. Dual-mode validity is decided through the trap characterization:
//! a policy fails exactly when a reachable goal-free vertex set exists that
//! is closed under all outcomes of fair actions and under at least one
//! outcome of each unfair action. A brute-force subset search doubles as an
//! oracle for the fixpoint computation on small products.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::encoder::Mode;
use crate::model::FondProblem;
use crate::policy::{build_product, Controller, ProductError, ProductGraph, Violation};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Failure {
    OpenPolicy { vertex: usize },
    PrecondViolation { vertex: usize },
    GoalMislabel { vertex: usize },
    /// Reachable vertex with no path to any goal vertex.
    UnreachableGoal { vertex: usize },
    /// Cycle in a graph that must be acyclic (strong mode).
    BadCycle { cycle: Vec<usize> },
    /// Goal-free set the unfair outcomes can sustain (dual mode).
    TrapSet { vertices: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub valid: bool,
    pub mode: Mode,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Product(#[from] ProductError),
}

pub fn verify(
    problem: &FondProblem,
    c: &Controller,
    mode: Mode,
    budget: usize,
) -> Result<Verdict, VerifyError> {
    let g = build_product(problem, c, budget)?;
    Ok(verify_product(&g, mode))
}

/// Verification on an already-built product, shared by tests that tamper
/// with the graph.
pub fn verify_product(g: &ProductGraph, mode: Mode) -> Verdict {
    let mut failures: Vec<Failure> = g
        .violations
        .iter()
        .map(|v| match *v {
            Violation::OpenPolicy { vertex } => Failure::OpenPolicy { vertex },
            Violation::PrecondViolation { vertex } => Failure::PrecondViolation { vertex },
            Violation::GoalMislabel { vertex } => Failure::GoalMislabel { vertex },
        })
        .collect();

    match mode {
        Mode::StrongCyclic => {
            let reaches = reaches_goal(g);
            for v in 0..g.num_vertices() {
                if !reaches[v] {
                    failures.push(Failure::UnreachableGoal { vertex: v });
                }
            }
        }
        Mode::Strong => {
            if let Some(cycle) = find_cycle(g) {
                failures.push(Failure::BadCycle { cycle });
            }
            // maximal paths must end in goal vertices: any sink that is not
            // a goal vertex is already an openPolicy/precond record, but a
            // goal-free sink without a recorded violation is still a miss
            for v in 0..g.num_vertices() {
                if g.successors(v).is_empty() && !g.is_goal_vertex(v) {
                    let seen = failures.iter().any(|f| {
                        matches!(f,
                            Failure::OpenPolicy { vertex }
                            | Failure::PrecondViolation { vertex } if *vertex == v)
                    });
                    if !seen {
                        failures.push(Failure::UnreachableGoal { vertex: v });
                    }
                }
            }
        }
        Mode::Dual => {
            let trap = trap_fixpoint(g);
            if !trap.is_empty() {
                failures.push(Failure::TrapSet { vertices: trap });
            }
        }
    }

    Verdict {
        valid: failures.is_empty(),
        mode,
        failures,
    }
}

/// Vertices with a directed path to some goal vertex (backward BFS).
fn reaches_goal(g: &ProductGraph) -> Vec<bool> {
    let n = g.num_vertices();
    let mut preds = vec![Vec::new(); n];
    for &(a, _, b) in &g.edges {
        if !preds[b].contains(&a) {
            preds[b].push(a);
        }
    }
    let mut ok = vec![false; n];
    let mut queue: VecDeque<usize> = g.goal_vertices.iter().copied().collect();
    for &v in &g.goal_vertices {
        ok[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &p in &preds[v] {
            if !ok[p] {
                ok[p] = true;
                queue.push_back(p);
            }
        }
    }
    ok
}

/// First cycle found by iterative DFS, as a vertex list with the repeated
/// vertex at both ends.
fn find_cycle(g: &ProductGraph) -> Option<Vec<usize>> {
    let n = g.num_vertices();
    // 0 = white, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < g.successors(v).len() {
                let w = g.successors(v)[*next];
                *next += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![w];
                        let mut cur = v;
                        while cur != w {
                            cycle.push(cur);
                            cur = parent[cur];
                        }
                        cycle.push(w);
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Greatest set `I` of non-goal vertices such that every fair vertex in `I`
/// has all successors in `I` and every unfair vertex in `I` has at least
/// one. Computed by deleting violating vertices until fixpoint.
pub fn trap_fixpoint(g: &ProductGraph) -> Vec<usize> {
    let n = g.num_vertices();
    let mut inside = vec![true; n];
    for &v in &g.goal_vertices {
        inside[v] = false;
    }
    loop {
        let mut changed = false;
        for v in 0..n {
            if !inside[v] {
                continue;
            }
            let succs = g.successors(v);
            let ok = if g.fair[v] {
                succs.iter().all(|&w| inside[w])
            } else {
                !succs.is_empty() && succs.iter().any(|&w| inside[w])
            };
            if !ok {
                inside[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&v| inside[v]).collect()
}

#[derive(Debug, Error)]
#[error("trap_bruteforce limited to 20 vertices, got {0}")]
pub struct SizeGuard(pub usize);

/// Oracle: largest subset of non-goal vertices satisfying the trap
/// conditions, found by exhaustive enumeration.
pub fn trap_bruteforce(g: &ProductGraph) -> Result<Option<Vec<usize>>, SizeGuard> {
    let n = g.num_vertices();
    if n > 20 {
        return Err(SizeGuard(n));
    }
    let candidates: Vec<usize> = (0..n).filter(|&v| !g.is_goal_vertex(v)).collect();
    let m = candidates.len();
    let mut best: Option<Vec<usize>> = None;
    for mask in 1u32..(1 << m) {
        let subset: Vec<usize> = (0..m)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| candidates[i])
            .collect();
        let inside = |w: usize| subset.contains(&w);
        let ok = subset.iter().all(|&v| {
            let succs = g.successors(v);
            if g.fair[v] {
                succs.iter().all(|&w| inside(w))
            } else {
                !succs.is_empty() && succs.iter().any(|&w| inside(w))
            }
        });
        if ok && best.as_ref().map_or(true, |b| b.len() < subset.len()) {
            best = Some(subset);
        }
    }
    Ok(best)
}
