//! Explicit-state oracle planner and robustness metrics: the solvable set
//! S*, the shortest policy execution length L_m, the shortest weak plan of
//! the deterministic relaxation, and misleading-plan detection (weak plans
//! strictly shorter than L_m).

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{FondProblem, GroupId, OutcomeId, State};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;
pub const DEFAULT_MISLEADING_CAP: usize = 1_000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("reachable state space exceeds the budget of {0} states")]
    Budget(usize),
    #[error("initial state is not in the solvable set")]
    NotSolvable,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolvabilityReport {
    pub solvable: bool,
    /// States admitting a strong-cyclic solution, as atom-id sets.
    pub solvable_set: Vec<State>,
    pub lm: Option<usize>,
    pub shortest_weak_plan: Option<usize>,
    pub misleading_exists: bool,
    pub misleading_count: Option<usize>,
}

/// Reachable state space with applicable groups and outcome successors.
pub struct StateSpace {
    pub states: Vec<State>,
    pub index: HashMap<State, usize>,
    /// Per state: applicable groups with (outcome, successor state) edges.
    pub moves: Vec<Vec<(GroupId, Vec<(OutcomeId, usize)>)>>,
    pub goal: Vec<bool>,
}

pub fn reachable_states(
    problem: &FondProblem,
    budget: usize,
) -> Result<StateSpace, AnalysisError> {
    let mut states = vec![problem.init.clone()];
    let mut index = HashMap::new();
    index.insert(problem.init.clone(), 0usize);
    let mut moves = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        let mut row = Vec::new();
        for (g, group) in problem.groups.iter().enumerate() {
            if !problem.applicable(group, &s) {
                continue;
            }
            let mut edges = Vec::new();
            for &b in &group.outcomes {
                let t = problem.apply_outcome(&problem.outcomes[b], &s);
                let ti = *index.entry(t.clone()).or_insert_with(|| {
                    states.push(t);
                    states.len() - 1
                });
                if states.len() > budget {
                    return Err(AnalysisError::Budget(budget));
                }
                edges.push((b, ti));
            }
            row.push((g, edges));
        }
        moves.push(row);
        i += 1;
    }
    let goal = states.iter().map(|s| problem.is_goal(s)).collect();
    Ok(StateSpace {
        states,
        index,
        moves,
        goal,
    })
}

pub struct ExplicitSolution {
    pub space: StateSpace,
    /// `in_sstar[i]`: state `i` admits a strong-cyclic solution.
    pub in_sstar: Vec<bool>,
    pub solvable: bool,
}

impl ExplicitSolution {
    /// A group is safe at a state when all its outcomes stay inside S*.
    pub fn safe_groups(&self, s: usize) -> impl Iterator<Item = &(GroupId, Vec<(OutcomeId, usize)>)> {
        self.space.moves[s]
            .iter()
            .filter(|(_, edges)| edges.iter().all(|&(_, t)| self.in_sstar[t]))
    }

    pub fn solvable_states(&self) -> Vec<State> {
        self.space
            .states
            .iter()
            .zip(&self.in_sstar)
            .filter(|(_, &ok)| ok)
            .map(|(s, _)| s.clone())
            .collect()
    }
}

/// Greatest fixpoint: start from all reachable states, repeatedly drop
/// states that cannot reach the goal using only actions whose outcomes all
/// stay inside the candidate set.
pub fn explicit_solve(
    problem: &FondProblem,
    budget: usize,
) -> Result<ExplicitSolution, AnalysisError> {
    let space = reachable_states(problem, budget)?;
    let n = space.states.len();
    let mut inside = vec![true; n];
    loop {
        // backward reachability of the goal through safe-action edges
        let mut reach: Vec<bool> = space.goal.clone();
        for r in reach.iter_mut().zip(&inside) {
            *r.0 = *r.0 && *r.1;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if reach[s] || !inside[s] {
                    continue;
                }
                let ok = space.moves[s].iter().any(|(_, edges)| {
                    edges.iter().all(|&(_, t)| inside[t])
                        && edges.iter().any(|&(_, t)| reach[t])
                });
                if ok {
                    reach[s] = true;
                    changed = true;
                }
            }
        }
        if reach == inside {
            break;
        }
        inside = reach;
    }
    let solvable = inside[0];
    Ok(ExplicitSolution {
        space,
        in_sstar: inside,
        solvable,
    })
}

/// Shortest possible execution length over all solving policies, as the
/// BFS distance from s0 to a goal state moving along single outcome edges
/// of safe actions. A shortest such path repeats no state, so it extends to
/// a full strong-cyclic policy using S*'s safe actions elsewhere.
pub fn compute_lm(sol: &ExplicitSolution) -> Result<usize, AnalysisError> {
    if !sol.solvable {
        return Err(AnalysisError::NotSolvable);
    }
    let n = sol.space.states.len();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if sol.space.goal[s] {
            return Ok(dist[s]);
        }
        for (_, edges) in sol.safe_groups(s) {
            for &(_, t) in edges {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
    }
    // s0 ∈ S* guarantees a safe path exists
    unreachable!("solvable state with no safe path to goal")
}

/// BFS plan length in the deterministic relaxation, `None` when the goal is
/// unreachable even optimistically.
pub fn shortest_weak_plan(
    problem: &FondProblem,
    budget: usize,
) -> Result<Option<usize>, AnalysisError> {
    let relaxed = problem.relaxation();
    let space = reachable_states(&relaxed, budget)?;
    let n = space.states.len();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if space.goal[s] {
            return Ok(Some(dist[s]));
        }
        for (_, edges) in &space.moves[s] {
            for &(_, t) in edges {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
    }
    Ok(None)
}

/// Misleading plans: weak plans strictly shorter than L_m. The count is
/// over distinct acyclic weak plans, truncated at `cap`.
pub fn misleading_report(
    problem: &FondProblem,
    sol: &ExplicitSolution,
    cap: usize,
    budget: usize,
) -> Result<(bool, usize), AnalysisError> {
    let lm = compute_lm(sol)?;
    let swp = shortest_weak_plan(problem, budget)?;
    let exists = matches!(swp, Some(w) if w < lm);
    if !exists || lm == 0 {
        return Ok((exists, 0));
    }
    let relaxed = problem.relaxation();
    let space = reachable_states(&relaxed, budget)?;
    let mut count = 0usize;
    // DFS over action sequences, acyclic in the visited states
    let mut on_path = vec![false; space.states.len()];
    fn dfs(
        space: &StateSpace,
        s: usize,
        depth_left: usize,
        on_path: &mut Vec<bool>,
        count: &mut usize,
        cap: usize,
    ) {
        if *count >= cap {
            return;
        }
        if space.goal[s] {
            *count += 1;
            return;
        }
        if depth_left == 0 {
            return;
        }
        on_path[s] = true;
        for (_, edges) in &space.moves[s] {
            for &(_, t) in edges {
                if !on_path[t] {
                    dfs(space, t, depth_left - 1, on_path, count, cap);
                }
            }
        }
        on_path[s] = false;
    }
    dfs(&space, 0, lm - 1, &mut on_path, &mut count, cap);
    Ok((exists, count))
}

/// Full report for the `analyze` subcommand.
pub fn analyze(
    problem: &FondProblem,
    budget: usize,
    cap: usize,
) -> Result<SolvabilityReport, AnalysisError> {
    let sol = explicit_solve(problem, budget)?;
    let swp = shortest_weak_plan(problem, budget)?;
    let (lm, misleading_exists, misleading_count) = if sol.solvable {
        let lm = compute_lm(&sol)?;
        let (exists, count) = misleading_report(problem, &sol, cap, budget)?;
        (Some(lm), exists, Some(count))
    } else {
        (None, false, None)
    };
    Ok(SolvabilityReport {
        solvable: sol.solvable,
        solvable_set: sol.solvable_states(),
        lm,
        shortest_weak_plan: swp,
        misleading_exists,
        misleading_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fairness, OutcomeSpec};

    fn coin_flip() -> FondProblem {
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

    #[test]
    fn coin_flip_report() {
        let prob = coin_flip();
        let r = analyze(&prob, DEFAULT_STATE_BUDGET, DEFAULT_MISLEADING_CAP).unwrap();
        assert!(r.solvable);
        assert_eq!(r.solvable_set.len(), 2);
        assert_eq!(r.lm, Some(1));
        assert_eq!(r.shortest_weak_plan, Some(1));
        assert!(!r.misleading_exists);
        assert_eq!(r.misleading_count, Some(0));
    }

    #[test]
    fn unavoidable_dead_end_unsolvable() {
        // only route is oneof(goal, dead end with no escape)
        let mut prob = FondProblem::new();
        let g = prob.add_atom("g").unwrap();
        let dead = prob.add_atom("dead").unwrap();
        prob.set_goal([g]).unwrap();
        prob.add_group(
            "risky",
            Fairness::Fair,
            vec![
                OutcomeSpec {
                    pre: vec![],
                    add: vec![g],
                    del: vec![],
                },
                OutcomeSpec {
                    pre: vec![],
                    add: vec![dead],
                    del: vec![],
                },
            ],
        )
        .unwrap();
        // dead end absorbs: no action applicable once `dead` holds
        // (risky stays applicable, so gate it on ¬dead via a token atom)
        let mut prob2 = FondProblem::new();
        let ok = prob2.add_atom("ok").unwrap();
        let g = prob2.add_atom("g").unwrap();
        prob2.set_init([ok]).unwrap();
        prob2.set_goal([g]).unwrap();
        prob2
            .add_group(
                "risky",
                Fairness::Fair,
                vec![
                    OutcomeSpec {
                        pre: vec![ok],
                        add: vec![g],
                        del: vec![],
                    },
                    OutcomeSpec {
                        pre: vec![ok],
                        add: vec![],
                        del: vec![ok],
                    },
                ],
            )
            .unwrap();
        let sol = explicit_solve(&prob2, DEFAULT_STATE_BUDGET).unwrap();
        assert!(!sol.solvable);
        drop(prob);
    }

    #[test]
    fn deterministic_chain() {
        let mut prob = FondProblem::new();
        let ats: Vec<_> = (0..4).map(|i| prob.add_atom(format!("x{}", i)).unwrap()).collect();
        prob.set_init([ats[0]]).unwrap();
        prob.set_goal([ats[3]]).unwrap();
        for i in 0..3 {
            prob.add_group(
                format!("s{}", i),
                Fairness::Fair,
                vec![OutcomeSpec {
                    pre: vec![ats[i]],
                    add: vec![ats[i + 1]],
                    del: vec![ats[i]],
                }],
            )
            .unwrap();
        }
        let r = analyze(&prob, DEFAULT_STATE_BUDGET, DEFAULT_MISLEADING_CAP).unwrap();
        assert!(r.solvable);
        assert_eq!(r.lm, Some(3));
        assert_eq!(r.shortest_weak_plan, Some(3));
        assert!(!r.misleading_exists);
    }

    /// Risky shortcut vs. safe detour: the weak plan takes the shortcut,
    /// every solving policy takes the detour.
    fn shortcut_problem() -> FondProblem {
        let mut prob = FondProblem::new();
        let at_start = prob.add_atom("at-start").unwrap();
        let a = prob.add_atom("a").unwrap();
        let b = prob.add_atom("b").unwrap();
        let goal = prob.add_atom("goal").unwrap();
        prob.set_init([at_start]).unwrap();
        prob.set_goal([goal]).unwrap();
        prob.add_group(
            "swim",
            Fairness::Fair,
            vec![
                OutcomeSpec {
                    pre: vec![at_start],
                    add: vec![goal],
                    del: vec![at_start],
                },
                OutcomeSpec {
                    pre: vec![at_start],
                    add: vec![],
                    del: vec![at_start],
                },
            ],
        )
        .unwrap();
        for (name, pre, add) in [("w1", at_start, a), ("w2", a, b), ("w3", b, goal)] {
            prob.add_group(
                name,
                Fairness::Fair,
                vec![OutcomeSpec {
                    pre: vec![pre],
                    add: vec![add],
                    del: vec![pre],
                }],
            )
            .unwrap();
        }
        prob
    }

    #[test]
    fn shortcut_is_misleading() {
        let prob = shortcut_problem();
        let r = analyze(&prob, DEFAULT_STATE_BUDGET, DEFAULT_MISLEADING_CAP).unwrap();
        assert!(r.solvable);
        assert_eq!(r.lm, Some(3));
        assert_eq!(r.shortest_weak_plan, Some(1));
        assert!(r.misleading_exists);
        assert!(r.misleading_count.unwrap() >= 1);
    }

    #[test]
    fn weak_plan_none_when_hopeless() {
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
        assert_eq!(shortest_weak_plan(&prob, DEFAULT_STATE_BUDGET).unwrap(), None);
    }

    #[test]
    fn budget_error() {
        // n independent bits: 2^20 states blows a budget of 1000
        let mut prob = FondProblem::new();
        let bits: Vec<_> = (0..20).map(|i| prob.add_atom(format!("b{}", i)).unwrap()).collect();
        prob.set_goal([bits[19]]).unwrap();
        for (i, &bit) in bits.iter().enumerate() {
            prob.add_group(
                format!("set{}", i),
                Fairness::Fair,
                vec![OutcomeSpec {
                    pre: vec![],
                    add: vec![bit],
                    del: vec![],
                }],
            )
            .unwrap();
            prob.add_group(
                format!("clear{}", i),
                Fairness::Fair,
                vec![OutcomeSpec {
                    pre: vec![],
                    add: vec![],
                    del: vec![bit],
                }],
            )
            .unwrap();
        }
        assert!(matches!(
            reachable_states(&prob, 1000),
            Err(AnalysisError::Budget(1000))
        ));
    }

    #[test]
    fn weak_plan_never_exceeds_lm() {
        let prob = shortcut_problem();
        let sol = explicit_solve(&prob, DEFAULT_STATE_BUDGET).unwrap();
        let lm = compute_lm(&sol).unwrap();
        let swp = shortest_weak_plan(&prob, DEFAULT_STATE_BUDGET).unwrap().unwrap();
        assert!(swp <= lm);
    }
}
