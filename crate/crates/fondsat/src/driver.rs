//! Planner loop: iterative deepening on the controller size k, with
//! decode-and-verify after every satisfiable encoding. Also hosts the input
//! loading shared by the CLI subcommands.
//!
//! The machine-readable report deliberately omits wall-clock numbers so an
//! identical request with the internal solver serializes byte-identically;
//! timings live on the non-serialized fields and the human log.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::encoder::{encode, EncodeError, EncodeOptions, Mode};
use crate::model::FondProblem;
use crate::pddl::ground::{ground, GroundError};
use crate::pddl::grounded::{load_grounded, GroundedError};
use crate::pddl::parser::{parse_domain, parse_problem, PddlError};
use crate::policy::{decode, Controller, DEFAULT_PRODUCT_BUDGET};
use crate::sat::{solve_external, solve_internal, Budget, SatError, SolveResult, Status};
use crate::verifier::{verify, Verdict};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("expected a domain/problem PDDL pair or one grounded file, got {0} paths")]
    BadArity(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Pddl { path: String, source: PddlError },
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error("{path}: {source}")]
    Grounded {
        path: String,
        source: GroundedError,
    },
}

/// Loads a problem from a `[domain, problem]` PDDL pair or a single
/// grounded-format file, then prunes groups that can never apply. The prune
/// is deterministic, so `plan` and the later `verify`/`simulate` calls see
/// the same group ids.
pub fn load_problem(paths: &[impl AsRef<Path>]) -> Result<FondProblem, InputError> {
    let read = |p: &Path| -> Result<String, InputError> {
        std::fs::read_to_string(p).map_err(|source| InputError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let problem = match paths {
        [single] => {
            let path = single.as_ref();
            let text = read(path)?;
            load_grounded(&text).map_err(|source| InputError::Grounded {
                path: path.display().to_string(),
                source,
            })?
        }
        [dom, prob] => {
            let dom = dom.as_ref();
            let prob = prob.as_ref();
            let d = parse_domain(&read(dom)?).map_err(|source| InputError::Pddl {
                path: dom.display().to_string(),
                source,
            })?;
            let p = parse_problem(&read(prob)?).map_err(|source| InputError::Pddl {
                path: prob.display().to_string(),
                source,
            })?;
            ground(&d, &p)?
        }
        other => return Err(InputError::BadArity(other.len())),
    };
    Ok(problem.prune_statically_inapplicable())
}

#[derive(Debug, Clone)]
pub enum SolverChoice {
    Internal,
    Command(String),
}

impl SolverChoice {
    /// `internal` or `cmd:<path>`.
    pub fn parse(text: &str) -> Result<Self, String> {
        if text == "internal" {
            Ok(SolverChoice::Internal)
        } else if let Some(cmd) = text.strip_prefix("cmd:") {
            if cmd.is_empty() {
                Err("empty solver command".to_string())
            } else {
                Ok(SolverChoice::Command(cmd.to_string()))
            }
        } else {
            Err(format!(
                "solver must be `internal` or `cmd:<path>`, got `{text}`"
            ))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub mode: Mode,
    pub start_k: usize,
    pub max_k: usize,
    /// Total wall-clock budget across all k.
    pub max_seconds: Option<f64>,
    pub solver: SolverChoice,
    pub options: EncodeOptions,
    pub verify_after: bool,
    /// Portfolio: solve k and k+1 concurrently, smallest sat k wins.
    pub parallel_k: bool,
}

impl PlanRequest {
    pub fn new(mode: Mode) -> Self {
        PlanRequest {
            mode,
            start_k: 2,
            max_k: 20,
            max_seconds: None,
            solver: SolverChoice::Internal,
            options: EncodeOptions::with_mode(mode),
            verify_after: true,
            parallel_k: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PlanStatus {
    Solved,
    ExhaustedK,
    Timeout,
    /// Decode-integrity or semantic verification failure; report retained.
    VerificationFailed,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KAttempt {
    pub k: usize,
    pub vars: usize,
    pub clauses: usize,
    pub result: &'static str,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanReport {
    pub status: PlanStatus,
    pub mode: Mode,
    pub k_solved: Option<usize>,
    pub attempts: Vec<KAttempt>,
    pub warnings: Vec<String>,
    pub verdict: Option<Verdict>,
    /// Filled in by the CLI when the controller is written to disk.
    pub controller_file: Option<String>,
    #[serde(skip)]
    pub controller: Option<Controller>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

fn run_solver(
    cnf: &crate::encoder::Cnf,
    solver: &SolverChoice,
    budget: Budget,
) -> Result<SolveResult, SatError> {
    match solver {
        SolverChoice::Internal => Ok(solve_internal(cnf, budget)),
        SolverChoice::Command(cmd) => solve_external(cnf, cmd, budget),
    }
}

fn remaining(start: Instant, total: Option<f64>) -> Option<f64> {
    total.map(|t| (t - start.elapsed().as_secs_f64()).max(0.0))
}

pub fn plan(problem: &FondProblem, req: &PlanRequest) -> Result<PlanReport, PlanError> {
    if req.start_k < 2 || req.start_k > req.max_k {
        return Err(PlanError::BadRequest(format!(
            "need 2 <= startK <= maxK, got startK={} maxK={}",
            req.start_k, req.max_k
        )));
    }
    let start = Instant::now();
    let mut report = PlanReport {
        status: PlanStatus::ExhaustedK,
        mode: req.mode,
        k_solved: None,
        attempts: Vec::new(),
        warnings: Vec::new(),
        verdict: None,
        controller_file: None,
        controller: None,
    };
    let mut opts = req.options.clone();
    opts.mode = req.mode;

    if problem.is_goal(&problem.init) {
        let c = Controller::trivial(problem);
        finish_sat(&mut report, problem, req, 2, c);
        return Ok(report);
    }

    let mut k = req.start_k;
    while k <= req.max_k {
        let ks: Vec<usize> = if req.parallel_k && k < req.max_k {
            vec![k, k + 1]
        } else {
            vec![k]
        };
        let budget = Budget {
            max_conflicts: None,
            max_seconds: remaining(start, req.max_seconds),
        };
        if matches!(budget.max_seconds, Some(s) if s <= 0.0) {
            report.status = PlanStatus::Timeout;
            return Ok(report);
        }

        // solve the batch; a singleton batch stays on this thread
        let mut batch: Vec<(usize, Result<(crate::encoder::Cnf, crate::encoder::VarMap), EncodeError>, Option<Result<SolveResult, SatError>>)> = Vec::new();
        if ks.len() == 1 {
            let enc = encode(problem, ks[0], &opts);
            let solved = enc
                .as_ref()
                .ok()
                .map(|(cnf, _)| run_solver(cnf, &req.solver, budget));
            batch.push((ks[0], enc, solved));
        } else {
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = ks
                    .iter()
                    .map(|&kk| {
                        let opts = &opts;
                        let solver = &req.solver;
                        scope.spawn(move || {
                            let enc = encode(problem, kk, opts);
                            let solved = enc
                                .as_ref()
                                .ok()
                                .map(|(cnf, _)| run_solver(cnf, solver, budget));
                            (kk, enc, solved)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
            batch.extend(results);
        }

        let mut sat_hit: Option<(usize, Vec<bool>, crate::encoder::VarMap)> = None;
        let mut timed_out = false;
        for (kk, enc, solved) in batch {
            let (cnf, vars) = enc?;
            if report.attempts.is_empty() {
                report.warnings.extend(vars.warnings.iter().cloned());
            }
            let result = solved.expect("solver ran for valid encoding")?;
            report.attempts.push(KAttempt {
                k: kk,
                vars: cnf.num_vars,
                clauses: cnf.clauses().len(),
                result: match result.status {
                    Status::Sat => "sat",
                    Status::Unsat => "unsat",
                    Status::Unknown => "unknown",
                },
                seconds: result.stats.wall.as_secs_f64(),
            });
            match result.status {
                Status::Sat => {
                    if sat_hit.as_ref().map_or(true, |(best, _, _)| kk < *best) {
                        sat_hit = Some((kk, result.model.unwrap(), vars));
                    }
                }
                Status::Unsat => {}
                Status::Unknown => timed_out = true,
            }
        }

        if let Some((kk, model, vars)) = sat_hit {
            match decode(&model, &vars, problem) {
                Ok(c) => finish_sat(&mut report, problem, req, kk, c),
                Err(e) => {
                    report.status = PlanStatus::VerificationFailed;
                    report
                        .warnings
                        .push(format!("decode integrity failure at k={kk}: {e}"));
                }
            }
            return Ok(report);
        }
        if timed_out {
            report.status = PlanStatus::Timeout;
            return Ok(report);
        }
        k += ks.len();
    }
    // maxK exhausted: by design this is not an unsolvability claim, since
    // maxK is far below the |S|+1 completeness bound
    report.status = PlanStatus::ExhaustedK;
    Ok(report)
}

fn finish_sat(
    report: &mut PlanReport,
    problem: &FondProblem,
    req: &PlanRequest,
    k: usize,
    c: Controller,
) {
    report.k_solved = Some(k);
    if req.verify_after {
        match verify(problem, &c, req.mode, DEFAULT_PRODUCT_BUDGET) {
            Ok(v) => {
                report.status = if v.valid {
                    PlanStatus::Solved
                } else {
                    PlanStatus::VerificationFailed
                };
                report.verdict = Some(v);
            }
            Err(e) => {
                report.status = PlanStatus::VerificationFailed;
                report.warnings.push(format!("verification aborted: {e}"));
            }
        }
    } else {
        report.status = PlanStatus::Solved;
    }
    report.controller = Some(c);
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
    fn coin_flip_solves_at_two() {
        let prob = coin_flip();
        let report = plan(&prob, &PlanRequest::new(Mode::StrongCyclic)).unwrap();
        assert_eq!(report.status, PlanStatus::Solved);
        assert_eq!(report.k_solved, Some(2));
        assert!(report.verdict.unwrap().valid);
        assert_eq!(report.controller.unwrap().k, 2);
    }

    #[test]
    fn coin_flip_strong_exhausts_k() {
        let mut req = PlanRequest::new(Mode::Strong);
        req.max_k = 6;
        let report = plan(&coin_flip(), &req).unwrap();
        assert_eq!(report.status, PlanStatus::ExhaustedK);
        assert!(report.attempts.iter().all(|a| a.result == "unsat"));
        assert_eq!(report.attempts.len(), 5);
    }

    #[test]
    fn goal_in_init_short_circuits() {
        let mut prob = FondProblem::new();
        let p = prob.add_atom("p").unwrap();
        prob.set_init([p]).unwrap();
        prob.set_goal([p]).unwrap();
        let report = plan(&prob, &PlanRequest::new(Mode::StrongCyclic)).unwrap();
        assert_eq!(report.status, PlanStatus::Solved);
        assert!(report.attempts.is_empty());
        let c = report.controller.unwrap();
        assert_eq!(c.initial, 1);
    }

    #[test]
    fn bad_start_k_rejected() {
        let mut req = PlanRequest::new(Mode::StrongCyclic);
        req.start_k = 1;
        assert!(matches!(
            plan(&coin_flip(), &req),
            Err(PlanError::BadRequest(_))
        ));
        req.start_k = 9;
        req.max_k = 4;
        assert!(matches!(
            plan(&coin_flip(), &req),
            Err(PlanError::BadRequest(_))
        ));
    }

    #[test]
    fn parallel_portfolio_matches_serial() {
        let prob = coin_flip();
        let mut req = PlanRequest::new(Mode::StrongCyclic);
        req.parallel_k = true;
        let report = plan(&prob, &req).unwrap();
        assert_eq!(report.status, PlanStatus::Solved);
        assert_eq!(report.k_solved, Some(2));
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let prob = coin_flip();
        let req = PlanRequest::new(Mode::StrongCyclic);
        let a = serde_json::to_string(&plan(&prob, &req).unwrap()).unwrap();
        let b = serde_json::to_string(&plan(&prob, &req).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
