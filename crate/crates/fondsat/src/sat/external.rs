//! Runs an external DIMACS solver as a subprocess. The formula is written
//! to a temp file, the solver is invoked as `cmd file`, and its standard
//! output is parsed for the `s`/`v` answer lines. Exit codes 10 and 20 are
//! accepted in lieu of an `s` line.

use std::io::Write as _;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::encoder::Cnf;

use super::{emit_for_solver, Budget, SatError, SolveResult, SolveStats, Status};

pub fn solve_external(cnf: &Cnf, cmd: &str, budget: Budget) -> Result<SolveResult, SatError> {
    let mut file = tempfile::Builder::new()
        .prefix("fondsat-")
        .suffix(".cnf")
        .tempfile()?;
    file.write_all(emit_for_solver(cnf).as_bytes())?;
    file.flush()?;

    let start = Instant::now();
    let mut child = Command::new(cmd)
        .arg(file.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SatError::Process {
            cmd: cmd.to_string(),
            source: e,
        })?;

    let deadline = budget.max_seconds.map(Duration::from_secs_f64);
    let output = loop {
        match child.try_wait()? {
            Some(_) => {
                break child.wait_with_output().map_err(|e| SatError::Process {
                    cmd: cmd.to_string(),
                    source: e,
                })?;
            }
            None => {
                if let Some(limit) = deadline {
                    if start.elapsed() > limit {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Ok(SolveResult {
                            status: Status::Unknown,
                            model: None,
                            stats: SolveStats {
                                wall: start.elapsed(),
                                ..Default::default()
                            },
                        });
                    }
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
    };

    let stdout = String::from_utf8_lossy(&output.stdout);
    let mut status = None;
    let mut lits: Vec<i32> = Vec::new();
    for line in stdout.lines() {
        if let Some(rest) = line.strip_prefix("s ") {
            status = match rest.trim() {
                "SATISFIABLE" => Some(Status::Sat),
                "UNSATISFIABLE" => Some(Status::Unsat),
                "UNKNOWN" => Some(Status::Unknown),
                other => {
                    return Err(SatError::OutputParse(format!(
                        "unrecognized status line `s {}`",
                        other
                    )))
                }
            };
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| SatError::OutputParse(format!("bad v-line token `{}`", tok)))?;
                if lit != 0 {
                    lits.push(lit);
                }
            }
        }
    }
    let status = match status {
        Some(s) => s,
        // fall back to the conventional exit codes
        None => match output.status.code() {
            Some(10) => Status::Sat,
            Some(20) => Status::Unsat,
            _ => {
                return Err(SatError::OutputParse(
                    "no `s` status line and no 10/20 exit code".to_string(),
                ))
            }
        },
    };

    let stats = SolveStats {
        wall: start.elapsed(),
        ..Default::default()
    };
    if status != Status::Sat {
        return Ok(SolveResult {
            status,
            model: None,
            stats,
        });
    }

    // unmentioned variables default to false
    let mut model = vec![false; cnf.num_vars];
    for lit in lits {
        let v = lit.unsigned_abs() as usize;
        if v == 0 || v > cnf.num_vars {
            return Err(SatError::OutputParse(format!(
                "v-line literal {} out of range",
                lit
            )));
        }
        model[v - 1] = lit > 0;
    }
    if !super::evaluate(cnf, &model)? {
        return Err(SatError::ModelVerification);
    }
    Ok(SolveResult {
        status,
        model: Some(model),
        stats,
    })
}
