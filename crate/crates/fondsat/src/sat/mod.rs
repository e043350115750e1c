//! Uniform solving contract over the built-in CDCL solver and external
//! DIMACS solvers. Every `sat` answer, internal or external, is re-checked
//! against the formula before it is returned.

pub mod external;
pub mod internal;

use std::time::Duration;

use crate::encoder::Cnf;

#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    pub max_conflicts: Option<u64>,
    pub max_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    /// Budget exhausted (conflict or time limit) before an answer.
    Unknown,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub wall: Duration,
}

/// Model indexed by variable: `model[v - 1]` is the value of DIMACS var `v`.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub model: Option<Vec<bool>>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn lit_true(&self, lit: i32) -> bool {
        let model = self.model.as_ref().expect("no model");
        let v = model[(lit.unsigned_abs() as usize) - 1];
        if lit > 0 {
            v
        } else {
            !v
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SatError {
    #[error("model does not assign every variable ({got} of {want})")]
    IncompleteModel { got: usize, want: usize },
    #[error("failed to run external solver `{cmd}`: {source}")]
    Process {
        cmd: String,
        source: std::io::Error,
    },
    #[error("could not parse external solver output: {0}")]
    OutputParse(String),
    #[error("external solver claimed sat but its model fails a clause")]
    ModelVerification,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// True iff every clause has a satisfied literal under a total model.
pub fn evaluate(cnf: &Cnf, model: &[bool]) -> Result<bool, SatError> {
    if model.len() < cnf.num_vars {
        return Err(SatError::IncompleteModel {
            got: model.len(),
            want: cnf.num_vars,
        });
    }
    Ok(cnf.clauses().iter().all(|clause| {
        clause.iter().any(|&lit| {
            let v = model[(lit.unsigned_abs() as usize) - 1];
            if lit > 0 {
                v
            } else {
                !v
            }
        })
    }))
}

/// DIMACS text handed to external solvers (no comment lines).
pub(crate) fn emit_for_solver(cnf: &Cnf) -> String {
    crate::encoder::emit_dimacs(cnf, None)
}

pub use external::solve_external;
pub use internal::solve_internal;
