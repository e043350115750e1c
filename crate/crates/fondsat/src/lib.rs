//! SAT-based planner for fully-observable non-deterministic (FOND)
//! problems. Policies are compact finite-state controllers found by
//! encoding the existence of a k-node controller as a CNF formula and
//! growing k until the formula is satisfiable.

pub mod analysis;
pub mod benchgen;
pub mod driver;
pub mod encoder;
pub mod model;
pub mod pddl;
pub mod policy;
pub mod sat;
pub mod verifier;
