//! Production systems executed classically, reversibly, stochastically and
//! as quantum permutation operators combined with Grover search.
//!
//! - [`rules`]: definitions, matching, conflict resolution, forward runs and
//!   the deterministic/reversible overlap checks.
//! - [`reversible`]: three-tape execution with a history tape and an
//!   undoing backward phase.
//! - [`probabilistic`]: stochastic control tables, computation trees and
//!   seeded sampling.
//! - [`operator`]: the control function as an explicit basis permutation.
//! - [`grover`]: dense statevector simulation of the extended oracle and
//!   amplitude amplification.
//! - [`perf`]: classical vs quantum iteration accounting.

pub mod catalog;
mod csvutil;
pub mod error;
pub mod grover;
pub mod operator;
pub mod perf;
pub mod probabilistic;
pub mod reversible;
pub mod rules;
pub mod state;
pub mod sysfile;

pub use error::{Error, Result};
pub use rules::{
    apply_rule, check_deterministic, check_reversible, match_rules, resolve_conflict, run_forward, Alphabet,
    ConflictStrategy, Decision, Outcome, Production, ProductionSystemDef, RuleId, Trace, TraceStep,
};
