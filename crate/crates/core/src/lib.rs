//! Finite-domain constraint solving with sub-problem regularization: a
//! group of constraints is solved exhaustively, its solutions compiled into a
//! layered DFA, and the group replaced by a single regular constraint.

pub mod automaton;
pub mod bench;
pub mod csp;
pub mod par;
pub mod propagation;
pub mod regularize;
pub mod search;

pub use automaton::Dfa;
pub use csp::{Constraint, ConstraintKind, Csp, Domain};
pub use par::Execution;
pub use regularize::{apply_mode, Mode, RegularizeConfig, Selection};
pub use search::{enumerate_all, solve_first, SearchStats, Solution};
