//! Domain filtering for every constraint kind.
//!
//! Regular and table constraints are filtered to generalized arc
//! consistency. The remaining kinds use their usual cheap rules.

mod basic;
mod compiled;
mod domain_view;
mod regular;
mod table;

pub use basic::{
    propagate_adjacency, propagate_binary_generic, propagate_channeling, propagate_channeling_from,
    propagate_fixed, propagate_less_than, propagate_not_equal,
};
pub use compiled::{CompiledAdjacency, CompiledLess, CompiledPair, CompiledRegular, CompiledTable};
pub use domain_view::DomainView;
pub use regular::{propagate_regular, LayeredGraph};
pub use table::propagate_table;

use crate::csp::{Constraint, ConstraintKind, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Fixpoint,
    Failure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagationOutcome {
    pub status: Status,
    /// Values pruned by this call.
    pub removed: usize,
}

impl PropagationOutcome {
    pub fn fixpoint(removed: usize) -> Self {
        PropagationOutcome {
            status: Status::Fixpoint,
            removed,
        }
    }

    pub fn failure(removed: usize) -> Self {
        PropagationOutcome {
            status: Status::Failure,
            removed,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.status == Status::Failure
    }

    /// Failure if any of `scope` lost its last value.
    pub(crate) fn checked(view: &DomainView, scope: &[VarId], removed: usize) -> Self {
        if scope.iter().any(|&v| view.is_empty(v)) {
            Self::failure(removed)
        } else {
            Self::fixpoint(removed)
        }
    }
}

/// Runs the propagator matching the constraint's kind.
pub fn propagate(c: &Constraint, view: &mut DomainView) -> PropagationOutcome {
    let scope = c.scope();
    match c.kind() {
        ConstraintKind::Table { tuples } => propagate_table(tuples, scope, view),
        ConstraintKind::Regular { dfa } => propagate_regular(dfa, scope, view),
        ConstraintKind::BinaryAdjacency { modulus, allowed } => {
            propagate_adjacency(*modulus, allowed, scope, view)
        }
        _ => propagate_binary_generic(c, view),
    }
}
