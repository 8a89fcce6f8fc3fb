//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by model construction, simulation, pricing and diagnostics.
#[derive(Error, Debug)]
pub enum CoreError {
    /// A vector or matrix had the wrong dimensions.
    #[error("shape error in {what}: expected {expected}, got {got}")]
    Shape {
        what: String,
        expected: usize,
        got: usize,
    },

    /// An operation requires a different kind of innovation law.
    #[error("unsupported innovation law: {operation} requires a {required} law")]
    UnsupportedLaw {
        operation: &'static str,
        required: &'static str,
    },

    /// The scenario tree would exceed the configured node cap.
    #[error("tree of {required} nodes exceeds cap {cap}")]
    TreeTooLarge { required: u128, cap: u64 },

    /// Stopping-time enumeration would exceed its budget.
    #[error("{count} stopping times exceed enumeration budget {budget}")]
    EnumerationBudget { count: u128, budget: u64 },

    /// The path was simulated without recording its innovations.
    #[error("path carries no innovation record; re-simulate with recording enabled")]
    MissingInnovations,

    /// Fine grid size must be a multiple of the chain grid size.
    #[error("fine grid size {fine} is not a multiple of chain size {coarse}")]
    RefineNotMultiple { fine: usize, coarse: usize },

    /// Recombination was requested for a payoff without a sufficient statistic.
    #[error("recombination unsupported: {reason}")]
    RecombineUnsupported { reason: String },

    /// The operation requires a non-recombined tree.
    #[error("unsupported tree: {reason}")]
    UnsupportedTree { reason: String },

    /// A payoff evaluated to a non-finite value at some node.
    #[error("payoff evaluation failed at node {address}: value {value}")]
    PayoffEvaluation { address: String, value: f64 },

    /// Regression input was degenerate.
    #[error("degenerate regression input: {reason}")]
    DegenerateRegression { reason: String },

    /// A scalar parameter was out of range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Path import/export failure.
    #[error("path i/o error: {0}")]
    PathIo(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub(crate) fn shape(what: impl Into<String>, expected: usize, got: usize) -> Self {
        CoreError::Shape {
            what: what.into(),
            expected,
            got,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
