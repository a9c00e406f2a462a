//! Exact algebra of rational tangles and their closures.

mod cf;
mod classify;
mod expr;
mod parse;
mod rational;

pub use cf::{box_compose, canonical_cf, cf_value, reverse_terms, simplify_terms, truncate, CFTerms};
pub use classify::{
    classify_two_bridge, closure_fraction, equivalent, equivalent_with, reduce_closure, Chirality, KnotClass,
    KnotTag, Reduction,
};
pub use expr::{eval_fraction, make_family, tangles_equivalent, FamilyName, KnotSpecExpr, TangleExpr};
pub use parse::{parse_closure, parse_tangle, Parsed};
pub use rational::ExtendedRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TangleError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("indeterminate fraction arithmetic: {0}")]
    Indeterminate(String),
    #[error("{0} needs a non-empty operand")]
    EmptyOperand(&'static str),
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("not a rational closure: {0}")]
    NonRationalClosure(String),
    #[error("expected a knot closure, got the tangle {0}")]
    NotAClosure(String),
}
