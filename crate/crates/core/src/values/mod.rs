//! NEG-factor value algebra: truth values with `NE`, certainty, inexact
//! numbers, admissible sets, membership functions and the operations over
//! them.

mod arith;
mod compare;
mod mf;
mod truth;
mod value;

use thiserror::Error;

pub use arith::{alpha_levels, interval_op, neg_arith, ArithOp};
pub use compare::{neg_compare, CmpOp};
pub use mf::{defuzzify, Defuzzified, MembershipFunction, Mode};
pub use truth::{truth_combine, LogicOp, TruthValue};
pub use value::{combine_cf, fuzzify, AdmissibleSet, Fuzzified, NegContext, Payload, TermTable, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("truth value {0} outside [0;1]")]
    TruthOutOfRange(f64),
    #[error("certainty {0} outside [0;1]")]
    CertaintyOutOfRange(f64),
    #[error("wrong number of operands for {0:?}")]
    Arity(LogicOp),
    #[error("invalid membership function: {0}")]
    InvalidMf(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("malformed value literal: {0}")]
    MalformedLiteral(String),
    #[error("unknown linguistic term {0:?}")]
    UnknownTerm(String),
    #[error("cannot fuzzify a {0} value")]
    NotFuzzifiable(&'static str),
    #[error("undefined quotient: divisor spans zero")]
    UndefinedQuotient,
    #[error("arithmetic on a {0} value")]
    NonNumeric(&'static str),
    #[error("incomparable payloads: {left} {op} {right}")]
    Incomparable { op: CmpOp, left: &'static str, right: &'static str },
}
