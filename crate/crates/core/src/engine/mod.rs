//! Forward temporal inference cycle and backward-chaining consultation.

mod backward;
mod config;
mod conflict;
mod cycle;
mod eval;

use thiserror::Error;

use crate::kb::AttrRef;
use crate::temporal::TemporalError;
use crate::wm::WmError;

pub use backward::{
    backward_chain, question_features, rank_question_candidates, Answer, ConsultError, Consultation, Outcome,
    QuestionFeatures, QuestionRecord, Step, Transcript,
};
pub use config::{ConflictPersistence, EngineConfig, FiringMode};
pub use conflict::{ConflictSet, Instantiation, RankTuple, Signature};
pub use cycle::{Assignment, ConflictEntry, DefuzzRecord, EngineState, FiredRecord, TickRecord, FLAG_MAX_FIRINGS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("tick {tick}: undeclared attribute `{attr}`")]
    UndeclaredRef { tick: u64, attr: AttrRef },
    #[error("tick {tick}: value for `{attr}` rejected: {message}")]
    TypeMismatch { tick: u64, attr: AttrRef, message: String },
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Wm(#[from] WmError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
