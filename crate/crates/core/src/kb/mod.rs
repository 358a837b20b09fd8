//! Knowledge representation language: syntax tree, parser, pretty-printer,
//! validation, LHS normalization and compilation for the engine.

mod ast;
mod compile;
mod lexer;
mod normalize;
mod parser;
mod print;
mod validate;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use compile::{
    AttrId, AttrInfo, CAction, CArith, CExpr, CNode, CNodeKind, CRule, CompiledKb, TemporalInfo, TypeInfo,
};
pub use normalize::{normalize_kb, normalize_lhs, normalize_temporal};
pub use validate::validate_kb;

/// Syntax error with position and the expected input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub(crate) fn at(span: Span, expected: &str, found: &str) -> Self {
        Self { line: span.line, col: span.col, expected: expected.to_string(), found: found.to_string() }
    }
}

/// A validation finding tied to a source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Self { span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("{} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
}

/// Parses KRL text without semantic checks or normalization.
pub fn parse_kb_unchecked(src: &str) -> Result<KnowledgeBase, ParseError> {
    parser::parse_source(src)
}

/// Parses, normalizes and validates a knowledge base.
pub fn parse_kb(src: &str) -> Result<KnowledgeBase, KbError> {
    let kb = normalize_kb(parse_kb_unchecked(src)?);
    let diags = validate_kb(&kb);
    if diags.is_empty() {
        Ok(kb)
    } else {
        Err(KbError::Invalid(diags))
    }
}

/// Parses a standalone static expression (unnormalized).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    parser::parse_expr_str(src)
}

/// Parses a standalone temporal formula (unnormalized).
pub fn parse_temporal(src: &str) -> Result<TemporalFormula, ParseError> {
    parser::parse_temporal_str(src)
}
