// SPDX-License-Identifier: MIT
//! Text formats: the model and pattern languages, canonical JSON and DOT.
//!
//! Model files (`.scm.txt`) are line-oriented:
//!
//! ```text
//! model titus
//! domain level { low, high }          # `bool` is predefined
//! exo I : bool
//! latent Attacker : bool
//! var TM : bool = I label "Thought of murder"
//! var L : level = if TM then high else low
//! var S : bool <- TM, L               # structure only
//! var T : bool <- TM { false => false; true => true }
//! proxy Witness for Attacker
//! ```
//!
//! Pattern files (`.pat.txt`) hold `pattern`, `role <name> : <kind>` and
//! `edge <role> -> <role>` lines.

mod dot;
mod json;
mod lexer;
mod parser;
mod writer;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patterns::PatternError;
use crate::scm::ScmError;

pub use dot::to_dot;
pub use json::{from_json, to_json};
pub use parser::{parse_model, parse_model_document, parse_pattern};
pub use writer::{pattern_to_dsl, to_dsl};

/// 1-based position of a token in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Well-formed text that does not describe a valid model or pattern.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticError {
    #[error(transparent)]
    Model(#[from] ScmError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelIoError {
    #[error("parse error at {span}: {message}")]
    Parse { span: SourceSpan, message: String },
    #[error("error at {span}: {error}")]
    Semantic { span: SourceSpan, error: SemanticError },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl ModelIoError {
    pub(crate) fn parse(span: SourceSpan, message: impl Into<String>) -> Self {
        ModelIoError::Parse { span, message: message.into() }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            ModelIoError::Parse { span, .. } | ModelIoError::Semantic { span, .. } => Some(*span),
            ModelIoError::Schema { .. } => None,
        }
    }
}
