// SPDX-License-Identifier: MIT
//! Structural causal models for accountability analysis.
//!
//! - [`graph`]: causal DAGs, path enumeration, d-separation.
//! - [`scm`]: deterministic finite-domain SCMs with interventions and counterfactuals.
//! - [`identify`]: back-door / front-door identification and logging-set selection.
//! - [`patterns`]: accountability patterns (Lindberg, RACI) and pattern matching.
//! - [`modelio`]: model/pattern DSL, canonical JSON, DOT export.
//! - [`cli`]: the `causal-account` command-line front end.

pub mod cli;
pub mod graph;
pub mod identify;
pub mod limits;
pub mod modelio;
pub mod models;
pub mod patterns;
pub mod scm;

pub use graph::{CausalGraph, Direction, GraphError, Node, NodeKind, Path, PathMode};
pub use identify::{IdentificationReport, IdentificationStatus, IdentifyError, IdentifyOptions, LoggingRecommendation};
pub use limits::Limits;
pub use scm::{Assignment, Domain, Expr, Scm, ScmDocument, ScmError};
