// SPDX-License-Identifier: MIT
//! Canonical text rendering of models and patterns.

use std::fmt::Write;

use crate::patterns::Pattern;
use crate::scm::{DeclKind, Expr, FunctionBody, Scm};

/// Renders `m` in the model language; parsing the result yields an equal model.
pub fn to_dsl(m: &Scm) -> String {
    let doc = m.to_document();
    let mut out = format!("model {}\n", doc.name);
    for d in &doc.domains {
        let _ = writeln!(out, "domain {} {{ {} }}", d.name, d.values.join(", "));
    }
    for n in &doc.nodes {
        match n.kind {
            DeclKind::Exogenous => {
                let _ = write!(out, "exo {} : {}", n.name, n.domain);
            }
            DeclKind::Latent => {
                let _ = write!(out, "latent {} : {}", n.name, n.domain);
            }
            DeclKind::Proxy => {
                let principal = n.principal.as_deref().unwrap_or_default();
                let _ = write!(out, "proxy {} for {principal}", n.name);
            }
            DeclKind::Endogenous => {
                let f = n.function.as_ref().expect("endogenous declarations carry a function");
                let _ = write!(out, "var {} : {}", n.name, n.domain);
                match &f.body {
                    FunctionBody::Expr { expr } => {
                        let _ = write!(out, " = {}", expr_text(expr, 0));
                    }
                    FunctionBody::Unspecified => {
                        out.push_str(" <-");
                        if !f.parents.is_empty() {
                            let _ = write!(out, " {}", f.parents.join(", "));
                        }
                    }
                    FunctionBody::Table { rows } => {
                        out.push_str(" <-");
                        if !f.parents.is_empty() {
                            let _ = write!(out, " {}", f.parents.join(", "));
                        }
                        out.push_str(" {\n");
                        for r in rows {
                            let _ = writeln!(out, "  {} => {};", r.inputs.join(", "), r.output);
                        }
                        out.push('}');
                    }
                }
            }
        }
        if let Some(label) = &n.label {
            let _ = write!(out, " label {}", quote(label));
        }
        out.push('\n');
    }
    out
}

/// Renders `p` in the pattern language.
pub fn pattern_to_dsl(p: &Pattern) -> String {
    let mut out = format!("pattern {}\n", p.name());
    for r in p.roles() {
        let _ = writeln!(out, "role {} : {}", r.name, r.kind);
    }
    for e in p.edges() {
        let _ = writeln!(out, "edge {} -> {}", e.from, e.to);
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::If { .. } => 0,
        Expr::Or { .. } => 1,
        Expr::And { .. } => 2,
        Expr::Eq { .. } => 3,
        Expr::Not { .. } => 4,
        Expr::Lit { .. } | Expr::Var { .. } => 5,
    }
}

/// Fully parenthesization-free where precedence and left associativity allow.
fn expr_text(e: &Expr, min: u8) -> String {
    let s = match e {
        Expr::Lit { value } => value.clone(),
        Expr::Var { name } => name.clone(),
        Expr::Not { arg } => format!("!{}", expr_text(arg, 4)),
        Expr::And { lhs, rhs } => format!("{} & {}", expr_text(lhs, 2), expr_text(rhs, 3)),
        Expr::Or { lhs, rhs } => format!("{} | {}", expr_text(lhs, 1), expr_text(rhs, 2)),
        Expr::Eq { lhs, rhs } => format!("{} == {}", expr_text(lhs, 3), expr_text(rhs, 4)),
        Expr::If { cond, then, otherwise } => {
            format!("if {} then {} else {}", expr_text(cond, 0), expr_text(then, 0), expr_text(otherwise, 0))
        }
    };
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}
