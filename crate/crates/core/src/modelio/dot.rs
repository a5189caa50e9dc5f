// SPDX-License-Identifier: MIT
//! Graphviz DOT export.

use std::fmt::Write;

use crate::graph::{CausalGraph, NodeKind};
use crate::patterns::PatternMatch;

const DOT_KEYWORDS: &[&str] = &["node", "edge", "graph", "digraph", "subgraph", "strict"];

/// One node statement per line in declaration order, then one edge per
/// line. Latent nodes are dashed; nodes bound by `highlight` are filled gray.
pub fn to_dot(g: &CausalGraph, highlight: Option<&PatternMatch>) -> String {
    let bound: Vec<&str> = highlight.map(|m| m.bound_nodes()).unwrap_or_default();
    let mut out = format!("digraph {} {{\n", id(g.name()));
    for n in g.nodes() {
        let mut attrs = Vec::new();
        if let Some(label) = &n.label {
            attrs.push(format!("label=\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\"")));
        }
        if n.kind == NodeKind::Latent {
            attrs.push("style=dashed".to_string());
        }
        if bound.contains(&n.name.as_str()) {
            attrs.push("style=filled fillcolor=gray".to_string());
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  {};", id(&n.name));
        } else {
            let _ = writeln!(out, "  {} [{}];", id(&n.name), attrs.join(" "));
        }
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  {} -> {};", id(a), id(b));
    }
    out.push_str("}\n");
    out
}

fn id(s: &str) -> String {
    if DOT_KEYWORDS.contains(&s.to_ascii_lowercase().as_str()) {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}
