// SPDX-License-Identifier: MIT
//! Deterministic finite-domain structural causal models.
//!
//! An [`Scm`] is a [`CausalGraph`] together with one total, single-valued
//! function per endogenous variable. Exogenous and latent variables are the
//! roots; fixing them fixes every other variable. Queries are answered by
//! exhaustive enumeration of the root space, capped by
//! [`Limits::max_enum_bits`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CausalGraph, GraphBuilder, GraphError, Node, NodeKind};
use crate::limits::Limits;

/// Name of the predefined two-valued domain.
pub const BOOL: &str = "bool";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScmError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid domain `{domain}`: {reason}")]
    InvalidDomain { domain: String, reason: String },
    #[error("unknown domain `{domain}` for `{node}`")]
    UnknownDomain { node: String, domain: String },
    #[error("`{node}` refers to unknown variable `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("`{node}` refers to `{parent}`, which is declared later")]
    ForwardReference { node: String, parent: String },
    #[error("parents of `{node}`: {reason}")]
    ParentMismatch { node: String, reason: String },
    #[error("type error in `{node}`: {message}")]
    TypeMismatch { node: String, message: String },
    #[error("invalid table for `{node}`: {reason}")]
    InvalidTable { node: String, reason: String },
    #[error("`{node}`: {reason}")]
    InvalidDeclaration { node: String, reason: String },
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("variable `{0}` has the same name as a domain value")]
    NameCollision(String),
    #[error("unknown variable `{0}`")]
    UnknownNode(String),
    #[error("value `{value}` is not in the domain of `{node}`")]
    ValueOutOfDomain { node: String, value: String },
    #[error("no value given for exogenous variable `{0}`")]
    MissingExogenous(String),
    #[error("`{0}` is endogenous; only exogenous and latent values can be supplied")]
    NotExogenous(String),
    #[error("`{0}` has no structural function (structure-only model)")]
    UnspecifiedFunction(String),
    #[error("cannot intervene on exogenous variable `{0}`; choose its value instead")]
    InterveneOnExogenous(String),
    #[error("evidence is inconsistent with every exogenous assignment")]
    InconsistentEvidence,
    #[error("exogenous space of {bits} binary-equivalent variables exceeds the cap of {cap}")]
    EnumerationLimit { bits: u32, cap: u32 },
}

impl ScmError {
    /// The variable an error is about, when there is one.
    pub fn node(&self) -> Option<&str> {
        match self {
            ScmError::UnknownDomain { node, .. }
            | ScmError::UnknownParent { node, .. }
            | ScmError::ForwardReference { node, .. }
            | ScmError::ParentMismatch { node, .. }
            | ScmError::TypeMismatch { node, .. }
            | ScmError::InvalidTable { node, .. }
            | ScmError::InvalidDeclaration { node, .. }
            | ScmError::ValueOutOfDomain { node, .. } => Some(node),
            ScmError::NameCollision(n)
            | ScmError::UnknownNode(n)
            | ScmError::MissingExogenous(n)
            | ScmError::NotExogenous(n)
            | ScmError::UnspecifiedFunction(n)
            | ScmError::InterveneOnExogenous(n) => Some(n),
            ScmError::Graph(GraphError::DuplicateNode(n)) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub name: String,
    pub values: Vec<String>,
}

impl Domain {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Result<Self, ScmError> {
        let d = Self { name: name.into(), values };
        d.validate()?;
        Ok(d)
    }

    pub fn boolean() -> Self {
        Self { name: BOOL.to_string(), values: vec!["false".into(), "true".into()] }
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    pub fn contains(&self, value: &str) -> bool {
        self.index_of(value).is_some()
    }

    fn validate(&self) -> Result<(), ScmError> {
        if !is_identifier(&self.name) {
            return Err(ScmError::InvalidName(self.name.clone()));
        }
        let invalid = |reason: &str| ScmError::InvalidDomain { domain: self.name.clone(), reason: reason.into() };
        if self.values.len() < 2 {
            return Err(invalid("needs at least two values"));
        }
        if self.values.len() > u16::MAX as usize {
            return Err(invalid("too many values"));
        }
        for (i, v) in self.values.iter().enumerate() {
            if !is_value_token(v) {
                return Err(invalid(&format!("`{v}` is not an identifier or number")));
            }
            if self.values[..i].contains(v) {
                return Err(invalid(&format!("duplicate value `{v}`")));
            }
        }
        Ok(())
    }
}

/// ASCII letter followed by ASCII letters, digits or underscores.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Identifier, or a digit followed by identifier characters.
pub fn is_value_token(s: &str) -> bool {
    is_identifier(s)
        || (s.starts_with(|c: char| c.is_ascii_digit()) && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

/// Expression body of a structural function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Expr {
    Lit {
        value: String,
    },
    Var {
        name: String,
    },
    Not {
        arg: Box<Expr>,
    },
    And {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Or {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// Boolean result; both sides share one domain.
    Eq {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        #[serde(rename = "else")]
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn lit(value: impl Into<String>) -> Self {
        Expr::Lit { value: value.into() }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var { name: name.into() }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: Expr) -> Self {
        Expr::Not { arg: Box::new(arg) }
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Self {
        Expr::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Self {
        Expr::Eq { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn ite(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        Expr::If { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) }
    }

    /// Referenced variable names, first occurrence order, no repeats.
    pub fn references(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit { .. } => {}
            Expr::Var { name } => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Not { arg } => arg.collect_refs(out),
            Expr::And { lhs, rhs } | Expr::Or { lhs, rhs } | Expr::Eq { lhs, rhs } => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
            Expr::If { cond, then, otherwise } => {
                cond.collect_refs(out);
                then.collect_refs(out);
                otherwise.collect_refs(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    /// One value per parent, in parent order.
    pub inputs: Vec<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionBody {
    Expr {
        expr: Expr,
    },
    Table {
        rows: Vec<TableRow>,
    },
    /// Structure only: parents are known, the mechanism is not.
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralFunction {
    pub target: String,
    pub parents: Vec<String>,
    pub body: FunctionBody,
}

impl StructuralFunction {
    pub fn expr(target: impl Into<String>, expr: Expr) -> Self {
        let parents = expr.references().into_iter().map(String::from).collect();
        Self { target: target.into(), parents, body: FunctionBody::Expr { expr } }
    }

    pub fn constant(target: impl Into<String>, value: impl Into<String>) -> Self {
        Self { target: target.into(), parents: Vec::new(), body: FunctionBody::Expr { expr: Expr::lit(value) } }
    }

    pub fn is_specified(&self) -> bool {
        !matches!(self.body, FunctionBody::Unspecified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclKind {
    Exogenous,
    Latent,
    Endogenous,
    /// Observable stand-in for a latent principal; computed as a copy of it.
    Proxy,
}

/// One declared variable of an [`ScmDocument`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub kind: DeclKind,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<StructuralFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal: Option<String>,
}

impl NodeDecl {
    pub fn root(name: impl Into<String>, kind: DeclKind, domain: impl Into<String>) -> Self {
        Self { name: name.into(), kind, domain: domain.into(), label: None, function: None, principal: None }
    }

    pub fn endogenous(name: impl Into<String>, domain: impl Into<String>, function: FunctionBodySpec) -> Self {
        let name = name.into();
        let function = match function {
            FunctionBodySpec::Expr(e) => StructuralFunction::expr(name.clone(), e),
            FunctionBodySpec::Table(parents, rows) => {
                StructuralFunction { target: name.clone(), parents, body: FunctionBody::Table { rows } }
            }
            FunctionBodySpec::Unspecified(parents) => {
                StructuralFunction { target: name.clone(), parents, body: FunctionBody::Unspecified }
            }
        };
        Self {
            name,
            kind: DeclKind::Endogenous,
            domain: domain.into(),
            label: None,
            function: Some(function),
            principal: None,
        }
    }

    pub fn proxy(name: impl Into<String>, principal: impl Into<String>, domain: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: DeclKind::Proxy,
            domain: domain.into(),
            label: None,
            function: None,
            principal: Some(principal.into()),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Convenience input for [`NodeDecl::endogenous`].
#[derive(Debug, Clone)]
pub enum FunctionBodySpec {
    Expr(Expr),
    Table(Vec<String>, Vec<TableRow>),
    Unspecified(Vec<String>),
}

/// Declaration-ordered description of a model; the serialized form of [`Scm`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmDocument {
    pub name: String,
    /// User-declared domains; `bool` is implicit.
    #[serde(default)]
    pub domains: Vec<Domain>,
    pub nodes: Vec<NodeDecl>,
}

/// Partial or total mapping from variable names to domain values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) -> Option<String> {
        self.0.insert(name.into(), value.into())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Whether every entry of `self` appears with the same value in `other`.
    pub fn is_sub_assignment_of(&self, other: &Assignment) -> bool {
        self.iter().all(|(k, v)| other.get(k) == Some(v))
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// Per query variable, the values it takes across all abduced worlds,
/// in domain order. A singleton means the answer is determined.
pub type CounterfactualAnswer = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone)]
enum Compiled {
    Expr(CExpr),
    Table { parents: Vec<usize>, radices: Vec<usize>, outputs: Vec<u16> },
    Unspecified,
}

#[derive(Debug, Clone)]
enum CExpr {
    Lit(u16),
    Var(usize),
    Not(Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Eq(Box<CExpr>, Box<CExpr>),
    If(Box<CExpr>, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    fn eval(&self, vals: &[u16]) -> u16 {
        match self {
            CExpr::Lit(v) => *v,
            CExpr::Var(i) => vals[*i],
            CExpr::Not(a) => 1 - a.eval(vals),
            CExpr::And(a, b) => (a.eval(vals) == 1 && b.eval(vals) == 1) as u16,
            CExpr::Or(a, b) => (a.eval(vals) == 1 || b.eval(vals) == 1) as u16,
            CExpr::Eq(a, b) => (a.eval(vals) == b.eval(vals)) as u16,
            CExpr::If(c, t, e) => {
                if c.eval(vals) == 1 {
                    t.eval(vals)
                } else {
                    e.eval(vals)
                }
            }
        }
    }
}

/// Structural causal model with deterministic functions over finite domains.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScmDocument", into = "ScmDocument")]
pub struct Scm {
    graph: CausalGraph,
    /// `bool` first, then user domains in declaration order.
    domains: Vec<Domain>,
    var_domain: Vec<usize>,
    decl_kinds: Vec<DeclKind>,
    functions: Vec<Option<StructuralFunction>>,
    compiled: Vec<Option<Compiled>>,
}

impl PartialEq for Scm {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
            && self.domains == other.domains
            && self.var_domain == other.var_domain
            && self.decl_kinds == other.decl_kinds
            && self.functions == other.functions
    }
}

impl Eq for Scm {}

impl TryFrom<ScmDocument> for Scm {
    type Error = ScmError;

    fn try_from(doc: ScmDocument) -> Result<Self, Self::Error> {
        Scm::from_document(&doc)
    }
}

impl From<Scm> for ScmDocument {
    fn from(m: Scm) -> Self {
        m.to_document()
    }
}

impl Scm {
    pub fn from_document(doc: &ScmDocument) -> Result<Self, ScmError> {
        if !is_identifier(&doc.name) {
            return Err(ScmError::InvalidName(doc.name.clone()));
        }
        let mut domains = vec![Domain::boolean()];
        for d in &doc.domains {
            d.validate()?;
            if domains.iter().any(|e| e.name == d.name) {
                return Err(ScmError::InvalidDomain { domain: d.name.clone(), reason: "declared twice".into() });
            }
            domains.push(d.clone());
        }

        let position: HashMap<&str, usize> =
            doc.nodes.iter().enumerate().rev().map(|(i, n)| (n.name.as_str(), i)).collect();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut var_domain: Vec<usize> = Vec::with_capacity(doc.nodes.len());
        let mut decl_kinds: Vec<DeclKind> = Vec::with_capacity(doc.nodes.len());
        let mut functions = Vec::with_capacity(doc.nodes.len());
        let mut builder = GraphBuilder::new(doc.name.clone());

        for (i, decl) in doc.nodes.iter().enumerate() {
            let name = decl.name.as_str();
            if !is_identifier(name) {
                return Err(ScmError::InvalidName(name.to_string()));
            }
            if index.contains_key(name) {
                return Err(GraphError::DuplicateNode(name.to_string()).into());
            }
            if domains.iter().any(|d| d.contains(name)) {
                return Err(ScmError::NameCollision(name.to_string()));
            }
            let dom = domains
                .iter()
                .position(|d| d.name == decl.domain)
                .ok_or_else(|| ScmError::UnknownDomain { node: name.into(), domain: decl.domain.clone() })?;
            let invalid = |reason: &str| ScmError::InvalidDeclaration { node: name.into(), reason: reason.into() };
            let resolve = |parent: &str| -> Result<usize, ScmError> {
                match index.get(parent) {
                    Some(&p) => Ok(p),
                    None if position.get(parent).is_some_and(|&p| p > i) => {
                        Err(ScmError::ForwardReference { node: name.into(), parent: parent.into() })
                    }
                    None if parent == name => {
                        Err(ScmError::ParentMismatch { node: name.into(), reason: "refers to itself".into() })
                    }
                    None => Err(ScmError::UnknownParent { node: name.into(), parent: parent.into() }),
                }
            };

            let mut node = Node::new(name, NodeKind::Endogenous);
            node.label = decl.label.clone();
            let function = match decl.kind {
                DeclKind::Exogenous | DeclKind::Latent => {
                    if decl.function.is_some() || decl.principal.is_some() {
                        return Err(invalid("root variables take neither a function nor a principal"));
                    }
                    node.kind = if decl.kind == DeclKind::Latent { NodeKind::Latent } else { NodeKind::Exogenous };
                    None
                }
                DeclKind::Proxy => {
                    if decl.function.is_some() {
                        return Err(invalid("a proxy copies its principal and takes no function"));
                    }
                    let principal = decl.principal.as_deref().ok_or_else(|| invalid("proxy without a principal"))?;
                    let p = resolve(principal)?;
                    if decl_kinds[p] != DeclKind::Latent {
                        return Err(invalid("the principal of a proxy must be latent"));
                    }
                    if var_domain[p] != dom {
                        return Err(ScmError::TypeMismatch {
                            node: name.into(),
                            message: format!(
                                "proxy domain `{}` differs from principal domain `{}`",
                                decl.domain, domains[var_domain[p]].name
                            ),
                        });
                    }
                    Some(StructuralFunction::expr(name, Expr::var(principal)))
                }
                DeclKind::Endogenous => {
                    if decl.principal.is_some() {
                        return Err(invalid("only proxies take a principal"));
                    }
                    let f = decl.function.as_ref().ok_or_else(|| invalid("endogenous variable without a function"))?;
                    if f.target != decl.name {
                        return Err(invalid(&format!("function target `{}` does not match", f.target)));
                    }
                    let mut parent_ids = Vec::with_capacity(f.parents.len());
                    for p in &f.parents {
                        let id = resolve(p)?;
                        if parent_ids.contains(&id) {
                            return Err(ScmError::ParentMismatch {
                                node: name.into(),
                                reason: format!("`{p}` listed twice"),
                            });
                        }
                        parent_ids.push(id);
                    }
                    let domain_of = |v: &str| index.get(v).map(|&j| var_domain[j]);
                    let mut f = f.clone();
                    match &mut f.body {
                        FunctionBody::Expr { expr } => {
                            for r in expr.references() {
                                resolve(r)?;
                            }
                            let mut refs: Vec<usize> = expr.references().iter().map(|r| index[r]).collect();
                            refs.sort_unstable();
                            let mut listed = parent_ids.clone();
                            listed.sort_unstable();
                            if refs != listed {
                                return Err(ScmError::ParentMismatch {
                                    node: name.into(),
                                    reason: "parent list differs from the variables the expression uses".into(),
                                });
                            }
                            TypeCheck { domains: &domains, domain_of: &domain_of, node: name }
                                .check(expr, Some(dom))?;
                            // canonical parent order: declaration order
                            f.parents = refs.iter().map(|&j| doc.nodes[j].name.clone()).collect();
                        }
                        FunctionBody::Table { rows } => {
                            canonicalize_table(name, rows, &parent_ids, &var_domain, &domains, dom)?;
                        }
                        FunctionBody::Unspecified => {}
                    }
                    Some(f)
                }
            };

            if let Some(f) = &function {
                for p in &f.parents {
                    builder.push_edge(p.clone(), name);
                }
            }
            if let (DeclKind::Proxy, Some(principal)) = (decl.kind, &decl.principal) {
                builder.push_proxy(name, principal.clone());
            }
            builder.push_node(node);
            index.insert(name, i);
            var_domain.push(dom);
            decl_kinds.push(decl.kind);
            functions.push(function);
        }

        let graph = builder.build()?;
        let compiled =
            functions.iter().map(|f| f.as_ref().map(|f| compile(f, &graph, &var_domain, &domains))).collect();
        Ok(Self { graph, domains, var_domain, decl_kinds, functions, compiled })
    }

    pub fn to_document(&self) -> ScmDocument {
        let nodes = self
            .graph
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let kind = self.decl_kinds[i];
                NodeDecl {
                    name: node.name.clone(),
                    kind,
                    domain: self.domains[self.var_domain[i]].name.clone(),
                    label: node.label.clone(),
                    function: if kind == DeclKind::Endogenous { self.functions[i].clone() } else { None },
                    principal: (kind == DeclKind::Proxy)
                        .then(|| self.graph.proxy_principal(&node.name).map(String::from))
                        .flatten(),
                }
            })
            .collect();
        ScmDocument { name: self.graph.name().to_string(), domains: self.domains[1..].to_vec(), nodes }
    }

    pub fn name(&self) -> &str {
        self.graph.name()
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    /// User-declared domains, excluding the predefined `bool`.
    pub fn declared_domains(&self) -> &[Domain] {
        &self.domains[1..]
    }

    pub fn domain_of(&self, name: &str) -> Option<&Domain> {
        self.graph.index_of(name).map(|i| &self.domains[self.var_domain[i]])
    }

    pub fn decl_kind(&self, name: &str) -> Option<DeclKind> {
        self.graph.index_of(name).map(|i| self.decl_kinds[i])
    }

    pub fn function(&self, name: &str) -> Option<&StructuralFunction> {
        self.graph.index_of(name).and_then(|i| self.functions[i].as_ref())
    }

    /// Whether every endogenous variable has a concrete mechanism.
    pub fn is_fully_specified(&self) -> bool {
        self.functions.iter().flatten().all(StructuralFunction::is_specified)
    }

    /// Exogenous and latent variables, in declaration order.
    pub fn root_names(&self) -> Vec<&str> {
        self.root_ids().into_iter().map(|v| self.graph.name_of(v)).collect()
    }

    fn root_ids(&self) -> Vec<usize> {
        (0..self.graph.len()).filter(|&v| self.graph.kind_of(v).is_root()).collect()
    }

    /// Renders the entries of `a` as `N=V` pairs in declaration order.
    pub fn format_assignment(&self, a: &Assignment) -> String {
        self.graph
            .nodes()
            .iter()
            .filter_map(|n| a.get(&n.name).map(|v| format!("{}={v}", n.name)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Values of every variable, given a total assignment of the roots.
    pub fn evaluate(&self, u: &Assignment) -> Result<Assignment, ScmError> {
        let coded = self.encode(u)?;
        let mut roots = vec![0u16; self.graph.len()];
        for v in self.root_ids() {
            let name = self.graph.name_of(v);
            roots[v] = coded[v].ok_or_else(|| ScmError::MissingExogenous(name.to_string()))?;
        }
        if let Some(v) = (0..self.graph.len()).find(|&v| coded[v].is_some() && !self.graph.kind_of(v).is_root()) {
            return Err(ScmError::NotExogenous(self.graph.name_of(v).to_string()));
        }
        self.require_specified()?;
        Ok(self.decode(&self.eval_ids(roots)))
    }

    /// Every total assignment, one per root combination, whose evaluation
    /// agrees with `evidence`. Ordered by root values, first root most
    /// significant, each in domain order.
    pub fn consistent_worlds(&self, evidence: &Assignment) -> Result<Vec<Assignment>, ScmError> {
        self.consistent_worlds_with_limits(evidence, &Limits::default())
    }

    pub fn consistent_worlds_with_limits(
        &self,
        evidence: &Assignment,
        limits: &Limits,
    ) -> Result<Vec<Assignment>, ScmError> {
        Ok(self.worlds_ids(evidence, limits)?.iter().map(|w| self.decode(w)).collect())
    }

    fn worlds_ids(&self, evidence: &Assignment, limits: &Limits) -> Result<Vec<Vec<u16>>, ScmError> {
        let coded = self.encode(evidence)?;
        self.require_specified()?;
        let roots = self.root_ids();
        let radices: Vec<usize> = roots.iter().map(|&v| self.domains[self.var_domain[v]].values.len()).collect();
        let bits = binary_bits(&radices);
        if bits > limits.max_enum_bits {
            return Err(ScmError::EnumerationLimit { bits, cap: limits.max_enum_bits });
        }
        let mut out = Vec::new();
        let mut digits = vec![0usize; roots.len()];
        loop {
            let mut vals = vec![0u16; self.graph.len()];
            for (k, &v) in roots.iter().enumerate() {
                vals[v] = digits[k] as u16;
            }
            let world = self.eval_ids(vals);
            if coded.iter().zip(&world).all(|(e, w)| e.is_none_or(|e| e == *w)) {
                out.push(world);
            }
            // odometer, last root fastest
            let mut k = roots.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < radices[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// Graph surgery: every target loses its incoming edges and becomes the
    /// constant it is set to. Everything else is unchanged.
    pub fn intervene(&self, set: &Assignment) -> Result<Scm, ScmError> {
        self.encode(set)?;
        let mut doc = self.to_document();
        for decl in doc.nodes.iter_mut() {
            let Some(value) = set.get(&decl.name) else { continue };
            match decl.kind {
                DeclKind::Exogenous | DeclKind::Latent => {
                    return Err(ScmError::InterveneOnExogenous(decl.name.clone()));
                }
                DeclKind::Endogenous | DeclKind::Proxy => {
                    decl.kind = DeclKind::Endogenous;
                    decl.principal = None;
                    decl.function = Some(StructuralFunction::constant(decl.name.clone(), value));
                }
            }
        }
        Scm::from_document(&doc)
    }

    /// Abduction, action, prediction: find the root assignments consistent
    /// with `evidence`, apply `set` to the model, and collect the values the
    /// `query` variables take in the mutilated model under each of them.
    pub fn counterfactual<S: AsRef<str>>(
        &self,
        evidence: &Assignment,
        set: &Assignment,
        query: &[S],
    ) -> Result<CounterfactualAnswer, ScmError> {
        self.counterfactual_with_limits(evidence, set, query, &Limits::default())
    }

    pub fn counterfactual_with_limits<S: AsRef<str>>(
        &self,
        evidence: &Assignment,
        set: &Assignment,
        query: &[S],
        limits: &Limits,
    ) -> Result<CounterfactualAnswer, ScmError> {
        let query: Vec<usize> = query
            .iter()
            .map(|q| self.graph.index_of(q.as_ref()).ok_or_else(|| ScmError::UnknownNode(q.as_ref().to_string())))
            .collect::<Result<_, _>>()?;
        let worlds = self.worlds_ids(evidence, limits)?;
        if worlds.is_empty() {
            return Err(ScmError::InconsistentEvidence);
        }
        let mutilated = self.intervene(set)?;
        let roots = self.root_ids();
        let mut seen: Vec<Vec<bool>> =
            query.iter().map(|&q| vec![false; self.domains[self.var_domain[q]].values.len()]).collect();
        for world in &worlds {
            let mut vals = vec![0u16; self.graph.len()];
            for &r in &roots {
                vals[r] = world[r];
            }
            let predicted = mutilated.eval_ids(vals);
            for (k, &q) in query.iter().enumerate() {
                seen[k][predicted[q] as usize] = true;
            }
        }
        Ok(query
            .iter()
            .zip(seen)
            .map(|(&q, hits)| {
                let dom = &self.domains[self.var_domain[q]];
                let values = hits.iter().enumerate().filter(|(_, &h)| h).map(|(i, _)| dom.values[i].clone()).collect();
                (self.graph.name_of(q).to_string(), values)
            })
            .collect())
    }

    fn require_specified(&self) -> Result<(), ScmError> {
        for &v in self.graph.topo_ids() {
            if matches!(self.compiled[v], Some(Compiled::Unspecified)) {
                return Err(ScmError::UnspecifiedFunction(self.graph.name_of(v).to_string()));
            }
        }
        Ok(())
    }

    /// `vals` holds root values; returns all values. Functions must be specified.
    fn eval_ids(&self, mut vals: Vec<u16>) -> Vec<u16> {
        for &v in self.graph.topo_ids() {
            match &self.compiled[v] {
                None => {}
                Some(Compiled::Expr(e)) => vals[v] = e.eval(&vals),
                Some(Compiled::Table { parents, radices, outputs }) => {
                    let idx = parents.iter().zip(radices).fold(0usize, |acc, (&p, &r)| acc * r + vals[p] as usize);
                    vals[v] = outputs[idx];
                }
                Some(Compiled::Unspecified) => unreachable!("checked by require_specified"),
            }
        }
        vals
    }

    fn encode(&self, a: &Assignment) -> Result<Vec<Option<u16>>, ScmError> {
        let mut out = vec![None; self.graph.len()];
        for (name, value) in a.iter() {
            let v = self.graph.index_of(name).ok_or_else(|| ScmError::UnknownNode(name.to_string()))?;
            let idx = self.domains[self.var_domain[v]]
                .index_of(value)
                .ok_or_else(|| ScmError::ValueOutOfDomain { node: name.to_string(), value: value.to_string() })?;
            out[v] = Some(idx as u16);
        }
        Ok(out)
    }

    fn decode(&self, vals: &[u16]) -> Assignment {
        vals.iter()
            .enumerate()
            .map(|(v, &x)| (self.graph.name_of(v), self.domains[self.var_domain[v]].values[x as usize].as_str()))
            .collect()
    }
}

impl fmt::Display for Scm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model {} ({} variables, {} edges)", self.name(), self.graph.len(), self.graph.edge_count())
    }
}

fn binary_bits(radices: &[usize]) -> u32 {
    let mut total: u128 = 1;
    for &r in radices {
        match total.checked_mul(r as u128) {
            Some(t) => total = t,
            None => return u32::MAX,
        }
    }
    // ceil(log2(total))
    if total <= 1 {
        0
    } else {
        128 - (total - 1).leading_zeros()
    }
}

struct TypeCheck<'a> {
    domains: &'a [Domain],
    domain_of: &'a dyn Fn(&str) -> Option<usize>,
    node: &'a str,
}

impl TypeCheck<'_> {
    fn err(&self, message: String) -> ScmError {
        ScmError::TypeMismatch { node: self.node.to_string(), message }
    }

    fn name(&self, d: usize) -> &str {
        &self.domains[d].name
    }

    /// Domain of `e`, checked against `expected` when given.
    fn check(&self, e: &Expr, expected: Option<usize>) -> Result<usize, ScmError> {
        let got = match e {
            Expr::Lit { value } => {
                if let Some(d) = expected {
                    if !self.domains[d].contains(value) {
                        return Err(self.err(format!("`{value}` is not a value of domain `{}`", self.name(d))));
                    }
                    d
                } else {
                    let owners: Vec<usize> =
                        (0..self.domains.len()).filter(|&d| self.domains[d].contains(value)).collect();
                    match owners.as_slice() {
                        [d] => *d,
                        [] => return Err(self.err(format!("`{value}` is not a value of any domain"))),
                        _ => return Err(self.err(format!("literal `{value}` belongs to several domains"))),
                    }
                }
            }
            Expr::Var { name } => {
                (self.domain_of)(name).ok_or_else(|| self.err(format!("unknown variable `{name}`")))?
            }
            Expr::Not { arg } => {
                self.check(arg, Some(0))?;
                0
            }
            Expr::And { lhs, rhs } | Expr::Or { lhs, rhs } => {
                self.check(lhs, Some(0))?;
                self.check(rhs, Some(0))?;
                0
            }
            Expr::Eq { lhs, rhs } => {
                self.unify(lhs, rhs, None)?;
                0
            }
            Expr::If { cond, then, otherwise } => {
                self.check(cond, Some(0))?;
                self.unify(then, otherwise, expected)?
            }
        };
        match expected {
            Some(d) if d != got => {
                Err(self.err(format!("expected domain `{}`, found `{}`", self.name(d), self.name(got))))
            }
            _ => Ok(got),
        }
    }

    /// Both sides in one domain; a bare literal takes its domain from the other side.
    fn unify(&self, a: &Expr, b: &Expr, expected: Option<usize>) -> Result<usize, ScmError> {
        let d = if expected.is_some() {
            self.check(a, expected)?
        } else if matches!(a, Expr::Lit { .. }) {
            self.check(b, None)?
        } else {
            self.check(a, None)?
        };
        self.check(a, Some(d))?;
        self.check(b, Some(d))
    }
}

fn canonicalize_table(
    node: &str,
    rows: &mut Vec<TableRow>,
    parents: &[usize],
    var_domain: &[usize],
    domains: &[Domain],
    target: usize,
) -> Result<(), ScmError> {
    let invalid = |reason: String| ScmError::InvalidTable { node: node.to_string(), reason };
    let radices: Vec<usize> = parents.iter().map(|&p| domains[var_domain[p]].values.len()).collect();
    let total = radices.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r)).filter(|&t| t <= 1 << 20);
    let total = total.ok_or_else(|| invalid("too many parent combinations".into()))?;
    let mut keyed: Vec<(usize, TableRow)> = Vec::with_capacity(rows.len());
    let mut seen = vec![false; total];
    for row in rows.drain(..) {
        if row.inputs.len() != parents.len() {
            return Err(invalid(format!("row has {} inputs, expected {}", row.inputs.len(), parents.len())));
        }
        let mut key = 0usize;
        for (k, value) in row.inputs.iter().enumerate() {
            let dom = &domains[var_domain[parents[k]]];
            let idx = dom
                .index_of(value)
                .ok_or_else(|| invalid(format!("`{value}` is not a value of domain `{}`", dom.name)))?;
            key = key * radices[k] + idx;
        }
        if !domains[target].contains(&row.output) {
            return Err(invalid(format!(
                "output `{}` is not a value of domain `{}`",
                row.output, domains[target].name
            )));
        }
        if std::mem::replace(&mut seen[key], true) {
            return Err(invalid(format!("combination ({}) listed twice", row.inputs.join(", "))));
        }
        keyed.push((key, row));
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let mut rest = missing;
        let mut combo = vec![String::new(); parents.len()];
        for k in (0..parents.len()).rev() {
            combo[k] = domains[var_domain[parents[k]]].values[rest % radices[k]].clone();
            rest /= radices[k];
        }
        return Err(invalid(format!("combination ({}) is not covered", combo.join(", "))));
    }
    keyed.sort_by_key(|(k, _)| *k);
    rows.extend(keyed.into_iter().map(|(_, r)| r));
    Ok(())
}

fn compile(f: &StructuralFunction, graph: &CausalGraph, var_domain: &[usize], domains: &[Domain]) -> Compiled {
    let id = |n: &str| graph.index_of(n).expect("validated parent");
    match &f.body {
        FunctionBody::Unspecified => Compiled::Unspecified,
        FunctionBody::Table { rows } => {
            let parents: Vec<usize> = f.parents.iter().map(|p| id(p)).collect();
            let radices = parents.iter().map(|&p| domains[var_domain[p]].values.len()).collect();
            let target = &domains[var_domain[id(&f.target)]];
            // rows are canonical: one per combination, in mixed-radix order
            let outputs = rows.iter().map(|r| target.index_of(&r.output).expect("validated") as u16).collect();
            Compiled::Table { parents, radices, outputs }
        }
        FunctionBody::Expr { expr } => {
            let target_dom = var_domain[id(&f.target)];
            Compiled::Expr(compile_expr(expr, Some(target_dom), graph, var_domain, domains))
        }
    }
}

/// Literal domains were resolved by the type checker; replay the same
/// inference to find each literal's index.
fn compile_expr(
    e: &Expr,
    expected: Option<usize>,
    graph: &CausalGraph,
    var_domain: &[usize],
    domains: &[Domain],
) -> CExpr {
    let rec = |e: &Expr, d: Option<usize>| Box::new(compile_expr(e, d, graph, var_domain, domains));
    let dom_of = |e: &Expr| static_domain(e, graph, var_domain, domains);
    match e {
        Expr::Lit { value } => {
            let d = expected.or_else(|| dom_of(e)).expect("typed literal");
            CExpr::Lit(domains[d].index_of(value).expect("typed literal") as u16)
        }
        Expr::Var { name } => CExpr::Var(graph.index_of(name).expect("validated reference")),
        Expr::Not { arg } => CExpr::Not(rec(arg, Some(0))),
        Expr::And { lhs, rhs } => CExpr::And(rec(lhs, Some(0)), rec(rhs, Some(0))),
        Expr::Or { lhs, rhs } => CExpr::Or(rec(lhs, Some(0)), rec(rhs, Some(0))),
        Expr::Eq { lhs, rhs } => {
            let d = dom_of(lhs).or_else(|| dom_of(rhs));
            CExpr::Eq(rec(lhs, d), rec(rhs, d))
        }
        Expr::If { cond, then, otherwise } => {
            let d = expected.or_else(|| dom_of(then)).or_else(|| dom_of(otherwise));
            CExpr::If(rec(cond, Some(0)), rec(then, d), rec(otherwise, d))
        }
    }
}

/// Domain of `e` when it can be determined bottom-up.
fn static_domain(e: &Expr, graph: &CausalGraph, var_domain: &[usize], domains: &[Domain]) -> Option<usize> {
    match e {
        Expr::Lit { value } => {
            let mut owners = (0..domains.len()).filter(|&d| domains[d].contains(value));
            let first = owners.next()?;
            owners.next().is_none().then_some(first)
        }
        Expr::Var { name } => graph.index_of(name).map(|v| var_domain[v]),
        Expr::Not { .. } | Expr::And { .. } | Expr::Or { .. } | Expr::Eq { .. } => Some(0),
        Expr::If { then, otherwise, .. } => static_domain(then, graph, var_domain, domains)
            .or_else(|| static_domain(otherwise, graph, var_domain, domains)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exo(name: &str) -> NodeDecl {
        NodeDecl::root(name, DeclKind::Exogenous, BOOL)
    }

    fn var(name: &str, e: Expr) -> NodeDecl {
        NodeDecl::endogenous(name, BOOL, FunctionBodySpec::Expr(e))
    }

    fn titus() -> Scm {
        Scm::from_document(&ScmDocument {
            name: "titus".into(),
            domains: vec![],
            nodes: vec![exo("I"), var("TM", Expr::var("I")), var("ED", Expr::var("TM")), var("BD", Expr::var("ED"))],
        })
        .unwrap()
    }

    fn attacker() -> Scm {
        Scm::from_document(&ScmDocument {
            name: "uav_attacker".into(),
            domains: vec![],
            nodes: vec![
                NodeDecl::root("Attacker", DeclKind::Latent, BOOL),
                exo("PilotIntent"),
                var("Pilot", Expr::or(Expr::var("PilotIntent"), Expr::var("Attacker"))),
                var("RC", Expr::var("Pilot")),
                var("UAV", Expr::or(Expr::var("RC"), Expr::var("Attacker"))),
            ],
        })
        .unwrap()
    }

    fn asg(pairs: &[(&str, &str)]) -> Assignment {
        pairs.iter().copied().collect()
    }

    #[test]
    fn evaluate_titus_identity_chain() {
        let m = titus();
        assert_eq!(
            m.evaluate(&asg(&[("I", "true")])).unwrap(),
            asg(&[("I", "true"), ("TM", "true"), ("ED", "true"), ("BD", "true")])
        );
        assert_eq!(
            m.evaluate(&asg(&[("I", "false")])).unwrap(),
            asg(&[("I", "false"), ("TM", "false"), ("ED", "false"), ("BD", "false")])
        );
        assert_eq!(m.evaluate(&Assignment::new()).unwrap_err(), ScmError::MissingExogenous("I".into()));
        assert_eq!(
            m.evaluate(&asg(&[("I", "true"), ("TM", "true")])).unwrap_err(),
            ScmError::NotExogenous("TM".into())
        );
        assert!(matches!(m.evaluate(&asg(&[("I", "maybe")])), Err(ScmError::ValueOutOfDomain { .. })));
    }

    #[test]
    fn evaluate_attacker_model() {
        let out = attacker().evaluate(&asg(&[("PilotIntent", "true"), ("Attacker", "false")])).unwrap();
        assert_eq!(out.get("Pilot"), Some("true"));
        assert_eq!(out.get("RC"), Some("true"));
        assert_eq!(out.get("UAV"), Some("true"));
    }

    #[test]
    fn association_queries() {
        let m = titus();
        let worlds = m.consistent_worlds(&asg(&[("BD", "true")])).unwrap();
        assert_eq!(worlds, vec![asg(&[("I", "true"), ("TM", "true"), ("ED", "true"), ("BD", "true")])]);
        let all = m.consistent_worlds(&Assignment::new()).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].get("I"), Some("false"));
        assert!(m.consistent_worlds(&asg(&[("TM", "true"), ("BD", "false")])).unwrap().is_empty());
    }

    #[test]
    fn intervention_is_graph_surgery() {
        let m = titus();
        let cut = m.intervene(&asg(&[("ED", "true")])).unwrap();
        assert!(!cut.graph().has_edge("TM", "ED"));
        for u in ["true", "false"] {
            assert_eq!(cut.evaluate(&asg(&[("I", u)])).unwrap().get("BD"), Some("true"));
        }
        assert_eq!(m.intervene(&Assignment::new()).unwrap(), m);
        let cf = m.intervene(&asg(&[("TM", "false")])).unwrap();
        assert!(!cf.graph().has_edge("I", "TM"));
        assert_eq!(cf.function("TM").unwrap(), &StructuralFunction::constant("TM", "false"));
        assert_eq!(m.intervene(&asg(&[("I", "true")])).unwrap_err(), ScmError::InterveneOnExogenous("I".into()));
        assert_eq!(m.intervene(&asg(&[("Q", "true")])).unwrap_err(), ScmError::UnknownNode("Q".into()));
    }

    #[test]
    fn counterfactuals() {
        let m = titus();
        let ans = m.counterfactual(&asg(&[("BD", "true")]), &asg(&[("TM", "false")]), &["ED", "BD"]).unwrap();
        assert_eq!(ans["ED"], ["false"]);
        assert_eq!(ans["BD"], ["false"]);

        let full = asg(&[("I", "true"), ("TM", "true"), ("ED", "true"), ("BD", "true")]);
        let ans = m.counterfactual(&full, &Assignment::new(), &["TM", "BD"]).unwrap();
        assert_eq!(ans["TM"], ["true"]);

        let ans = attacker()
            .counterfactual(
                &asg(&[("UAV", "true"), ("PilotIntent", "false")]),
                &asg(&[("Pilot", "false")]),
                &["UAV", "RC"],
            )
            .unwrap();
        assert_eq!(ans["UAV"], ["true"]);
        assert_eq!(ans["RC"], ["false"]);

        assert_eq!(
            m.counterfactual(&asg(&[("TM", "true"), ("BD", "false")]), &Assignment::new(), &["BD"]).unwrap_err(),
            ScmError::InconsistentEvidence
        );
    }

    #[test]
    fn undetermined_counterfactual_reports_every_value() {
        let m = attacker();
        let ans = m.counterfactual(&asg(&[("RC", "true")]), &asg(&[("Pilot", "false")]), &["UAV"]).unwrap();
        assert_eq!(ans["UAV"], ["false", "true"]);
    }

    #[test]
    fn enumeration_cap() {
        let nodes: Vec<_> = (0..5).map(|i| exo(&format!("U{i}"))).collect();
        let m = Scm::from_document(&ScmDocument { name: "wide".into(), domains: vec![], nodes }).unwrap();
        let limits = Limits { max_enum_bits: 4, ..Limits::default() };
        assert_eq!(
            m.consistent_worlds_with_limits(&Assignment::new(), &limits).unwrap_err(),
            ScmError::EnumerationLimit { bits: 5, cap: 4 }
        );
        assert_eq!(binary_bits(&[3, 3]), 4);
        assert_eq!(binary_bits(&[]), 0);
    }

    #[test]
    fn structure_only_models() {
        let m = Scm::from_document(&ScmDocument {
            name: "s".into(),
            domains: vec![],
            nodes: vec![exo("A"), NodeDecl::endogenous("B", BOOL, FunctionBodySpec::Unspecified(vec!["A".into()]))],
        })
        .unwrap();
        assert!(m.graph().has_edge("A", "B"));
        assert!(!m.is_fully_specified());
        assert_eq!(m.evaluate(&asg(&[("A", "true")])).unwrap_err(), ScmError::UnspecifiedFunction("B".into()));
        assert_eq!(m.consistent_worlds(&Assignment::new()).unwrap_err(), ScmError::UnspecifiedFunction("B".into()));
    }

    #[test]
    fn finite_domains_tables_and_typing() {
        let level = Domain::new("level", vec!["low".into(), "mid".into(), "high".into()]).unwrap();
        let rows = |out: [&str; 6]| {
            let mut rows = Vec::new();
            let mut k = 0;
            for l in ["high", "mid", "low"] {
                for b in ["true", "false"] {
                    rows.push(TableRow { inputs: vec![l.into(), b.into()], output: out[k].into() });
                    k += 1;
                }
            }
            rows
        };
        let doc = |table: Vec<TableRow>| ScmDocument {
            name: "t".into(),
            domains: vec![level.clone()],
            nodes: vec![
                NodeDecl::root("L", DeclKind::Exogenous, "level"),
                exo("B"),
                NodeDecl::endogenous("Hi", BOOL, FunctionBodySpec::Expr(Expr::eq(Expr::var("L"), Expr::lit("high")))),
                NodeDecl::endogenous(
                    "Out",
                    "level",
                    FunctionBodySpec::Expr(Expr::ite(Expr::var("B"), Expr::lit("mid"), Expr::var("L"))),
                ),
                NodeDecl::endogenous("T", BOOL, FunctionBodySpec::Table(vec!["L".into(), "B".into()], table)),
            ],
        };
        let m = Scm::from_document(&doc(rows(["true", "false", "false", "false", "true", "true"]))).unwrap();
        let out = m.evaluate(&asg(&[("L", "high"), ("B", "false")])).unwrap();
        assert_eq!(out.get("Hi"), Some("true"));
        assert_eq!(out.get("Out"), Some("high"));
        assert_eq!(out.get("T"), Some("false"));
        let out = m.evaluate(&asg(&[("L", "low"), ("B", "true")])).unwrap();
        assert_eq!(out.get("Out"), Some("mid"));
        assert_eq!(out.get("T"), Some("true"));
        // rows are stored in canonical order
        let FunctionBody::Table { rows: stored } = &m.function("T").unwrap().body else { panic!() };
        assert_eq!(stored[0].inputs, ["low", "false"]);

        let mut short = rows(["true"; 6]);
        short.pop();
        assert!(matches!(Scm::from_document(&doc(short)), Err(ScmError::InvalidTable { .. })));
        let mut dup = rows(["true"; 6]);
        dup[1] = dup[0].clone();
        assert!(matches!(Scm::from_document(&doc(dup)), Err(ScmError::InvalidTable { .. })));

        let bad = ScmDocument {
            name: "bad".into(),
            domains: vec![level.clone()],
            nodes: vec![
                NodeDecl::root("L", DeclKind::Exogenous, "level"),
                NodeDecl::endogenous("X", BOOL, FunctionBodySpec::Expr(Expr::and(Expr::var("L"), Expr::lit("true")))),
            ],
        };
        assert!(matches!(Scm::from_document(&bad), Err(ScmError::TypeMismatch { .. })));
        let bad_eq = ScmDocument {
            name: "bad".into(),
            domains: vec![level],
            nodes: vec![
                NodeDecl::root("L", DeclKind::Exogenous, "level"),
                exo("B"),
                NodeDecl::endogenous("X", BOOL, FunctionBodySpec::Expr(Expr::eq(Expr::var("L"), Expr::var("B")))),
            ],
        };
        assert!(matches!(Scm::from_document(&bad_eq), Err(ScmError::TypeMismatch { .. })));
    }

    #[test]
    fn declaration_errors() {
        let doc = |nodes| ScmDocument { name: "e".into(), domains: vec![], nodes };
        assert!(matches!(
            Scm::from_document(&doc(vec![var("X", Expr::var("Y"))])),
            Err(ScmError::UnknownParent { parent, .. }) if parent == "Y"
        ));
        assert!(matches!(
            Scm::from_document(&doc(vec![var("X", Expr::var("Y")), exo("Y")])),
            Err(ScmError::ForwardReference { .. })
        ));
        assert!(matches!(
            Scm::from_document(&doc(vec![exo("A"), exo("A")])),
            Err(ScmError::Graph(GraphError::DuplicateNode(_)))
        ));
        assert_eq!(Scm::from_document(&doc(vec![exo("true")])).unwrap_err(), ScmError::NameCollision("true".into()));
        assert!(matches!(
            Scm::from_document(&doc(vec![NodeDecl::root("A", DeclKind::Exogenous, "color")])),
            Err(ScmError::UnknownDomain { .. })
        ));
        assert!(matches!(
            Scm::from_document(&doc(vec![exo("A"), NodeDecl::proxy("P", "A", BOOL)])),
            Err(ScmError::InvalidDeclaration { .. })
        ));
        assert!(Domain::new("one", vec!["x".into()]).is_err());
        assert!(Domain::new("dup", vec!["x".into(), "x".into()]).is_err());
    }

    #[test]
    fn proxies_copy_their_principal() {
        let m = Scm::from_document(&ScmDocument {
            name: "p".into(),
            domains: vec![],
            nodes: vec![NodeDecl::root("Attacker", DeclKind::Latent, BOOL), NodeDecl::proxy("IDS", "Attacker", BOOL)],
        })
        .unwrap();
        assert_eq!(m.graph().proxy_principal("IDS"), Some("Attacker"));
        assert_eq!(m.evaluate(&asg(&[("Attacker", "true")])).unwrap().get("IDS"), Some("true"));
        let cut = m.intervene(&asg(&[("IDS", "false")])).unwrap();
        assert_eq!(cut.graph().proxy_principal("IDS"), None);
        assert_eq!(cut.decl_kind("IDS"), Some(DeclKind::Endogenous));
    }

    proptest! {
        #[test]
        fn intervention_laws(a in proptest::option::of(any::<bool>()), b in proptest::option::of(any::<bool>()), u in any::<bool>()) {
            let m = attacker();
            let mut set = Assignment::new();
            if let Some(a) = a { set.insert("RC", a.to_string()); }
            if let Some(b) = b { set.insert("Pilot", b.to_string()); }
            let once = m.intervene(&set).unwrap();
            prop_assert_eq!(&once.intervene(&set).unwrap(), &once);
            let (mut s1, mut s2) = (Assignment::new(), Assignment::new());
            for (k, v) in set.iter() {
                if k == "RC" { s1.insert(k, v); } else { s2.insert(k, v); }
            }
            let ab = m.intervene(&s1).unwrap().intervene(&s2).unwrap();
            let ba = m.intervene(&s2).unwrap().intervene(&s1).unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(&ab, &once);
            let u = asg(&[("Attacker", if u { "true" } else { "false" }), ("PilotIntent", "true")]);
            let out = once.evaluate(&u).unwrap();
            prop_assert!(set.is_sub_assignment_of(&out));
        }
    }
}
