// SPDX-License-Identifier: MIT
//! Accountability patterns and role-labeled pattern matching.
//!
//! A [`Pattern`] is a small template DAG over named roles. A match binds
//! every role to a distinct observed model node such that each template
//! edge is witnessed by a directed model path whose interior avoids all
//! bound nodes. [`check_accountability`] then asks whether the agent's
//! effect is identifiable by adjusting only for the other bound roles.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CausalGraph, GraphError, Path, PathMode};
use crate::identify::{self, IdentificationReport, IdentifyError, IdentifyOptions, LoggingRecommendation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Identify(#[from] IdentifyError),
    #[error("role `{0}` is declared twice")]
    DuplicateRole(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("template edge `{0} -> {0}` is a self-loop")]
    SelfLoop(String),
    #[error("template edge `{0} -> {1}` is declared twice")]
    DuplicateEdge(String, String),
    #[error("template edges form a cycle through `{0}`")]
    Cycle(String),
    #[error("a pattern needs exactly one Effect role, found {0}")]
    EffectCount(usize),
    #[error("a pattern has at most one {kind} role, found {count}")]
    TooManyRoles { kind: RoleKind, count: usize },
    #[error("pattern has {roles} roles but the model has only {nodes} observable nodes")]
    Arity { roles: usize, nodes: usize },
    #[error("more than {0} complete role bindings examined")]
    BindingLimit(usize),
    #[error("pattern `{0}` has no Agent role")]
    NoAgentRole(String),
    #[error("invalid match: {0}")]
    InvalidMatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoleKind {
    Agent,
    Mediator,
    Effect,
    Accountable,
    Consulted,
    Discussion,
    Informed,
    Generic,
}

impl RoleKind {
    pub const ALL: [RoleKind; 8] = [
        RoleKind::Agent,
        RoleKind::Mediator,
        RoleKind::Effect,
        RoleKind::Accountable,
        RoleKind::Consulted,
        RoleKind::Discussion,
        RoleKind::Informed,
        RoleKind::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Agent => "Agent",
            RoleKind::Mediator => "Mediator",
            RoleKind::Effect => "Effect",
            RoleKind::Accountable => "Accountable",
            RoleKind::Consulted => "Consulted",
            RoleKind::Discussion => "Discussion",
            RoleKind::Informed => "Informed",
            RoleKind::Generic => "Generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Role {
    pub name: String,
    pub kind: RoleKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateEdge {
    pub from: String,
    pub to: String,
}

/// Per-pattern flags derived from the role kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Constraints {
    pub unique_accountable: bool,
    pub unique_agent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternSpec {
    name: String,
    roles: Vec<Role>,
    edges: Vec<TemplateEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternSpec", into = "PatternSpec")]
pub struct Pattern {
    name: String,
    roles: Vec<Role>,
    edges: Vec<TemplateEdge>,
    /// Template edges as role indices.
    links: Vec<(usize, usize)>,
}

impl TryFrom<PatternSpec> for Pattern {
    type Error = PatternError;

    fn try_from(s: PatternSpec) -> Result<Self, Self::Error> {
        Pattern::new(s.name, s.roles, s.edges)
    }
}

impl From<Pattern> for PatternSpec {
    fn from(p: Pattern) -> Self {
        PatternSpec { name: p.name, roles: p.roles, edges: p.edges }
    }
}

impl Pattern {
    pub fn new(name: impl Into<String>, roles: Vec<Role>, edges: Vec<TemplateEdge>) -> Result<Self, PatternError> {
        for (i, r) in roles.iter().enumerate() {
            if roles[..i].iter().any(|o| o.name == r.name) {
                return Err(PatternError::DuplicateRole(r.name.clone()));
            }
        }
        let find = |n: &str| roles.iter().position(|r| r.name == n).ok_or_else(|| PatternError::UnknownRole(n.into()));
        let mut links = Vec::with_capacity(edges.len());
        for e in &edges {
            let (a, b) = (find(&e.from)?, find(&e.to)?);
            if a == b {
                return Err(PatternError::SelfLoop(e.from.clone()));
            }
            if links.contains(&(a, b)) {
                return Err(PatternError::DuplicateEdge(e.from.clone(), e.to.clone()));
            }
            links.push((a, b));
        }
        let count = |k: RoleKind| roles.iter().filter(|r| r.kind == k).count();
        if count(RoleKind::Effect) != 1 {
            return Err(PatternError::EffectCount(count(RoleKind::Effect)));
        }
        for kind in [RoleKind::Accountable, RoleKind::Agent] {
            if count(kind) > 1 {
                return Err(PatternError::TooManyRoles { kind, count: count(kind) });
            }
        }
        // Kahn's algorithm over the template
        let mut indegree = vec![0usize; roles.len()];
        for &(_, b) in &links {
            indegree[b] += 1;
        }
        let mut ready: Vec<usize> = (0..roles.len()).filter(|&r| indegree[r] == 0).collect();
        let mut done = 0;
        while let Some(r) = ready.pop() {
            done += 1;
            for &(a, b) in &links {
                if a == r {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        if done < roles.len() {
            let stuck = (0..roles.len()).find(|&r| indegree[r] > 0).expect("some role on a cycle");
            return Err(PatternError::Cycle(roles[stuck].name.clone()));
        }
        Ok(Self { name: name.into(), roles, edges, links })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn edges(&self) -> &[TemplateEdge] {
        &self.edges
    }

    pub fn role(&self, name: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn role_of_kind(&self, kind: RoleKind) -> Option<&Role> {
        self.roles.iter().find(|r| r.kind == kind)
    }

    pub fn constraints(&self) -> Constraints {
        Constraints {
            unique_accountable: self.role_of_kind(RoleKind::Accountable).is_some(),
            unique_agent: self.role_of_kind(RoleKind::Agent).is_some(),
        }
    }
}

fn role(name: &str, kind: RoleKind) -> Role {
    Role { name: name.into(), kind }
}

fn edge(from: &str, to: &str) -> TemplateEdge {
    TemplateEdge { from: from.into(), to: to.into() }
}

/// The built-in catalog: `lindberg` and `raci`.
pub fn builtin_patterns() -> Vec<Pattern> {
    let lindberg = Pattern::new(
        "lindberg",
        vec![role("Agent", RoleKind::Agent), role("Mediator", RoleKind::Mediator), role("Effect", RoleKind::Effect)],
        vec![edge("Agent", "Mediator"), edge("Mediator", "Effect")],
    );
    let raci = Pattern::new(
        "raci",
        vec![
            role("Accountable", RoleKind::Accountable),
            role("Responsible", RoleKind::Agent),
            role("Consulted", RoleKind::Consulted),
            role("Discussion", RoleKind::Discussion),
            role("Mediator", RoleKind::Mediator),
            role("Effect", RoleKind::Effect),
            role("Informed", RoleKind::Informed),
        ],
        vec![
            edge("Accountable", "Responsible"),
            edge("Accountable", "Discussion"),
            edge("Consulted", "Discussion"),
            edge("Responsible", "Mediator"),
            edge("Mediator", "Effect"),
            edge("Effect", "Informed"),
        ],
    );
    vec![lindberg.expect("valid builtin"), raci.expect("valid builtin")]
}

pub fn builtin_pattern(name: &str) -> Option<Pattern> {
    builtin_patterns().into_iter().find(|p| p.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub from: String,
    pub to: String,
    pub path: Path,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternMatch {
    /// Role name to model node.
    pub binding: BTreeMap<String, String>,
    /// One directed witness path per template edge, in template-edge order.
    pub witness_paths: Vec<Witness>,
}

impl PatternMatch {
    pub fn node_for(&self, role: &str) -> Option<&str> {
        self.binding.get(role).map(String::as_str)
    }

    /// Bound nodes, without repeats.
    pub fn bound_nodes(&self) -> Vec<&str> {
        self.binding.values().map(String::as_str).collect()
    }

    /// `Role=Node` pairs in the pattern's role order.
    pub fn describe(&self, p: &Pattern) -> String {
        p.roles
            .iter()
            .filter_map(|r| self.binding.get(&r.name).map(|n| format!("{}={n}", r.name)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Fails when the pattern has more roles than the model has observable nodes.
pub fn check_arity(g: &CausalGraph, p: &Pattern) -> Result<(), PatternError> {
    let nodes = g.nodes().iter().filter(|n| n.kind.is_observed()).count();
    if p.roles.len() > nodes {
        return Err(PatternError::Arity { roles: p.roles.len(), nodes });
    }
    Ok(())
}

pub fn match_pattern(
    g: &CausalGraph,
    p: &Pattern,
    hints: &BTreeMap<String, String>,
) -> Result<Vec<PatternMatch>, PatternError> {
    match_pattern_with(g, p, hints, &crate::limits::Limits::default())
}

/// Every binding extending `hints`, ordered lexicographically by the
/// declaration indices of the nodes bound to roles in role order. An
/// impossible hint yields no matches.
pub fn match_pattern_with(
    g: &CausalGraph,
    p: &Pattern,
    hints: &BTreeMap<String, String>,
    limits: &crate::limits::Limits,
) -> Result<Vec<PatternMatch>, PatternError> {
    let mut fixed = vec![None; p.roles.len()];
    for (r, node) in hints {
        let ri = p.roles.iter().position(|x| &x.name == r).ok_or_else(|| PatternError::UnknownRole(r.clone()))?;
        fixed[ri] = Some(g.require(node)?);
    }
    let mut search = Search {
        g,
        p,
        fixed,
        bound: vec![None; p.roles.len()],
        used: vec![false; g.len()],
        complete: 0,
        cap: limits.max_bindings,
        out: Vec::new(),
    };
    search.assign(0)?;
    Ok(search.out)
}

struct Search<'a> {
    g: &'a CausalGraph,
    p: &'a Pattern,
    fixed: Vec<Option<usize>>,
    bound: Vec<Option<usize>>,
    used: Vec<bool>,
    complete: usize,
    cap: usize,
    out: Vec<PatternMatch>,
}

impl Search<'_> {
    fn assign(&mut self, r: usize) -> Result<(), PatternError> {
        if r == self.p.roles.len() {
            self.complete += 1;
            if self.complete > self.cap {
                return Err(PatternError::BindingLimit(self.cap));
            }
            let nodes: Vec<usize> = self.bound.iter().map(|b| b.expect("all roles bound")).collect();
            if let Some(m) = witnesses(self.g, self.p, &nodes) {
                self.out.push(m);
            }
            return Ok(());
        }
        let has_out = self.p.links.iter().any(|&(a, _)| a == r);
        let has_in = self.p.links.iter().any(|&(_, b)| b == r);
        let candidates: Vec<usize> = match self.fixed[r] {
            Some(v) => vec![v],
            None => (0..self.g.len()).collect(),
        };
        for v in candidates {
            if self.used[v]
                || !self.g.kind_of(v).is_observed()
                || (has_out && self.g.child_ids(v).is_empty())
                || (has_in && self.g.parent_ids(v).is_empty())
            {
                continue;
            }
            self.bound[r] = Some(v);
            self.used[v] = true;
            let feasible = self.p.links.iter().all(|&(a, b)| match (self.bound[a], self.bound[b]) {
                (Some(x), Some(y)) if a == r || b == r => first_witness(self.g, x, y, &self.used).is_some(),
                _ => true,
            });
            if feasible {
                self.assign(r + 1)?;
            }
            self.used[v] = false;
            self.bound[r] = None;
        }
        Ok(())
    }
}

/// Lexicographically first directed path from `x` to `y` with no interior
/// node in `blocked`.
fn first_witness(g: &CausalGraph, x: usize, y: usize, blocked: &[bool]) -> Option<Path> {
    let mut found = None;
    let _ = g.walk_paths(
        x,
        y,
        PathMode::Directed,
        None,
        &mut |nodes, _| {
            let last = *nodes.last().expect("non-empty prefix");
            last != y && blocked[last]
        },
        &mut |nodes, dirs| {
            found = Some(g.make_path(nodes, dirs));
            ControlFlow::Break(())
        },
    );
    found
}

fn witnesses(g: &CausalGraph, p: &Pattern, nodes: &[usize]) -> Option<PatternMatch> {
    let used = g.mask_of(nodes);
    let mut witness_paths = Vec::with_capacity(p.links.len());
    for (&(a, b), e) in p.links.iter().zip(&p.edges) {
        let path = first_witness(g, nodes[a], nodes[b], &used)?;
        witness_paths.push(Witness { from: e.from.clone(), to: e.to.clone(), path });
    }
    let binding = p.roles.iter().zip(nodes).map(|(r, &v)| (r.name.clone(), g.name_of(v).to_string())).collect();
    Some(PatternMatch { binding, witness_paths })
}

/// Re-checks a match against its definition: total, injective, observable,
/// witnessed by directed paths whose interiors avoid bound nodes.
pub fn validate_match(g: &CausalGraph, p: &Pattern, m: &PatternMatch) -> Result<(), PatternError> {
    let invalid = |s: String| PatternError::InvalidMatch(s);
    if m.binding.len() != p.roles.len() {
        return Err(invalid(format!("binds {} roles, pattern has {}", m.binding.len(), p.roles.len())));
    }
    let mut nodes = Vec::with_capacity(p.roles.len());
    for r in &p.roles {
        let name = m.binding.get(&r.name).ok_or_else(|| invalid(format!("role `{}` is unbound", r.name)))?;
        let v = g.require(name)?;
        if !g.kind_of(v).is_observed() {
            return Err(invalid(format!("role `{}` is bound to latent `{name}`", r.name)));
        }
        if nodes.contains(&v) {
            return Err(invalid(format!("`{name}` is bound to more than one role")));
        }
        nodes.push(v);
    }
    if m.witness_paths.len() != p.edges.len() {
        return Err(invalid("one witness path per template edge is required".into()));
    }
    let used = g.mask_of(&nodes);
    for (w, e) in m.witness_paths.iter().zip(&p.edges) {
        if w.from != e.from || w.to != e.to {
            return Err(invalid(format!("witness for `{} -> {}` is out of order", e.from, e.to)));
        }
        let ids = g.validate_path(&w.path)?;
        let (a, b) = (m.binding[&e.from].as_str(), m.binding[&e.to].as_str());
        if !w.path.is_directed()
            || w.path.nodes.first().map(String::as_str) != Some(a)
            || w.path.nodes.last().map(String::as_str) != Some(b)
        {
            return Err(invalid(format!("witness {} does not lead from {a} to {b}", w.path)));
        }
        if ids[1..ids.len() - 1].iter().any(|&v| used[v]) {
            return Err(invalid(format!("witness {} passes through a bound node", w.path)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accountable,
    NotAttributable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accountable => "Accountable",
            Verdict::NotAttributable => "NotAttributable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountabilityReport {
    pub pattern: String,
    #[serde(rename = "match")]
    pub matched: PatternMatch,
    pub agent: String,
    pub effect: String,
    pub admissible_controls: Vec<String>,
    /// Back-door sets here are drawn from the admissible controls only.
    pub identification: IdentificationReport,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logging: Option<LoggingRecommendation>,
}

pub fn check_accountability(
    g: &CausalGraph,
    p: &Pattern,
    m: &PatternMatch,
) -> Result<AccountabilityReport, PatternError> {
    check_accountability_with(g, p, m, &IdentifyOptions::default())
}

/// The agent is held accountable for the effect when some back-door set
/// drawn from the admissible controls exists. Admissible controls are the
/// bound nodes other than agent and effect that lie neither on a directed
/// agent-to-effect path nor downstream of the effect.
pub fn check_accountability_with(
    g: &CausalGraph,
    p: &Pattern,
    m: &PatternMatch,
    opts: &IdentifyOptions,
) -> Result<AccountabilityReport, PatternError> {
    validate_match(g, p, m)?;
    let agent_role = p.role_of_kind(RoleKind::Agent).ok_or_else(|| PatternError::NoAgentRole(p.name.clone()))?;
    let effect_role = p.role_of_kind(RoleKind::Effect).expect("validated pattern has an Effect");
    let agent = m.binding[&agent_role.name].clone();
    let effect = m.binding[&effect_role.name].clone();
    let (a, e) = (g.require(&agent)?, g.require(&effect)?);
    let desc_a = g.descendants_mask(&[a]);
    let anc_e = g.ancestors_mask(&[e]);
    let desc_e = g.descendants_mask(&[e]);
    let mut admissible: Vec<usize> = m
        .binding
        .values()
        .map(|n| g.require(n))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&v| v != a && v != e && !(desc_a[v] && anc_e[v]) && !desc_e[v])
        .collect();
    admissible.sort_unstable();
    let admissible: Vec<String> = g.names_of(&admissible).into_iter().map(String::from).collect();

    let mut identification = identify::identify_with(g, &agent, &effect, Some(&admissible), opts)?;
    let verdict =
        if identification.minimal_backdoor_sets.is_empty() { Verdict::NotAttributable } else { Verdict::Accountable };
    if verdict == Verdict::NotAttributable {
        if let Some(fd) = identification.frontdoor_sets.first() {
            identification.notes.push(format!(
                "front-door set {{{}}} exists but is not drawn from the admissible controls",
                fd.join(", ")
            ));
        }
    }
    let logging = match verdict {
        Verdict::Accountable => Some(identify::logging_set_with(g, &agent, &effect, Some(&admissible), opts)?),
        Verdict::NotAttributable => None,
    };
    Ok(AccountabilityReport {
        pattern: p.name.clone(),
        matched: m.clone(),
        agent,
        effect,
        admissible_controls: admissible,
        identification,
        verdict,
        logging,
    })
}
