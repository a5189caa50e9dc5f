// SPDX-License-Identifier: MIT
//! Causal DAG with observability marks, path enumeration and d-separation.
//!
//! Node order is declaration order. Every set-valued result is reported in
//! that order, so internal node indices double as the sort key.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::Limits;

/// Empty name list, for call sites that condition on nothing.
pub const EMPTY: &[&str] = &[];

/// Callback receiving each enumerated path as node ids and step directions.
pub(crate) type PathVisitor<'a> = dyn FnMut(&[usize], &[Direction]) -> ControlFlow<()> + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Exogenous,
    Endogenous,
    /// Exogenous and unobservable: never part of an adjustment or logging set.
    Latent,
}

impl NodeKind {
    pub fn is_observed(self) -> bool {
        self != NodeKind::Latent
    }

    /// Root kinds may not have incoming edges.
    pub fn is_root(self) -> bool {
        self != NodeKind::Endogenous
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Exogenous => "exogenous",
            NodeKind::Endogenous => "endogenous",
            NodeKind::Latent => "latent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Human-readable label, e.g. "UAV in flight".
    pub label: Option<String>,
}

impl Node {
    pub fn new(name: impl Into<String>, kind: NodeKind) -> Self {
        Self { name: name.into(), kind, label: None }
    }

    pub fn display_name(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge {from} -> {to} names unknown node `{missing}`")]
    UnknownEndpoint { from: String, to: String, missing: String },
    #[error("edge {from} -> {to} points into {kind} node `{to}`")]
    EdgeIntoExogenous { from: String, to: String, kind: NodeKind },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("node `{0}` appears in more than one of the argument sets")]
    Overlap(String),
    #[error("path enumeration exceeded the limit of {0} paths")]
    PathLimit(usize),
    #[error("invalid proxy `{proxy}` for `{principal}`: {reason}")]
    InvalidProxy { proxy: String, principal: String, reason: String },
}

/// Orientation of one path step relative to the underlying edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `nodes[i] -> nodes[i + 1]`
    Forward,
    /// `nodes[i] <- nodes[i + 1]`
    Backward,
}

/// A simple path in the skeleton, with the orientation of every step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Path {
    pub nodes: Vec<String>,
    pub directions: Vec<Direction>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn is_directed(&self) -> bool {
        self.directions.iter().all(|&d| d == Direction::Forward)
    }

    pub fn interior(&self) -> &[String] {
        if self.nodes.len() < 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut nodes = self.nodes.iter();
        if let Some(first) = nodes.next() {
            f.write_str(first)?;
        }
        for (node, dir) in nodes.zip(&self.directions) {
            let arrow = match dir {
                Direction::Forward => " -> ",
                Direction::Backward => " <- ",
            };
            write!(f, "{arrow}{node}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Any simple path in the skeleton.
    Any,
    /// Only paths following edge direction.
    Directed,
}

#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    proxies: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn node(mut self, name: impl Into<String>, kind: NodeKind) -> Self {
        self.nodes.push(Node::new(name, kind));
        self
    }

    pub fn labeled_node(mut self, name: impl Into<String>, kind: NodeKind, label: impl Into<String>) -> Self {
        let mut node = Node::new(name, kind);
        node.label = Some(label.into());
        self.nodes.push(node);
        self
    }

    pub fn push_node(&mut self, node: Node) {
        self.nodes.push(node);
    }

    pub fn edge(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.edges.push((from.into(), to.into()));
        self
    }

    pub fn push_edge(&mut self, from: impl Into<String>, to: impl Into<String>) {
        self.edges.push((from.into(), to.into()));
    }

    /// Declares `proxy` as an observable stand-in for the latent `principal`.
    /// The edge `principal -> proxy` is added if not already present.
    pub fn proxy(mut self, proxy: impl Into<String>, principal: impl Into<String>) -> Self {
        self.push_proxy(proxy, principal);
        self
    }

    pub fn push_proxy(&mut self, proxy: impl Into<String>, principal: impl Into<String>) {
        let (proxy, principal) = (proxy.into(), principal.into());
        if !self.edges.iter().any(|(f, t)| *f == principal && *t == proxy) {
            self.edges.push((principal.clone(), proxy.clone()));
        }
        self.proxies.push((proxy, principal));
    }

    pub fn build(self) -> Result<CausalGraph, GraphError> {
        CausalGraph::from_parts(self.name, self.nodes, &self.edges, &self.proxies)
    }
}

/// `build_graph` with the default graph name `g`.
pub fn build_graph<N, E>(nodes: &[(N, NodeKind)], edges: &[(E, E)]) -> Result<CausalGraph, GraphError>
where
    N: AsRef<str>,
    E: AsRef<str>,
{
    let nodes = nodes.iter().map(|(n, k)| Node::new(n.as_ref(), *k)).collect();
    let edges: Vec<_> = edges.iter().map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string())).collect();
    CausalGraph::from_parts("g".to_string(), nodes, &edges, &[])
}

/// Immutable causal DAG.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    name: String,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// Skeleton neighbours sorted by index, tagged with the step orientation.
    adjacent: Vec<Vec<(usize, Direction)>>,
    /// (proxy, principal)
    proxies: Vec<(usize, usize)>,
    topo: Vec<usize>,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.nodes == other.nodes
            && self.parents == other.parents
            && self.proxies == other.proxies
    }
}

impl Eq for CausalGraph {}

impl CausalGraph {
    pub fn builder(name: impl Into<String>) -> GraphBuilder {
        GraphBuilder::new(name)
    }

    fn from_parts(
        name: String,
        nodes: Vec<Node>,
        edges: &[(String, String)],
        proxies: &[(String, String)],
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(node.name.clone()));
            }
        }
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (from, to) in edges {
            let lookup = |name: &String| {
                index.get(name).copied().ok_or_else(|| GraphError::UnknownEndpoint {
                    from: from.clone(),
                    to: to.clone(),
                    missing: name.clone(),
                })
            };
            let (a, b) = (lookup(from)?, lookup(to)?);
            if a == b {
                return Err(GraphError::SelfLoop(from.clone()));
            }
            if nodes[b].kind.is_root() {
                return Err(GraphError::EdgeIntoExogenous { from: from.clone(), to: to.clone(), kind: nodes[b].kind });
            }
            if parents[b].contains(&a) {
                return Err(GraphError::DuplicateEdge { from: from.clone(), to: to.clone() });
            }
            parents[b].push(a);
            children[a].push(b);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let mut proxy_ids = Vec::with_capacity(proxies.len());
        for (proxy, principal) in proxies {
            let invalid = |reason: &str| GraphError::InvalidProxy {
                proxy: proxy.clone(),
                principal: principal.clone(),
                reason: reason.to_string(),
            };
            let p = *index.get(proxy).ok_or_else(|| GraphError::UnknownNode(proxy.clone()))?;
            let l = *index.get(principal).ok_or_else(|| GraphError::UnknownNode(principal.clone()))?;
            if nodes[l].kind != NodeKind::Latent {
                return Err(invalid("principal is not latent"));
            }
            if !nodes[p].kind.is_observed() {
                return Err(invalid("proxy must be observable"));
            }
            if !parents[p].contains(&l) {
                return Err(invalid("missing edge from principal to proxy"));
            }
            if proxy_ids.iter().any(|&(q, _)| q == p) {
                return Err(invalid("node is already a proxy"));
            }
            proxy_ids.push((p, l));
        }

        let topo = topological_order(&nodes, &parents, &children)?;
        let adjacent = (0..n)
            .map(|v| {
                let mut adj: Vec<_> = parents[v]
                    .iter()
                    .map(|&p| (p, Direction::Backward))
                    .chain(children[v].iter().map(|&c| (c, Direction::Forward)))
                    .collect();
                adj.sort_unstable_by_key(|&(u, _)| u);
                adj
            })
            .collect();

        Ok(Self { name, nodes, index, parents, children, adjacent, proxies: proxy_ids, topo })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Edges ordered by source, then target, in declaration order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.children.iter().enumerate().flat_map(move |(a, cs)| {
            cs.iter().map(move |&b| (self.nodes[a].name.as_str(), self.nodes[b].name.as_str()))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.children[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    pub fn parents(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let v = self.require(name)?;
        Ok(self.names_of(&self.parents[v]))
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let v = self.require(name)?;
        Ok(self.names_of(&self.children[v]))
    }

    /// Declared (proxy, principal) pairs.
    pub fn proxies(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.proxies.iter().map(|&(p, l)| (self.nodes[p].name.as_str(), self.nodes[l].name.as_str()))
    }

    pub fn proxy_principal(&self, name: &str) -> Option<&str> {
        let v = self.index_of(name)?;
        self.proxies.iter().find(|&&(p, _)| p == v).map(|&(_, l)| self.nodes[l].name.as_str())
    }

    pub fn topological_order(&self) -> Vec<&str> {
        self.names_of(&self.topo)
    }

    /// All nodes with a directed path to `x`, excluding `x`.
    pub fn ancestors(&self, x: &str) -> Result<Vec<String>, GraphError> {
        let v = self.require(x)?;
        let mut mask = self.ancestors_mask(&[v]);
        mask[v] = false;
        Ok(self.names_from_mask(&mask))
    }

    /// All nodes reachable from `x` by a directed path, excluding `x`.
    pub fn descendants(&self, x: &str) -> Result<Vec<String>, GraphError> {
        let v = self.require(x)?;
        let mut mask = self.descendants_mask(&[v]);
        mask[v] = false;
        Ok(self.names_from_mask(&mask))
    }

    /// All simple paths from `x` to `y`, in lexicographic order of their
    /// node sequences (declaration order), using the default path limit.
    pub fn all_paths(&self, x: &str, y: &str, mode: PathMode) -> Result<Vec<Path>, GraphError> {
        self.all_paths_limited(x, y, mode, Limits::default().max_paths)
    }

    pub fn all_paths_limited(&self, x: &str, y: &str, mode: PathMode, limit: usize) -> Result<Vec<Path>, GraphError> {
        let (a, b) = (self.require(x)?, self.require(y)?);
        if a == b {
            return Err(GraphError::InvalidPath(format!("endpoints coincide at `{x}`")));
        }
        self.collect_paths(a, b, mode, None, limit)
    }

    pub(crate) fn collect_paths(
        &self,
        from: usize,
        to: usize,
        mode: PathMode,
        first: Option<Direction>,
        limit: usize,
    ) -> Result<Vec<Path>, GraphError> {
        let mut out = Vec::new();
        let mut overflow = false;
        let _ = self.walk_paths(from, to, mode, first, &mut |_, _| false, &mut |nodes, dirs| {
            if out.len() == limit {
                overflow = true;
                return ControlFlow::Break(());
            }
            out.push(self.make_path(nodes, dirs));
            ControlFlow::Continue(())
        });
        if overflow {
            Err(GraphError::PathLimit(limit))
        } else {
            Ok(out)
        }
    }

    /// Whether `z` blocks `path`: some chain or fork has its middle node in
    /// `z`, or some collider is outside `z` together with all its descendants.
    pub fn is_blocked<S: AsRef<str>>(&self, path: &Path, z: &[S]) -> Result<bool, GraphError> {
        let ids = self.validate_path(path)?;
        let z = self.resolve_all(z)?;
        let in_z = self.mask_of(&z);
        let an_z = self.ancestors_mask(&z);
        Ok(is_blocked_ids(&ids, &path.directions, &in_z, &an_z))
    }

    /// Checks `path` against the graph and returns its node indices.
    pub fn validate_path(&self, path: &Path) -> Result<Vec<usize>, GraphError> {
        if path.nodes.len() != path.directions.len() + 1 {
            return Err(GraphError::InvalidPath(format!(
                "{} nodes but {} directions",
                path.nodes.len(),
                path.directions.len()
            )));
        }
        let ids = path
            .nodes
            .iter()
            .map(|n| self.index_of(n).ok_or_else(|| GraphError::InvalidPath(format!("unknown node `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = vec![false; self.len()];
        for &v in &ids {
            if std::mem::replace(&mut seen[v], true) {
                return Err(GraphError::InvalidPath(format!("node `{}` repeats", self.nodes[v].name)));
            }
        }
        for (i, dir) in path.directions.iter().enumerate() {
            let (a, b) = (ids[i], ids[i + 1]);
            let ok = match dir {
                Direction::Forward => self.children[a].binary_search(&b).is_ok(),
                Direction::Backward => self.children[b].binary_search(&a).is_ok(),
            };
            if !ok {
                return Err(GraphError::InvalidPath(format!("no edge for step {} of `{path}`", i + 1)));
            }
        }
        Ok(ids)
    }

    /// d-separation of `x` and `y` given `z`.
    ///
    /// Computed by ancestral reachability; debug builds cross-check the
    /// answer against exhaustive path enumeration whenever that stays within
    /// the default path limit.
    pub fn d_separated<S: AsRef<str>>(&self, x: &[S], y: &[S], z: &[S]) -> Result<bool, GraphError> {
        let [xs, ys, zs] = self.resolve_disjoint(x, y, z)?;
        let answer = self.dsep_reachability_ids(&xs, &ys, &zs);
        #[cfg(debug_assertions)]
        if let Ok(by_paths) = self.dsep_paths_ids(&xs, &ys, &zs, Limits::default().max_paths) {
            debug_assert_eq!(answer, by_paths, "d-separation routes disagree");
        }
        Ok(answer)
    }

    /// d-separation by enumerating skeleton paths and testing each with
    /// [`is_blocked`](Self::is_blocked). `limit` bounds the number of
    /// explored path prefixes.
    pub fn d_separated_by_paths<S: AsRef<str>>(
        &self,
        x: &[S],
        y: &[S],
        z: &[S],
        limit: usize,
    ) -> Result<bool, GraphError> {
        let [xs, ys, zs] = self.resolve_disjoint(x, y, z)?;
        self.dsep_paths_ids(&xs, &ys, &zs, limit)
    }

    /// d-separation by a single linear-time reachability sweep.
    pub fn d_separated_by_reachability<S: AsRef<str>>(&self, x: &[S], y: &[S], z: &[S]) -> Result<bool, GraphError> {
        let [xs, ys, zs] = self.resolve_disjoint(x, y, z)?;
        Ok(self.dsep_reachability_ids(&xs, &ys, &zs))
    }

    /// Copy of the graph without the edges entering any of `targets`.
    /// Proxy declarations whose edge disappears are dropped.
    pub fn without_incoming<S: AsRef<str>>(&self, targets: &[S]) -> Result<CausalGraph, GraphError> {
        let ts = self.resolve_all(targets)?;
        Ok(self.filtered(|_, b| !ts.contains(&b)))
    }

    /// Copy of the graph without the edges leaving `source`.
    pub fn without_outgoing(&self, source: &str) -> Result<CausalGraph, GraphError> {
        let s = self.require(source)?;
        Ok(self.filtered(|a, _| a != s))
    }

    fn filtered(&self, keep: impl Fn(usize, usize) -> bool) -> CausalGraph {
        let mut g = self.clone();
        for b in 0..g.len() {
            g.parents[b].retain(|&a| keep(a, b));
        }
        for a in 0..g.len() {
            g.children[a].retain(|&b| keep(a, b));
        }
        let parents = &g.parents;
        g.proxies.retain(|&(p, l)| parents[p].contains(&l));
        g.adjacent = (0..g.len())
            .map(|v| {
                self.adjacent[v]
                    .iter()
                    .copied()
                    .filter(|&(u, d)| match d {
                        Direction::Forward => keep(v, u),
                        Direction::Backward => keep(u, v),
                    })
                    .collect()
            })
            .collect();
        g
    }

    // ---- index-level helpers -------------------------------------------------

    pub(crate) fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name).ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub(crate) fn resolve_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, GraphError> {
        let mut ids = names.iter().map(|n| self.require(n.as_ref())).collect::<Result<Vec<_>, _>>()?;
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }

    fn resolve_disjoint<S: AsRef<str>>(&self, x: &[S], y: &[S], z: &[S]) -> Result<[Vec<usize>; 3], GraphError> {
        let (xs, ys, zs) = (self.resolve_all(x)?, self.resolve_all(y)?, self.resolve_all(z)?);
        let mut owner = vec![0u8; self.len()];
        for (tag, set) in [(1u8, &xs), (2, &ys), (3, &zs)] {
            for &v in set.iter() {
                if owner[v] != 0 && owner[v] != tag {
                    return Err(GraphError::Overlap(self.nodes[v].name.clone()));
                }
                owner[v] = tag;
            }
        }
        Ok([xs, ys, zs])
    }

    pub(crate) fn name_of(&self, v: usize) -> &str {
        &self.nodes[v].name
    }

    pub(crate) fn kind_of(&self, v: usize) -> NodeKind {
        self.nodes[v].kind
    }

    pub(crate) fn parent_ids(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub(crate) fn child_ids(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub(crate) fn topo_ids(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn proxy_pairs(&self) -> &[(usize, usize)] {
        &self.proxies
    }

    pub(crate) fn names_of(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&v| self.nodes[v].name.as_str()).collect()
    }

    pub(crate) fn names_from_mask(&self, mask: &[bool]) -> Vec<String> {
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| self.nodes[v].name.clone()).collect()
    }

    pub(crate) fn mask_of(&self, ids: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &v in ids {
            mask[v] = true;
        }
        mask
    }

    /// `seeds` together with all their ancestors.
    pub(crate) fn ancestors_mask(&self, seeds: &[usize]) -> Vec<bool> {
        closure(self.len(), seeds, |v| &self.parents[v])
    }

    /// `seeds` together with all their descendants.
    pub(crate) fn descendants_mask(&self, seeds: &[usize]) -> Vec<bool> {
        closure(self.len(), seeds, |v| &self.children[v])
    }

    pub(crate) fn make_path(&self, nodes: &[usize], dirs: &[Direction]) -> Path {
        Path { nodes: nodes.iter().map(|&v| self.nodes[v].name.clone()).collect(), directions: dirs.to_vec() }
    }

    /// Depth-first walk over simple paths from `from` to `to`, neighbours in
    /// index order, so complete paths arrive in lexicographic order.
    ///
    /// `prune` sees every extended prefix and returns `true` to cut it.
    /// `first` restricts the orientation of the first step.
    pub(crate) fn walk_paths(
        &self,
        from: usize,
        to: usize,
        mode: PathMode,
        first: Option<Direction>,
        prune: &mut dyn FnMut(&[usize], &[Direction]) -> bool,
        visit: &mut PathVisitor<'_>,
    ) -> ControlFlow<()> {
        let mut state =
            Walk { target: to, mode, first, on_path: vec![false; self.len()], nodes: vec![from], dirs: Vec::new() };
        state.on_path[from] = true;
        self.walk_step(&mut state, prune, visit)
    }

    fn walk_step(
        &self,
        st: &mut Walk,
        prune: &mut dyn FnMut(&[usize], &[Direction]) -> bool,
        visit: &mut PathVisitor<'_>,
    ) -> ControlFlow<()> {
        let cur = *st.nodes.last().expect("walk has a start node");
        if cur == st.target {
            return visit(&st.nodes, &st.dirs);
        }
        for &(next, dir) in &self.adjacent[cur] {
            if st.on_path[next] || (st.mode == PathMode::Directed && dir == Direction::Backward) {
                continue;
            }
            if st.dirs.is_empty() && st.first.is_some_and(|f| f != dir) {
                continue;
            }
            st.nodes.push(next);
            st.dirs.push(dir);
            st.on_path[next] = true;
            let flow =
                if prune(&st.nodes, &st.dirs) { ControlFlow::Continue(()) } else { self.walk_step(st, prune, visit) };
            st.on_path[next] = false;
            st.nodes.pop();
            st.dirs.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }

    /// Whether some path from `from` (first step constrained by `first`) to
    /// any node of `targets` is open given the conditioning masks.
    pub(crate) fn has_open_path(
        &self,
        from: usize,
        targets: &[usize],
        first: Option<Direction>,
        in_z: &[bool],
        an_z: &[bool],
        budget: usize,
    ) -> Result<bool, GraphError> {
        let mut explored = 0usize;
        let mut exhausted = false;
        for &to in targets {
            let flow = self.walk_paths(
                from,
                to,
                PathMode::Any,
                first,
                &mut |nodes, dirs| {
                    explored += 1;
                    if explored > budget {
                        exhausted = true;
                        return true;
                    }
                    let k = nodes.len();
                    k >= 3 && triple_blocks(dirs[k - 3], dirs[k - 2], nodes[k - 2], in_z, an_z)
                },
                &mut |nodes, dirs| {
                    if is_blocked_ids(nodes, dirs, in_z, an_z) {
                        ControlFlow::Continue(())
                    } else {
                        ControlFlow::Break(())
                    }
                },
            );
            if exhausted {
                return Err(GraphError::PathLimit(budget));
            }
            if flow.is_break() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub(crate) fn dsep_paths_ids(
        &self,
        xs: &[usize],
        ys: &[usize],
        zs: &[usize],
        limit: usize,
    ) -> Result<bool, GraphError> {
        let in_z = self.mask_of(zs);
        let an_z = self.ancestors_mask(zs);
        for &x in xs {
            if self.has_open_path(x, ys, None, &in_z, &an_z, limit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reachability sweep over (node, arrival direction) states: a trail may
    /// pass a non-collider outside `z`, and a collider inside the ancestral
    /// closure of `z`.
    pub(crate) fn dsep_reachability_ids(&self, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
        let n = self.len();
        let in_z = self.mask_of(zs);
        let an_z = self.ancestors_mask(zs);
        // index 0: arrived from a child (moving against the edge), 1: from a parent
        let mut seen = vec![[false; 2]; n];
        let mut reached = vec![false; n];
        let mut queue: VecDeque<(usize, usize)> = xs.iter().map(|&x| (x, 0)).collect();
        while let Some((v, up_or_down)) = queue.pop_front() {
            if std::mem::replace(&mut seen[v][up_or_down], true) {
                continue;
            }
            if !in_z[v] {
                reached[v] = true;
            }
            if up_or_down == 0 {
                if !in_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, 0)));
                    queue.extend(self.children[v].iter().map(|&c| (c, 1)));
                }
            } else {
                if !in_z[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, 1)));
                }
                if an_z[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, 0)));
                }
            }
        }
        !ys.iter().any(|&y| reached[y])
    }
}

struct Walk {
    target: usize,
    mode: PathMode,
    first: Option<Direction>,
    on_path: Vec<bool>,
    nodes: Vec<usize>,
    dirs: Vec<Direction>,
}

/// Whether the triple `prev - mid - next` blocks, given the arrival and
/// departure step orientations around `mid`.
pub(crate) fn triple_blocks(
    into_mid: Direction,
    out_of_mid: Direction,
    mid: usize,
    in_z: &[bool],
    an_z: &[bool],
) -> bool {
    let collider = into_mid == Direction::Forward && out_of_mid == Direction::Backward;
    if collider {
        !an_z[mid]
    } else {
        in_z[mid]
    }
}

pub(crate) fn is_blocked_ids(nodes: &[usize], dirs: &[Direction], in_z: &[bool], an_z: &[bool]) -> bool {
    (1..nodes.len().saturating_sub(1)).any(|i| triple_blocks(dirs[i - 1], dirs[i], nodes[i], in_z, an_z))
}

fn closure<'a>(n: usize, seeds: &[usize], next: impl Fn(usize) -> &'a [usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    let mut stack: Vec<usize> = seeds.to_vec();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut mask[v], true) {
            stack.extend(next(v).iter().copied().filter(|&u| !mask[u]));
        }
    }
    mask
}

/// Kahn's algorithm, always releasing the lowest-index ready node.
fn topological_order(
    nodes: &[Node],
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, GraphError> {
    let n = nodes.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node has an unplaced parent; walk parents until one repeats.
    let start = (0..n).find(|&v| indegree[v] > 0).expect("unplaced node exists");
    let mut trail = vec![start];
    let mut pos = HashMap::from([(start, 0usize)]);
    let mut cur = start;
    loop {
        let p = *parents[cur].iter().find(|&&p| indegree[p] > 0).expect("unplaced parent exists");
        if let Some(&i) = pos.get(&p) {
            let mut cycle: Vec<String> = trail[i..].iter().rev().map(|&v| nodes[v].name.clone()).collect();
            cycle.push(cycle[0].clone());
            return Err(GraphError::Cycle(cycle));
        }
        pos.insert(p, trail.len());
        trail.push(p);
        cur = p;
    }
}
