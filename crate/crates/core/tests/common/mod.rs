// SPDX-License-Identifier: MIT
//! Shared generators and independent oracles for the integration tests.
//!
//! The oracles share no code with the library's analyses: d-separation
//! goes through the moralized ancestral graph, back-door sets through brute
//! force, and counterfactuals through a separate evaluator over the document.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use causal_account::graph::{CausalGraph, GraphBuilder, Node, NodeKind};
use causal_account::scm::{DeclKind, Domain, Expr, FunctionBody, FunctionBodySpec, NodeDecl, ScmDocument, TableRow};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

/// DAG on `v0..v{n-1}` with edges `vi -> vj` (i < j) taken from `bits` in
/// column order; nodes flagged latent receive no incoming edges.
pub fn dag_from_bits(n: usize, bits: u64, latent: &[bool]) -> CausalGraph {
    let mut b = GraphBuilder::new("r");
    for (i, name) in names(n).into_iter().enumerate() {
        b.push_node(Node::new(name, if latent[i] { NodeKind::Latent } else { NodeKind::Endogenous }));
    }
    let mut k = 0;
    for (j, &lat) in latent.iter().enumerate().take(n) {
        for i in 0..j {
            if bits >> k & 1 == 1 && !lat {
                b.push_edge(format!("v{i}"), format!("v{j}"));
            }
            k += 1;
        }
    }
    b.build().expect("generated DAG is valid")
}

pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p_edge: f64, p_latent: f64) -> CausalGraph {
    let latent: Vec<bool> = (0..n).map(|_| rng.gen_bool(p_latent)).collect();
    let pairs = n * n.saturating_sub(1) / 2;
    let mut bits = 0u64;
    for k in 0..pairs {
        if rng.gen_bool(p_edge) {
            bits |= 1 << k;
        }
    }
    dag_from_bits(n, bits, &latent)
}

fn parent_sets(g: &CausalGraph) -> BTreeMap<String, Vec<String>> {
    let mut p: BTreeMap<String, Vec<String>> = g.nodes().iter().map(|n| (n.name.clone(), Vec::new())).collect();
    for (a, b) in g.edges() {
        p.get_mut(b).unwrap().push(a.to_string());
    }
    p
}

/// d-separation via the moral graph of the ancestral set of `x ∪ y ∪ z`.
pub fn moral_dsep(g: &CausalGraph, x: &[String], y: &[String], z: &[String]) -> bool {
    let parents = parent_sets(g);
    let mut anc: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = x.iter().chain(y).chain(z).cloned().collect();
    while let Some(v) = stack.pop() {
        if anc.insert(v.clone()) {
            stack.extend(parents[&v].iter().cloned());
        }
    }
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = anc.iter().map(|v| (v.as_str(), BTreeSet::new())).collect();
    for v in &anc {
        let ps = &parents[v];
        for p in ps {
            adj.get_mut(v.as_str()).unwrap().insert(p);
            adj.get_mut(p.as_str()).unwrap().insert(v);
        }
        for a in ps {
            for b in ps {
                if a != b {
                    adj.get_mut(a.as_str()).unwrap().insert(b);
                }
            }
        }
    }
    let blocked: BTreeSet<&str> = z.iter().map(String::as_str).collect();
    let targets: BTreeSet<&str> = y.iter().map(String::as_str).collect();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = x.iter().map(String::as_str).filter(|v| !blocked.contains(v)).collect();
    while let Some(v) = stack.pop() {
        if targets.contains(v) {
            return false;
        }
        if seen.insert(v) {
            stack.extend(adj[v].iter().filter(|w| !blocked.contains(*w)));
        }
    }
    true
}

fn descendants(g: &CausalGraph, x: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![x.to_string()];
    while let Some(v) = stack.pop() {
        for (a, b) in g.edges() {
            if a == v && out.insert(b.to_string()) {
                stack.push(b.to_string());
            }
        }
    }
    out
}

/// Back-door criterion by definition: no element of `z` descends from `x`, and
/// `z` separates `x` from `y` once the edges out of `x` are deleted.
pub fn backdoor_oracle(g: &CausalGraph, z: &[String], x: &str, y: &str) -> bool {
    let desc = descendants(g, x);
    if z.iter().any(|v| desc.contains(v)) {
        return false;
    }
    let mut b = GraphBuilder::new("cut");
    for n in g.nodes() {
        b.push_node(n.clone());
    }
    for (a, c) in g.edges() {
        if a != x {
            b.push_edge(a, c);
        }
    }
    moral_dsep(&b.build().unwrap(), &[x.to_string()], &[y.to_string()], z)
}

/// All inclusion-minimal observed sets satisfying the back-door criterion,
/// sorted by size and then by declaration index.
pub fn brute_minimal_backdoor(g: &CausalGraph, x: &str, y: &str) -> Vec<Vec<String>> {
    let pool: Vec<String> = g
        .nodes()
        .iter()
        .filter(|n| n.kind.is_observed() && n.name != x && n.name != y)
        .map(|n| n.name.clone())
        .collect();
    brute_minimal_backdoor_in(g, x, y, &pool)
}

/// As [`brute_minimal_backdoor`], drawing candidates from `pool` (in the given order).
pub fn brute_minimal_backdoor_in(g: &CausalGraph, x: &str, y: &str, pool: &[String]) -> Vec<Vec<String>> {
    let mut ok: Vec<u32> = Vec::new();
    for mask in 0u32..(1 << pool.len()) {
        let z: Vec<String> = (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i].clone()).collect();
        if backdoor_oracle(g, &z, x, y) {
            ok.push(mask);
        }
    }
    let minimal: Vec<u32> = ok.iter().copied().filter(|&m| !ok.iter().any(|&o| o != m && o & m == o)).collect();
    let mut sets: Vec<(u32, Vec<usize>)> =
        minimal.into_iter().map(|m| (m.count_ones(), (0..pool.len()).filter(|i| m >> i & 1 == 1).collect())).collect();
    sets.sort();
    sets.into_iter().map(|(_, idx)| idx.into_iter().map(|i| pool[i].clone()).collect()).collect()
}

/// Every subset of `items` with at most `k` elements.
pub fn subsets_up_to(items: &[String], k: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for item in items {
        let extended: Vec<Vec<String>> =
            out.iter().filter(|s| s.len() < k).map(|s| s.iter().cloned().chain([item.clone()]).collect()).collect();
        out.extend(extended);
    }
    out
}

// ---------------------------------------------------------------------------
// Documents and their evaluation

fn domain_table(doc: &ScmDocument) -> BTreeMap<String, Vec<String>> {
    let mut t: BTreeMap<String, Vec<String>> = BTreeMap::new();
    t.insert("bool".into(), vec!["false".into(), "true".into()]);
    for d in &doc.domains {
        t.insert(d.name.clone(), d.values.clone());
    }
    t
}

fn eval_expr(e: &Expr, env: &BTreeMap<String, String>) -> String {
    let b = |s: String| s == "true";
    let s = |v: bool| v.to_string();
    match e {
        Expr::Lit { value } => value.clone(),
        Expr::Var { name } => env[name].clone(),
        Expr::Not { arg } => s(!b(eval_expr(arg, env))),
        Expr::And { lhs, rhs } => s(b(eval_expr(lhs, env)) && b(eval_expr(rhs, env))),
        Expr::Or { lhs, rhs } => s(b(eval_expr(lhs, env)) || b(eval_expr(rhs, env))),
        Expr::Eq { lhs, rhs } => s(eval_expr(lhs, env) == eval_expr(rhs, env)),
        Expr::If { cond, then, otherwise } => {
            if b(eval_expr(cond, env)) {
                eval_expr(then, env)
            } else {
                eval_expr(otherwise, env)
            }
        }
    }
}

/// Evaluates a document in declaration order under root values `u` and the
/// intervention `set`.
pub fn oracle_eval(
    doc: &ScmDocument,
    u: &BTreeMap<String, String>,
    set: &BTreeMap<String, String>,
) -> BTreeMap<String, String> {
    let mut env: BTreeMap<String, String> = BTreeMap::new();
    for d in &doc.nodes {
        let value = if let Some(v) = set.get(&d.name) {
            v.clone()
        } else {
            match d.kind {
                DeclKind::Exogenous | DeclKind::Latent => u[&d.name].clone(),
                DeclKind::Proxy => env[d.principal.as_ref().unwrap()].clone(),
                DeclKind::Endogenous => {
                    let f = d.function.as_ref().unwrap();
                    match &f.body {
                        FunctionBody::Expr { expr } => eval_expr(expr, &env),
                        FunctionBody::Table { rows } => {
                            let key: Vec<&String> = f.parents.iter().map(|p| &env[p]).collect();
                            rows.iter().find(|r| r.inputs.iter().collect::<Vec<_>>() == key).unwrap().output.clone()
                        }
                        FunctionBody::Unspecified => panic!("oracle needs specified functions"),
                    }
                }
            }
        };
        env.insert(d.name.clone(), value);
    }
    env
}

/// Every total assignment of the document's roots.
pub fn all_root_assignments(doc: &ScmDocument) -> Vec<BTreeMap<String, String>> {
    let domains = domain_table(doc);
    let mut out = vec![BTreeMap::new()];
    for d in doc.nodes.iter().filter(|d| matches!(d.kind, DeclKind::Exogenous | DeclKind::Latent)) {
        out = out
            .into_iter()
            .flat_map(|a| {
                domains[&d.domain].iter().map(move |v| {
                    let mut a = a.clone();
                    a.insert(d.name.clone(), v.clone());
                    a
                })
            })
            .collect();
    }
    out
}

/// Counterfactual by exhaustive enumeration: the set of values each query
/// takes under `set` across all root assignments matching `evidence`.
pub fn oracle_counterfactual(
    doc: &ScmDocument,
    evidence: &BTreeMap<String, String>,
    set: &BTreeMap<String, String>,
    query: &[&str],
) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = query.iter().map(|q| (q.to_string(), BTreeSet::new())).collect();
    for u in all_root_assignments(doc) {
        let world = oracle_eval(doc, &u, &BTreeMap::new());
        if evidence.iter().all(|(k, v)| &world[k] == v) {
            let after = oracle_eval(doc, &u, set);
            for q in query {
                out.get_mut(*q).unwrap().insert(after[*q].clone());
            }
        }
    }
    out
}

pub fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Random valid document mixing root kinds, expression and table functions,
/// a three-valued domain, proxies and labels.
pub fn random_document(rng: &mut ChaCha8Rng, idx: usize) -> ScmDocument {
    let level = Domain::new("level", vec!["lo".into(), "mid".into(), "hi".into()]).unwrap();
    let n = rng.gen_range(2..=7);
    let mut nodes: Vec<NodeDecl> = Vec::new();
    let mut doms: Vec<&str> = Vec::new();
    for i in 0..n {
        let name = format!("N{i}");
        let mut dom = if rng.gen_bool(0.25) { "level" } else { "bool" };
        let earlier: Vec<usize> = (0..i).collect();
        let latent_principals: Vec<usize> = (0..i)
            .filter(|&k| {
                nodes[k].kind == DeclKind::Latent
                    && !nodes.iter().any(|d| d.principal.as_deref() == Some(nodes[k].name.as_str()))
            })
            .collect();
        let roll = rng.gen_range(0..10);
        let mut decl = if i == 0 || roll < 2 {
            NodeDecl::root(&name, if rng.gen_bool(0.3) { DeclKind::Latent } else { DeclKind::Exogenous }, dom)
        } else if roll == 2 && !latent_principals.is_empty() {
            let p = *latent_principals.choose(rng).unwrap();
            dom = doms[p];
            NodeDecl::proxy(&name, nodes[p].name.clone(), dom)
        } else if roll < 5 {
            let k = rng.gen_range(1..=earlier.len().min(2));
            let parents: Vec<usize> =
                earlier.choose_multiple(rng, k).copied().collect::<BTreeSet<_>>().into_iter().collect();
            let values = |d: &str| -> Vec<String> {
                if d == "level" {
                    level.values.clone()
                } else {
                    vec!["false".into(), "true".into()]
                }
            };
            let mut rows = vec![Vec::<String>::new()];
            for &p in &parents {
                rows = rows
                    .into_iter()
                    .flat_map(|r| values(doms[p]).into_iter().map(move |v| [r.clone(), vec![v]].concat()))
                    .collect();
            }
            let outs = values(dom);
            let rows =
                rows.into_iter().map(|inputs| TableRow { inputs, output: outs.choose(rng).unwrap().clone() }).collect();
            NodeDecl::endogenous(
                &name,
                dom,
                FunctionBodySpec::Table(parents.iter().map(|&p| nodes[p].name.clone()).collect(), rows),
            )
        } else {
            let expr = random_expr(rng, &nodes, &doms, dom, 3);
            NodeDecl::endogenous(&name, dom, FunctionBodySpec::Expr(expr))
        };
        if rng.gen_bool(0.3) {
            decl = decl.with_label(format!("node {i} \"q\""));
        }
        nodes.push(decl);
        doms.push(dom);
    }
    ScmDocument { name: format!("gen{idx}"), domains: vec![level], nodes }
}

fn random_expr(rng: &mut ChaCha8Rng, nodes: &[NodeDecl], doms: &[&str], want: &str, depth: u32) -> Expr {
    let vars: Vec<usize> = (0..nodes.len()).filter(|&k| doms[k] == want).collect();
    let leaf = |rng: &mut ChaCha8Rng| -> Expr {
        if !vars.is_empty() && rng.gen_bool(0.8) {
            Expr::var(nodes[*vars.choose(rng).unwrap()].name.clone())
        } else if want == "level" {
            Expr::lit(["lo", "mid", "hi"][rng.gen_range(0..3)])
        } else {
            Expr::lit(if rng.gen_bool(0.5) { "true" } else { "false" })
        }
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    if want == "level" {
        return Expr::ite(
            random_expr(rng, nodes, doms, "bool", depth - 1),
            random_expr(rng, nodes, doms, "level", depth - 1),
            random_expr(rng, nodes, doms, "level", depth - 1),
        );
    }
    match rng.gen_range(0..5) {
        0 => Expr::not(random_expr(rng, nodes, doms, "bool", depth - 1)),
        1 => Expr::and(
            random_expr(rng, nodes, doms, "bool", depth - 1),
            random_expr(rng, nodes, doms, "bool", depth - 1),
        ),
        2 => {
            Expr::or(random_expr(rng, nodes, doms, "bool", depth - 1), random_expr(rng, nodes, doms, "bool", depth - 1))
        }
        3 => {
            let d = if rng.gen_bool(0.5) { "level" } else { "bool" };
            let lhs = random_expr(rng, nodes, doms, d, depth - 1);
            let rhs = random_expr(rng, nodes, doms, d, depth - 1);
            if matches!((&lhs, &rhs), (Expr::Lit { .. }, Expr::Lit { .. })) && d == "level" {
                Expr::lit("true")
            } else {
                Expr::eq(lhs, rhs)
            }
        }
        _ => Expr::ite(
            random_expr(rng, nodes, doms, "bool", depth - 1),
            random_expr(rng, nodes, doms, "bool", depth - 1),
            random_expr(rng, nodes, doms, "bool", depth - 1),
        ),
    }
}
