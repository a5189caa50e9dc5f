// SPDX-License-Identifier: MIT
//! Graphical identification of causal effects.
//!
//! Back-door and front-door criteria, enumeration of inclusion-minimal
//! adjustment sets, confounding detection and logging-set selection. Latent
//! nodes never appear in an adjustment set. Sets are reported in
//! declaration order and enumerated by size, then lexicographically by
//! declaration index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{is_blocked_ids, triple_blocks, CausalGraph, Direction, GraphError, Path, PathMode};
use crate::limits::Limits;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("treatment and outcome must differ (both are `{0}`)")]
    SameNode(String),
    #[error("adjustment candidate pool of {pool} variables exceeds the cap of {cap}")]
    EnumerationLimit { pool: usize, cap: usize },
    #[error("no admissible adjustment set for the effect of `{}` on `{}`", .0.treatment, .0.outcome)]
    NotIdentifiable(Box<IdentificationReport>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdentificationStatus {
    IdentifiableBackdoor,
    IdentifiableFrontdoor,
    NotIdentifiableByCriteria,
}

impl IdentificationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IdentificationStatus::IdentifiableBackdoor => "IdentifiableBackdoor",
            IdentificationStatus::IdentifiableFrontdoor => "IdentifiableFrontdoor",
            IdentificationStatus::NotIdentifiableByCriteria => "NotIdentifiableByCriteria",
        }
    }

    pub fn is_identifiable(self) -> bool {
        self != IdentificationStatus::NotIdentifiableByCriteria
    }
}

impl std::fmt::Display for IdentificationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationReport {
    pub treatment: String,
    pub outcome: String,
    pub backdoor_paths: Vec<Path>,
    pub minimal_backdoor_sets: Vec<Vec<String>>,
    pub frontdoor_sets: Vec<Vec<String>>,
    pub status: IdentificationStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoggingRecommendation {
    pub must_log: Vec<String>,
    pub adjustment_set_used: Vec<String>,
    /// One line per variable of the model, in declaration order.
    pub rationale: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdentifyOptions {
    /// Let a declared proxy in a conditioning set stand in for its latent principal.
    pub trust_proxies: bool,
    pub limits: Limits,
}

/// Every path from `x` to `y` whose first edge points into `x`, in
/// lexicographic order of node indices.
pub fn backdoor_paths(g: &CausalGraph, x: &str, y: &str) -> Result<Vec<Path>, IdentifyError> {
    backdoor_paths_with(g, x, y, &Limits::default())
}

pub fn backdoor_paths_with(g: &CausalGraph, x: &str, y: &str, limits: &Limits) -> Result<Vec<Path>, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    Ok(g.collect_paths(xi, yi, PathMode::Any, Some(Direction::Backward), limits.max_paths)?)
}

pub fn satisfies_backdoor<S: AsRef<str>>(g: &CausalGraph, z: &[S], x: &str, y: &str) -> Result<bool, IdentifyError> {
    satisfies_backdoor_with(g, z, x, y, &IdentifyOptions::default())
}

/// No latent node and no descendant of `x` in `z`, and `z` blocks every
/// back-door path from `x` to `y`.
pub fn satisfies_backdoor_with<S: AsRef<str>>(
    g: &CausalGraph,
    z: &[S],
    x: &str,
    y: &str,
    opts: &IdentifyOptions,
) -> Result<bool, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let zs = conditioning(g, z, xi, yi)?;
    let desc = g.descendants_mask(&[xi]);
    backdoor_ids(g, &zs, xi, yi, &desc, opts)
}

fn backdoor_ids(
    g: &CausalGraph,
    zs: &[usize],
    x: usize,
    y: usize,
    desc_x: &[bool],
    opts: &IdentifyOptions,
) -> Result<bool, IdentifyError> {
    if zs.iter().any(|&v| !g.kind_of(v).is_observed() || desc_x[v]) {
        return Ok(false);
    }
    let eff = effective(g, zs, opts.trust_proxies);
    let in_z = g.mask_of(&eff);
    let an_z = g.ancestors_mask(&eff);
    Ok(!g.has_open_path(x, &[y], Some(Direction::Backward), &in_z, &an_z, opts.limits.max_paths)?)
}

/// Inclusion-minimal back-door sets drawn from the observed non-descendants of `x`.
pub fn minimal_backdoor_sets(g: &CausalGraph, x: &str, y: &str) -> Result<Vec<Vec<String>>, IdentifyError> {
    minimal_backdoor_sets_with::<&str>(g, x, y, None, &IdentifyOptions::default())
}

/// As [`minimal_backdoor_sets`], with candidates restricted to `allowed` when given.
pub fn minimal_backdoor_sets_with<S: AsRef<str>>(
    g: &CausalGraph,
    x: &str,
    y: &str,
    allowed: Option<&[S]>,
    opts: &IdentifyOptions,
) -> Result<Vec<Vec<String>>, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let allowed = allowed.map(|a| g.resolve_all(a)).transpose()?;
    let sets = minimal_backdoor_ids(g, xi, yi, allowed.as_deref(), opts)?;
    Ok(sets.iter().map(|s| to_names(g, s)).collect())
}

fn minimal_backdoor_ids(
    g: &CausalGraph,
    x: usize,
    y: usize,
    allowed: Option<&[usize]>,
    opts: &IdentifyOptions,
) -> Result<Vec<Vec<usize>>, IdentifyError> {
    let desc = g.descendants_mask(&[x]);
    let pool: Vec<usize> = (0..g.len())
        .filter(|&v| v != x && v != y && g.kind_of(v).is_observed() && !desc[v])
        .filter(|v| allowed.is_none_or(|a| a.contains(v)))
        .collect();
    if pool.len() > opts.limits.max_adjustment_pool {
        return Err(IdentifyError::EnumerationLimit { pool: pool.len(), cap: opts.limits.max_adjustment_pool });
    }
    minimal_sets(&pool, pool.len(), |s| backdoor_ids(g, s, x, y, &desc, opts))
}

/// Inclusion-minimal subsets of `pool` (up to `max_size`) accepted by `test`,
/// by size and then lexicographically.
fn minimal_sets(
    pool: &[usize],
    max_size: usize,
    mut test: impl FnMut(&[usize]) -> Result<bool, IdentifyError>,
) -> Result<Vec<Vec<usize>>, IdentifyError> {
    let mut found: Vec<Vec<usize>> = Vec::new();
    for k in 0..=max_size.min(pool.len()) {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let set: Vec<usize> = combo.iter().map(|&i| pool[i]).collect();
            let dominated = found.iter().any(|f| f.iter().all(|v| set.contains(v)));
            if !dominated && test(&set)? {
                found.push(set);
            }
            if !next_combination(&mut combo, pool.len()) {
                break;
            }
        }
    }
    Ok(found)
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

pub fn satisfies_frontdoor<S: AsRef<str>>(g: &CausalGraph, z: &[S], x: &str, y: &str) -> Result<bool, IdentifyError> {
    satisfies_frontdoor_with(g, z, x, y, &Limits::default())
}

/// All of `z` observed, and:
/// 1. every directed path from `x` to `y` passes through `z`;
/// 2. no back-door path from `x` to a member of `z` is open given the empty set;
/// 3. every back-door path from a member of `z` to `y` is blocked by `{x}`.
pub fn satisfies_frontdoor_with<S: AsRef<str>>(
    g: &CausalGraph,
    z: &[S],
    x: &str,
    y: &str,
    limits: &Limits,
) -> Result<bool, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let zs = conditioning(g, z, xi, yi)?;
    frontdoor_ids(g, &zs, xi, yi, limits)
}

fn frontdoor_ids(g: &CausalGraph, zs: &[usize], x: usize, y: usize, limits: &Limits) -> Result<bool, IdentifyError> {
    if zs.iter().any(|&v| !g.kind_of(v).is_observed()) {
        return Ok(false);
    }
    if directed_path_avoiding(g, x, y, zs) {
        return Ok(false);
    }
    let none = vec![false; g.len()];
    for &z in zs {
        if g.has_open_path(x, &[z], Some(Direction::Backward), &none, &none, limits.max_paths)? {
            return Ok(false);
        }
    }
    let in_x = g.mask_of(&[x]);
    let an_x = g.ancestors_mask(&[x]);
    for &z in zs {
        if g.has_open_path(z, &[y], Some(Direction::Backward), &in_x, &an_x, limits.max_paths)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn directed_path_avoiding(g: &CausalGraph, x: usize, y: usize, zs: &[usize]) -> bool {
    let mut seen = g.mask_of(zs);
    let mut stack = vec![x];
    seen[x] = true;
    while let Some(v) = stack.pop() {
        for &c in g.child_ids(v) {
            if c == y {
                return true;
            }
            if !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    false
}

/// Observed nodes strictly between `x` and `y` on some directed path.
fn mediators(g: &CausalGraph, x: usize, y: usize) -> Vec<usize> {
    let desc = g.descendants_mask(&[x]);
    let anc = g.ancestors_mask(&[y]);
    (0..g.len()).filter(|&v| v != x && v != y && desc[v] && anc[v]).collect()
}

fn frontdoor_sets_ids(g: &CausalGraph, x: usize, y: usize, limits: &Limits) -> Result<Vec<Vec<usize>>, IdentifyError> {
    let pool: Vec<usize> = mediators(g, x, y).into_iter().filter(|&v| g.kind_of(v).is_observed()).collect();
    minimal_sets(&pool, limits.max_frontdoor_size, |s| frontdoor_ids(g, s, x, y, limits))
}

/// Whether some back-door path from `x` to `y` is open given the empty set.
pub fn confounded(g: &CausalGraph, x: &str, y: &str) -> Result<bool, IdentifyError> {
    confounded_with(g, x, y, &Limits::default())
}

pub fn confounded_with(g: &CausalGraph, x: &str, y: &str, limits: &Limits) -> Result<bool, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let none = vec![false; g.len()];
    Ok(g.has_open_path(xi, &[yi], Some(Direction::Backward), &none, &none, limits.max_paths)?)
}

pub fn identify(g: &CausalGraph, x: &str, y: &str) -> Result<IdentificationReport, IdentifyError> {
    identify_with::<&str>(g, x, y, None, &IdentifyOptions::default())
}

/// Back-door paths, minimal back-door sets (drawn from `allowed` when
/// given), minimal front-door sets and the resulting status.
pub fn identify_with<S: AsRef<str>>(
    g: &CausalGraph,
    x: &str,
    y: &str,
    allowed: Option<&[S]>,
    opts: &IdentifyOptions,
) -> Result<IdentificationReport, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let allowed = allowed.map(|a| g.resolve_all(a)).transpose()?;
    let paths = g.collect_paths(xi, yi, PathMode::Any, Some(Direction::Backward), opts.limits.max_paths)?;
    let backdoor = minimal_backdoor_ids(g, xi, yi, allowed.as_deref(), opts)?;
    let frontdoor = frontdoor_sets_ids(g, xi, yi, &opts.limits)?;
    let status = if !backdoor.is_empty() {
        IdentificationStatus::IdentifiableBackdoor
    } else if !frontdoor.is_empty() {
        IdentificationStatus::IdentifiableFrontdoor
    } else {
        IdentificationStatus::NotIdentifiableByCriteria
    };

    let mut notes = Vec::new();
    if let Some(allowed) = &allowed {
        notes.push(format!("adjustment candidates restricted to {{{}}}", g.names_of(allowed).join(", ")));
    }
    let latent: Vec<&str> = (0..g.len())
        .filter(|&v| !g.kind_of(v).is_observed() && paths.iter().any(|p| p.nodes.iter().any(|n| n == g.name_of(v))))
        .map(|v| g.name_of(v))
        .collect();
    if !latent.is_empty() {
        notes.push(format!("latent on back-door paths, cannot be adjusted for: {}", latent.join(", ")));
    }
    if opts.trust_proxies {
        for &(proxy, principal) in g.proxy_pairs() {
            if backdoor.iter().any(|s| s.contains(&proxy)) {
                notes.push(format!(
                    "PartialControl: {} stands in for latent {}; adjusting for it only partially controls for {}",
                    g.name_of(proxy),
                    g.name_of(principal),
                    g.name_of(principal)
                ));
            }
        }
    }
    if status == IdentificationStatus::NotIdentifiableByCriteria {
        notes.push(
            "neither the back-door nor the front-door criterion applies; this does not prove the effect is unidentifiable"
                .to_string(),
        );
    }
    Ok(IdentificationReport {
        treatment: x.to_string(),
        outcome: y.to_string(),
        backdoor_paths: paths,
        minimal_backdoor_sets: backdoor.iter().map(|s| to_names(g, s)).collect(),
        frontdoor_sets: frontdoor.iter().map(|s| to_names(g, s)).collect(),
        status,
        notes,
    })
}

pub fn logging_set<S: AsRef<str>>(
    g: &CausalGraph,
    x: &str,
    y: &str,
    allowed: Option<&[S]>,
) -> Result<LoggingRecommendation, IdentifyError> {
    logging_set_with(g, x, y, allowed, &IdentifyOptions::default())
}

/// Treatment, outcome, observed mediators and the first minimal back-door
/// set (smallest, then lexicographic). Fails with
/// [`IdentifyError::NotIdentifiable`] when no back-door set exists within
/// `allowed`.
pub fn logging_set_with<S: AsRef<str>>(
    g: &CausalGraph,
    x: &str,
    y: &str,
    allowed: Option<&[S]>,
    opts: &IdentifyOptions,
) -> Result<LoggingRecommendation, IdentifyError> {
    let (xi, yi) = endpoints(g, x, y)?;
    let allowed_ids = allowed.map(|a| g.resolve_all(a)).transpose()?;
    let sets = minimal_backdoor_ids(g, xi, yi, allowed_ids.as_deref(), opts)?;
    let Some(chosen) = sets.first().cloned() else {
        let mut report = identify_with(g, x, y, allowed, opts)?;
        if let Some(fd) = report.frontdoor_sets.first() {
            report.notes.push(format!(
                "front-door set {{{}}} exists; it consists of mediators, which are logged with treatment and outcome",
                fd.join(", ")
            ));
        }
        return Err(IdentifyError::NotIdentifiable(Box::new(report)));
    };

    let on_directed = g.mask_of(&mediators(g, xi, yi));
    let adjust = g.mask_of(&chosen);
    let desc_x = g.descendants_mask(&[xi]);
    let desc_y = g.descendants_mask(&[yi]);
    let eff = effective(g, &chosen, opts.trust_proxies);
    let in_z = g.mask_of(&eff);
    let an_z = g.ancestors_mask(&eff);
    let paths = g.collect_paths(xi, yi, PathMode::Any, Some(Direction::Backward), opts.limits.max_paths).ok();

    let mut must_log = Vec::new();
    let mut rationale = Vec::new();
    for v in 0..g.len() {
        let name = g.name_of(v);
        let observed = g.kind_of(v).is_observed();
        let line = if v == xi {
            format!("{name}: logged; treatment")
        } else if v == yi {
            format!("{name}: logged; outcome")
        } else if !observed {
            format!("{name}: not logged; latent, cannot be observed")
        } else if on_directed[v] {
            format!("{name}: logged; on a directed path from {x} to {y}")
        } else if adjust[v] {
            let n = paths.as_ref().map_or(0, |ps| ps.iter().filter(|p| p.nodes.iter().any(|m| m == name)).count());
            format!("{name}: logged; adjustment variable blocking {n} back-door path(s)")
        } else if desc_y[v] {
            format!("{name}: not logged; downstream of {y}")
        } else if desc_x[v] {
            format!("{name}: not logged; descendant of {x} off the directed paths to {y}")
        } else {
            match paths.as_ref() {
                None => format!("{name}: not logged; back-door paths are blocked by the adjustment set"),
                Some(ps) => match ps.iter().find(|p| p.nodes.iter().any(|m| m == name)) {
                    None => format!("{name}: not logged; on no back-door or directed path between {x} and {y}"),
                    Some(p) => {
                        format!("{name}: not logged; back-door path {p} is {}", blocking_reason(g, p, &in_z, &an_z))
                    }
                },
            }
        };
        if line.contains(": logged;") {
            must_log.push(name.to_string());
        }
        rationale.push(line);
    }
    if opts.trust_proxies {
        for &(proxy, principal) in g.proxy_pairs() {
            if adjust[proxy] {
                rationale.push(format!(
                    "PartialControl: {} stands in for latent {}",
                    g.name_of(proxy),
                    g.name_of(principal)
                ));
            }
        }
    }
    Ok(LoggingRecommendation { must_log, adjustment_set_used: to_names(g, &chosen), rationale })
}

fn blocking_reason(g: &CausalGraph, p: &Path, in_z: &[bool], an_z: &[bool]) -> String {
    let ids: Vec<usize> = p.nodes.iter().map(|n| g.index_of(n).expect("path of g")).collect();
    debug_assert!(is_blocked_ids(&ids, &p.directions, in_z, an_z));
    for (i, &v) in ids.iter().enumerate().take(ids.len() - 1).skip(1) {
        let (into, out) = (p.directions[i - 1], p.directions[i]);
        if triple_blocks(into, out, v, in_z, an_z) {
            return if into == Direction::Forward && out == Direction::Backward {
                format!("blocked at collider {}", p.nodes[i])
            } else {
                format!("blocked by adjusting for {}", p.nodes[i])
            };
        }
    }
    "blocked".to_string()
}

fn endpoints(g: &CausalGraph, x: &str, y: &str) -> Result<(usize, usize), IdentifyError> {
    let (xi, yi) = (g.require(x)?, g.require(y)?);
    if xi == yi {
        return Err(IdentifyError::SameNode(x.to_string()));
    }
    Ok((xi, yi))
}

fn conditioning<S: AsRef<str>>(g: &CausalGraph, z: &[S], x: usize, y: usize) -> Result<Vec<usize>, IdentifyError> {
    let zs = g.resolve_all(z)?;
    if let Some(&v) = zs.iter().find(|&&v| v == x || v == y) {
        return Err(GraphError::Overlap(g.name_of(v).to_string()).into());
    }
    Ok(zs)
}

/// `zs`, plus the latent principal of every proxy in `zs` when proxies are trusted.
fn effective(g: &CausalGraph, zs: &[usize], trust: bool) -> Vec<usize> {
    let mut eff = zs.to_vec();
    if trust {
        for &(proxy, principal) in g.proxy_pairs() {
            if zs.contains(&proxy) && !eff.contains(&principal) {
                eff.push(principal);
            }
        }
    }
    eff
}

fn to_names(g: &CausalGraph, ids: &[usize]) -> Vec<String> {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.iter().map(|&v| g.name_of(v).to_string()).collect()
}
