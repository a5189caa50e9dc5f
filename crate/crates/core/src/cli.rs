// SPDX-License-Identifier: MIT
//! The `causal-account` command-line front end.
//!
//! Exit codes: 0 on success, 1 for a negative verdict (always for `check`,
//! and for the other analyses under `--check`), 2 for usage, input and
//! analysis errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path as FsPath;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::identify::{self, IdentificationReport, IdentifyError, IdentifyOptions};
use crate::limits::Limits;
use crate::modelio::{self, ModelIoError};
use crate::models;
use crate::patterns::{self, Pattern, PatternMatch, Verdict};
use crate::scm::{Assignment, Scm};

#[derive(Debug, Parser)]
#[command(name = "causal-account", version, about = "Causal models for accountability analysis")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Exit with status 1 when an analysis answers negatively.
    #[arg(long, global = true)]
    pub check: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Then {
    Eval,
    Export,
}

type Pair = (String, String);

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model.
    Validate { model: String },
    /// Evaluate every variable from exogenous values.
    Eval {
        model: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        set: Vec<Pair>,
    },
    /// List the worlds consistent with the evidence.
    Worlds {
        model: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        evidence: Vec<Pair>,
    },
    /// Intervene, then evaluate or export the mutilated model.
    Do {
        model: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        set: Vec<Pair>,
        #[arg(long, value_enum)]
        then: Then,
        /// Exogenous values for `--then eval`; unspecified ones range over their domain.
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        exo: Vec<Pair>,
    },
    /// Counterfactual query by abduction, action and prediction.
    Cf {
        model: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        evidence: Vec<Pair>,
        #[arg(long = "do", value_delimiter = ',', value_parser = parse_pair, value_name = "N=V")]
        set: Vec<Pair>,
        #[arg(long, value_delimiter = ',', required = true, value_name = "N")]
        query: Vec<String>,
    },
    /// d-separation test.
    Dsep {
        model: String,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Back-door paths and adjustment sets, or test a given set with `--z`.
    Backdoor {
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        z: Option<Vec<String>>,
        #[arg(long)]
        trust_proxies: bool,
    },
    /// Front-door sets, or test a given set with `--z`.
    Frontdoor {
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        z: Option<Vec<String>>,
    },
    /// Full identification report.
    Identify {
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        trust_proxies: bool,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        allowed: Option<Vec<String>>,
    },
    /// Variables to log so the effect of x on y is identifiable.
    Logset {
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        allowed: Option<Vec<String>>,
        #[arg(long)]
        trust_proxies: bool,
    },
    /// Find the bindings of an accountability pattern.
    Match {
        model: String,
        /// `lindberg`, `raci`, or a pattern file.
        #[arg(long)]
        pattern: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "ROLE=NODE")]
        hint: Vec<Pair>,
    },
    /// Match a pattern and decide whether its agent is accountable for its effect.
    Check {
        model: String,
        #[arg(long)]
        pattern: String,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "ROLE=NODE")]
        hint: Vec<Pair>,
        #[arg(long)]
        trust_proxies: bool,
    },
    /// Render the model as model text, JSON or DOT.
    Export {
        model: String,
        /// Fill the nodes of the first match of this pattern.
        #[arg(long, value_name = "PATTERN")]
        highlight_match: Option<String>,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair, value_name = "ROLE=NODE")]
        hint: Vec<Pair>,
    },
}

fn parse_pair(s: &str) -> Result<Pair, String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, found `{s}`"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected NAME=VALUE, found `{s}`"));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Error reported with exit status 2.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }
}

macro_rules! failure_from {
    ($($t:ty => $kind:literal),* $(,)?) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new($kind, e.to_string())
            }
        }
    )*};
}

failure_from!(
    crate::scm::ScmError => "ModelError",
    crate::graph::GraphError => "GraphError",
    IdentifyError => "IdentifyError",
    patterns::PatternError => "PatternError",
    std::io::Error => "IoError",
);

/// What a subcommand produced: output text plus whether the answer was negative.
struct Outcome {
    text: String,
    negative: bool,
}

impl Outcome {
    fn new(text: String, negative: bool) -> Self {
        Self { text, negative }
    }
}

/// Runs one invocation, writing to `out` and `err`; returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let limits = Limits::from_env();
    let always_fail_negative = matches!(cli.command, Command::Check { .. });
    match execute(&cli, &limits) {
        Ok(o) => {
            let _ = out.write_all(o.text.as_bytes());
            if o.negative && (cli.check || always_fail_negative) {
                1
            } else {
                0
            }
        }
        Err(f) => {
            if cli.format == Format::Json {
                let _ = out.write_all(modelio::to_json(&json!({ "error": f.kind, "message": f.message })).as_bytes());
            } else {
                let _ = writeln!(err, "error: {}", f.message);
            }
            2
        }
    }
}

fn load_model(arg: &str) -> Result<Scm, Failure> {
    let path = FsPath::new(arg);
    let located = |e: ModelIoError| {
        let message = match e.span() {
            Some(s) => format!("{arg}:{}:{}: {e}", s.line, s.column),
            None => format!("{arg}: {e}"),
        };
        Failure::new(if matches!(e, ModelIoError::Schema { .. }) { "SchemaError" } else { "ParseError" }, message)
    };
    if !path.exists() {
        if let Some(text) = models::bundled_source(arg) {
            return modelio::parse_model(text).map_err(located);
        }
        return Err(Failure::new("IoError", format!("{arg}: no such file or bundled model")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new("IoError", format!("{arg}: {e}")))?;
    if path.extension().is_some_and(|e| e == "json") {
        modelio::from_json(&text).map_err(located)
    } else {
        modelio::parse_model(&text).map_err(located)
    }
}

fn load_pattern(arg: &str) -> Result<Pattern, Failure> {
    if let Some(p) = patterns::builtin_pattern(arg) {
        return Ok(p);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Failure::new("IoError", format!("{arg}: not a builtin pattern and unreadable ({e})")))?;
    let parsed = if arg.ends_with(".json") { modelio::from_json(&text) } else { modelio::parse_pattern(&text) };
    parsed.map_err(|e| {
        let message = match e.span() {
            Some(s) => format!("{arg}:{}:{}: {e}", s.line, s.column),
            None => format!("{arg}: {e}"),
        };
        Failure::new("ParseError", message)
    })
}

fn assignment(pairs: &[Pair]) -> Assignment {
    pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
}

fn hints(pairs: &[Pair]) -> BTreeMap<String, String> {
    pairs.iter().cloned().collect()
}

fn set_text(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

fn json_text<T: Serialize>(v: &T) -> String {
    modelio::to_json(v)
}

fn no_dot(cmd: &str) -> Failure {
    Failure::new("UsageError", format!("`{cmd}` supports --format text or json"))
}

fn execute(cli: &Cli, limits: &Limits) -> Result<Outcome, Failure> {
    let fmt = cli.format;
    let ident = |trust: bool| IdentifyOptions { trust_proxies: trust, limits: *limits };
    match &cli.command {
        Command::Validate { model } => {
            let m = load_model(model)?;
            let text = match fmt {
                Format::Json => json_text(&m),
                Format::Dot => modelio::to_dot(m.graph(), None),
                Format::Text => {
                    let g = m.graph();
                    let latent = g.nodes().iter().filter(|n| !n.kind.is_observed()).count();
                    format!(
                        "valid: model {}\nvariables: {}\nedges: {}\nlatent: {}\nfully specified: {}\n",
                        m.name(),
                        g.len(),
                        g.edge_count(),
                        latent,
                        m.is_fully_specified()
                    )
                }
            };
            Ok(Outcome::new(text, false))
        }
        Command::Eval { model, set } => {
            let m = load_model(model)?;
            let world = m.evaluate(&assignment(set))?;
            let text = match fmt {
                Format::Json => json_text(&world),
                _ => render_worlds(&m, &[world], fmt, "eval")?,
            };
            Ok(Outcome::new(text, false))
        }
        Command::Worlds { model, evidence } => {
            let m = load_model(model)?;
            let worlds = m.consistent_worlds_with_limits(&assignment(evidence), limits)?;
            let negative = worlds.is_empty();
            Ok(Outcome::new(render_worlds(&m, &worlds, fmt, "worlds")?, negative))
        }
        Command::Do { model, set, then, exo } => {
            let m = load_model(model)?.intervene(&assignment(set))?;
            match then {
                Then::Export => Ok(Outcome::new(export(&m, fmt, None), false)),
                Then::Eval => {
                    let exo = assignment(exo);
                    if let Some((k, _)) = exo.iter().find(|(k, _)| !m.graph().node(k).is_some_and(|n| n.kind.is_root()))
                    {
                        return Err(Failure::new("ModelError", format!("`{k}` is not an exogenous variable")));
                    }
                    let worlds = m.consistent_worlds_with_limits(&exo, limits)?;
                    Ok(Outcome::new(render_worlds(&m, &worlds, fmt, "do")?, false))
                }
            }
        }
        Command::Cf { model, evidence, set, query } => {
            let m = load_model(model)?;
            let ans = m.counterfactual_with_limits(&assignment(evidence), &assignment(set), query, limits)?;
            let text = match fmt {
                Format::Json => json_text(&ans),
                Format::Dot => return Err(no_dot("cf")),
                Format::Text => {
                    let parts: Vec<String> = query
                        .iter()
                        .map(|q| match ans[q].as_slice() {
                            [v] => format!("{q}={v}"),
                            vs => format!("{q}={{{}}}", vs.join(",")),
                        })
                        .collect();
                    format!("{}\n", parts.join(" "))
                }
            };
            Ok(Outcome::new(text, false))
        }
        Command::Dsep { model, x, y, given } => {
            let m = load_model(model)?;
            let sep = m.graph().d_separated(x, y, given)?;
            let text = match fmt {
                Format::Json => json_text(&json!({ "x": x, "y": y, "given": given, "d_separated": sep })),
                Format::Dot => return Err(no_dot("dsep")),
                Format::Text => format!(
                    "{} and {} given {}: {}\n",
                    set_text(x),
                    set_text(y),
                    set_text(given),
                    if sep { "d-separated" } else { "d-connected" }
                ),
            };
            Ok(Outcome::new(text, !sep))
        }
        Command::Backdoor { model, x, y, z, trust_proxies } => {
            let m = load_model(model)?;
            let g = m.graph();
            let opts = ident(*trust_proxies);
            let paths = identify::backdoor_paths_with(g, x, y, limits)?;
            match z {
                Some(z) => {
                    let ok = identify::satisfies_backdoor_with(g, z, x, y, &opts)?;
                    let text = match fmt {
                        Format::Json => json_text(&json!({
                            "treatment": x, "outcome": y, "z": z,
                            "backdoor_paths": paths, "satisfies_backdoor": ok,
                        })),
                        Format::Dot => return Err(no_dot("backdoor")),
                        Format::Text => {
                            let mut s = String::new();
                            for p in &paths {
                                let state = if g.is_blocked(p, z)? { "blocked" } else { "open" };
                                s.push_str(&format!("backdoor path: {p} ({state})\n"));
                            }
                            s.push_str(&format!("satisfies back-door criterion {}: {ok}\n", set_text(z)));
                            s
                        }
                    };
                    Ok(Outcome::new(text, !ok))
                }
                None => {
                    let sets = identify::minimal_backdoor_sets_with::<&str>(g, x, y, None, &opts)?;
                    let text = match fmt {
                        Format::Json => json_text(&json!({
                            "treatment": x, "outcome": y,
                            "backdoor_paths": paths, "minimal_backdoor_sets": sets,
                        })),
                        Format::Dot => return Err(no_dot("backdoor")),
                        Format::Text => {
                            let mut s = String::new();
                            for p in &paths {
                                s.push_str(&format!("backdoor path: {p}\n"));
                            }
                            if sets.is_empty() {
                                s.push_str("minimal set: none\n");
                            }
                            for set in &sets {
                                s.push_str(&format!("minimal set: {}\n", set_text(set)));
                            }
                            s
                        }
                    };
                    Ok(Outcome::new(text, sets.is_empty()))
                }
            }
        }
        Command::Frontdoor { model, x, y, z } => {
            let m = load_model(model)?;
            let g = m.graph();
            match z {
                Some(z) => {
                    let ok = identify::satisfies_frontdoor_with(g, z, x, y, limits)?;
                    let text = match fmt {
                        Format::Json => {
                            json_text(&json!({ "treatment": x, "outcome": y, "z": z, "satisfies_frontdoor": ok }))
                        }
                        Format::Dot => return Err(no_dot("frontdoor")),
                        Format::Text => format!("satisfies front-door criterion {}: {ok}\n", set_text(z)),
                    };
                    Ok(Outcome::new(text, !ok))
                }
                None => {
                    let report = identify::identify_with::<&str>(g, x, y, None, &ident(false))?;
                    let sets = report.frontdoor_sets;
                    let text = match fmt {
                        Format::Json => json_text(&json!({ "treatment": x, "outcome": y, "frontdoor_sets": sets })),
                        Format::Dot => return Err(no_dot("frontdoor")),
                        Format::Text => {
                            if sets.is_empty() {
                                "frontdoor set: none\n".to_string()
                            } else {
                                sets.iter().map(|s| format!("frontdoor set: {}\n", set_text(s))).collect()
                            }
                        }
                    };
                    Ok(Outcome::new(text, sets.is_empty()))
                }
            }
        }
        Command::Identify { model, x, y, trust_proxies, allowed } => {
            let m = load_model(model)?;
            let report = identify::identify_with(m.graph(), x, y, allowed.as_deref(), &ident(*trust_proxies))?;
            let text = match fmt {
                Format::Json => json_text(&report),
                Format::Dot => return Err(no_dot("identify")),
                Format::Text => report_text(&report),
            };
            Ok(Outcome::new(text, !report.status.is_identifiable()))
        }
        Command::Logset { model, x, y, allowed, trust_proxies } => {
            let m = load_model(model)?;
            let g = m.graph();
            match identify::logging_set_with(g, x, y, allowed.as_deref(), &ident(*trust_proxies)) {
                Ok(rec) => {
                    let text = match fmt {
                        Format::Json => json_text(&rec),
                        Format::Dot => return Err(no_dot("logset")),
                        Format::Text => {
                            let labels: Vec<&str> = rec
                                .must_log
                                .iter()
                                .map(|n| g.node(n).map_or(n.as_str(), |n| n.display_name()))
                                .collect();
                            let mut s = format!("must log: {}\n", set_text(&rec.must_log));
                            s.push_str(&format!("labels: {}\n", labels.join(", ")));
                            s.push_str(&format!("adjustment set: {}\n", set_text(&rec.adjustment_set_used)));
                            for r in &rec.rationale {
                                s.push_str(&format!("reason: {r}\n"));
                            }
                            s
                        }
                    };
                    Ok(Outcome::new(text, false))
                }
                Err(IdentifyError::NotIdentifiable(report)) => {
                    let text = match fmt {
                        Format::Json => json_text(&json!({ "error": "NotIdentifiable", "report": report })),
                        Format::Dot => return Err(no_dot("logset")),
                        Format::Text => {
                            format!("not identifiable: no admissible adjustment set\n{}", report_text(&report))
                        }
                    };
                    Ok(Outcome::new(text, true))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Match { model, pattern, hint } => {
            let m = load_model(model)?;
            let p = load_pattern(pattern)?;
            let g = m.graph();
            let matches = patterns::match_pattern_with(g, &p, &hints(hint), limits)?;
            let text = match fmt {
                Format::Json => json_text(&matches),
                Format::Dot => {
                    let first = matches.first().ok_or_else(|| Failure::new("PatternError", "no match to highlight"))?;
                    modelio::to_dot(g, Some(first))
                }
                Format::Text => {
                    let mut s = String::new();
                    for (i, mt) in matches.iter().enumerate() {
                        s.push_str(&format!("match {}: {}\n", i + 1, mt.describe(&p)));
                        for w in &mt.witness_paths {
                            s.push_str(&format!("  {} -> {}: {}\n", w.from, w.to, w.path));
                        }
                    }
                    if matches.is_empty() {
                        s.push_str(&format!("no match for pattern {}\n", p.name()));
                        if let Err(e) = patterns::check_arity(g, &p) {
                            s.push_str(&format!("note: {e}\n"));
                        }
                    }
                    s
                }
            };
            Ok(Outcome::new(text, matches.is_empty()))
        }
        Command::Check { model, pattern, hint, trust_proxies } => {
            let m = load_model(model)?;
            let p = load_pattern(pattern)?;
            let g = m.graph();
            let matches = patterns::match_pattern_with(g, &p, &hints(hint), limits)?;
            let Some(first) = matches.first() else {
                let text = match fmt {
                    Format::Json => {
                        json_text(&json!({ "pattern": p.name(), "verdict": "NotAttributable", "match": null }))
                    }
                    Format::Dot => return Err(no_dot("check")),
                    Format::Text => format!("pattern: {}\nno match\nverdict: NotAttributable\n", p.name()),
                };
                return Ok(Outcome::new(text, true));
            };
            let report = patterns::check_accountability_with(g, &p, first, &ident(*trust_proxies))?;
            let negative = report.verdict == Verdict::NotAttributable;
            let text = match fmt {
                Format::Json => json_text(&report),
                Format::Dot => modelio::to_dot(g, Some(first)),
                Format::Text => {
                    let mut s = format!("pattern: {}\nmatch: {}\n", p.name(), first.describe(&p));
                    if matches.len() > 1 {
                        s.push_str(&format!(
                            "note: {} matches; checked the first (add --hint to choose)\n",
                            matches.len()
                        ));
                    }
                    s.push_str(&format!("agent: {}\neffect: {}\n", report.agent, report.effect));
                    s.push_str(&format!("admissible controls: {}\n", set_text(&report.admissible_controls)));
                    s.push_str(&format!("status: {}\n", report.identification.status));
                    for set in &report.identification.minimal_backdoor_sets {
                        s.push_str(&format!("adjustment set: {}\n", set_text(set)));
                    }
                    for n in &report.identification.notes {
                        s.push_str(&format!("note: {n}\n"));
                    }
                    s.push_str(&format!("verdict: {}\n", report.verdict));
                    if let Some(log) = &report.logging {
                        s.push_str(&format!("must log: {}\n", set_text(&log.must_log)));
                    }
                    s
                }
            };
            Ok(Outcome::new(text, negative))
        }
        Command::Export { model, highlight_match, hint } => {
            let m = load_model(model)?;
            let highlight = match highlight_match {
                None => None,
                Some(arg) => {
                    let p = load_pattern(arg)?;
                    let found = patterns::match_pattern_with(m.graph(), &p, &hints(hint), limits)?;
                    Some(found.into_iter().next().ok_or_else(|| {
                        Failure::new("PatternError", format!("pattern {} has no match to highlight", p.name()))
                    })?)
                }
            };
            Ok(Outcome::new(export(&m, fmt, highlight.as_ref()), false))
        }
    }
}

fn export(m: &Scm, fmt: Format, highlight: Option<&PatternMatch>) -> String {
    match fmt {
        Format::Text => modelio::to_dsl(m),
        Format::Json => json_text(m),
        Format::Dot => modelio::to_dot(m.graph(), highlight),
    }
}

fn render_worlds(m: &Scm, worlds: &[Assignment], fmt: Format, cmd: &str) -> Result<String, Failure> {
    Ok(match fmt {
        Format::Json => json_text(&worlds),
        Format::Dot => return Err(no_dot(cmd)),
        Format::Text if worlds.is_empty() => "no consistent world\n".to_string(),
        Format::Text => worlds.iter().map(|w| format!("{}\n", m.format_assignment(w))).collect(),
    })
}

fn report_text(r: &IdentificationReport) -> String {
    let mut s = format!("treatment: {}\noutcome: {}\n", r.treatment, r.outcome);
    for p in &r.backdoor_paths {
        s.push_str(&format!("backdoor path: {p}\n"));
    }
    for set in &r.minimal_backdoor_sets {
        s.push_str(&format!("backdoor set: {}\n", set_text(set)));
    }
    for set in &r.frontdoor_sets {
        s.push_str(&format!("frontdoor set: {}\n", set_text(set)));
    }
    s.push_str(&format!("status: {}\n", r.status));
    for n in &r.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}
