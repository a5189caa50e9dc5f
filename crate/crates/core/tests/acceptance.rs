// SPDX-License-Identifier: MIT
//! Acceptance gate: one PASS/FAIL line per criterion with its wall time.
//!
//! Each criterion carries a time budget; exceeding it counts as a failure.
//! The process exits nonzero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use causal_account::identify::{self, IdentificationStatus};
use causal_account::modelio::{from_json, parse_model, to_dsl, to_json};
use causal_account::models::{bundled, BUNDLED_MODELS};
use causal_account::patterns::{builtin_pattern, check_accountability, match_pattern, Verdict};
use causal_account::scm::{Assignment, DeclKind, Scm, ScmDocument};
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

/// Explored-prefix cap for the path-enumeration d-separation route.
const PATH_BUDGET: usize = 10_000_000;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn hints(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    map(pairs)
}

fn assignment(pairs: &[(&str, &str)]) -> Assignment {
    pairs.iter().copied().collect()
}

fn model(name: &str) -> Result<Scm, String> {
    bundled(name).ok_or_else(|| format!("bundled model `{name}` missing"))
}

fn c1_titus_intervention() -> Outcome {
    let m = model("titus")?.intervene(&assignment(&[("ED", "true")])).map_err(|e| e.to_string())?;
    for u in ["false", "true"] {
        let w = m.evaluate(&assignment(&[("I", u)])).map_err(|e| e.to_string())?;
        ensure!(w.get("BD") == Some("true"), "I={u}: BD={:?}", w.get("BD"));
    }
    Ok("BD=true for I in {false, true}".into())
}

fn c2_titus_counterfactual() -> Outcome {
    let m = model("titus")?;
    let doc = m.to_document();
    let oracle = oracle_counterfactual(&doc, &map(&[("BD", "true")]), &map(&[("TM", "false")]), &["ED", "BD"]);
    let golden: BTreeMap<String, BTreeSet<String>> = [("ED", "false"), ("BD", "false")]
        .iter()
        .map(|(k, v)| (k.to_string(), BTreeSet::from([v.to_string()])))
        .collect();
    ensure!(oracle == golden, "oracle disagrees with golden: {oracle:?}");
    let got = m
        .counterfactual(&assignment(&[("BD", "true")]), &assignment(&[("TM", "false")]), &["ED", "BD"])
        .map_err(|e| e.to_string())?;
    let got: BTreeMap<String, BTreeSet<String>> = got.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
    ensure!(got == golden, "library answer {got:?}");
    Ok("ED=false BD=false (oracle and library)".into())
}

fn c3_uav_logging_set() -> Outcome {
    let m = model("uav_weather")?;
    let g = m.graph();
    let rec = identify::logging_set::<&str>(g, "Pilot", "UAVCrash", None).map_err(|e| e.to_string())?;
    let labels: BTreeSet<&str> = rec.must_log.iter().map(|n| g.node(n).unwrap().display_name()).collect();
    let want = BTreeSet::from(["Pilot", "Take-off", "UAV in flight", "UAV crash"]);
    ensure!(labels == want, "got {labels:?}");
    Ok(format!("{{{}}}", rec.must_log.join(", ")))
}

fn c4_frontdoor() -> Outcome {
    let m = model("uav_attacker")?;
    let g = m.graph();
    ensure!(g.node("Attacker").is_some_and(|n| !n.kind.is_observed()), "Attacker is not latent");
    let rc = identify::satisfies_frontdoor(g, &["RC"], "Pilot", "UAV").map_err(|e| e.to_string())?;
    ensure!(rc, "{{RC}} rejected");
    let empty = identify::satisfies_frontdoor::<&str>(g, &[], "Pilot", "UAV").map_err(|e| e.to_string())?;
    ensure!(!empty, "empty set accepted");
    let report = identify::identify(g, "Pilot", "UAV").map_err(|e| e.to_string())?;
    ensure!(report.status == IdentificationStatus::IdentifiableFrontdoor, "status {}", report.status);
    Ok("{RC} front-door, {} not, IdentifiableFrontdoor".into())
}

fn c5_uber_verdicts() -> Outcome {
    let m = model("uber")?;
    let g = m.graph();
    let lindberg = builtin_pattern("lindberg").unwrap();
    let ms = match_pattern(
        g,
        &lindberg,
        &hints(&[("Agent", "Driver"), ("Mediator", "CarSoftware"), ("Effect", "Accident")]),
    )
    .map_err(|e| e.to_string())?;
    ensure!(ms.len() == 1, "{} lindberg matches", ms.len());
    let r = check_accountability(g, &lindberg, &ms[0]).map_err(|e| e.to_string())?;
    ensure!(r.verdict == Verdict::NotAttributable, "lindberg verdict {}", r.verdict);

    let raci = builtin_pattern("raci").unwrap();
    let ms = match_pattern(g, &raci, &hints(&[("Accountable", "Uber")])).map_err(|e| e.to_string())?;
    let first = ms.first().ok_or("raci does not match")?;
    let r = check_accountability(g, &raci, first).map_err(|e| e.to_string())?;
    ensure!(r.verdict == Verdict::Accountable, "raci verdict {}", r.verdict);
    let brute = brute_minimal_backdoor_in(g, &r.agent, &r.effect, &r.admissible_controls);
    ensure!(brute == vec![vec!["Uber".to_string()]], "brute-force adjustment {brute:?}");
    ensure!(
        r.identification.minimal_backdoor_sets == brute,
        "library adjustment {:?}",
        r.identification.minimal_backdoor_sets
    );
    Ok("lindberg NotAttributable; raci Accountable via {Uber}".into())
}

fn dsep_agree(g: &causal_account::CausalGraph, z_max: usize, counter: &mut u64) -> Result<(), String> {
    let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
    for x in &names {
        for y in &names {
            if x >= y {
                continue;
            }
            let rest: Vec<String> = names.iter().filter(|v| *v != x && *v != y).cloned().collect();
            for z in subsets_up_to(&rest, z_max) {
                let (xs, ys) = (std::slice::from_ref(x), std::slice::from_ref(y));
                let a = g.d_separated_by_paths(xs, ys, &z, PATH_BUDGET).map_err(|e| e.to_string())?;
                let b = g.d_separated_by_reachability(xs, ys, &z).map_err(|e| e.to_string())?;
                *counter += 1;
                ensure!(
                    a == b,
                    "{} edges {:?}: {x} vs {y} given {z:?}: paths={a} reach={b}",
                    g.name(),
                    g.edges().collect::<Vec<_>>()
                );
            }
        }
    }
    Ok(())
}

fn c6_dsep_equivalence() -> Outcome {
    let mut queries = 0u64;
    let mut graphs = 0u64;
    for n in 1..=5usize {
        let pairs = n * (n - 1) / 2;
        for bits in 0u64..(1 << pairs) {
            dsep_agree(&dag_from_bits(n, bits, &vec![false; n]), 3, &mut queries)?;
            graphs += 1;
        }
    }
    let mut r = rng(6);
    for _ in 0..500 {
        let n = r.gen_range(2..=10);
        let p = r.gen_range(0.15..0.6);
        dsep_agree(&random_dag(&mut r, n, p, 0.1), 3, &mut queries)?;
        graphs += 1;
    }
    Ok(format!("{graphs} graphs, {queries} queries, 0 disagreements"))
}

fn c7_backdoor_minimality() -> Outcome {
    let mut r = rng(7);
    let mut pairs = 0;
    for i in 0..200 {
        let n = r.gen_range(3..=8);
        let p = r.gen_range(0.2..0.6);
        let g = random_dag(&mut r, n, p, 0.15);
        let observed: Vec<&str> = g.nodes().iter().filter(|v| v.kind.is_observed()).map(|v| v.name.as_str()).collect();
        for &x in &observed {
            for &y in &observed {
                if x == y {
                    continue;
                }
                let got = identify::minimal_backdoor_sets(&g, x, y).map_err(|e| e.to_string())?;
                let want = brute_minimal_backdoor(&g, x, y);
                let (a, b): (BTreeSet<_>, BTreeSet<_>) = (got.iter().collect(), want.iter().collect());
                ensure!(
                    a == b,
                    "graph {i} {:?}, x={x} y={y}: got {got:?}, brute force {want:?}",
                    g.edges().collect::<Vec<_>>()
                );
                ensure!(got == want, "graph {i}, x={x} y={y}: order {got:?} vs {want:?}");
                pairs += 1;
            }
        }
    }
    Ok(format!("200 graphs, {pairs} (x, y) pairs, 0 mismatches"))
}

fn c8_counterfactual_consistency() -> Outcome {
    let mut r = rng(8);
    let mut checks = 0;
    for (name, _) in BUNDLED_MODELS {
        let m = model(name)?;
        let doc = m.to_document();
        let targets: Vec<&str> = doc
            .nodes
            .iter()
            .filter(|d| matches!(d.kind, DeclKind::Endogenous | DeclKind::Proxy))
            .map(|d| d.name.as_str())
            .collect();
        let query: Vec<&str> = doc.nodes.iter().map(|d| d.name.as_str()).collect();
        let roots = m.consistent_worlds(&Assignment::new()).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let k = r.gen_range(1..=targets.len());
            let mut set = Assignment::new();
            for t in targets.choose_multiple(&mut r, k) {
                let dom = m.domain_of(t).unwrap();
                set.insert(*t, dom.values.choose(&mut r).unwrap().clone());
            }
            let after = m.intervene(&set).map_err(|e| e.to_string())?;
            for world in &roots {
                let u: Assignment = m.root_names().into_iter().map(|n| (n, world.get(n).unwrap())).collect();
                let full = m.evaluate(&u).map_err(|e| e.to_string())?;
                let cf = m.counterfactual(&full, &set, &query).map_err(|e| e.to_string())?;
                let expected = after.evaluate(&u).map_err(|e| e.to_string())?;
                for q in &query {
                    ensure!(
                        cf[*q] == [expected.get(q).unwrap().to_string()],
                        "{name}: u={} do={} {q}: cf {:?} vs {:?}",
                        m.format_assignment(&u),
                        m.format_assignment(&set),
                        cf[*q],
                        expected.get(q)
                    );
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} (model, do, u) checks, 0 violations"))
}

fn roundtrip(doc: &ScmDocument, label: &str) -> Result<(), String> {
    let m = Scm::from_document(doc).map_err(|e| format!("{label}: {e}"))?;
    let json = to_json(&m);
    let back: Scm = from_json(&json).map_err(|e| format!("{label}: {e}"))?;
    ensure!(to_json(&back) == json, "{label}: JSON not byte-stable");
    let dsl = to_dsl(&m);
    let reparsed = parse_model(&dsl).map_err(|e| format!("{label}: {e}\n{dsl}"))?;
    ensure!(reparsed == m, "{label}: DSL not structure-stable\n{dsl}");
    Ok(())
}

fn c9_roundtrip() -> Outcome {
    for (name, src) in BUNDLED_MODELS {
        let m = parse_model(src).map_err(|e| format!("{name}: {e}"))?;
        roundtrip(&m.to_document(), name)?;
    }
    let mut r = rng(9);
    for i in 0..100 {
        let doc = random_document(&mut r, i);
        roundtrip(&doc, &format!("generated #{i}"))?;
    }
    Ok(format!("{} bundled + 100 generated documents", BUNDLED_MODELS.len()))
}

fn c10_pattern_matching() -> Outcome {
    let lindberg = builtin_pattern("lindberg").unwrap();
    let raci = builtin_pattern("raci").unwrap();
    let titus = model("titus")?;
    let ms = match_pattern(titus.graph(), &lindberg, &BTreeMap::new()).map_err(|e| e.to_string())?;
    let want = hints(&[("Agent", "TM"), ("Mediator", "ED"), ("Effect", "BD")]);
    ensure!(
        ms.iter().any(|m| m.binding == want),
        "lindberg bindings on titus: {:?}",
        ms.iter().map(|m| &m.binding).collect::<Vec<_>>()
    );
    let rs = match_pattern(titus.graph(), &raci, &BTreeMap::new()).map_err(|e| e.to_string())?;
    ensure!(rs.is_empty(), "raci matched titus {} times", rs.len());

    let bw = model("bad_weather_raci")?;
    let g = bw.graph();
    let ms = match_pattern(g, &raci, &BTreeMap::new()).map_err(|e| e.to_string())?;
    ensure!(!ms.is_empty(), "raci does not match bad_weather_raci");
    ensure!(
        ms.iter().all(|m| m.node_for("Discussion") == Some("WeatherForecast")),
        "Discussion not always WeatherForecast"
    );
    let sep = g.d_separated::<&str>(&["Commander"], &["Meteorologist"], &[]).map_err(|e| e.to_string())?;
    ensure!(sep, "Commander and Meteorologist d-connected");
    Ok(format!("titus lindberg ok, raci none; bad_weather_raci {} raci matches", ms.len()))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let criteria = [
        Criterion { name: "titus intervention", budget: s(1), run: c1_titus_intervention },
        Criterion { name: "titus counterfactual", budget: s(1), run: c2_titus_counterfactual },
        Criterion { name: "uav logging set", budget: s(1), run: c3_uav_logging_set },
        Criterion { name: "front-door", budget: s(1), run: c4_frontdoor },
        Criterion { name: "uber verdicts", budget: s(1), run: c5_uber_verdicts },
        Criterion { name: "d-separation oracle equivalence", budget: s(300), run: c6_dsep_equivalence },
        Criterion { name: "back-door minimality", budget: s(300), run: c7_backdoor_minimality },
        Criterion { name: "counterfactual consistency", budget: s(60), run: c8_counterfactual_consistency },
        Criterion { name: "round-trip", budget: s(60), run: c9_roundtrip },
        Criterion { name: "pattern matching", budget: s(1), run: c10_pattern_matching },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let ms = elapsed.as_secs_f64() * 1000.0;
        match result {
            Ok(detail) if elapsed <= c.budget => println!("PASS {:>2} {} ({ms:.1} ms): {detail}", i + 1, c.name),
            Ok(detail) => {
                failed += 1;
                println!("FAIL {:>2} {} ({ms:.1} ms, budget {:?}): {detail}", i + 1, c.name, c.budget);
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {} ({ms:.1} ms): {why}", i + 1, c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
