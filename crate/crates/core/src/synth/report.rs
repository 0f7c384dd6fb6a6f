//! JSON rendering of synthesis outcomes.

use serde_json::{json, Map, Value};

use super::{Engine, Outcome, Query, QueryKind, TraceRecord, Verdict};
use crate::family::{Family, Realisation};

/// `{hole: option}` for every hole of `fam`.
pub fn realisation_json(fam: &Family, r: &Realisation) -> Value {
    let map: Map<String, Value> = r
        .options()
        .iter()
        .enumerate()
        .map(|(h, &o)| {
            let hole = fam.hole(h);
            (hole.name.clone(), Value::String(hole.options[o].clone()))
        })
        .collect();
    Value::Object(map)
}

fn trace_json(fam: &Family, t: &TraceRecord) -> Value {
    match t {
        TraceRecord::Cegar {
            size,
            lower,
            upper,
            verdict,
            split_hole,
        } => json!({
            "size": size.to_string(),
            "lower": lower,
            "upper": upper,
            "verdict": verdict.name(),
            "split": split_hole.map(|h| fam.hole(h).name.clone()),
        }),
        TraceRecord::Cegis {
            candidate,
            value,
            verdict,
            critical,
            cube,
            pruned,
        } => json!({
            "candidate": realisation_json(fam, candidate),
            "value": value,
            "verdict": verdict.name(),
            "critical": critical,
            "cube": cube
                .iter()
                .map(|(h, opts)| {
                    let hole = fam.hole(*h);
                    let labels: Vec<&str> = opts.iter().map(|&o| hole.options[o].as_str()).collect();
                    (hole.name.clone(), json!(labels))
                })
                .collect::<Map<String, Value>>(),
            "pruned": pruned.map(|p| p.to_string()),
        }),
    }
}

/// The machine-readable report printed by `synth --json`. `goal` is the
/// goal (or full property) as the user wrote it.
pub fn outcome_json(
    fam: &Family,
    query: &Query,
    goal: &str,
    engine: Engine,
    outcome: &Outcome,
    with_trace: bool,
) -> Value {
    let mut q = Map::new();
    q.insert("kind".into(), query.kind.name().into());
    match query.kind {
        QueryKind::Feasibility | QueryKind::Partition => {
            q.insert("spec".into(), goal.into());
        }
        QueryKind::EpsOptimal(eps) => {
            q.insert("goal".into(), goal.into());
            q.insert("epsilon".into(), eps.into());
        }
        _ => {
            q.insert("goal".into(), goal.into());
        }
    }
    if let Some(b) = query.budget {
        q.insert("budget".into(), b.into());
    }
    let cost_model = match fam.cost_model() {
        crate::family::CostModel::Structural => "structural",
        crate::family::CostModel::OptionSum => "option-sum",
    };
    q.insert("cost_model".into(), cost_model.into());
    if query.cheapest {
        q.insert("cheapest".into(), true.into());
    }

    let mut o = Map::new();
    o.insert("kind".into(), outcome.verdict.kind().into());
    match &outcome.verdict {
        Verdict::Feasible {
            witness,
            value,
            cost,
        }
        | Verdict::Optimal {
            witness,
            value,
            cost,
        } => {
            o.insert("witness".into(), realisation_json(fam, witness));
            o.insert("value".into(), (*value).into());
            o.insert("cost".into(), (*cost).into());
        }
        Verdict::Partition { accepted, rejected } => {
            let list = |rs: &[Realisation]| {
                Value::Array(rs.iter().map(|r| realisation_json(fam, r)).collect())
            };
            o.insert("T".into(), list(accepted));
            o.insert("F".into(), list(rejected));
        }
        Verdict::Unsatisfiable => {}
    }

    let s = &outcome.stats;
    let mut stats = json!({
        "candidates": s.candidates,
        "checks": s.checks,
        "iterations": s.iterations,
        "wall_ms": s.wall_ms,
    });
    if with_trace {
        stats["trace"] = Value::Array(s.trace.iter().map(|t| trace_json(fam, t)).collect());
    }
    json!({
        "query": Value::Object(q),
        "engine": engine.name(),
        "outcome": Value::Object(o),
        "stats": stats,
    })
}
