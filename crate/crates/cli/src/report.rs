//! JSON renderings of pipeline results. Scalars are rounded to 12
//! significant digits; embedded tree documents keep full precision.

use std::collections::BTreeMap;

use lmt_core::{
    ensemble_summary, AgreementMode, CenterResult, EdgeConsistency, Frame, Label, LabeledMergeTree,
    PipelineConfig, PipelineOutput, RelabelReport, SymMatrix,
};
use serde_json::{json, Map, Value};

use crate::document::tree_to_value;
use crate::failure::Failure;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits. Zero always comes out positive.
pub fn round(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    rounded + 0.0
}

/// [`round`] as JSON; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        json!("nan")
    } else if x.is_infinite() {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(round(x))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn matrix_value(m: &SymMatrix) -> Value {
    json!({
        "labels": m.labels().iter().map(|l| l.0).collect::<Vec<_>>(),
        "rows": m.rows().iter().map(|r| nums(r)).collect::<Vec<_>>(),
    })
}

pub fn relabel_value(report: &RelabelReport, member: &LabeledMergeTree) -> Value {
    json!({
        "member": report.member,
        "renamed": report.renamed.iter().map(|(a, b)| json!({"from": a.0, "to": b.0})).collect::<Vec<_>>(),
        "extra": report.extra.iter().map(|(l, &v)| json!({"label": l.0, "vertex": member.tree().name(v)})).collect::<Vec<_>>(),
        "cost": num(report.cost),
    })
}

pub fn relabel_values(reports: &[RelabelReport], members: &[LabeledMergeTree]) -> Vec<Value> {
    reports
        .iter()
        .map(|r| relabel_value(r, &members[r.member]))
        .collect()
}

pub fn summary_value(center: &CenterResult) -> Value {
    json!({
        "radius": num(center.radius),
        "links": ensemble_summary(center).iter().map(|s| json!({
            "member": s.member,
            "distance": num(s.distance),
            "normalized": num(s.normalized),
        })).collect::<Vec<_>>(),
    })
}

pub struct CenterView<'a> {
    pub mode: AgreementMode,
    pub lambda: f64,
    pub pivot: Option<usize>,
    pub reports: &'a [RelabelReport],
    pub members: &'a [LabeledMergeTree],
    pub center: &'a CenterResult,
    /// Tree shown as the center document, the bare center when absent.
    pub center_tree: Option<&'a LabeledMergeTree>,
}

pub fn center_value(v: &CenterView<'_>) -> Result<Value, Failure> {
    Ok(json!({
        "mode": v.mode.as_str(),
        "lambda": num(v.lambda),
        "pivot": v.pivot,
        "relabel": relabel_values(v.reports, v.members),
        "center": tree_to_value(v.center_tree.unwrap_or(&v.center.center))?,
        "center_matrix": matrix_value(&v.center.center_matrix),
        "center_matrix_is_ultra": v.center.center_matrix_is_ultra,
        "member_distances": nums(&v.center.member_distances),
        "radius": num(v.center.radius),
    }))
}

fn edges_value(t: &LabeledMergeTree, edges: &[EdgeConsistency]) -> Value {
    Value::Array(
        edges
            .iter()
            .map(|e| {
                json!({
                    "child": t.tree().name(e.child),
                    "parent": t.tree().name(e.parent),
                    "pc": num(e.pc),
                    "pl": [num(e.pl.0), num(e.pl.1)],
                })
            })
            .collect(),
    )
}

fn labels_value(labels: &BTreeMap<Label, f64>) -> Value {
    Value::Array(
        labels
            .iter()
            .map(|(l, &v)| json!({"label": l.0, "value": num(v)}))
            .collect(),
    )
}

pub fn consistency_value(out: &PipelineOutput, config: &PipelineConfig) -> Result<Value, Failure> {
    let rep = &out.consistency;
    let center = &out.completed.center;
    let center = match &out.center_embedding {
        Some(e) => center.with_embedding(Some(e.clone()))?,
        None => center.clone(),
    };
    let per_label: Vec<Value> = center
        .labels()
        .iter()
        .map(|(&l, &v)| {
            let s = &rep.statistical[&l];
            json!({
                "label": l.0,
                "vertex": center.tree().name(v),
                "internal": out.completed.internal_labels.contains(&l),
                "consistency": Value::Array(rep.vertex.iter().map(|a| num(a[&l])).collect()),
                "mean": num(rep.variational.mean[&l]),
                "deviations": nums(&rep.variational.deviations[&l]),
                "radii": nums(&rep.variational.radii[&l]),
                "five_number": {
                    "min": num(s.min), "q1": num(s.q1), "median": num(s.median),
                    "q3": num(s.q3), "max": num(s.max),
                },
            })
        })
        .collect();
    let member_edges: Vec<Value> = out
        .completed
        .members
        .iter()
        .zip(&rep.member_edges)
        .map(|(m, e)| edges_value(m, e))
        .collect();
    Ok(json!({
        "mode": config.mode.as_str(),
        "delta": num(rep.delta),
        "lambda": num(rep.lambda),
        "g": num(config.g),
        "normalize": config.normalize,
        "scale": num(rep.scale),
        "pivot": out.pivot,
        "radius": num(out.center.radius),
        "center": tree_to_value(&center)?,
        "dummies": out.completed.dummies.iter().map(|&d| center.tree().name(d)).collect::<Vec<_>>(),
        "labels": per_label,
        "variational": {
            "max_deviation": num(rep.variational.max_deviation),
            "mean_deviation": num(rep.variational.mean_deviation()),
            "spacing": num(rep.variational.spacing),
        },
        "center_edges": edges_value(&center, &rep.center_edges),
        "member_edges": member_edges,
    }))
}

pub fn frames_value(mode: &str, frames: &[Frame]) -> Result<Value, Failure> {
    let list = frames
        .iter()
        .map(|f| {
            let mut entry = Map::new();
            entry.insert("lambda".into(), num(f.lambda));
            entry.insert("tree".into(), tree_to_value(&f.tree)?);
            if let Some(c) = &f.consistency {
                entry.insert("consistency".into(), labels_value(c));
            }
            Ok(Value::Object(entry))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(json!({"mode": mode, "steps": frames.len(), "frames": list}))
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
