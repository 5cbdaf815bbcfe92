//! Animation frames between two trees and the drawing embedding of a center.

use std::collections::BTreeMap;

use crate::consistency::label_consistency;
use crate::error::{Error, Result};
use crate::matrix::{induced_matrix, merge_tree_of_matrix};
use crate::tree::{Embedding, Label, LabeledMergeTree};

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub lambda: f64,
    pub tree: LabeledMergeTree,
    /// Per-label consistency of the frame relative to the target.
    pub consistency: Option<BTreeMap<Label, f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub steps: usize,
    pub frames: Vec<Frame>,
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < 2 {
        return Err(Error::input(format!("need at least 2 steps, got {steps}")));
    }
    Ok(())
}

fn step_lambda(k: usize, steps: usize) -> f64 {
    k as f64 / (steps - 1) as f64
}

/// Trees of the matrices `(1 - t) M_source + t M_target` at `steps` equally
/// spaced `t`. When both endpoints are embedded each frame is laid out too:
/// labeled vertices interpolate between their source and target positions,
/// merge vertices sit at the mean of their children.
pub fn geodesic_frames(
    source: &LabeledMergeTree,
    target: &LabeledMergeTree,
    steps: usize,
    with_consistency: bool,
    delta: f64,
    lambda_metric: f64,
) -> Result<GeodesicPath> {
    check_steps(steps)?;
    if source.labels().keys().ne(target.labels().keys()) {
        return Err(Error::agreement("source and target carry different labels"));
    }
    let ms = induced_matrix(source)?;
    let mt = induced_matrix(target)?;
    let layout = match (source.embedding(), target.embedding()) {
        (Some(a), Some(b)) if a.dim() == b.dim() => Some((a, b)),
        _ => None,
    };
    let mut frames = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = step_lambda(k, steps);
        let mut tree = merge_tree_of_matrix(&ms.lerp(&mt, t)?)?;
        if let Some((a, b)) = layout {
            let emb = frame_layout(&tree, source, a, target, b, t)?;
            tree = tree.with_embedding(Some(emb))?;
        }
        let consistency = if with_consistency {
            Some(label_consistency(&tree, target, delta, lambda_metric, 1.0)?)
        } else {
            None
        };
        frames.push(Frame {
            lambda: t,
            tree,
            consistency,
        });
    }
    Ok(GeodesicPath { steps, frames })
}

fn lerp_points(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
}

fn frame_layout(
    frame: &LabeledMergeTree,
    source: &LabeledMergeTree,
    se: &Embedding,
    target: &LabeledMergeTree,
    te: &Embedding,
    t: f64,
) -> Result<Embedding> {
    let tree = frame.tree();
    let by_vertex = frame.labels_by_vertex();
    let mut points: Vec<Option<Vec<f64>>> = vec![None; tree.len()];
    let mut order: Vec<usize> = (0..tree.len()).collect();
    order.sort_by(|&a, &b| tree.value(a).total_cmp(&tree.value(b)));
    for v in order {
        points[v] = Some(if let Some(&l) = by_vertex[v].first() {
            lerp_points(
                se.point(source.vertex_of(l)?),
                te.point(target.vertex_of(l)?),
                t,
            )
        } else {
            let kids = tree.children(v);
            let mut acc = vec![0.0; se.dim()];
            for &c in kids {
                let p = points[c].as_ref().expect("children come first");
                for (s, x) in acc.iter_mut().zip(p) {
                    *s += x;
                }
            }
            acc.iter().map(|s| s / kids.len() as f64).collect()
        });
    }
    let points: Vec<Vec<f64>> = points.into_iter().map(|p| p.expect("all set")).collect();
    Embedding::new(se.dim(), &points)
}

/// Morph of embeddings across a fixed vertex correspondence. Frames keep the
/// target's structure and labels; each vertex moves from the source position
/// of the vertex sharing its smallest label to its own target position.
pub fn linear_embedding_frames(
    source: &LabeledMergeTree,
    target: &LabeledMergeTree,
    steps: usize,
) -> Result<Vec<LabeledMergeTree>> {
    check_steps(steps)?;
    if source.labels().keys().ne(target.labels().keys()) {
        return Err(Error::configuration("source and target carry different labels"));
    }
    if !target.is_vertex_complete() {
        return Err(Error::configuration(
            "target has unlabeled vertices; complete the labels first",
        ));
    }
    let (se, te) = match (source.embedding(), target.embedding()) {
        (Some(a), Some(b)) if a.dim() == b.dim() => (a, b),
        (Some(_), Some(_)) => {
            return Err(Error::configuration("embeddings differ in dimension"))
        }
        _ => return Err(Error::configuration("both trees need an embedding")),
    };
    let by_vertex = target.labels_by_vertex();
    let source_of = (0..target.vertex_count())
        .map(|v| match by_vertex[v].first() {
            Some(&l) => source.vertex_of(l),
            None => Ok(source.root()),
        })
        .collect::<Result<Vec<_>>>()?;
    (0..steps)
        .map(|k| {
            let t = step_lambda(k, steps);
            let points: Vec<Vec<f64>> = (0..target.vertex_count())
                .map(|v| lerp_points(se.point(source_of[v]), te.point(v), t))
                .collect();
            target.with_embedding(Some(Embedding::new(te.dim(), &points)?))
        })
        .collect()
}

/// Planar layout of the center: each vertex sits at height `f` and at the
/// midpoint of the range of x-coordinates of its corresponding member
/// vertices. The root is drawn just above its child.
pub fn center_embedding(center: &LabeledMergeTree, members: &[LabeledMergeTree]) -> Result<Embedding> {
    if members.is_empty() {
        return Err(Error::input("need at least one member"));
    }
    for m in members {
        if m.embedding().is_none() {
            return Err(Error::configuration("every member needs an embedding"));
        }
        if m.labels().keys().ne(center.labels().keys()) {
            return Err(Error::configuration("member labels do not match the center"));
        }
    }
    let tree = center.tree();
    let root = center.root();
    let by_vertex = center.labels_by_vertex();
    let mut points = vec![vec![0.0, 0.0]; tree.len()];
    for v in 0..tree.len() {
        if v == root {
            continue;
        }
        if by_vertex[v].is_empty() {
            return Err(Error::configuration(format!(
                "center vertex {:?} has no corresponding member vertex",
                tree.name(v)
            )));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in members {
            let e = m.embedding().expect("checked");
            for &l in &by_vertex[v] {
                let x = e.point(m.vertex_of(l)?)[0];
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        points[v] = vec![(lo + hi) / 2.0, tree.value(v)];
    }
    let finite: Vec<f64> = (0..tree.len())
        .filter(|&v| v != root)
        .map(|v| tree.value(v))
        .collect();
    let span = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - finite.iter().copied().fold(f64::INFINITY, f64::min);
    let span = if span > 0.0 { span } else { 1.0 };
    let child = tree.children(root)[0];
    points[root] = vec![points[child][0], tree.value(child) + 0.1 * span];
    Embedding::new(2, &points)
}
