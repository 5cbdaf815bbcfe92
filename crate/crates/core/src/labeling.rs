//! Label completion against a pivot tree.
//!
//! Members whose labels only partly overlap the pivot's are matched through
//! their distance profiles: every unmatched label is described by its row of
//! distances to the shared labels, and rows are paired by minimum total L2
//! difference. Members sharing no labels with the pivot are matched by the
//! Euclidean distance between embedded label vertices instead. Pivot labels
//! left over after matching are attached greedily to the member vertex with
//! the most similar distance profile.

use std::collections::{BTreeMap, BTreeSet};

use crate::assignment;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::tree::{check_lambda, l2, Embedding, Label, LabeledMergeTree, MergeTree, Vertex, VertexId};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PivotCriterion {
    Leaves,
    Vertices,
}

/// Index of the member with the most leaves (or vertices); ties go to the
/// lowest index.
pub fn select_pivot(ensemble: &Ensemble, criterion: PivotCriterion) -> Result<usize> {
    let size = |t: &LabeledMergeTree| match criterion {
        PivotCriterion::Leaves => t.leaf_count(),
        PivotCriterion::Vertices => t.vertex_count(),
    };
    let mut best: Option<(usize, usize)> = None;
    for (k, m) in ensemble.members().iter().enumerate() {
        let s = size(m);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k)
        .ok_or_else(|| Error::input("cannot select a pivot from an empty ensemble"))
}

/// What a relabeling did to one member.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RelabelReport {
    /// Position of the member in its ensemble (0 for standalone calls).
    pub member: usize,
    /// Old label to the pivot label that replaced it.
    pub renamed: BTreeMap<Label, Label>,
    /// Pivot labels added greedily, with the member vertex that received them.
    pub extra: BTreeMap<Label, VertexId>,
    /// Total cost of the optimal matching.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relabeled {
    pub tree: LabeledMergeTree,
    pub report: RelabelReport,
}

fn distance_rows(
    t: &LabeledMergeTree,
    rows: &[VertexId],
    cols: &[Label],
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    let col_vertices = cols
        .iter()
        .map(|&l| t.vertex_of(l))
        .collect::<Result<Vec<_>>>()?;
    rows.iter()
        .map(|&r| {
            col_vertices
                .iter()
                .map(|&c| t.blended_distance(r, c, lambda))
                .collect()
        })
        .collect()
}

/// L2 distance between every member row and every pivot row.
pub fn row_distance_costs(member_rows: &[Vec<f64>], pivot_rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    member_rows
        .iter()
        .map(|a| pivot_rows.iter().map(|b| l2(a, b)).collect())
        .collect()
}

/// For each leftover pivot label (ascending), the matched member label whose
/// distance profile over `matched` is closest; ties go to the smaller label.
fn greedy_leftovers(
    member: &LabeledMergeTree,
    pivot: &LabeledMergeTree,
    leftovers: &[Label],
    matched: &[Label],
    lambda: f64,
) -> Result<BTreeMap<Label, VertexId>> {
    if leftovers.is_empty() {
        return Ok(BTreeMap::new());
    }
    if matched.is_empty() {
        return Err(Error::agreement("no matched labels to attach leftovers to"));
    }
    let pivot_rows = distance_rows(
        pivot,
        &leftovers.iter().map(|&l| pivot.vertex_of(l)).collect::<Result<Vec<_>>>()?,
        matched,
        lambda,
    )?;
    let member_vertices = matched
        .iter()
        .map(|&l| member.vertex_of(l))
        .collect::<Result<Vec<_>>>()?;
    let member_rows = distance_rows(member, &member_vertices, matched, lambda)?;
    let mut out = BTreeMap::new();
    for (y, prow) in leftovers.iter().zip(&pivot_rows) {
        let mut best = 0usize;
        let mut best_cost = f64::INFINITY;
        for (k, mrow) in member_rows.iter().enumerate() {
            let c = l2(mrow, prow);
            if c < best_cost {
                best_cost = c;
                best = k;
            }
        }
        out.insert(*y, member_vertices[best]);
    }
    Ok(out)
}

fn sorted(set: impl IntoIterator<Item = Label>) -> Vec<Label> {
    let mut v: Vec<Label> = set.into_iter().collect();
    v.sort();
    v
}

/// Relabels `member` against a pivot it shares at least one label with.
pub fn relabel_partial(
    member: &LabeledMergeTree,
    pivot: &LabeledMergeTree,
    lambda: f64,
) -> Result<Relabeled> {
    check_lambda(lambda)?;
    let member_domain = member.domain();
    let pivot_domain = pivot.domain();
    let shared = sorted(member_domain.intersection(&pivot_domain).copied());
    if shared.is_empty() {
        return Err(Error::agreement(
            "member shares no labels with the pivot; use disagreement relabeling",
        ));
    }
    if member.leaf_count() > pivot.leaf_count() {
        return Err(Error::Pivot(format!(
            "member has {} leaves but the pivot only {}",
            member.leaf_count(),
            pivot.leaf_count()
        )));
    }
    let unmatched_member = sorted(member_domain.difference(&pivot_domain).copied());
    let unmatched_pivot = sorted(pivot_domain.difference(&member_domain).copied());
    if unmatched_member.len() > unmatched_pivot.len() {
        return Err(Error::Pivot(format!(
            "member has {} unmatched labels but the pivot only {}",
            unmatched_member.len(),
            unmatched_pivot.len()
        )));
    }

    let member_rows = distance_rows(
        member,
        &unmatched_member.iter().map(|&l| member.vertex_of(l)).collect::<Result<Vec<_>>>()?,
        &shared,
        lambda,
    )?;
    let pivot_rows = distance_rows(
        pivot,
        &unmatched_pivot.iter().map(|&l| pivot.vertex_of(l)).collect::<Result<Vec<_>>>()?,
        &shared,
        lambda,
    )?;
    let costs = row_distance_costs(&member_rows, &pivot_rows);
    let (chosen, cost) = assignment::solve(&costs)?;

    let mut labels: BTreeMap<Label, VertexId> = shared
        .iter()
        .map(|&l| (l, member.labels()[&l]))
        .collect();
    let mut renamed = BTreeMap::new();
    for (&old, &c) in unmatched_member.iter().zip(&chosen) {
        let new = unmatched_pivot[c];
        renamed.insert(old, new);
        labels.insert(new, member.labels()[&old]);
    }
    finish(member, pivot, labels, renamed, cost, lambda)
}

fn finish(
    member: &LabeledMergeTree,
    pivot: &LabeledMergeTree,
    mut labels: BTreeMap<Label, VertexId>,
    renamed: BTreeMap<Label, Label>,
    cost: f64,
    lambda: f64,
) -> Result<Relabeled> {
    let updated = member.with_labels(labels.clone())?;
    let matched: Vec<Label> = labels.keys().copied().collect();
    let leftovers: Vec<Label> = pivot
        .labels()
        .keys()
        .filter(|l| !labels.contains_key(l))
        .copied()
        .collect();
    let extra = greedy_leftovers(&updated, pivot, &leftovers, &matched, lambda)?;
    labels.extend(extra.iter().map(|(&l, &v)| (l, v)));
    Ok(Relabeled {
        tree: member.with_labels(labels)?,
        report: RelabelReport {
            member: 0,
            renamed,
            extra,
            cost,
        },
    })
}

fn embedding_of(t: &LabeledMergeTree) -> Result<&Embedding> {
    t.embedding()
        .ok_or_else(|| Error::configuration("disagreement relabeling needs embedded trees"))
}

/// Relabels `member` against a pivot with a disjoint label domain by the
/// Euclidean distance between embedded label vertices. Overlapping domains
/// are delegated to [`relabel_partial`]. `lambda` weighs the distances used
/// for leftover pivot labels.
pub fn relabel_disagreement(
    member: &LabeledMergeTree,
    pivot: &LabeledMergeTree,
    lambda: f64,
) -> Result<Relabeled> {
    check_lambda(lambda)?;
    if member.labels().keys().any(|l| pivot.labels().contains_key(l)) {
        return relabel_partial(member, pivot, lambda);
    }
    let (me, pe) = (embedding_of(member)?, embedding_of(pivot)?);
    if me.dim() != pe.dim() {
        return Err(Error::configuration("member and pivot embeddings differ in dimension"));
    }
    if member.leaf_count() > pivot.leaf_count() || member.labels().len() > pivot.labels().len() {
        return Err(Error::Pivot("member has more leaves or labels than the pivot".into()));
    }
    let member_labels = sorted(member.labels().keys().copied());
    let pivot_labels = sorted(pivot.labels().keys().copied());
    let costs: Vec<Vec<f64>> = member_labels
        .iter()
        .map(|x| {
            let px = me.point(member.labels()[x]);
            pivot_labels
                .iter()
                .map(|y| l2(px, pe.point(pivot.labels()[y])))
                .collect()
        })
        .collect();
    let (chosen, cost) = assignment::solve(&costs)?;
    let mut labels = BTreeMap::new();
    let mut renamed = BTreeMap::new();
    for (&old, &c) in member_labels.iter().zip(&chosen) {
        let new = pivot_labels[c];
        renamed.insert(old, new);
        labels.insert(new, member.labels()[&old]);
    }
    finish(member, pivot, labels, renamed, cost, lambda)
}

/// How [`harmonize`] treats labels already present on the members.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LabelStrategy {
    /// Keep shared labels and match the rest (partial or disagreement
    /// relabeling, depending on overlap with the pivot).
    Enforce,
    /// Discard member labels and match every member by its embedding.
    Ignore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Harmonized {
    pub ensemble: Ensemble,
    pub pivot: usize,
    pub reports: Vec<RelabelReport>,
}

/// Brings every member onto the pivot's label set.
pub fn harmonize(ensemble: &Ensemble, lambda: f64, strategy: LabelStrategy) -> Result<Harmonized> {
    check_lambda(lambda)?;
    let pivot_index = select_pivot(ensemble, PivotCriterion::Leaves)?;
    let pivot = &ensemble.members()[pivot_index];
    let mut members = Vec::with_capacity(ensemble.len());
    let mut reports = Vec::new();
    for (k, member) in ensemble.members().iter().enumerate() {
        if k == pivot_index
            || (strategy == LabelStrategy::Enforce
                && member.labels().keys().eq(pivot.labels().keys()))
        {
            members.push(member.clone());
            continue;
        }
        let mut relabeled = match strategy {
            LabelStrategy::Ignore => {
                let offset = pivot.labels().keys().next_back().map_or(0, |l| l.0);
                let fresh = member.with_labels(
                    member
                        .labels()
                        .iter()
                        .map(|(l, &v)| (Label(l.0 + offset), v))
                        .collect(),
                )?;
                let mut r = relabel_disagreement(&fresh, pivot, lambda)?;
                r.report.renamed = r
                    .report
                    .renamed
                    .into_iter()
                    .map(|(l, new)| (Label(l.0 - offset), new))
                    .collect();
                r
            }
            LabelStrategy::Enforce => {
                if member.labels().keys().any(|l| pivot.labels().contains_key(l)) {
                    relabel_partial(member, pivot, lambda)?
                } else {
                    relabel_disagreement(member, pivot, lambda)?
                }
            }
        };
        relabeled.report.member = k;
        reports.push(relabeled.report);
        members.push(relabeled.tree);
    }
    Ok(Harmonized {
        ensemble: Ensemble::new(members),
        pivot: pivot_index,
        reports,
    })
}

/// Ensemble and center with labels on every nonroot vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletedLabels {
    pub members: Vec<LabeledMergeTree>,
    pub center: LabeledMergeTree,
    /// Degree-2 vertices inserted into the center.
    pub dummies: Vec<VertexId>,
    /// Labels introduced for the center's unlabeled vertices.
    pub internal_labels: Vec<Label>,
}

/// Extends a leaf-labeled ensemble and its center to labelings that cover
/// every nonroot vertex, giving a vertex correspondence between each member
/// and the center.
///
/// When some member has more unlabeled vertices than the center, degree-2
/// vertices are inserted into the center, mirroring the unmatched vertices of
/// the member with the most unlabeled vertices. Each mirror subdivides the
/// center edge directly above the counterpart of the member vertex nearest
/// to it, at the mirrored value clamped strictly inside that edge.
pub fn complete_internal_labels(
    ensemble: &Ensemble,
    center: &LabeledMergeTree,
    lambda: f64,
) -> Result<CompletedLabels> {
    check_lambda(lambda)?;
    for (k, m) in ensemble.members().iter().enumerate() {
        if m.labels().keys().ne(center.labels().keys()) {
            return Err(Error::agreement(format!(
                "member {k} does not share the center's label domain"
            )));
        }
    }
    let shared: Vec<Label> = center.labels().keys().copied().collect();
    let need = ensemble
        .members()
        .iter()
        .map(|m| m.unlabeled_vertices().len())
        .max()
        .unwrap_or(0);

    let mut pivot = center.clone();
    let mut dummies = Vec::new();
    if need > pivot.unlabeled_vertices().len() {
        let (j, _) = ensemble
            .members()
            .iter()
            .enumerate()
            .map(|(k, m)| (k, (m.unlabeled_vertices().len(), m.vertex_count())))
            .fold(None::<(usize, (usize, usize))>, |best, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            })
            .expect("nonempty");
        let (p, d) = insert_dummies(&pivot, &ensemble.members()[j], &shared, lambda)?;
        pivot = p;
        dummies = d;
    }

    let next_label = shared.last().map_or(1, |l| l.0 + 1);
    let unlabeled = pivot.unlabeled_vertices();
    let internal_labels: Vec<Label> = (0..unlabeled.len() as u32)
        .map(|k| Label(next_label + k))
        .collect();
    let mut labels = pivot.labels().clone();
    labels.extend(internal_labels.iter().copied().zip(unlabeled.iter().copied()));
    let pivot = pivot.with_labels(labels)?;

    let pivot_rows = distance_rows(&pivot, &unlabeled, &shared, lambda)?;
    let mut members = Vec::with_capacity(ensemble.len());
    for member in ensemble.members() {
        let rows = member.unlabeled_vertices();
        let member_rows = distance_rows(member, &rows, &shared, lambda)?;
        let (chosen, _) = assignment::solve(&row_distance_costs(&member_rows, &pivot_rows))?;
        let mut member_labels = member.labels().clone();
        for (&v, &c) in rows.iter().zip(&chosen) {
            member_labels.insert(internal_labels[c], v);
        }
        let updated = member.with_labels(member_labels.clone())?;
        let matched: Vec<Label> = member_labels.keys().copied().collect();
        let leftovers: Vec<Label> = internal_labels
            .iter()
            .filter(|l| !member_labels.contains_key(l))
            .copied()
            .collect();
        let extra = greedy_leftovers(&updated, &pivot, &leftovers, &matched, lambda)?;
        member_labels.extend(extra);
        members.push(member.with_labels(member_labels)?);
    }
    Ok(CompletedLabels {
        members,
        center: pivot,
        dummies,
        internal_labels,
    })
}

/// Subdivides center edges until the center has as many unlabeled vertices
/// as `reference`. Returns the new center and the inserted vertex ids.
fn insert_dummies(
    center: &LabeledMergeTree,
    reference: &LabeledMergeTree,
    shared: &[Label],
    lambda: f64,
) -> Result<(LabeledMergeTree, Vec<VertexId>)> {
    let center_unlabeled = center.unlabeled_vertices();
    let ref_unlabeled = reference.unlabeled_vertices();
    let rows = distance_rows(center, &center_unlabeled, shared, lambda)?;
    let cols = distance_rows(reference, &ref_unlabeled, shared, lambda)?;
    let (chosen, _) = assignment::solve(&row_distance_costs(&rows, &cols))?;

    // reference vertex -> center vertex
    let mut counterpart: Vec<Option<VertexId>> = vec![None; reference.vertex_count()];
    for (v, labels) in reference.labels_by_vertex().into_iter().enumerate() {
        if let Some(l) = labels.first() {
            counterpart[v] = Some(center.vertex_of(*l)?);
        }
    }
    for (&cv, &c) in center_unlabeled.iter().zip(&chosen) {
        counterpart[ref_unlabeled[c]] = Some(cv);
    }
    let taken: BTreeSet<usize> = chosen.iter().copied().collect();
    let leftovers: Vec<VertexId> = (0..ref_unlabeled.len())
        .filter(|k| !taken.contains(k))
        .map(|k| ref_unlabeled[k])
        .collect();

    let mut vertices: Vec<Vertex> = center.tree().vertices().to_vec();
    let mut points: Option<Vec<Vec<f64>>> = center
        .embedding()
        .map(|e| e.points().map(<[f64]>::to_vec).collect());
    let mut inserted = Vec::with_capacity(leftovers.len());
    for w in leftovers {
        let mut nearest: Option<(f64, VertexId)> = None;
        for m in 0..reference.vertex_count() {
            if m == w || counterpart[m].is_none() {
                continue;
            }
            let d = reference.blended_distance(w, m, lambda)?;
            if nearest.is_none_or(|(bd, _)| d < bd) {
                nearest = Some((d, m));
            }
        }
        let (_, m) = nearest.ok_or_else(|| Error::input("reference tree has no matched vertex"))?;
        let c = counterpart[m].expect("filtered");
        let p = vertices[c].parent.expect("labels never sit on the root");
        let (lo, hi) = (vertices[c].value, vertices[p].value);
        let value = clamp_inside(reference.tree().value(w), lo, hi);
        let id = vertices.len();
        let mut name = format!("d{}", inserted.len() + 1);
        while vertices.iter().any(|v| v.name == name) {
            name.push('\'');
        }
        vertices.push(Vertex {
            name,
            parent: Some(p),
            value,
        });
        vertices[c].parent = Some(id);
        if let Some(pts) = points.as_mut() {
            let t = if hi.is_finite() { (value - lo) / (hi - lo) } else { 0.0 };
            let pt: Vec<f64> = pts[c]
                .iter()
                .zip(&pts[p])
                .map(|(a, b)| a + t * (b - a))
                .collect();
            pts.push(pt);
        }
        counterpart[w] = Some(id);
        inserted.push(id);
    }
    let embedding = match points {
        Some(pts) => Some(Embedding::new(center.embedding().expect("present").dim(), &pts)?),
        None => None,
    };
    let tree = MergeTree::new(vertices)?;
    Ok((
        LabeledMergeTree::new(tree, center.labels().clone(), embedding)?,
        inserted,
    ))
}

fn clamp_inside(value: f64, lo: f64, hi: f64) -> f64 {
    let scale = 1.0f64.max(lo.abs()).max(if hi.is_finite() { hi.abs() } else { 0.0 });
    let eps = 1e-9 * scale;
    if hi.is_finite() && hi - lo <= 2.0 * eps {
        return lo + (hi - lo) / 2.0;
    }
    value.max(lo + eps).min(hi - eps)
}
