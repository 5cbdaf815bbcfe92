//! Per-vertex structural consistency between ensemble members and a center.
//!
//! A vertex is summarized by its vector of distances to every other labeled
//! vertex. Two corresponding vertices are compared with a Gaussian-weighted
//! cosine similarity whose locality parameter `delta` down-weights distances
//! much larger than `delta`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::{check_lambda, Label, LabeledMergeTree, VertexId};

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Gaussian-weighted cosine similarity of two nonnegative vectors.
///
/// Each product `A_i B_i` is weighted by `exp(-(A_i^2 + B_i^2) / delta^2)`
/// and each squared norm term by `exp(-2 A_i^2 / delta^2)`. With
/// `delta = inf` this is the plain cosine similarity. Sums are evaluated in
/// log space, so tiny weights do not underflow and `A == B` yields exactly 1.
/// Two zero vectors have similarity 1; a zero and a nonzero vector, 0.
pub fn weighted_cosine(a: &[f64], b: &[f64], delta: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::input("vectors are empty"));
    }
    if !(delta > 0.0) {
        return Err(Error::input(format!("delta must be positive, got {delta}")));
    }
    if a.iter().chain(b).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::input("vectors must be finite and nonnegative"));
    }
    let weight = |x: f64| {
        if delta.is_infinite() {
            0.0
        } else {
            -2.0 * x * x / (delta * delta)
        }
    };
    let terms = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| weight(x) + 2.0 * x.ln())
            .collect()
    };
    let (ea, eb) = (terms(a), terms(b));
    match (ea.is_empty(), eb.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let cross: Vec<f64> = a
        .iter()
        .zip(b)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| ((weight(x) + 2.0 * x.ln()) + (weight(y) + 2.0 * y.ln())) / 2.0)
        .collect();
    if cross.is_empty() {
        return Ok(0.0);
    }
    let value = (log_sum_exp(&cross) - 0.5 * (log_sum_exp(&ea) + log_sum_exp(&eb))).exp();
    Ok(value.min(1.0))
}

/// Distances from the vertex carrying `label` to the vertices carrying every
/// other label of `order`, divided by `scale`.
pub fn distance_vector(
    t: &LabeledMergeTree,
    label: Label,
    order: &[Label],
    lambda: f64,
    scale: f64,
) -> Result<Vec<f64>> {
    let v = t.vertex_of(label)?;
    order
        .iter()
        .filter(|&&l| l != label)
        .map(|&l| Ok(t.blended_distance(v, t.vertex_of(l)?, lambda)? / scale))
        .collect()
}

/// Largest blended distance between any two labeled vertices of `t`.
pub fn max_pairwise_distance(t: &LabeledMergeTree, lambda: f64) -> Result<f64> {
    let vs: Vec<VertexId> = t.labels().values().copied().collect();
    let mut best = 0.0f64;
    for (i, &u) in vs.iter().enumerate() {
        for &w in &vs[i + 1..] {
            best = best.max(t.blended_distance(u, w, lambda)?);
        }
    }
    Ok(best)
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("distance scale must be positive, got {scale}")))
    }
}

/// Consistency of each label between two trees with the same label domain.
/// No completeness is required; labels need not cover every vertex.
pub fn label_consistency(
    member: &LabeledMergeTree,
    center: &LabeledMergeTree,
    delta: f64,
    lambda: f64,
    scale: f64,
) -> Result<BTreeMap<Label, f64>> {
    check_lambda(lambda)?;
    check_scale(scale)?;
    if member.labels().keys().ne(center.labels().keys()) {
        return Err(Error::agreement("trees have different label domains"));
    }
    let order: Vec<Label> = center.labels().keys().copied().collect();
    if order.len() < 2 {
        return Err(Error::input("consistency needs at least two labels"));
    }
    order
        .iter()
        .map(|&l| {
            let a = distance_vector(member, l, &order, lambda, scale)?;
            let b = distance_vector(center, l, &order, lambda, scale)?;
            Ok((l, weighted_cosine(&a, &b, delta)?))
        })
        .collect()
}

/// Vertex consistency of `member` relative to `center`. Both trees must
/// carry the same labels and label every nonroot vertex.
pub fn vertex_consistency(
    member: &LabeledMergeTree,
    center: &LabeledMergeTree,
    delta: f64,
    lambda: f64,
) -> Result<BTreeMap<Label, f64>> {
    vertex_consistency_scaled(member, center, delta, lambda, 1.0)
}

/// [`vertex_consistency`] with every distance divided by `scale`.
pub fn vertex_consistency_scaled(
    member: &LabeledMergeTree,
    center: &LabeledMergeTree,
    delta: f64,
    lambda: f64,
    scale: f64,
) -> Result<BTreeMap<Label, f64>> {
    if !member.is_vertex_complete() || !center.is_vertex_complete() {
        return Err(Error::agreement(
            "vertex consistency needs labels on every nonroot vertex; complete the labels first",
        ));
    }
    label_consistency(member, center, delta, lambda, scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear interpolation between order statistics at rank `(n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number(values: &[f64]) -> Result<FiveNumber> {
    if values.is_empty() {
        return Err(Error::input("five-number summary of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("sample contains NaN"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(FiveNumber {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

/// Deviation of every member's consistency from the per-label mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Variational {
    pub mean: BTreeMap<Label, f64>,
    /// Per label, `|alpha_i - mean|` in member order.
    pub deviations: BTreeMap<Label, Vec<f64>>,
    /// Per label, glyph radii `g * deviation / (2 * max_deviation)`.
    pub radii: BTreeMap<Label, Vec<f64>>,
    /// Largest deviation over all labels and members.
    pub max_deviation: f64,
    pub spacing: f64,
}

impl Variational {
    /// Mean of all deviations over every label and member.
    pub fn mean_deviation(&self) -> f64 {
        let (sum, n) = self
            .deviations
            .values()
            .flatten()
            .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

fn check_alphas(alphas: &[BTreeMap<Label, f64>]) -> Result<()> {
    let first = alphas
        .first()
        .ok_or_else(|| Error::input("need consistency values for at least one member"))?;
    if alphas.iter().any(|a| a.keys().ne(first.keys())) {
        return Err(Error::agreement("members report consistency for different labels"));
    }
    Ok(())
}

fn per_label(alphas: &[BTreeMap<Label, f64>]) -> BTreeMap<Label, Vec<f64>> {
    let mut out: BTreeMap<Label, Vec<f64>> = BTreeMap::new();
    for a in alphas {
        for (&l, &v) in a {
            out.entry(l).or_default().push(v);
        }
    }
    out
}

/// Variational encoding from per-member consistency maps.
pub fn variational_from(alphas: &[BTreeMap<Label, f64>], g: f64) -> Result<Variational> {
    check_alphas(alphas)?;
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::input(format!("glyph spacing must be nonnegative, got {g}")));
    }
    let values = per_label(alphas);
    let mut mean = BTreeMap::new();
    let mut deviations = BTreeMap::new();
    let mut max_deviation = 0.0f64;
    for (&l, vs) in &values {
        let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = (vs.iter().sum::<f64>() / vs.len() as f64).clamp(lo, hi);
        let d: Vec<f64> = vs.iter().map(|v| (v - m).abs()).collect();
        max_deviation = d.iter().copied().fold(max_deviation, f64::max);
        mean.insert(l, m);
        deviations.insert(l, d);
    }
    let radii = deviations
        .iter()
        .map(|(&l, d)| {
            let r = d
                .iter()
                .map(|&x| {
                    if max_deviation > 0.0 {
                        g * x / (2.0 * max_deviation)
                    } else {
                        0.0
                    }
                })
                .collect();
            (l, r)
        })
        .collect();
    Ok(Variational {
        mean,
        deviations,
        radii,
        max_deviation,
        spacing: g,
    })
}

/// Statistical encoding from per-member consistency maps.
pub fn statistical_from(alphas: &[BTreeMap<Label, f64>]) -> Result<BTreeMap<Label, FiveNumber>> {
    check_alphas(alphas)?;
    per_label(alphas)
        .into_iter()
        .map(|(l, vs)| Ok((l, five_number(&vs)?)))
        .collect()
}

fn member_alphas(
    center: &LabeledMergeTree,
    members: &[LabeledMergeTree],
    delta: f64,
    lambda: f64,
) -> Result<Vec<BTreeMap<Label, f64>>> {
    members
        .iter()
        .map(|m| vertex_consistency(m, center, delta, lambda))
        .collect()
}

pub fn variational_consistency(
    center: &LabeledMergeTree,
    members: &[LabeledMergeTree],
    delta: f64,
    lambda: f64,
    g: f64,
) -> Result<Variational> {
    variational_from(&member_alphas(center, members, delta, lambda)?, g)
}

pub fn statistical_consistency(
    center: &LabeledMergeTree,
    members: &[LabeledMergeTree],
    delta: f64,
    lambda: f64,
) -> Result<BTreeMap<Label, FiveNumber>> {
    statistical_from(&member_alphas(center, members, delta, lambda)?)
}

/// Consistency carried by one edge, child to parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeConsistency {
    pub child: VertexId,
    pub parent: VertexId,
    /// Piecewise constant: the smaller endpoint value.
    pub pc: f64,
    /// Piecewise linear: child and parent values to interpolate between.
    pub pl: (f64, f64),
}

/// Edge values from per-label vertex values. A vertex takes the value of its
/// smallest label; the edge into the root is skipped.
pub fn edge_consistency(
    t: &LabeledMergeTree,
    alpha: &BTreeMap<Label, f64>,
) -> Result<Vec<EdgeConsistency>> {
    let by_vertex = t.labels_by_vertex();
    let value = |v: VertexId| -> Result<f64> {
        let l = by_vertex[v]
            .first()
            .ok_or_else(|| Error::input(format!("vertex {:?} has no label", t.tree().name(v))))?;
        alpha
            .get(l)
            .copied()
            .ok_or_else(|| Error::input(format!("no consistency value for label {l}")))
    };
    let root = t.root();
    t.tree()
        .edges()
        .filter(|&(_, p)| p != root)
        .map(|(c, p)| {
            let (a, b) = (value(c)?, value(p)?);
            Ok(EdgeConsistency {
                child: c,
                parent: p,
                pc: a.min(b),
                pl: (a, b),
            })
        })
        .collect()
}

/// Everything the consistency views need for one ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub delta: f64,
    pub lambda: f64,
    /// Divisor applied to every distance before weighting.
    pub scale: f64,
    /// Per member, the consistency of every label.
    pub vertex: Vec<BTreeMap<Label, f64>>,
    pub variational: Variational,
    pub statistical: BTreeMap<Label, FiveNumber>,
    /// Per member, edge values from that member's consistency.
    pub member_edges: Vec<Vec<EdgeConsistency>>,
    /// Center edges from the mean consistency.
    pub center_edges: Vec<EdgeConsistency>,
}

/// Common distance scale: the largest pairwise distance found in the center
/// or any member (1 when all distances vanish).
pub fn ensemble_scale(
    center: &LabeledMergeTree,
    members: &[LabeledMergeTree],
    lambda: f64,
) -> Result<f64> {
    let mut best = max_pairwise_distance(center, lambda)?;
    for m in members {
        best = best.max(max_pairwise_distance(m, lambda)?);
    }
    Ok(if best > 0.0 { best } else { 1.0 })
}

/// Full report for members vertex-labeled against `center`. With `normalize`
/// distances are divided by [`ensemble_scale`] so `delta` is relative to the
/// largest distance in the ensemble.
pub fn consistency_report(
    center: &LabeledMergeTree,
    members: &[LabeledMergeTree],
    delta: f64,
    lambda: f64,
    g: f64,
    normalize: bool,
) -> Result<ConsistencyReport> {
    if members.is_empty() {
        return Err(Error::input("ensemble is empty"));
    }
    let scale = if normalize {
        ensemble_scale(center, members, lambda)?
    } else {
        1.0
    };
    let vertex = members
        .iter()
        .map(|m| vertex_consistency_scaled(m, center, delta, lambda, scale))
        .collect::<Result<Vec<_>>>()?;
    let variational = variational_from(&vertex, g)?;
    let statistical = statistical_from(&vertex)?;
    let member_edges = members
        .iter()
        .zip(&vertex)
        .map(|(m, a)| edge_consistency(m, a))
        .collect::<Result<Vec<_>>>()?;
    let center_edges = edge_consistency(center, &variational.mean)?;
    Ok(ConsistencyReport {
        delta,
        lambda,
        scale,
        vertex,
        variational,
        statistical,
        member_edges,
        center_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::MergeTree;

    #[test]
    fn equal_vectors_are_one() {
        for delta in [0.05, 0.1, 1.0, f64::INFINITY] {
            assert_eq!(weighted_cosine(&[1.0, 2.0], &[1.0, 2.0], delta).unwrap(), 1.0);
        }
    }

    #[test]
    fn orthogonal_and_degenerate() {
        assert_eq!(weighted_cosine(&[1.0, 0.0], &[0.0, 1.0], f64::INFINITY).unwrap(), 0.0);
        assert_eq!(weighted_cosine(&[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap(), 1.0);
        assert_eq!(weighted_cosine(&[0.0, 0.0], &[0.0, 1.0], 1.0).unwrap(), 0.0);
        assert!(weighted_cosine(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(weighted_cosine(&[1.0], &[1.0], 0.0).is_err());
        assert!(weighted_cosine(&[-1.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn plain_cosine_at_infinity() {
        let v = weighted_cosine(&[1.0, 2.0], &[2.0, 1.0], f64::INFINITY).unwrap();
        assert!((v - 0.8).abs() < 1e-15);
    }

    #[test]
    fn tiny_delta_does_not_underflow() {
        let v = weighted_cosine(&[30.0, 31.0], &[30.0, 31.0], 0.05).unwrap();
        assert_eq!(v, 1.0);
        let w = weighted_cosine(&[30.0, 31.0], &[31.0, 30.0], 0.05).unwrap();
        assert!((0.0..=1.0).contains(&w));
    }

    #[test]
    fn quartiles() {
        let s = five_number(&[0.0, 1.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (0.0, 0.25, 0.5, 0.75, 1.0));
        let c = five_number(&[0.3; 4]).unwrap();
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (0.3, 0.3, 0.3, 0.3, 0.3));
        assert!(five_number(&[]).is_err());
    }

    #[test]
    fn radius_formula() {
        let alphas = vec![
            BTreeMap::from([(Label(1), 1.0), (Label(2), 0.5)]),
            BTreeMap::from([(Label(1), 1.0), (Label(2), 1.0)]),
        ];
        let v = variational_from(&alphas, 1.0).unwrap();
        assert_eq!(v.max_deviation, 0.25);
        assert_eq!(v.radii[&Label(2)], vec![0.5, 0.5]);
        assert_eq!(v.radii[&Label(1)], vec![0.0, 0.0]);
        let flat = variational_from(&alphas[1..], 1.0).unwrap();
        assert_eq!(flat.max_deviation, 0.0);
        assert!(flat.radii.values().flatten().all(|&r| r == 0.0));
    }

    fn complete_two_leaf() -> LabeledMergeTree {
        let t = MergeTree::from_named(&[
            ("l1", 0.0, Some("s")),
            ("l2", 1.0, Some("s")),
            ("s", 2.0, Some("root")),
            ("root", f64::INFINITY, None),
        ])
        .unwrap();
        let labels = BTreeMap::from([(Label(1), 0), (Label(2), 1), (Label(3), 2)]);
        LabeledMergeTree::new(t, labels, None).unwrap()
    }

    #[test]
    fn self_consistency_and_edges() {
        let t = complete_two_leaf();
        let a = vertex_consistency(&t, &t, 0.05, 1.0).unwrap();
        assert!(a.values().all(|&v| v == 1.0));
        let alpha = BTreeMap::from([(Label(1), 0.2), (Label(2), 0.9), (Label(3), 0.8)]);
        let edges = edge_consistency(&t, &alpha).unwrap();
        assert_eq!(edges.len(), 2);
        assert_eq!(edges[0].pc, 0.2);
        assert_eq!(edges[0].pl, (0.2, 0.8));
        assert_eq!(edges[1].pc, 0.8);
    }

    #[test]
    fn incomplete_labelings_are_refused() {
        let t = complete_two_leaf();
        let leaves_only = t
            .with_labels(BTreeMap::from([(Label(1), 0), (Label(2), 1)]))
            .unwrap();
        assert!(matches!(
            vertex_consistency(&leaves_only, &leaves_only, 1.0, 1.0),
            Err(Error::Agreement(_))
        ));
        assert!(label_consistency(&leaves_only, &leaves_only, 1.0, 1.0, 1.0).is_ok());
    }
}
