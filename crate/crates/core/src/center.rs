//! Element-wise 1-centers of induced matrices and the 1-center tree of a
//! fully labeled ensemble.
//!
//! Each entry of the center matrix is the midpoint `(min + max) / 2` of the
//! members' entries: the center of the smallest interval enclosing them. The
//! merge tree of that matrix is a 1-center of the ensemble under the labeled
//! interleaving distance, with radius equal to half the largest entrywise
//! range.

use crate::ensemble::{Agreement, Ensemble};
use crate::error::{Error, Result};
use crate::matrix::{induced_matrix, interleaving_distance, merge_tree_of_matrix, SymMatrix};
use crate::tree::LabeledMergeTree;

#[derive(Clone, Debug, PartialEq)]
pub struct CenterResult {
    pub center: LabeledMergeTree,
    pub center_matrix: SymMatrix,
    /// `d_I(member, center)` in member order.
    pub member_distances: Vec<f64>,
    /// Largest member distance.
    pub radius: f64,
    /// Whether the midpoint matrix was already ultra (the tree realizes it
    /// exactly only then).
    pub center_matrix_is_ultra: bool,
}

fn check_compatible(matrices: &[SymMatrix]) -> Result<&SymMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::input("need at least one matrix"))?;
    for (k, m) in matrices.iter().enumerate() {
        if m.labels() != first.labels() {
            return Err(Error::input(format!(
                "matrix {k} is indexed by a different label list"
            )));
        }
        if !m.is_valid() {
            return Err(Error::input(format!("matrix {k} is not valid")));
        }
    }
    Ok(first)
}

/// Entrywise midpoint of the range spanned by the inputs.
pub fn one_center_matrix(matrices: &[SymMatrix]) -> Result<SymMatrix> {
    let first = check_compatible(matrices)?;
    SymMatrix::from_fn(first.labels().to_vec(), |i, j| {
        let (lo, hi) = entry_range(matrices, i, j);
        (lo + hi) / 2.0
    })
}

fn entry_range(matrices: &[SymMatrix], i: usize, j: usize) -> (f64, f64) {
    matrices.iter().map(|m| m.get(i, j)).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), v| (lo.min(v), hi.max(v)),
    )
}

/// Half of the largest entrywise range: the optimal 1-center radius.
pub fn half_max_range(matrices: &[SymMatrix]) -> Result<f64> {
    let first = check_compatible(matrices)?;
    let n = first.size();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let (lo, hi) = entry_range(matrices, i, j);
            best = best.max(hi - lo);
        }
    }
    Ok(best / 2.0)
}

/// 1-center tree of an ensemble in full agreement.
pub fn one_center_tree(ensemble: &Ensemble) -> Result<CenterResult> {
    if ensemble.is_empty() {
        return Err(Error::input("ensemble is empty"));
    }
    if ensemble.agreement() != Agreement::Full {
        return Err(Error::agreement(format!(
            "ensemble is in {} agreement; relabel it first",
            ensemble.agreement().as_str()
        )));
    }
    let matrices = ensemble
        .members()
        .iter()
        .map(induced_matrix)
        .collect::<Result<Vec<_>>>()?;
    let center_matrix = one_center_matrix(&matrices)?;
    let center = merge_tree_of_matrix(&center_matrix)?;
    let member_distances = ensemble
        .members()
        .iter()
        .map(|m| interleaving_distance(m, &center))
        .collect::<Result<Vec<_>>>()?;
    let radius = member_distances.iter().copied().fold(0.0, f64::max);
    Ok(CenterResult {
        center_matrix_is_ultra: center_matrix.is_ultra(),
        center,
        center_matrix,
        member_distances,
        radius,
    })
}

/// One link of the star-shaped summary: member index, distance to the
/// center, and that distance relative to the radius.
#[derive(Clone, Debug, PartialEq)]
pub struct StarLink {
    pub member: usize,
    pub distance: f64,
    pub normalized: f64,
}

pub fn ensemble_summary(result: &CenterResult) -> Vec<StarLink> {
    result
        .member_distances
        .iter()
        .enumerate()
        .map(|(member, &distance)| StarLink {
            member,
            distance,
            normalized: if result.radius > 0.0 {
                distance / result.radius
            } else {
                0.0
            },
        })
        .collect()
}
