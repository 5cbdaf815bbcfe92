//! Induced matrices, the merge tree of a valid matrix, and the labeled
//! interleaving distance.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::{Label, LabeledMergeTree, MergeTree, Vertex, VertexId};
use crate::union_find::DisjointSet;

/// Dense symmetric matrix indexed by an ascending list of labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    labels: Vec<Label>,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from rows. Rejects non-square, asymmetric or
    /// non-finite input and label lists that are not strictly ascending.
    pub fn from_rows(labels: Vec<Label>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::input("matrix needs at least one label"));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("matrix labels must be strictly ascending"));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::input(format!("matrix rows do not form a {n}x{n} square")));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            entries.extend_from_slice(row);
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("matrix entries must be finite"));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::input(format!(
                        "matrix is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(SymMatrix { labels, entries })
    }

    /// Builds a matrix from a symmetric entry function evaluated on `i <= j`.
    pub fn from_fn(labels: Vec<Label>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        SymMatrix::from_rows(labels, &rows)
    }

    /// Consecutive labels `1..=n`.
    pub fn with_default_labels(rows: &[Vec<f64>]) -> Result<Self> {
        let labels = (1..=rows.len() as u32).map(Label).collect();
        SymMatrix::from_rows(labels, rows)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size()).map(<[f64]>::to_vec).collect()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Every diagonal entry is at most every off-diagonal entry of its row.
    pub fn is_valid(&self) -> bool {
        self.is_valid_within(0.0)
    }

    pub fn is_valid_within(&self, tol: f64) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| self.get(i, i) <= self.get(i, j) + tol))
    }

    /// Valid and every entry satisfies `m_ij <= max(m_ik, m_kj)`.
    pub fn is_ultra(&self) -> bool {
        self.is_ultra_within(0.0)
    }

    pub fn is_ultra_within(&self, tol: f64) -> bool {
        if !self.is_valid_within(tol) {
            return false;
        }
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                let mij = self.get(i, j);
                for k in 0..n {
                    if mij > self.get(i, k).max(self.get(k, j)) + tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn same_labels(&self, other: &SymMatrix) -> Result<()> {
        if self.labels == other.labels {
            Ok(())
        } else {
            Err(Error::agreement("matrices are indexed by different label sets"))
        }
    }

    /// Max absolute elementwise difference.
    pub fn linf_distance(&self, other: &SymMatrix) -> Result<f64> {
        self.same_labels(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `(1 - t) * self + t * other`, entrywise.
    pub fn lerp(&self, other: &SymMatrix, t: f64) -> Result<SymMatrix> {
        self.same_labels(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(SymMatrix {
            labels: self.labels.clone(),
            entries,
        })
    }
}

/// `M_ij = f(lca(label i, label j))` over the tree's labels in ascending order.
pub fn induced_matrix(t: &LabeledMergeTree) -> Result<SymMatrix> {
    if t.labels().is_empty() {
        return Err(Error::input("tree has no labels"));
    }
    let labels: Vec<Label> = t.labels().keys().copied().collect();
    let verts: Vec<VertexId> = t.labels().values().copied().collect();
    let n = labels.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let a = t.lca(verts[i], verts[j])?;
            let v = t.tree().value(a);
            if !v.is_finite() {
                return Err(Error::input("label pair meets only at the root"));
            }
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::from_rows(labels, &rows)
}

#[derive(Copy, Clone, Debug)]
enum Event {
    Vertex(usize),
    Edge(usize, usize),
}

struct Node {
    name: String,
    value: f64,
    children: Vec<usize>,
    labels: Vec<Label>,
    alive: bool,
}

/// The labeled merge tree of the sublevel filtration of the complete graph
/// on the matrix's labels (vertex `i` at `m_ii`, edge `ij` at `m_ij`).
///
/// Events are swept in ascending value, vertices before edges on ties, then
/// by label position. Components that meet at a value where one of them
/// already has a vertex reuse that vertex, so equal-valued merges collapse
/// into a single vertex of higher degree. Label vertices are named `l<label>`,
/// merge vertices `m<k>`, and the root `root`.
pub fn merge_tree_of_matrix(m: &SymMatrix) -> Result<LabeledMergeTree> {
    if !m.is_valid() {
        return Err(Error::input("matrix is not valid (a diagonal entry exceeds its row)"));
    }
    let n = m.size();
    let mut events: Vec<(f64, Event)> = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        events.push((m.get(i, i), Event::Vertex(i)));
        for j in (i + 1)..n {
            events.push((m.get(i, j), Event::Edge(i, j)));
        }
    }
    events.sort_by(|(va, ea), (vb, eb)| {
        va.total_cmp(vb).then_with(|| match (ea, eb) {
            (Event::Vertex(a), Event::Vertex(b)) => a.cmp(b),
            (Event::Vertex(_), Event::Edge(..)) => Ordering::Less,
            (Event::Edge(..), Event::Vertex(_)) => Ordering::Greater,
            (Event::Edge(a1, a2), Event::Edge(b1, b2)) => (a1, a2).cmp(&(b1, b2)),
        })
    });

    let mut nodes: Vec<Node> = Vec::with_capacity(2 * n);
    let mut top = vec![usize::MAX; n];
    let mut sets = DisjointSet::new(n);
    let mut merges = 0usize;

    for (value, event) in events {
        match event {
            Event::Vertex(i) => {
                top[i] = nodes.len();
                nodes.push(Node {
                    name: format!("l{}", m.labels()[i]),
                    value,
                    children: Vec::new(),
                    labels: vec![m.labels()[i]],
                    alive: true,
                });
            }
            Event::Edge(i, j) => {
                let (ri, rj) = (sets.find(i), sets.find(j));
                if ri == rj {
                    continue;
                }
                let (a, b) = (top[ri].min(top[rj]), top[ri].max(top[rj]));
                let new_top = match (nodes[a].value == value, nodes[b].value == value) {
                    (true, true) => {
                        let absorbed_children = std::mem::take(&mut nodes[b].children);
                        let absorbed_labels = std::mem::take(&mut nodes[b].labels);
                        nodes[b].alive = false;
                        nodes[a].children.extend(absorbed_children);
                        nodes[a].labels.extend(absorbed_labels);
                        a
                    }
                    (true, false) => {
                        nodes[a].children.push(b);
                        a
                    }
                    (false, true) => {
                        nodes[b].children.push(a);
                        b
                    }
                    (false, false) => {
                        merges += 1;
                        nodes.push(Node {
                            name: format!("m{merges}"),
                            value,
                            children: vec![a, b],
                            labels: Vec::new(),
                            alive: true,
                        });
                        nodes.len() - 1
                    }
                };
                let r = sets.union(ri, rj);
                top[r] = new_top;
            }
        }
    }

    let last = top[sets.find(0)];
    let mut index = vec![usize::MAX; nodes.len()];
    let mut next = 0;
    for (k, node) in nodes.iter().enumerate() {
        if node.alive {
            index[k] = next;
            next += 1;
        }
    }
    let root_id = next;
    let mut vertices: Vec<Vertex> = Vec::with_capacity(next + 1);
    let mut parents = vec![None; next];
    for (k, node) in nodes.iter().enumerate() {
        if !node.alive {
            continue;
        }
        for &c in &node.children {
            parents[index[c]] = Some(index[k]);
        }
    }
    parents[index[last]] = Some(root_id);
    let mut labels = BTreeMap::new();
    for (k, node) in nodes.into_iter().enumerate() {
        if !node.alive {
            continue;
        }
        let id = index[k];
        for l in node.labels {
            labels.insert(l, id);
        }
        vertices.push(Vertex {
            name: node.name,
            parent: parents[id],
            value: node.value,
        });
    }
    vertices.push(Vertex {
        name: "root".to_string(),
        parent: None,
        value: f64::INFINITY,
    });
    LabeledMergeTree::new(MergeTree::new(vertices)?, labels, None)
}

/// L-infinity distance between the induced matrices of two trees with the
/// same label domain.
pub fn interleaving_distance(t1: &LabeledMergeTree, t2: &LabeledMergeTree) -> Result<f64> {
    if t1.labels().keys().ne(t2.labels().keys()) {
        return Err(Error::agreement(
            "trees have different label domains; relabel them first",
        ));
    }
    induced_matrix(t1)?.linf_distance(&induced_matrix(t2)?)
}
