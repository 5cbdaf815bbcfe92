//! Merge trees, labelings, embeddings and intra-tree vertex distances.
//!
//! Trees are stored arena-style: vertices live in a flat `Vec<Vertex>` and are
//! referenced by [`VertexId`] (an index). Every vertex also carries an opaque
//! string name that is what documents and reports use. The root carries the
//! value `f64::INFINITY`.
//!
//! A [`MergeTree`] may hold a structure that breaks the merge tree rules so
//! that [`MergeTree::validate`] can report what is wrong with it. A
//! [`LabeledMergeTree`] can only be built from a tree with no violations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a vertex inside its tree's arena.
pub type VertexId = usize;

/// A label from the label universe `{1, 2, ...}`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for Label {
    fn from(v: u32) -> Self {
        Label(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub name: String,
    pub parent: Option<VertexId>,
    pub value: f64,
}

/// Which merge tree rule a [`Violation`] breaks.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    NoRoot,
    MultipleRoots,
    RootDegree,
    RootNotInfinite,
    InfiniteNonRoot,
    NonFiniteValue,
    EqualValuesOnEdge,
    DecreasingTowardRoot,
    Cycle,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::NoRoot => "no_root",
            Rule::MultipleRoots => "multiple_roots",
            Rule::RootDegree => "root_degree",
            Rule::RootNotInfinite => "root_not_infinite",
            Rule::InfiniteNonRoot => "infinite_non_root",
            Rule::NonFiniteValue => "non_finite_value",
            Rule::EqualValuesOnEdge => "equal_values_on_edge",
            Rule::DecreasingTowardRoot => "decreasing_toward_root",
            Rule::Cycle => "cycle",
        }
    }
}

/// One broken rule, naming the offending vertex (and the other end of the
/// edge where the rule concerns an edge).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub vertex: String,
    pub other: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.rule {
            Rule::NoRoot => "no vertex is parentless",
            Rule::MultipleRoots => "more than one parentless vertex",
            Rule::RootDegree => "root must have exactly one child",
            Rule::RootNotInfinite => "root value must be inf",
            Rule::InfiniteNonRoot => "only the root may have value inf",
            Rule::NonFiniteValue => "value is NaN",
            Rule::EqualValuesOnEdge => "equal values on edge",
            Rule::DecreasingTowardRoot => "value decreases toward root",
            Rule::Cycle => "parent pointers do not reach the root",
        };
        match &self.other {
            Some(o) => write!(f, "{} ({}-{}): {}", self.rule.code(), self.vertex, o, what),
            None => write!(f, "{} ({}): {}", self.rule.code(), self.vertex, what),
        }
    }
}

/// A rooted tree with a scalar value on every vertex.
#[derive(Clone, Debug)]
pub struct MergeTree {
    vertices: Vec<Vertex>,
    children: Vec<Vec<VertexId>>,
    depth: Vec<Option<usize>>,
    by_name: HashMap<String, VertexId>,
}

impl PartialEq for MergeTree {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl MergeTree {
    /// Builds a tree from an arena of vertices. Names must be unique and
    /// parent indices must resolve; everything else is left to [`validate`].
    ///
    /// [`validate`]: MergeTree::validate
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        let n = vertices.len();
        let mut by_name = HashMap::with_capacity(n);
        let mut children = vec![Vec::new(); n];
        for (id, v) in vertices.iter().enumerate() {
            if by_name.insert(v.name.clone(), id).is_some() {
                return Err(Error::input(format!("duplicate vertex id {:?}", v.name)));
            }
            if let Some(p) = v.parent {
                if p >= n {
                    return Err(Error::input(format!(
                        "vertex {:?} has parent index {p} out of range",
                        v.name
                    )));
                }
                children[p].push(id);
            }
        }
        let depth = compute_depths(&vertices);
        Ok(MergeTree {
            vertices,
            children,
            depth,
            by_name,
        })
    }

    /// Convenience constructor from `(name, value, parent name)` triples.
    pub fn from_named<S: AsRef<str>>(spec: &[(S, f64, Option<S>)]) -> Result<Self> {
        let index: HashMap<&str, usize> = spec
            .iter()
            .enumerate()
            .map(|(i, (name, _, _))| (name.as_ref(), i))
            .collect();
        let mut vertices = Vec::with_capacity(spec.len());
        for (name, value, parent) in spec {
            let parent = match parent {
                Some(p) => Some(*index.get(p.as_ref()).ok_or_else(|| {
                    Error::input(format!("unknown parent {:?}", p.as_ref()))
                })?),
                None => None,
            };
            vertices.push(Vertex {
                name: name.as_ref().to_string(),
                parent,
                value: *value,
            });
        }
        MergeTree::new(vertices)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id]
    }

    pub fn value(&self, id: VertexId) -> f64 {
        self.vertices[id].value
    }

    pub fn name(&self, id: VertexId) -> &str {
        &self.vertices[id].name
    }

    pub fn parent(&self, id: VertexId) -> Option<VertexId> {
        self.vertices[id].parent
    }

    pub fn children(&self, id: VertexId) -> &[VertexId] {
        &self.children[id]
    }

    pub fn find(&self, name: &str) -> Option<VertexId> {
        self.by_name.get(name).copied()
    }

    /// The parentless vertex, when there is exactly one.
    pub fn root(&self) -> Option<VertexId> {
        let mut roots = self.vertices.iter().enumerate().filter(|(_, v)| v.parent.is_none());
        match (roots.next(), roots.next()) {
            (Some((id, _)), None) => Some(id),
            _ => None,
        }
    }

    pub fn is_root(&self, id: VertexId) -> bool {
        self.vertices[id].parent.is_none()
    }

    /// Nonroot vertices without children.
    pub fn is_leaf(&self, id: VertexId) -> bool {
        !self.is_root(id) && self.children[id].is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.len()).filter(move |&v| self.is_leaf(v))
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    /// Edges as `(child, parent)` pairs in child order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter_map(|(id, v)| v.parent.map(|p| (id, p)))
    }

    /// Number of edges between `id` and the root, if `id` reaches it.
    pub fn depth(&self, id: VertexId) -> Option<usize> {
        self.depth.get(id).copied().flatten()
    }

    fn check(&self, id: VertexId) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown vertex index {id}")))
        }
    }

    /// Lowest common ancestor: the common ancestor of minimum value.
    pub fn lca(&self, u: VertexId, v: VertexId) -> Result<VertexId> {
        self.check(u)?;
        self.check(v)?;
        let (Some(mut du), Some(mut dv)) = (self.depth(u), self.depth(v)) else {
            return Err(Error::input("vertex does not reach the root"));
        };
        let (mut a, mut b) = (u, v);
        while du > dv {
            a = self.vertices[a].parent.expect("depth > 0");
            du -= 1;
        }
        while dv > du {
            b = self.vertices[b].parent.expect("depth > 0");
            dv -= 1;
        }
        while a != b {
            match (self.vertices[a].parent, self.vertices[b].parent) {
                (Some(pa), Some(pb)) => {
                    a = pa;
                    b = pb;
                }
                _ => return Err(Error::input("vertices lie in different components")),
            }
        }
        Ok(a)
    }

    /// Checks every merge tree rule and returns the broken ones. An empty list
    /// means the tree is a valid merge tree.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let name = |id: VertexId| self.vertices[id].name.clone();
        let roots: Vec<VertexId> = (0..self.len()).filter(|&v| self.is_root(v)).collect();
        match roots.len() {
            0 => out.push(Violation {
                rule: Rule::NoRoot,
                vertex: self.vertices.first().map(|v| v.name.clone()).unwrap_or_default(),
                other: None,
            }),
            1 => {}
            _ => {
                for &r in &roots[1..] {
                    out.push(Violation {
                        rule: Rule::MultipleRoots,
                        vertex: name(r),
                        other: Some(name(roots[0])),
                    });
                }
            }
        }
        for &r in &roots {
            if self.vertices[r].value != f64::INFINITY {
                out.push(Violation {
                    rule: Rule::RootNotInfinite,
                    vertex: name(r),
                    other: None,
                });
            }
            if self.children[r].len() != 1 {
                out.push(Violation {
                    rule: Rule::RootDegree,
                    vertex: name(r),
                    other: None,
                });
            }
        }
        for (id, v) in self.vertices.iter().enumerate() {
            let Some(p) = v.parent else { continue };
            if v.value.is_nan() {
                out.push(Violation {
                    rule: Rule::NonFiniteValue,
                    vertex: name(id),
                    other: None,
                });
                continue;
            }
            if v.value.is_infinite() {
                out.push(Violation {
                    rule: Rule::InfiniteNonRoot,
                    vertex: name(id),
                    other: None,
                });
            }
            let pv = self.vertices[p].value;
            if v.value == pv {
                out.push(Violation {
                    rule: Rule::EqualValuesOnEdge,
                    vertex: name(id),
                    other: Some(name(p)),
                });
            } else if v.value > pv {
                out.push(Violation {
                    rule: Rule::DecreasingTowardRoot,
                    vertex: name(id),
                    other: Some(name(p)),
                });
            }
        }
        for (id, d) in self.depth.iter().enumerate() {
            if d.is_none() && !roots.is_empty() {
                out.push(Violation {
                    rule: Rule::Cycle,
                    vertex: name(id),
                    other: None,
                });
            }
        }
        out
    }

    /// Returns a copy with the values uniformly shifted.
    pub fn shifted(&self, offset: f64) -> MergeTree {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex {
                value: v.value + offset,
                ..v.clone()
            })
            .collect();
        MergeTree::new(vertices).expect("same structure")
    }
}

fn compute_depths(vertices: &[Vertex]) -> Vec<Option<usize>> {
    #[derive(Copy, Clone, PartialEq)]
    enum State {
        Unknown,
        OnPath,
        Done(Option<usize>),
    }
    let n = vertices.len();
    let mut state = vec![State::Unknown; n];
    let mut path = Vec::new();
    for start in 0..n {
        if state[start] != State::Unknown {
            continue;
        }
        let mut cur = start;
        let base = loop {
            match state[cur] {
                State::Done(d) => break d,
                State::OnPath => break None,
                State::Unknown => {
                    state[cur] = State::OnPath;
                    path.push(cur);
                    match vertices[cur].parent {
                        Some(p) => cur = p,
                        None => {
                            // root: depth 0 assigned when unwinding
                            path.pop();
                            state[cur] = State::Done(Some(0));
                            break Some(0);
                        }
                    }
                }
            }
        };
        let mut d = base;
        while let Some(v) = path.pop() {
            d = d.map(|x| x + 1);
            state[v] = State::Done(d);
        }
    }
    state
        .into_iter()
        .map(|s| match s {
            State::Done(d) => d,
            _ => None,
        })
        .collect()
}

/// Coordinates for every vertex of a tree in `R^2` or `R^3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    dim: usize,
    coords: Vec<f64>,
}

impl Embedding {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::input(format!("embedding dimension {dim} is not 2 or 3")));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::input(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::input(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        Ok(Embedding { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, id: VertexId) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }
}

/// L2 distance between two points of equal dimension.
pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A valid merge tree with a label map and an optional embedding.
///
/// Invariants checked at construction: the tree has no violations, labels
/// never sit on the root, every leaf carries at least one label and the
/// embedding (if any) covers every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMergeTree {
    tree: MergeTree,
    labels: BTreeMap<Label, VertexId>,
    embedding: Option<Embedding>,
}

impl LabeledMergeTree {
    pub fn new(
        tree: MergeTree,
        labels: BTreeMap<Label, VertexId>,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let violations = tree.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidTree(violations));
        }
        let root = tree.root().expect("validated");
        let mut covered = vec![false; tree.len()];
        for (&l, &v) in &labels {
            if l.0 == 0 {
                return Err(Error::input("label 0 is not a positive integer"));
            }
            if v >= tree.len() {
                return Err(Error::input(format!("label {l} points at unknown vertex {v}")));
            }
            if v == root {
                return Err(Error::input(format!("label {l} is placed on the root")));
            }
            covered[v] = true;
        }
        if let Some(leaf) = tree.leaves().find(|&v| !covered[v]) {
            return Err(Error::input(format!(
                "leaf {:?} carries no label",
                tree.name(leaf)
            )));
        }
        if let Some(e) = &embedding {
            if e.len() != tree.len() {
                return Err(Error::input(format!(
                    "embedding has {} points for {} vertices",
                    e.len(),
                    tree.len()
                )));
            }
        }
        Ok(LabeledMergeTree {
            tree,
            labels,
            embedding,
        })
    }

    pub fn tree(&self) -> &MergeTree {
        &self.tree
    }

    pub fn labels(&self) -> &BTreeMap<Label, VertexId> {
        &self.labels
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn domain(&self) -> BTreeSet<Label> {
        self.labels.keys().copied().collect()
    }

    pub fn root(&self) -> VertexId {
        self.tree.root().expect("validated")
    }

    pub fn vertex_of(&self, label: Label) -> Result<VertexId> {
        self.labels
            .get(&label)
            .copied()
            .ok_or_else(|| Error::input(format!("label {label} is not in the tree")))
    }

    /// All labels placed on `v`, ascending.
    pub fn labels_at(&self, v: VertexId) -> Vec<Label> {
        self.labels
            .iter()
            .filter(|(_, &w)| w == v)
            .map(|(&l, _)| l)
            .collect()
    }

    /// Inverse of the label map: every vertex with the labels it carries.
    pub fn labels_by_vertex(&self) -> Vec<Vec<Label>> {
        let mut out = vec![Vec::new(); self.tree.len()];
        for (&l, &v) in &self.labels {
            out[v].push(l);
        }
        out
    }

    /// Nonroot vertices that carry no label, ordered by value then name.
    pub fn unlabeled_vertices(&self) -> Vec<VertexId> {
        let by_vertex = self.labels_by_vertex();
        let root = self.root();
        let mut out: Vec<VertexId> = (0..self.tree.len())
            .filter(|&v| v != root && by_vertex[v].is_empty())
            .collect();
        self.sort_by_value(&mut out);
        out
    }

    pub(crate) fn sort_by_value(&self, ids: &mut [VertexId]) {
        ids.sort_by(|&a, &b| {
            self.tree
                .value(a)
                .total_cmp(&self.tree.value(b))
                .then_with(|| self.tree.name(a).cmp(self.tree.name(b)))
        });
    }

    /// True when every nonroot vertex carries a label.
    pub fn is_vertex_complete(&self) -> bool {
        self.unlabeled_vertices().is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn with_labels(&self, labels: BTreeMap<Label, VertexId>) -> Result<Self> {
        LabeledMergeTree::new(self.tree.clone(), labels, self.embedding.clone())
    }

    pub fn with_embedding(&self, embedding: Option<Embedding>) -> Result<Self> {
        LabeledMergeTree::new(self.tree.clone(), self.labels.clone(), embedding)
    }

    pub fn lca(&self, u: VertexId, v: VertexId) -> Result<VertexId> {
        self.tree.lca(u, v)
    }

    /// Intrinsic tree distance `|f(x) - f(a)| + |f(a) - f(y)|` with `a` the
    /// lowest common ancestor of `x` and `y`.
    pub fn tree_distance(&self, x: VertexId, y: VertexId) -> Result<f64> {
        let a = self.tree.lca(x, y)?;
        if x == y {
            return Ok(0.0);
        }
        let fa = self.tree.value(a);
        if !fa.is_finite() {
            return Err(Error::input("tree distance to the root is infinite"));
        }
        Ok((self.tree.value(x) - fa).abs() + (fa - self.tree.value(y)).abs())
    }

    pub fn euclidean_distance(&self, x: VertexId, y: VertexId) -> Result<f64> {
        self.tree.check(x)?;
        self.tree.check(y)?;
        let e = self
            .embedding
            .as_ref()
            .ok_or_else(|| Error::configuration("tree has no embedding"))?;
        Ok(l2(e.point(x), e.point(y)))
    }

    /// `lambda * d_T + (1 - lambda) * d_E`. `lambda = 1` needs no embedding.
    pub fn blended_distance(&self, x: VertexId, y: VertexId, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if lambda == 1.0 {
            return self.tree_distance(x, y);
        }
        let de = self.euclidean_distance(x, y)?;
        if lambda == 0.0 {
            return Ok(de);
        }
        Ok(lambda * self.tree_distance(x, y)? + (1.0 - lambda) * de)
    }
}

/// Rejects blend weights outside `[0, 1]`.
pub fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::input(format!("lambda {lambda} is outside [0, 1]")))
    }
}
