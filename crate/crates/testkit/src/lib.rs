//! Random instance generators and brute-force reference implementations for
//! the `lmt-core` test suites.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lmt_core::{Embedding, Label, LabeledMergeTree, MergeTree, ScalarGrid, SymMatrix, Vertex, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Value drawn from a small integer lattice or a continuous range. Lattice
/// values make ties common.
fn value<R: Rng>(rng: &mut R, lattice: bool, lo: f64, hi: f64) -> f64 {
    if lattice {
        (rng.gen_range(lo..hi) * 4.0).round() / 4.0
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Random merge tree with `leaves` leaves built by repeatedly merging two or
/// three random components. Returns the tree with one label per leaf,
/// labeled `1..=leaves` in random order.
pub fn random_tree<R: Rng>(rng: &mut R, leaves: usize, lattice: bool) -> LabeledMergeTree {
    assert!(leaves >= 1);
    let mut vertices: Vec<Vertex> = Vec::new();
    // (top vertex, top value)
    let mut comps: Vec<(VertexId, f64)> = Vec::new();
    for k in 0..leaves {
        let f = value(rng, lattice, 0.0, 4.0);
        vertices.push(Vertex {
            name: format!("leaf{k}"),
            parent: None,
            value: f,
        });
        comps.push((k, f));
    }
    let mut next = 0;
    while comps.len() > 1 {
        let arity = if comps.len() >= 3 && rng.gen_bool(0.2) { 3 } else { 2 };
        comps.shuffle(rng);
        let picked: Vec<(VertexId, f64)> = comps.drain(..arity).collect();
        let top = picked.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let f = top + 0.25 + value(rng, lattice, 0.0, 2.0);
        let id = vertices.len();
        vertices.push(Vertex {
            name: format!("m{next}"),
            parent: None,
            value: f,
        });
        next += 1;
        for (c, _) in picked {
            vertices[c].parent = Some(id);
        }
        comps.push((id, f));
    }
    // occasionally stack a degree-2 vertex above the top
    let mut top = comps[0].0;
    if rng.gen_bool(0.3) {
        let id = vertices.len();
        let f = vertices[top].value + 0.25 + value(rng, lattice, 0.0, 1.0);
        vertices.push(Vertex {
            name: "cap".into(),
            parent: None,
            value: f,
        });
        vertices[top].parent = Some(id);
        top = id;
    }
    let root = vertices.len();
    vertices.push(Vertex {
        name: "root".into(),
        parent: None,
        value: f64::INFINITY,
    });
    vertices[top].parent = Some(root);
    let tree = MergeTree::new(vertices).expect("generated tree is structurally sound");
    let mut order: Vec<u32> = (1..=leaves as u32).collect();
    order.shuffle(rng);
    let labels = (0..leaves).map(|k| (Label(order[k]), k)).collect();
    LabeledMergeTree::new(tree, labels, None).expect("generated tree is valid")
}

/// Adds labels beyond `1..=leaves` on random nonroot vertices (leaves or
/// internal), numbered upward from `leaves + 1`.
pub fn with_extra_labels<R: Rng>(rng: &mut R, t: &LabeledMergeTree, extra: usize) -> LabeledMergeTree {
    let root = t.root();
    let nonroot: Vec<VertexId> = (0..t.vertex_count()).filter(|&v| v != root).collect();
    let mut labels = t.labels().clone();
    let start = labels.keys().next_back().map_or(1, |l| l.0 + 1);
    for k in 0..extra as u32 {
        labels.insert(Label(start + k), *nonroot.choose(rng).expect("nonempty"));
    }
    t.with_labels(labels).expect("labels on nonroot vertices")
}

/// Random planar embedding covering every vertex.
pub fn with_random_embedding<R: Rng>(rng: &mut R, t: &LabeledMergeTree) -> LabeledMergeTree {
    let points: Vec<Vec<f64>> = (0..t.vertex_count())
        .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
        .collect();
    t.with_embedding(Some(Embedding::new(2, &points).expect("2d")))
        .expect("embedding covers the tree")
}

/// `k` random trees over the same `leaves` labels.
pub fn random_ensemble<R: Rng>(rng: &mut R, k: usize, leaves: usize, lattice: bool) -> Vec<LabeledMergeTree> {
    (0..k).map(|_| random_tree(rng, leaves, lattice)).collect()
}

/// Random valid matrix: diagonal entries first, then each off-diagonal entry
/// at least the larger of its two diagonal entries.
pub fn random_valid_matrix<R: Rng>(rng: &mut R, n: usize, lattice: bool) -> SymMatrix {
    let diag: Vec<f64> = (0..n).map(|_| value(rng, lattice, 0.0, 3.0)).collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        rows[i][i] = diag[i];
        for j in (i + 1)..n {
            let v = diag[i].max(diag[j]) + value(rng, lattice, 0.0, 3.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::with_default_labels(&rows).expect("symmetric")
}

pub fn random_costs<R: Rng>(rng: &mut R, rows: usize, cols: usize, lattice: bool) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| value(rng, lattice, 0.0, 10.0)).collect())
        .collect()
}

pub fn random_grid<R: Rng>(rng: &mut R, max_side: usize, lattice: bool) -> ScalarGrid {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let values = (0..w * h).map(|_| value(rng, lattice, 0.0, 10.0)).collect();
    ScalarGrid::new(w, h, values).expect("nonempty finite grid")
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Path from `v` to the root, inclusive.
pub fn root_path(t: &MergeTree, mut v: VertexId) -> Vec<VertexId> {
    let mut out = vec![v];
    while let Some(p) = t.vertex(v).parent {
        out.push(p);
        v = p;
    }
    out
}

/// Lowest common ancestor as the minimum-value vertex shared by both root
/// paths.
pub fn lca_by_ancestor_sets(t: &MergeTree, u: VertexId, v: VertexId) -> VertexId {
    let a: BTreeSet<VertexId> = root_path(t, u).into_iter().collect();
    let b: BTreeSet<VertexId> = root_path(t, v).into_iter().collect();
    *a.intersection(&b)
        .min_by(|&&x, &&y| t.value(x).total_cmp(&t.value(y)))
        .expect("root is common")
}

/// Induced matrix entry by entry from the ancestor-set oracle.
pub fn induced_by_ancestor_sets(t: &LabeledMergeTree) -> Vec<Vec<f64>> {
    let labels: Vec<VertexId> = t.labels().values().copied().collect();
    labels
        .iter()
        .map(|&u| {
            labels
                .iter()
                .map(|&v| t.tree().value(lca_by_ancestor_sets(t.tree(), u, v)))
                .collect()
        })
        .collect()
}

/// All-pairs shortest paths over the tree edges weighted by `|f(u) - f(v)|`,
/// ignoring the root.
pub fn shortest_paths(t: &MergeTree) -> Vec<Vec<f64>> {
    let n = t.len();
    let root = t.root().expect("rooted");
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (c, p) in t.edges() {
        if p == root {
            continue;
        }
        let w = (t.value(c) - t.value(p)).abs();
        d[c][p] = w;
        d[p][c] = w;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// For each pair of indices, the smallest threshold at which they fall into
/// one component of the graph with vertices `m_ii <= t` and edges
/// `m_ij <= t`, found by scanning every distinct entry as a threshold.
pub fn minimax_closure(m: &SymMatrix) -> Vec<Vec<f64>> {
    let n = m.size();
    let mut thresholds: Vec<f64> = m.entries().to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut out = vec![vec![f64::NAN; n]; n];
    for &t in &thresholds {
        let mut comp = vec![usize::MAX; n];
        for s in 0..n {
            if m.get(s, s) > t || comp[s] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            comp[s] = s;
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if comp[v] == usize::MAX && m.get(v, v) <= t && m.get(u, v) <= t {
                        comp[v] = s;
                        queue.push_back(v);
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if out[i][j].is_nan() && comp[i] != usize::MAX && comp[i] == comp[j] {
                    out[i][j] = t;
                }
            }
        }
    }
    out
}

/// Minimum total cost over every injection of rows into columns.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], r: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if r == cost.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(cost, r + 1, used, acc + cost[r][c], best);
                used[c] = false;
            }
        }
    }
    if cost.is_empty() {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost[0].len()], 0.0, &mut best);
    best
}

/// Sweep position of every sample: `(value, index)` lexicographic rank.
pub fn sos_rank(grid: &ScalarGrid) -> Vec<usize> {
    let v = grid.values();
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite").then(a.cmp(&b)));
    let mut rank = vec![0; v.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Samples lower than all their neighbors under the sweep order, by rank.
pub fn strict_local_minima(grid: &ScalarGrid) -> Vec<usize> {
    let rank = sos_rank(grid);
    let mut mins: Vec<usize> = (0..rank.len())
        .filter(|&i| grid.neighbors(i).iter().all(|&j| rank[j] > rank[i]))
        .collect();
    mins.sort_by_key(|&i| rank[i]);
    mins
}

/// Matrix over the local minima (in sweep order) whose `(a, b)` entry is
/// the value of the first sample whose sublevel set connects the two.
/// Components are recomputed from scratch by breadth-first search at every
/// threshold.
pub fn grid_merge_oracle(grid: &ScalarGrid) -> Vec<Vec<f64>> {
    let rank = sos_rank(grid);
    let n = rank.len();
    let mut by_rank = vec![0; n];
    for (i, &r) in rank.iter().enumerate() {
        by_rank[r] = i;
    }
    let mins = strict_local_minima(grid);
    let k = mins.len();
    let mut out = vec![vec![f64::NAN; k]; k];
    for t in 0..n {
        let mut comp = vec![usize::MAX; n];
        for s in 0..n {
            if rank[s] > t || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for w in grid.neighbors(u) {
                    if rank[w] <= t && comp[w] == usize::MAX {
                        comp[w] = s;
                        queue.push_back(w);
                    }
                }
            }
        }
        let value = grid.values()[by_rank[t]];
        for a in 0..k {
            for b in 0..k {
                let (x, y) = (mins[a], mins[b]);
                if out[a][b].is_nan() && comp[x] != usize::MAX && comp[x] == comp[y] {
                    out[a][b] = value;
                }
            }
        }
    }
    out
}

/// Gaussian-weighted cosine evaluated directly, one term at a time. NaN when
/// a term is too small to be represented precisely.
pub fn weighted_cosine_direct(a: &[f64], b: &[f64], delta: f64) -> f64 {
    let w = |x: f64, y: f64| {
        if delta.is_infinite() {
            1.0
        } else {
            (-(x * x + y * y) / (delta * delta)).exp()
        }
    };
    let mut num = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    // terms near the subnormal range lose precision; report no answer
    let imprecise = |t: f64| t > 0.0 && t < 1e-280;
    for (&x, &y) in a.iter().zip(b) {
        let terms = [w(x, y) * x * y, w(x, x) * x * x, w(y, y) * y * y];
        if terms.iter().any(|&t| imprecise(t)) {
            return f64::NAN;
        }
        num += terms[0];
        na += terms[1];
        nb += terms[2];
    }
    num / (na.sqrt() * nb.sqrt())
}

/// Quantile with 1-based position `1 + (n - 1) p` between order statistics.
pub fn quantile_by_position(values: &[f64], p: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let pos = 1.0 + (s.len() as f64 - 1.0) * p;
    let below = pos.floor();
    let frac = pos - below;
    let i = below as usize - 1;
    if frac == 0.0 {
        s[i]
    } else {
        s[i] + frac * (s[i + 1] - s[i])
    }
}

/// Per-entry extremes over matrices with one label list.
pub fn entry_extremes(ms: &[SymMatrix]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = ms[0].size();
    let mut lo = vec![vec![f64::INFINITY; n]; n];
    let mut hi = vec![vec![f64::NEG_INFINITY; n]; n];
    for m in ms {
        for i in 0..n {
            for j in 0..n {
                lo[i][j] = lo[i][j].min(m.get(i, j));
                hi[i][j] = hi[i][j].max(m.get(i, j));
            }
        }
    }
    (lo, hi)
}

/// Largest absolute entry difference.
pub fn linf(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Label to vertex-name map, for comparing labelings across rebuilt trees.
pub fn label_names(t: &LabeledMergeTree) -> BTreeMap<Label, String> {
    t.labels()
        .iter()
        .map(|(&l, &v)| (l, t.tree().name(v).to_string()))
        .collect()
}

/// [`random_tree`] with a random planar embedding.
pub fn random_embedded_tree<R: Rng>(rng: &mut R, leaves: usize, lattice: bool) -> LabeledMergeTree {
    let t = random_tree(rng, leaves, lattice);
    with_random_embedding(rng, &t)
}
