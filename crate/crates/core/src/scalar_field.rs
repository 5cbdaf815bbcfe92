//! Sublevel-set merge trees of gridded scalar fields.
//!
//! Samples are swept in ascending `(value, linear index)` order, which breaks
//! ties symbolically and makes every extraction deterministic. A component is
//! born at a sample with no lower neighbor and two or more components merge
//! at the sample that first touches all of them.
//!
//! # Grid formats
//!
//! * CSV: one grid row per line, values separated by commas; blank lines are
//!   ignored and all rows must have the same length. Row 0 is the first line.
//! * Binary: little-endian `u32` width, `u32` height, then `width * height`
//!   little-endian `f64` values in row-major order, nothing after.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::{Embedding, Label, LabeledMergeTree, MergeTree, Vertex, VertexId};
use crate::union_find::DisjointSet;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::input(format!("connectivity must be 4 or 8, got {n}"))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    connectivity: Connectivity,
}

impl ScalarGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("grid is empty"));
        }
        if width.checked_mul(height) != Some(values.len()) {
            return Err(Error::input(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        Ok(ScalarGrid {
            width,
            height,
            values,
            connectivity: Connectivity::Four,
        })
    }

    pub fn with_connectivity(mut self, c: Connectivity) -> Self {
        self.connectivity = c;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Linear indices of the neighbors of `idx`.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let (c, r) = ((idx % self.width) as isize, (idx / self.width) as isize);
        let offsets: &[(isize, isize)] = match self.connectivity {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        };
        offsets
            .iter()
            .map(|&(dc, dr)| (c + dc, r + dr))
            .filter(|&(c, r)| {
                c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height
            })
            .map(|(c, r)| r as usize * self.width + c as usize)
            .collect()
    }

    /// Sample indices in sweep order.
    pub fn sweep_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        order
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        Error::input(format!("line {}: cannot parse {:?}: {e}", n + 1, s.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::input(format!(
                        "line {} has {} values, expected {}",
                        n + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        ScalarGrid::new(width, height, rows.concat())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::input("binary grid is shorter than its header"));
        }
        let width = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
        let height = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let body = &bytes[8..];
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::input("binary grid dimensions overflow"))?;
        if body.len() != expected {
            return Err(Error::input(format!(
                "binary {width}x{height} grid needs {expected} value bytes, got {}",
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        ScalarGrid::new(width, height, values)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.values.len());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    MergeSaddle,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Minimum => "minimum",
            CriticalKind::MergeSaddle => "merge-saddle",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalRecord {
    pub vertex: VertexId,
    pub kind: CriticalKind,
    pub col: usize,
    pub row: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub tree: LabeledMergeTree,
    pub critical: Vec<CriticalRecord>,
}

/// Merge tree of the sublevel sets of `grid`.
///
/// Leaves are labeled `1..` in sweep order and every vertex is embedded at
/// the `(col, row)` of its sample; the root is placed at the global maximum.
/// A merge vertex takes the value of the sample that causes the merge. When
/// tied samples would give a vertex the same value as one of its children,
/// the vertex is moved to the next representable value above it. With
/// `augmented` every sample becomes a vertex; otherwise only minima and
/// merge saddles are kept.
pub fn extract_merge_tree(grid: &ScalarGrid, augmented: bool) -> Result<Extraction> {
    let n = grid.values.len();
    let order = grid.sweep_order();
    let mut processed = vec![false; n];
    let mut sets = DisjointSet::new(n);
    // tree vertex currently at the top of each component, by representative
    let mut head: Vec<Option<VertexId>> = vec![None; n];
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut sample_of: Vec<usize> = Vec::new();
    let mut critical = Vec::new();
    let mut labels = BTreeMap::new();

    let mut add_vertex = |idx: usize, kids: Vec<VertexId>, vertices: &mut Vec<Vertex>| {
        let floor = kids
            .iter()
            .map(|&k| vertices[k].value.next_up())
            .fold(f64::NEG_INFINITY, f64::max);
        let id = vertices.len();
        vertices.push(Vertex {
            name: format!("c{}_{}", idx % grid.width, idx / grid.width),
            parent: None,
            value: grid.values[idx].max(floor),
        });
        for &k in &kids {
            vertices[k].parent = Some(id);
        }
        sample_of.push(idx);
        id
    };

    for &p in &order {
        let mut reps: Vec<usize> = grid
            .neighbors(p)
            .into_iter()
            .filter(|&q| processed[q])
            .map(|q| sets.find(q))
            .collect();
        reps.sort_unstable();
        reps.dedup();
        processed[p] = true;
        let (col, row) = (p % grid.width, p / grid.width);
        let new_head = match reps.len() {
            0 => {
                let id = add_vertex(p, Vec::new(), &mut vertices);
                labels.insert(Label(labels.len() as u32 + 1), id);
                critical.push(CriticalRecord {
                    vertex: id,
                    kind: CriticalKind::Minimum,
                    col,
                    row,
                    value: vertices[id].value,
                });
                id
            }
            1 => {
                let below = head[reps[0]].expect("processed component has a head");
                if augmented {
                    add_vertex(p, vec![below], &mut vertices)
                } else {
                    below
                }
            }
            _ => {
                let kids: Vec<VertexId> = reps
                    .iter()
                    .map(|&r| head[r].expect("processed component has a head"))
                    .collect();
                let id = add_vertex(p, kids, &mut vertices);
                critical.push(CriticalRecord {
                    vertex: id,
                    kind: CriticalKind::MergeSaddle,
                    col,
                    row,
                    value: vertices[id].value,
                });
                id
            }
        };
        let mut rep = p;
        for &r in &reps {
            rep = sets.union(rep, r);
        }
        head[rep] = Some(new_head);
    }

    let top = head[sets.find(order[0])].expect("nonempty grid");
    if (0..n).any(|i| sets.find(i) != sets.find(order[0])) {
        return Err(Error::input("grid is not connected"));
    }
    let root = vertices.len();
    vertices.push(Vertex {
        name: "root".into(),
        parent: None,
        value: f64::INFINITY,
    });
    vertices[top].parent = Some(root);
    let global_max = *order.last().expect("nonempty");
    sample_of.push(global_max);

    let points: Vec<Vec<f64>> = sample_of
        .iter()
        .map(|&i| vec![(i % grid.width) as f64, (i / grid.width) as f64])
        .collect();
    let tree = MergeTree::new(vertices)?;
    let embedding = Embedding::new(2, &points)?;
    Ok(Extraction {
        tree: LabeledMergeTree::new(tree, labels, Some(embedding))?,
        critical,
    })
}

/// One Gaussian bump `amplitude * exp(-|p - center|^2 / (2 sigma^2))`, with
/// `center` given as `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBump {
    pub center: (f64, f64),
    pub amplitude: f64,
    pub sigma: f64,
}

/// Samples `sign * sum of bumps` on a `width x height` grid. `sign = -1`
/// turns peaks into wells, one sublevel leaf per well-separated bump.
pub fn gaussian_mixture_grid(
    bumps: &[GaussianBump],
    width: usize,
    height: usize,
    sign: f64,
) -> Result<ScalarGrid> {
    if let Some(b) = bumps.iter().find(|b| !(b.sigma > 0.0)) {
        return Err(Error::input(format!("sigma must be positive, got {}", b.sigma)));
    }
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let v: f64 = bumps
                .iter()
                .map(|b| {
                    let dx = col as f64 - b.center.0;
                    let dy = row as f64 - b.center.1;
                    b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp()
                })
                .sum();
            values.push(sign * v + 0.0);
        }
    }
    ScalarGrid::new(width, height, values)
}
