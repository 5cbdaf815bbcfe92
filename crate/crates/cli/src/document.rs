//! JSON tree documents.
//!
//! ```json
//! {"version": 1,
//!  "nodes": [{"id": "a", "f": 0.0, "parent": "r", "labels": [1], "x": 0.0, "y": 0.0},
//!            {"id": "r", "f": "inf", "labels": []}],
//!  "metadata": {}}
//! ```
//!
//! Coordinates are optional, but when present they must be present on every
//! node and with the same keys. Values keep full precision so that a
//! document survives a parse/serialize cycle unchanged.

use std::collections::{BTreeMap, HashMap};

use lmt_core::{Embedding, Label, LabeledMergeTree, MergeTree, Vertex};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::failure::Failure;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FValue {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub f: FValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default)]
    pub labels: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub version: u32,
    pub nodes: Vec<NodeDocument>,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

fn f_value(node: &NodeDocument) -> Result<f64, Failure> {
    match &node.f {
        FValue::Number(v) => Ok(*v),
        FValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
        FValue::Text(s) => Err(Failure::document(format!(
            "node {:?}: f must be a number or \"inf\", got {s:?}",
            node.id
        ))),
    }
}

fn coordinates(nodes: &[NodeDocument]) -> Result<Option<Embedding>, Failure> {
    let present = |n: &NodeDocument| [n.x.is_some(), n.y.is_some(), n.z.is_some()];
    let Some(first) = nodes.first().map(present) else {
        return Ok(None);
    };
    if let Some(n) = nodes.iter().find(|n| present(n) != first) {
        return Err(Failure::document(format!(
            "node {:?} has a different set of coordinates than node {:?}",
            n.id, nodes[0].id
        )));
    }
    let dim = match first {
        [false, false, false] => return Ok(None),
        [true, false, false] => 1,
        [true, true, false] => 2,
        [true, true, true] => 3,
        _ => return Err(Failure::document("coordinates must be x, x/y or x/y/z")),
    };
    let points: Vec<Vec<f64>> = nodes
        .iter()
        .map(|n| [n.x, n.y, n.z].into_iter().flatten().collect())
        .collect();
    Ok(Some(Embedding::new(dim, &points)?))
}

impl TreeDocument {
    pub fn to_tree(&self) -> Result<LabeledMergeTree, Failure> {
        if self.version != FORMAT_VERSION {
            return Err(Failure::document(format!(
                "unsupported document version {}; expected {FORMAT_VERSION}",
                self.version
            )));
        }
        if self.nodes.is_empty() {
            return Err(Failure::document("document has no nodes"));
        }
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (k, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), k).is_some() {
                return Err(Failure::document(format!("duplicate node id {:?}", n.id)));
            }
        }
        let mut vertices = Vec::with_capacity(self.nodes.len());
        let mut labels = BTreeMap::new();
        for (k, n) in self.nodes.iter().enumerate() {
            let parent = match &n.parent {
                None => None,
                Some(p) => Some(*index.get(p.as_str()).ok_or_else(|| {
                    Failure::document(format!("node {:?} names unknown parent {p:?}", n.id))
                })?),
            };
            for &l in &n.labels {
                if labels.insert(Label(l), k).is_some() {
                    return Err(Failure::document(format!("label {l} appears on two nodes")));
                }
            }
            vertices.push(Vertex {
                name: n.id.clone(),
                parent,
                value: f_value(n)?,
            });
        }
        let tree = MergeTree::new(vertices)?;
        let embedding = coordinates(&self.nodes)?;
        Ok(LabeledMergeTree::new(tree, labels, embedding)?)
    }

    pub fn from_tree(t: &LabeledMergeTree) -> Result<Self, Failure> {
        TreeDocument::with_metadata(t, Map::new())
    }

    pub fn with_metadata(t: &LabeledMergeTree, metadata: Map<String, Value>) -> Result<Self, Failure> {
        let emb = t.embedding();
        if let Some(e) = emb {
            if e.dim() > 3 {
                return Err(Failure::document(format!(
                    "documents hold at most 3 coordinates, embedding has {}",
                    e.dim()
                )));
            }
        }
        let by_vertex = t.labels_by_vertex();
        let tree = t.tree();
        let nodes = (0..tree.len())
            .map(|v| {
                let value = tree.value(v);
                let coord = |k: usize| emb.and_then(|e| e.point(v).get(k).copied());
                NodeDocument {
                    id: tree.name(v).to_string(),
                    f: if value.is_infinite() {
                        FValue::Text("inf".into())
                    } else {
                        FValue::Number(value + 0.0)
                    },
                    parent: tree.parent(v).map(|p| tree.name(p).to_string()),
                    labels: by_vertex[v].iter().map(|l| l.0).collect(),
                    x: coord(0),
                    y: coord(1),
                    z: coord(2),
                }
            })
            .collect();
        Ok(TreeDocument {
            version: FORMAT_VERSION,
            nodes,
            metadata,
        })
    }
}

pub fn parse_document(bytes: &[u8]) -> Result<TreeDocument, Failure> {
    serde_json::from_slice(bytes).map_err(|e| Failure::syntax(e.to_string()))
}

/// Parses a document and builds the tree it describes.
pub fn parse_tree(bytes: &[u8]) -> Result<LabeledMergeTree, Failure> {
    parse_document(bytes)?.to_tree()
}

pub fn tree_to_value(t: &LabeledMergeTree) -> Result<Value, Failure> {
    Ok(serde_json::to_value(TreeDocument::from_tree(t)?).expect("documents serialize"))
}

pub fn serialize_tree(t: &LabeledMergeTree) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(&TreeDocument::from_tree(t)?).expect("documents serialize"))
}
