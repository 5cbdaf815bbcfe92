//! Labeled merge trees: structural averages, label completion, vertex
//! consistency and geodesic morphs.
//!
//! A [`LabeledMergeTree`] stores the tree, a scalar value per vertex and a
//! map from positive integer labels to vertices. Its [`induced_matrix`]
//! records the value of the lowest common ancestor of every pair of labels,
//! and the labeled interleaving distance is the largest entrywise difference
//! of two such matrices. The entrywise midpoint of an ensemble's matrices is
//! turned back into a tree to give a 1-center ([`one_center_tree`]).

pub mod assignment;
pub mod center;
pub mod consistency;
pub mod ensemble;
pub mod error;
pub mod geodesic;
pub mod labeling;
pub mod matrix;
pub mod pipeline;
pub mod scalar_field;
pub mod tree;
mod union_find;

pub use assignment::{solve_assignment, Assignment, AssignmentProblem};
pub use center::{ensemble_summary, half_max_range, one_center_matrix, one_center_tree, CenterResult, StarLink};
pub use consistency::{
    consistency_report, edge_consistency, five_number, label_consistency, statistical_consistency,
    variational_consistency, vertex_consistency, weighted_cosine, ConsistencyReport, EdgeConsistency,
    FiveNumber, Variational,
};
pub use ensemble::{Agreement, Ensemble};
pub use error::{Error, Result};
pub use geodesic::{center_embedding, geodesic_frames, linear_embedding_frames, Frame, GeodesicPath};
pub use labeling::{
    complete_internal_labels, harmonize, relabel_disagreement, relabel_partial, select_pivot,
    CompletedLabels, Harmonized, LabelStrategy, PivotCriterion, RelabelReport, Relabeled,
};
pub use matrix::{induced_matrix, interleaving_distance, merge_tree_of_matrix, SymMatrix};
pub use pipeline::{run_pipeline, AgreementMode, PipelineConfig, PipelineOutput};
pub use scalar_field::{
    extract_merge_tree, gaussian_mixture_grid, Connectivity, CriticalKind, CriticalRecord, Extraction,
    GaussianBump, ScalarGrid,
};
pub use tree::{Embedding, Label, LabeledMergeTree, MergeTree, Rule, Vertex, VertexId, Violation};
