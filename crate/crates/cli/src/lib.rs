//! Command-line tool and HTTP service for labeled merge tree ensembles.
//!
//! Trees travel as JSON [`document::TreeDocument`]s; results are rendered by
//! [`report`] with scalars rounded to 12 significant digits.

pub mod commands;
pub mod document;
pub mod failure;
pub mod report;
pub mod service;

pub use commands::run;
pub use document::{parse_tree, serialize_tree, TreeDocument};
pub use failure::Failure;
