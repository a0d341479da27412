//! Winning-argument analysis for online discussions modelled as signed reply
//! trees.
//!
//! A discussion is a rooted tree whose edges are replies that either support
//! or attack their parent. The crate evaluates which arguments win under
//! grounded semantics (and three relaxed rules), generates synthetic
//! ensembles of such trees, estimates per-level winning statistics, solves
//! the matching level recurrences, and fits the in-degree tail of real
//! corpora.
//!
//! Module map:
//!
//! * [`tree`]: reply trees, their JSON document format and level queries.
//! * [`semantics`]: BAF to AF reduction, grounded extension, state propagation.
//! * [`degree`]: in-degree distributions used by generators and solvers.
//! * [`generators`]: seeded homogeneous and preferential-attachment trees.
//! * [`estimators`]: per-tree and ensemble level statistics.
//! * [`analytics`]: recurrences, bounds, regimes, sampling recommendations.
//! * [`ingest`]: corpus loading, support classes, power-law fitting.

pub mod analytics;
pub mod degree;
pub mod error;
pub mod estimators;
pub mod generators;
pub mod ingest;
pub mod semantics;
pub mod tree;
pub mod zeta;

pub use error::{Error, Result};
pub use tree::{ArgumentNode, LevelIndex, NodeRecord, Polarity, ReplyTree, TreeDocument};
