//! Tree-constrained edge prediction.
//!
//! The crate is organised around the pieces of a tree-constrained graph
//! generator:
//!
//! * [`graph`], [`mst`] and [`preprocess`]: the graph model, the Kruskal
//!   projection onto spanning trees and annotation clean-up utilities.
//! * [`sfs`]: the selective feature suppression layer, its edge loss and the
//!   analytic backward pass.
//! * [`predictor`]: a small pairwise MLP edge predictor trained through the
//!   suppression layer.
//! * [`lsystem`]: a stochastic L-system dataset factory.
//! * [`metrics`]: SMD, keypoint TOPO scores and tree rate.

// `!(x > 0.0)` is used on purpose so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod dsu;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod image;
pub mod lsystem;
pub mod metrics;
pub mod mst;
pub mod pairs;
pub mod plot;
pub mod predictor;
pub mod preprocess;
pub mod sfs;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeSet, Graph, Point};
pub use mst::{kruskal_mst, mst_project, CostMatrix, ProjectionDiff};
pub use pairs::PairIndex;
pub use sfs::{EdgeLogits, EdgeProbabilities, EdgeTargets, SfsConfig};
