//! Counting in anonymous dynamic networks with a leader, built on history
//! trees.
//!
//! A [`DynamicNetworkTrace`] fixes the inputs and the multigraph of every
//! round. [`build_ground_truth`] computes the history tree of a trace
//! centrally, while [`CountingAlgorithm`] runs the distributed protocol
//! through [`run_execution`]: processes exchange their histories, merge them
//! with [`extend_and_merge`] and evaluate either [`stabilizing_count`] or
//! [`terminating_count`] on their own view.

pub mod adversary;
pub mod counting;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod history;
pub mod model;
pub mod oracle;

pub use counting::{stabilizing_count, terminating_count, CountingAlgorithm, CountingOutput};
pub use engine::{run_execution, ExecutionMode, ExecutionResult, LocalAlgorithm};
pub use error::{Error, Result};
pub use history::{build_ground_truth, extend_and_merge, GroundTruth, HistoryTree, NodeId, View};
pub use model::{DynamicNetworkTrace, Inventory, MultigraphSnapshot, ProcessInput};
