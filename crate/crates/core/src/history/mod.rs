//! History trees: the ground-truth construction from a trace, views, the
//! local merge that processes run every round, canonical encodings and DOT
//! export.

mod dot;
mod ground_truth;
mod tree;
mod view;

pub use dot::to_dot;
pub use ground_truth::{build_ground_truth, GroundTruth};
pub use tree::{HistoryTree, NodeId};
pub use view::{canonical_form, extend_and_merge, views_isomorphic, View};

/// Convenience: the view of `node` in a ground truth.
pub fn view_of(gt: &GroundTruth, node: NodeId) -> View {
    gt.view_of(node)
}

#[cfg(test)]
mod tests;
