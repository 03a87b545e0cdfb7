use std::collections::BTreeMap;

use super::tree::{HistoryTree, NodeId};
use super::view::View;
use crate::model::DynamicNetworkTrace;

/// The history tree of a trace, truncated at level `T`, together with the
/// representation maps and node anonymities that no process can see.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub(crate) tree: HistoryTree,
    // rho[i + 1][p] is the node of level i representing process p
    pub(crate) rho: Vec<Vec<NodeId>>,
    pub(crate) alpha: Vec<u64>,
}

/// Builds the history tree of `trace` level by level.
///
/// Level 0 groups processes by input. The children of a node at level
/// `i - 1` are the classes of its processes with equal observation multisets
/// in round `i`, and each child's red edges are that common observation.
pub fn build_ground_truth(trace: &DynamicNetworkTrace) -> GroundTruth {
    let n = trace.n();
    let mut tree = HistoryTree::new();
    let root = tree.root();
    let mut rho = vec![vec![root; n]];

    let mut by_input: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (p, input) in trace.inputs().iter().enumerate() {
        by_input.entry(input.clone()).or_default().push(p);
    }
    let mut level0 = vec![root; n];
    for (input, procs) in by_input {
        let id = tree.add_child(root, input, Vec::new());
        for p in procs {
            level0[p] = id;
        }
    }
    rho.push(level0);

    for round in 1..=trace.len() {
        let prev = rho.last().unwrap();
        let mut classes: BTreeMap<(NodeId, Vec<(NodeId, u64)>), Vec<usize>> = BTreeMap::new();
        for (p, links) in trace.snapshot(round).adjacency().into_iter().enumerate() {
            let mut observation: BTreeMap<NodeId, u64> = BTreeMap::new();
            for (q, m) in links {
                *observation.entry(prev[q]).or_insert(0) += m;
            }
            classes.entry((prev[p], observation.into_iter().collect())).or_default().push(p);
        }
        let mut level = vec![root; n];
        for ((parent, observation), procs) in classes {
            let label = tree.label(parent).cloned().expect("non-root parent");
            let id = tree.add_child(parent, label, observation);
            for p in procs {
                level[p] = id;
            }
        }
        rho.push(level);
    }

    let mut alpha = vec![0u64; tree.len()];
    for level in &rho {
        for &id in level {
            alpha[id.index()] += 1;
        }
    }
    GroundTruth { tree, rho, alpha }
}

impl GroundTruth {
    pub fn tree(&self) -> &HistoryTree {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.rho[0].len()
    }

    /// Deepest level built (the trace length `T`).
    pub fn depth(&self) -> i32 {
        self.rho.len() as i32 - 2
    }

    /// Node of level `level` representing process `p` (0-based).
    pub fn rho(&self, level: i32, p: usize) -> NodeId {
        self.rho[(level + 1) as usize][p]
    }

    /// Anonymity: the number of processes a node represents.
    pub fn alpha(&self, id: NodeId) -> u64 {
        self.alpha[id.index()]
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alpha
    }

    /// Processes (0-based) represented by `id`.
    pub fn represented(&self, id: NodeId) -> Vec<usize> {
        let level = &self.rho[(self.tree.level_of(id) + 1) as usize];
        (0..level.len()).filter(|&p| level[p] == id).collect()
    }

    /// Classes of indistinguishable processes after round `level`, each
    /// sorted, listed in order of their smallest member.
    pub fn level_partition(&self, level: i32) -> Vec<Vec<usize>> {
        let mut classes: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (p, &id) in self.rho[(level + 1) as usize].iter().enumerate() {
            classes.entry(id).or_default().push(p);
        }
        let mut out: Vec<Vec<usize>> = classes.into_values().collect();
        out.sort();
        out
    }

    pub fn view_of(&self, id: NodeId) -> View {
        View::of_node(&self.tree, id).0
    }

    /// The view of `id` plus, for each view node, the tree node it copies.
    pub fn view_with_origin(&self, id: NodeId) -> (View, Vec<NodeId>) {
        View::of_node(&self.tree, id)
    }

    /// History of process `p` after round `round`.
    pub fn history(&self, p: usize, round: usize) -> View {
        self.view_of(self.rho(round as i32, p))
    }

    #[cfg(test)]
    pub(crate) fn tree_mut(&mut self) -> &mut HistoryTree {
        &mut self.tree
    }

    #[cfg(test)]
    pub(crate) fn alpha_mut(&mut self) -> &mut [u64] {
        &mut self.alpha
    }
}
