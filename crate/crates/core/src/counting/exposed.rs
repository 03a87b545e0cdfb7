use crate::history::{HistoryTree, NodeId};

/// Two same-level nodes with one child each, whose children see each other's
/// parent: `{c(first), second}` has multiplicity `m1 >= 1` and
/// `{c(second), first}` has multiplicity `m2 >= 1`. For such a pair the
/// anonymities satisfy `a(first) * m1 == a(second) * m2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExposedPair {
    pub first: NodeId,
    pub second: NodeId,
    pub m1: u64,
    pub m2: u64,
}

impl ExposedPair {
    pub fn reversed(self) -> Self {
        ExposedPair { first: self.second, second: self.first, m1: self.m2, m2: self.m1 }
    }
}

pub(crate) fn only_child(tree: &HistoryTree, v: NodeId) -> Option<NodeId> {
    match tree.children(v) {
        [c] => Some(*c),
        _ => None,
    }
}

/// All exposed pairs of `level`, each listed once with `first` of lower
/// canonical rank, sorted by the ranks of `(first, second)`.
pub fn find_exposed_pairs(tree: &HistoryTree, level: i32) -> Vec<ExposedPair> {
    exposed_pairs_ranked(tree, level, &tree.canonical_ranks())
}

pub(crate) fn exposed_pairs_ranked(tree: &HistoryTree, level: i32, ranks: &[u32]) -> Vec<ExposedPair> {
    let mut nodes: Vec<(NodeId, NodeId)> =
        tree.level(level).iter().filter_map(|&v| only_child(tree, v).map(|c| (v, c))).collect();
    nodes.sort_by_key(|&(v, _)| ranks[v.index()]);
    let mut pairs = Vec::new();
    for (i, &(v1, c1)) in nodes.iter().enumerate() {
        for &(v2, c2) in &nodes[i + 1..] {
            let m1 = tree.red_multiplicity(c1, v2);
            let m2 = tree.red_multiplicity(c2, v1);
            if m1 > 0 && m2 > 0 {
                pairs.push(ExposedPair { first: v1, second: v2, m1, m2 });
            }
        }
    }
    pairs
}
