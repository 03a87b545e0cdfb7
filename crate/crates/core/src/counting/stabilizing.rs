use std::collections::HashMap;

use super::exposed::exposed_pairs_ranked;
use super::{level0_inventory, CountingOutput};
use crate::history::{HistoryTree, NodeId, View};

/// The stabilizing counting rule.
///
/// Finds the first level of the view that has a leader node and whose nodes
/// all have exactly one child, derives every anonymity on that level from
/// `a(leader) = 1` through exposed pairs, and sums them up to level 0.
/// Returns `Unknown` when a level without a leader node is met first or no
/// such level exists. Early answers may be wrong; every history from round
/// `2n-2` on yields the true inventory.
pub fn stabilizing_count(view: &View) -> CountingOutput {
    let tree = view.tree();
    let mut ranks = None;
    for level in 0..=tree.depth() {
        let nodes = tree.level(level);
        let Some(&leader) = nodes.iter().find(|&&v| tree.is_leader(v)) else {
            return CountingOutput::Unknown;
        };
        if nodes.iter().all(|&v| tree.children(v).len() == 1) {
            let ranks = ranks.get_or_insert_with(|| tree.canonical_ranks());
            let a = propagate_anonymities(tree, level, leader, ranks, PairOrder::Canonical);
            return CountingOutput::Inventory(level0_inventory(tree, a.into_iter()));
        }
    }
    CountingOutput::Unknown
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PairOrder {
    Canonical,
    #[cfg_attr(not(test), allow(dead_code))]
    Reversed,
}

/// Fixpoint of `a(v2) := ceil(a(v1) * m1 / m2)` over the exposed pairs of
/// `level`, seeded with `a(leader) = 1`. Each step applies the first
/// applicable oriented pair in the requested order. Unreached nodes keep 0.
pub(crate) fn propagate_anonymities(
    tree: &HistoryTree,
    level: i32,
    leader: NodeId,
    ranks: &[u32],
    order: PairOrder,
) -> Vec<(NodeId, u64)> {
    let mut oriented = Vec::new();
    for pair in exposed_pairs_ranked(tree, level, ranks) {
        oriented.push(pair);
        oriented.push(pair.reversed());
    }
    if order == PairOrder::Reversed {
        oriented.reverse();
    }
    let mut a: HashMap<NodeId, u64> = tree.level(level).iter().map(|&v| (v, 0)).collect();
    a.insert(leader, 1);
    loop {
        let next = oriented.iter().find(|p| a[&p.first] != 0 && a[&p.second] == 0);
        match next {
            Some(p) => {
                let value = (a[&p.first] * p.m1).div_ceil(p.m2);
                a.insert(p.second, value);
            }
            None => break,
        }
    }
    tree.level(level).iter().map(|&v| (v, a[&v])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{gen_cycle_to_path, gen_random_connected, InputScheme};
    use crate::history::{build_ground_truth, extend_and_merge};
    use crate::model::{Inventory, ProcessInput};

    #[test]
    fn single_process() {
        let view = extend_and_merge(&View::initial(&ProcessInput::leader("x")), &[]).unwrap();
        let expected: Inventory = [(ProcessInput::leader("x"), 1)].into_iter().collect();
        assert_eq!(stabilizing_count(&view), CountingOutput::Inventory(expected));
    }

    #[test]
    fn propagation_order_does_not_matter() {
        let mut traces = vec![gen_cycle_to_path(7, 3, 12).unwrap()];
        for seed in 0..20 {
            traces.push(gen_random_connected(5, 10, 4, 0.5, seed, &InputScheme::with_followers(&["a", "b"])).unwrap());
        }
        let mut levels_checked = 0;
        for trace in traces {
            let gt = build_ground_truth(&trace);
            for p in 0..gt.n() {
                let view = gt.history(p, trace.len());
                let tree = view.tree();
                let ranks = tree.canonical_ranks();
                for level in 0..tree.depth() {
                    let nodes = tree.level(level);
                    let Some(&leader) = nodes.iter().find(|&&v| tree.is_leader(v)) else { continue };
                    if nodes.iter().all(|&v| tree.children(v).len() == 1) {
                        let a = propagate_anonymities(tree, level, leader, &ranks, PairOrder::Canonical);
                        let b = propagate_anonymities(tree, level, leader, &ranks, PairOrder::Reversed);
                        assert_eq!(a, b);
                        levels_checked += 1;
                    }
                }
            }
        }
        assert!(levels_checked > 50);
    }
}
