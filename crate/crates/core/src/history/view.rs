use std::collections::HashMap;

use super::tree::{HistoryTree, NodeId};
use crate::error::{Error, Result};
use crate::model::ProcessInput;

/// A finite sub-history closed under ascending paths, with a unique deepest
/// node (the viewpoint). A process's history is exactly such a view, and is
/// its entire internal state.
#[derive(Clone, Debug)]
pub struct View {
    pub(crate) tree: HistoryTree,
    pub(crate) viewpoint: NodeId,
}

impl View {
    /// The history of a process with `input` after round 0.
    pub fn initial(input: &ProcessInput) -> Self {
        let mut tree = HistoryTree::new();
        let viewpoint = tree.add_child(tree.root(), input.clone(), Vec::new());
        View { tree, viewpoint }
    }

    /// The view of `id` in `tree`: every node reachable from `id` by
    /// ascending black or red edges. Also returns, for each view node, the
    /// node of `tree` it was copied from.
    pub fn of_node(tree: &HistoryTree, id: NodeId) -> (View, Vec<NodeId>) {
        let mut inside = vec![false; tree.len()];
        let mut stack = vec![id];
        inside[id.index()] = true;
        while let Some(x) = stack.pop() {
            let ups = tree.parent(x).into_iter().chain(tree.red_edges(x).iter().map(|&(u, _)| u));
            for u in ups {
                if !inside[u.index()] {
                    inside[u.index()] = true;
                    stack.push(u);
                }
            }
        }

        let mut view = HistoryTree::new();
        let mut map: Vec<Option<NodeId>> = vec![None; tree.len()];
        map[tree.root().index()] = Some(view.root());
        let mut origin = vec![tree.root()];
        for level in 0..=tree.level_of(id) {
            for &x in tree.level(level) {
                if !inside[x.index()] {
                    continue;
                }
                let parent = map[tree.parent(x).unwrap().index()].unwrap();
                let red = tree.red_edges(x).iter().map(|&(u, m)| (map[u.index()].unwrap(), m)).collect();
                let label = tree.label(x).cloned().unwrap();
                map[x.index()] = Some(view.add_child(parent, label, red));
                origin.push(x);
            }
        }
        let viewpoint = map[id.index()].unwrap();
        (View { tree: view, viewpoint }, origin)
    }

    pub fn tree(&self) -> &HistoryTree {
        &self.tree
    }

    pub fn viewpoint(&self) -> NodeId {
        self.viewpoint
    }

    /// Level of the viewpoint, i.e. the round this history belongs to.
    pub fn round(&self) -> i32 {
        self.tree.level_of(self.viewpoint)
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Label of the viewpoint (the owner's input); `None` for a bare root.
    pub fn owner_input(&self) -> Option<&ProcessInput> {
        self.tree.label(self.viewpoint)
    }

    /// Checks the structural invariants of a view.
    pub fn validate(&self) -> Result<()> {
        let t = &self.tree;
        let depth = t.depth();
        if t.level_of(self.viewpoint) != depth || t.level(depth).len() != 1 {
            return Err(Error::Protocol("viewpoint is not the unique deepest node".into()));
        }
        // every node must reach the viewpoint's closure
        let (closure, _) = View::of_node(t, self.viewpoint);
        if closure.len() != t.len() {
            return Err(Error::Protocol("view has nodes off every ascending path".into()));
        }
        let mut seen_l0 = std::collections::HashSet::new();
        for &id in t.level(0) {
            if !seen_l0.insert(t.label(id)) {
                return Err(Error::Protocol("two level-0 nodes share a label".into()));
            }
        }
        for id in t.node_ids().skip(1) {
            let parent = t.parent(id).unwrap();
            if t.level_of(id) > 0 && t.label(id) != t.label(parent) {
                return Err(Error::Protocol(format!("node {id} does not carry its parent's label")));
            }
        }
        let ranks = t.canonical_ranks();
        for level in 0..=depth {
            let mut r: Vec<u32> = t.level(level).iter().map(|id| ranks[id.index()]).collect();
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Protocol(format!("level {level} has indistinguishable siblings")));
            }
        }
        Ok(())
    }
}

type MergeKey = (NodeId, Option<ProcessInput>, Vec<(NodeId, u64)>);

fn merge_key(tree: &HistoryTree, id: NodeId) -> MergeKey {
    (tree.parent(id).unwrap(), tree.label(id).cloned(), tree.red_edges(id).to_vec())
}

/// One round of the local history-construction algorithm.
///
/// Extends `own` with a child of its viewpoint, merges every received
/// history into the result through an injective structure-preserving map
/// (built breadth-first, matching a node to an existing child of its mapped
/// parent when label and red edges agree), and finally links the new
/// viewpoint to each received viewpoint with the number of copies received.
pub fn extend_and_merge(own: &View, received: &[(&View, u64)]) -> Result<View> {
    let round = own.round();
    if round < 0 {
        return Err(Error::Protocol("cannot extend a view without a viewpoint".into()));
    }
    if let Some((other, _)) = received.iter().find(|(v, _)| v.round() != round) {
        return Err(Error::Protocol(format!(
            "received a round-{} history while merging round {}",
            other.round(),
            round
        )));
    }

    let mut acc = own.tree.clone();
    let label = acc.label(own.viewpoint).cloned().unwrap();
    let next = acc.add_child(own.viewpoint, label, Vec::new());

    let mut index: HashMap<MergeKey, NodeId> = HashMap::with_capacity(acc.len());
    for id in acc.node_ids().skip(1) {
        if id != next {
            index.insert(merge_key(&acc, id), id);
        }
    }

    let mut links: Vec<(NodeId, u64)> = Vec::with_capacity(received.len());
    for &(view, copies) in received {
        let src = &view.tree;
        let mut phi = vec![acc.root(); src.len()];
        for level in 0..=round {
            for &x in src.level(level) {
                let parent = phi[src.parent(x).unwrap().index()];
                let mut red: Vec<(NodeId, u64)> =
                    src.red_edges(x).iter().map(|&(u, m)| (phi[u.index()], m)).collect();
                red.sort_unstable_by_key(|&(u, _)| u);
                let key = (parent, src.label(x).cloned(), red);
                let image = match index.get(&key) {
                    Some(&w) => w,
                    None => {
                        let w = acc.add_child(parent, key.1.clone().unwrap(), key.2.clone());
                        index.insert(key, w);
                        w
                    }
                };
                phi[x.index()] = image;
            }
        }
        links.push((phi[view.viewpoint.index()], copies));
    }
    for (upper, copies) in links {
        if copies > 0 {
            acc.add_red(next, upper, copies);
        }
    }
    Ok(View { tree: acc, viewpoint: next })
}

/// Deterministic encoding of a view, equal for two views iff they are
/// isomorphic as labeled red/black structures.
pub fn canonical_form(view: &View) -> Vec<u8> {
    let mut bytes = view.tree.canonical_bytes();
    let ranks = view.tree.canonical_ranks();
    bytes.extend_from_slice(&view.round().to_le_bytes());
    bytes.extend_from_slice(&ranks[view.viewpoint.index()].to_le_bytes());
    bytes
}

pub fn views_isomorphic(a: &View, b: &View) -> bool {
    a.round() == b.round() && a.len() == b.len() && canonical_form(a) == canonical_form(b)
}
