use std::fmt;

use serde::Serialize;

use crate::model::ProcessInput;

/// Index of a node inside one [`HistoryTree`]. Ids are local to their tree;
/// matching across trees goes through canonical indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub(crate) level: i32,
    pub(crate) parent: Option<NodeId>,
    pub(crate) label: Option<ProcessInput>,
    pub(crate) children: Vec<NodeId>,
    /// Red edges to nodes one level up, sorted by id.
    pub(crate) red: Vec<(NodeId, u64)>,
}

/// A finite leveled tree of black edges with red multiedges between
/// consecutive levels. The root sits at level -1 and carries no label.
///
/// Each red edge is stored once, on its lower endpoint.
#[derive(Clone, Debug)]
pub struct HistoryTree {
    pub(crate) nodes: Vec<Node>,
    // levels[i + 1] lists the nodes of level i in insertion order
    pub(crate) levels: Vec<Vec<NodeId>>,
}

impl Default for HistoryTree {
    fn default() -> Self {
        Self::new()
    }
}

impl HistoryTree {
    /// A tree consisting of the root alone.
    pub fn new() -> Self {
        HistoryTree {
            nodes: vec![Node { level: -1, parent: None, label: None, children: Vec::new(), red: Vec::new() }],
            levels: vec![vec![NodeId(0)]],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Level of the deepest nodes (-1 for a bare root).
    pub fn depth(&self) -> i32 {
        self.levels.len() as i32 - 2
    }

    /// Nodes of level `level`, empty when out of range.
    pub fn level(&self, level: i32) -> &[NodeId] {
        usize::try_from(level + 1).ok().and_then(|i| self.levels.get(i)).map_or(&[], Vec::as_slice)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn level_of(&self, id: NodeId) -> i32 {
        self.nodes[id.index()].level
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn label(&self, id: NodeId) -> Option<&ProcessInput> {
        self.nodes[id.index()].label.as_ref()
    }

    pub fn is_leader(&self, id: NodeId) -> bool {
        self.label(id).is_some_and(|l| l.leader)
    }

    /// Red edges from `id` to nodes of the previous level.
    pub fn red_edges(&self, id: NodeId) -> &[(NodeId, u64)] {
        &self.nodes[id.index()].red
    }

    /// Multiplicity of the red edge between `lower` and `upper`, where
    /// `upper` is one level above `lower`; 0 when absent.
    pub fn red_multiplicity(&self, lower: NodeId, upper: NodeId) -> u64 {
        let red = &self.nodes[lower.index()].red;
        red.binary_search_by_key(&upper, |&(u, _)| u).map_or(0, |i| red[i].1)
    }

    /// Appends a child of `parent` carrying `label` and the given red edges
    /// to the previous level.
    pub fn add_child(&mut self, parent: NodeId, label: ProcessInput, mut red: Vec<(NodeId, u64)>) -> NodeId {
        let level = self.nodes[parent.index()].level + 1;
        red.sort_unstable_by_key(|&(u, _)| u);
        debug_assert!(red.iter().all(|&(u, m)| m > 0 && self.nodes[u.index()].level == level - 1));
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { level, parent: Some(parent), label: Some(label), children: Vec::new(), red });
        self.nodes[parent.index()].children.push(id);
        let slot = (level + 1) as usize;
        if self.levels.len() <= slot {
            self.levels.resize_with(slot + 1, Vec::new);
        }
        self.levels[slot].push(id);
        id
    }

    /// Adds `mult` to the red edge between `lower` and `upper`.
    pub(crate) fn add_red(&mut self, lower: NodeId, upper: NodeId, mult: u64) {
        debug_assert_eq!(self.level_of(lower), self.level_of(upper) + 1);
        let red = &mut self.nodes[lower.index()].red;
        match red.binary_search_by_key(&upper, |&(u, _)| u) {
            Ok(i) => red[i].1 += mult,
            Err(i) => red.insert(i, (upper, mult)),
        }
    }

    #[cfg(test)]
    pub(crate) fn set_red(&mut self, lower: NodeId, upper: NodeId, mult: u64) {
        let red = &mut self.nodes[lower.index()].red;
        match red.binary_search_by_key(&upper, |&(u, _)| u) {
            Ok(i) if mult == 0 => {
                red.remove(i);
            }
            Ok(i) => red[i].1 = mult,
            Err(i) if mult > 0 => red.insert(i, (upper, mult)),
            Err(_) => {}
        }
    }

    #[cfg(test)]
    pub(crate) fn set_label(&mut self, id: NodeId, label: ProcessInput) {
        self.nodes[id.index()].label = Some(label);
    }

    /// Moves `id` under `new_parent` without any consistency repair.
    #[cfg(test)]
    pub(crate) fn reparent(&mut self, id: NodeId, new_parent: NodeId) {
        if let Some(old) = self.nodes[id.index()].parent {
            self.nodes[old.index()].children.retain(|&c| c != id);
        }
        self.nodes[id.index()].parent = Some(new_parent);
        self.nodes[new_parent.index()].children.push(id);
    }

    /// Black path from `id` up to the root, starting with `id` itself.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(id), move |&x| self.parent(x))
    }

    /// Nodes that have no children in this tree.
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&id| self.children(id).is_empty())
    }

    /// Canonical rank of every node within its level.
    ///
    /// Ranks are assigned level by level from the root: a node's key is its
    /// parent's rank, its label and its red edges expressed through the
    /// ranks of their upper endpoints. In a well-formed history tree or view
    /// no two nodes of a level share a key, so ranks identify nodes up to
    /// isomorphism. Equal keys (malformed input) share a rank.
    pub fn canonical_ranks(&self) -> Vec<u32> {
        let mut rank = vec![0u32; self.nodes.len()];
        for level in self.levels.iter().skip(1) {
            let mut keyed: Vec<(CanonKey<'_>, NodeId)> =
                level.iter().map(|&id| (self.canon_key(id, &rank), id)).collect();
            keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            let mut r = 0u32;
            for i in 0..keyed.len() {
                if i > 0 && keyed[i].0 != keyed[i - 1].0 {
                    r += 1;
                }
                rank[keyed[i].1.index()] = r;
            }
        }
        rank
    }

    fn canon_key(&self, id: NodeId, rank: &[u32]) -> CanonKey<'_> {
        let node = &self.nodes[id.index()];
        let mut red: Vec<(u32, u64)> = node.red.iter().map(|&(u, m)| (rank[u.index()], m)).collect();
        red.sort_unstable();
        CanonKey { parent: node.parent.map_or(0, |p| rank[p.index()]), label: node.label.as_ref(), red }
    }

    /// Deterministic byte encoding, invariant under node renaming.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let rank = self.canonical_ranks();
        let mut out = Vec::with_capacity(self.nodes.len() * 16);
        put_u32(&mut out, self.levels.len() as u32);
        for level in self.levels.iter().skip(1) {
            let mut keys: Vec<CanonKey<'_>> = level.iter().map(|&id| self.canon_key(id, &rank)).collect();
            keys.sort_unstable();
            put_u32(&mut out, keys.len() as u32);
            for key in keys {
                put_u32(&mut out, key.parent);
                match key.label {
                    Some(l) => {
                        out.push(if l.leader { 2 } else { 1 });
                        put_u32(&mut out, l.value.len() as u32);
                        out.extend_from_slice(l.value.as_bytes());
                    }
                    None => out.push(0),
                }
                put_u32(&mut out, key.red.len() as u32);
                for (r, m) in key.red {
                    put_u32(&mut out, r);
                    out.extend_from_slice(&m.to_le_bytes());
                }
            }
        }
        out
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct CanonKey<'a> {
    parent: u32,
    label: Option<&'a ProcessInput>,
    red: Vec<(u32, u64)>,
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}
