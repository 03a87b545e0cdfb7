//! The terminating counting rule.
//!
//! Nodes of a view are assigned guesses derived from fully counted parents
//! ("guessers"). A guessed node whose black subtree holds at least `g(v)`
//! guessed nodes is heavy; the deepest heavy node on the path of a new guess
//! is provably correct and becomes counted. Counted nodes bound isles; a
//! complete isle fills in its internal anonymities. Once no level is
//! guessable, a counting cut whose total `n'` has had `n'` rounds to
//! propagate certifies the inventory.

use serde::Serialize;

use super::{level0_inventory, CountingOutput};
use crate::error::{Error, Result};
use crate::history::{HistoryTree, NodeId, View};

/// How a guess is computed from its quotient.
///
/// `Ceil` is the rule proper. `Floor` is still never below the true
/// anonymity, since the numerator counts at least `alpha(v) * m` links.
/// `CeilMinusOne` can underestimate and exists to exercise the verifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum GuessRule {
    #[default]
    Ceil,
    Floor,
    CeilMinusOne,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TerminatingConfig {
    pub guess: GuessRule,
}

/// Per-node bookkeeping of the terminating rule.
#[derive(Clone, Debug)]
pub struct GuessState {
    counted: Vec<bool>,
    guessed: Vec<bool>,
    anonymity: Vec<Option<u64>>,
    guess: Vec<Option<u64>>,
    // number of guessed nodes in the black subtree, including the node
    guessed_below: Vec<u64>,
}

impl GuessState {
    /// Nothing counted, nothing guessed.
    pub fn new(tree: &HistoryTree) -> Self {
        let n = tree.len();
        GuessState {
            counted: vec![false; n],
            guessed: vec![false; n],
            anonymity: vec![None; n],
            guess: vec![None; n],
            guessed_below: vec![0; n],
        }
    }

    pub fn is_counted(&self, v: NodeId) -> bool {
        self.counted[v.index()]
    }

    pub fn is_guessed(&self, v: NodeId) -> bool {
        self.guessed[v.index()]
    }

    /// Assigned anonymity `a(v)`, present for counted nodes.
    pub fn anonymity(&self, v: NodeId) -> Option<u64> {
        self.anonymity[v.index()]
    }

    /// Current guess `g(v)`, present while `v` is guessed.
    pub fn guess(&self, v: NodeId) -> Option<u64> {
        self.guessed[v.index()].then(|| self.guess[v.index()]).flatten()
    }

    /// Weight `w(v)`: guessed nodes in the subtree of `v`, itself included.
    /// Defined only for guessed nodes.
    pub fn weight(&self, v: NodeId) -> Option<u64> {
        self.guessed[v.index()].then_some(self.guessed_below[v.index()])
    }

    pub fn is_heavy(&self, v: NodeId) -> bool {
        matches!((self.weight(v), self.guess(v)), (Some(w), Some(g)) if w >= g)
    }

    pub fn counted_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.counted.len()).filter(|&i| self.counted[i]).map(|i| NodeId(i as u32))
    }

    pub fn guessed_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.guessed.len()).filter(|&i| self.guessed[i]).map(|i| NodeId(i as u32))
    }

    /// Levels containing a guessed node.
    pub fn locked_levels(&self, tree: &HistoryTree) -> Vec<i32> {
        let mut levels: Vec<i32> = self.guessed_nodes().map(|v| tree.level_of(v)).collect();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    /// Marks `v` counted with anonymity `a`, clearing its guess.
    pub fn mark_counted(&mut self, tree: &HistoryTree, v: NodeId, a: u64) {
        if self.guessed[v.index()] {
            self.guessed[v.index()] = false;
            for x in tree.ancestors(v) {
                self.guessed_below[x.index()] -= 1;
            }
        }
        self.counted[v.index()] = true;
        self.anonymity[v.index()] = Some(a);
    }

    /// Marks `v` guessed with guess `g`.
    pub fn mark_guessed(&mut self, tree: &HistoryTree, v: NodeId, g: u64) {
        debug_assert!(!self.counted[v.index()], "counted nodes are never guessed");
        if !self.guessed[v.index()] {
            self.guessed[v.index()] = true;
            for x in tree.ancestors(v) {
                self.guessed_below[x.index()] += 1;
            }
        }
        self.guess[v.index()] = Some(g);
    }

    /// Weights recomputed from scratch by walking up from every guessed
    /// node; the reference for the incremental counters.
    pub fn recompute_weights(&self, tree: &HistoryTree) -> Vec<u64> {
        let mut w = vec![0u64; tree.len()];
        for g in self.guessed_nodes() {
            for x in tree.ancestors(g) {
                w[x.index()] += 1;
            }
        }
        w
    }

    /// Incrementally maintained subtree counts of guessed nodes, per node.
    pub fn weights(&self) -> &[u64] {
        &self.guessed_below
    }
}

/// `u` is a guesser iff it is counted, all its children in the view are
/// counted, and `a(u)` equals the sum of their anonymities. A childless node
/// is never a guesser.
pub fn is_guesser(tree: &HistoryTree, state: &GuessState, u: NodeId) -> bool {
    let Some(a) = state.anonymity(u).filter(|_| state.is_counted(u)) else {
        return false;
    };
    let mut sum = 0u64;
    for &c in tree.children(u) {
        match state.anonymity(c).filter(|_| state.is_counted(c)) {
            Some(ac) => sum += ac,
            None => return false,
        }
    }
    sum == a
}

/// The guess `ceil(sum_i a(u_i) * m_i / m)` for `v` guessable by `u`, where
/// `u_i` ranges over the children of `u`, `m_i` is the multiplicity of
/// `{u_i, parent(v)}` and `m` that of `{v, u}`.
pub fn compute_guess(tree: &HistoryTree, state: &GuessState, v: NodeId, u: NodeId) -> Result<u64> {
    if !is_guesser(tree, state, u) {
        return Err(Error::Contract(format!("{u} is not a guesser")));
    }
    if tree.level_of(u) + 1 != tree.level_of(v) {
        return Err(Error::Contract(format!("{u} is not one level above {v}")));
    }
    if tree.parent(v) == Some(u) {
        return Err(Error::Contract(format!("{v} is a child of its guesser {u}")));
    }
    if tree.red_multiplicity(v, u) == 0 {
        return Err(Error::Contract(format!("no red edge between {v} and {u}")));
    }
    let g = guess_value(tree, state, v, u, GuessRule::Ceil);
    if g == 0 {
        return Err(Error::Contract(format!("guess for {v} is zero; the view is inconsistent")));
    }
    Ok(g)
}

fn guess_value(tree: &HistoryTree, state: &GuessState, v: NodeId, u: NodeId, rule: GuessRule) -> u64 {
    let m = tree.red_multiplicity(v, u);
    let v_parent = tree.parent(v).expect("guessable nodes are below level -1");
    let numerator: u64 = tree
        .children(u)
        .iter()
        .map(|&ui| state.anonymity(ui).unwrap_or(0) * tree.red_multiplicity(ui, v_parent))
        .sum();
    match rule {
        GuessRule::Ceil => numerator.div_ceil(m),
        GuessRule::Floor => numerator / m,
        GuessRule::CeilMinusOne => numerator.div_ceil(m).saturating_sub(1),
    }
}

/// The region below a counted node `root` bounded by its nearest counted
/// descendants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isle {
    pub root: NodeId,
    pub leaves: Vec<NodeId>,
    /// Nodes strictly between the root and the leaves, parents first.
    pub internal: Vec<NodeId>,
    /// `a(root)` equals the sum of the leaves' anonymities.
    pub complete: bool,
}

impl Isle {
    pub fn is_trivial(&self) -> bool {
        self.internal.is_empty()
    }
}

/// The isle rooted at the counted node `s`: its leaves are the first
/// counted nodes on every black path down from `s`, and they must cut every
/// path from `s` to a leaf of the view. `None` when `s` is not counted or
/// some path reaches a view leaf without meeting a counted node.
pub fn isle_of(tree: &HistoryTree, state: &GuessState, s: NodeId) -> Option<Isle> {
    if !state.is_counted(s) || tree.children(s).is_empty() {
        return None;
    }
    let mut leaves = Vec::new();
    let mut internal = Vec::new();
    let mut frontier: Vec<NodeId> = tree.children(s).to_vec();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for x in frontier {
            if state.is_counted(x) {
                leaves.push(x);
            } else if tree.children(x).is_empty() {
                return None;
            } else {
                internal.push(x);
                next.extend_from_slice(tree.children(x));
            }
        }
        frontier = next;
    }
    let total: u64 = leaves.iter().map(|&f| state.anonymity(f).unwrap_or(0)).sum();
    let complete = state.anonymity(s) == Some(total);
    Some(Isle { root: s, leaves, internal, complete })
}

/// Topmost counted node on the black path from each counted node to the
/// root, collected into a set; returned only when it is a cut for the root
/// (it meets every root-to-leaf path and no member is redundant).
pub fn find_counting_cut(tree: &HistoryTree, state: &GuessState) -> Option<Vec<NodeId>> {
    let root = tree.root();
    if state.is_counted(root) {
        return None;
    }
    // top[x]: topmost counted node on the path from the root to x
    let mut top: Vec<Option<NodeId>> = vec![None; tree.len()];
    let mut cut = Vec::new();
    for level in 0..=tree.depth() {
        for &x in tree.level(level) {
            let inherited = top[tree.parent(x).unwrap().index()];
            top[x.index()] = inherited.or_else(|| state.is_counted(x).then_some(x));
            if inherited.is_none() && state.is_counted(x) {
                cut.push(x);
            }
        }
    }
    if cut.is_empty() {
        return None;
    }
    let mut leaf_seen = vec![false; tree.len()];
    for leaf in tree.leaves() {
        leaf_seen[top[leaf.index()]?.index()] = true;
    }
    // every member must own a leaf no other member covers
    if cut.iter().any(|c| !leaf_seen[c.index()]) {
        return None;
    }
    Some(cut)
}

/// Instrumentation emitted by [`terminating_count_with`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CountingEvent {
    Guessed { node: NodeId, guesser: NodeId, guess: u64 },
    Counted { node: NodeId, anonymity: u64 },
    IsleResolved { root: NodeId, leaves: Vec<NodeId>, internal: Vec<NodeId> },
    CutTested { cut: Option<Vec<NodeId>>, total: u64, deepest_level: i32, accepted: bool },
}

/// Receives loop-head snapshots and events from a terminating run.
pub trait CountingObserver {
    /// Called every time the main loop is about to look for a guessable
    /// level, and once more when it exits.
    fn loop_head(&mut self, _tree: &HistoryTree, _state: &GuessState) {}
    fn event(&mut self, _event: &CountingEvent) {}
}

impl CountingObserver for () {}

/// Collects every event.
#[derive(Clone, Debug, Default)]
pub struct EventLog(pub Vec<CountingEvent>);

impl CountingObserver for EventLog {
    fn event(&mut self, event: &CountingEvent) {
        self.0.push(event.clone());
    }
}

#[derive(Clone, Debug)]
pub struct TerminatingRun {
    pub output: CountingOutput,
    pub state: GuessState,
    pub cut: Option<Vec<NodeId>>,
}

pub fn terminating_count(view: &View) -> CountingOutput {
    terminating_count_with(view, TerminatingConfig::default(), &mut ()).output
}

/// Runs the terminating rule on `view`, reporting to `observer`.
pub fn terminating_count_with(
    view: &View,
    config: TerminatingConfig,
    observer: &mut dyn CountingObserver,
) -> TerminatingRun {
    let tree = view.tree();
    let mut run = Run::new(tree, config);

    for id in tree.node_ids() {
        if tree.is_leader(id) {
            run.count(id, 1);
            observer.event(&CountingEvent::Counted { node: id, anonymity: 1 });
        }
    }

    loop {
        observer.loop_head(tree, &run.state);
        let Some((v, u)) = run.next_guessable() else { break };
        let g = guess_value(tree, &run.state, v, u, config.guess);
        run.state.mark_guessed(tree, v, g);
        run.touch(v);
        observer.event(&CountingEvent::Guessed { node: v, guesser: u, guess: g });

        let heavy = tree.ancestors(v).find(|&x| run.state.is_heavy(x));
        if let Some(h) = heavy {
            let a = run.state.guess(h).unwrap();
            run.count(h, a);
            observer.event(&CountingEvent::Counted { node: h, anonymity: a });
            run.resolve_isles(h, observer);
        }
    }

    let cut = find_counting_cut(tree, &run.state);
    let Some(c) = cut.clone() else {
        observer.event(&CountingEvent::CutTested { cut: None, total: 0, deepest_level: -1, accepted: false });
        return TerminatingRun { output: CountingOutput::Unknown, state: run.state, cut };
    };
    let total: u64 = c.iter().map(|&x| run.state.anonymity(x).unwrap()).sum();
    let deepest = c.iter().map(|&x| tree.level_of(x)).max().unwrap();
    let accepted = (tree.depth() as i64) >= deepest as i64 + total as i64;
    observer.event(&CountingEvent::CutTested { cut: cut.clone(), total, deepest_level: deepest, accepted });
    let output = if accepted {
        CountingOutput::Inventory(level0_inventory(tree, c.iter().map(|&x| (x, run.state.anonymity(x).unwrap()))))
    } else {
        CountingOutput::Unknown
    };
    TerminatingRun { output, state: run.state, cut }
}

struct Run<'a> {
    tree: &'a HistoryTree,
    ranks: Vec<u32>,
    state: GuessState,
    guesser: Vec<bool>,
    // nodes of each level in canonical order
    sorted_levels: Vec<Vec<NodeId>>,
    // cached best (node, guesser) per level; None = needs recomputation
    candidates: Vec<Option<Option<(NodeId, NodeId)>>>,
}

impl<'a> Run<'a> {
    fn new(tree: &'a HistoryTree, _config: TerminatingConfig) -> Self {
        let ranks = tree.canonical_ranks();
        let sorted_levels = (0..=tree.depth())
            .map(|l| {
                let mut nodes = tree.level(l).to_vec();
                nodes.sort_by_key(|v| ranks[v.index()]);
                nodes
            })
            .collect();
        let levels = (tree.depth() + 1).max(0) as usize;
        Run {
            tree,
            ranks,
            state: GuessState::new(tree),
            guesser: vec![false; tree.len()],
            sorted_levels,
            candidates: vec![None; levels],
        }
    }

    fn invalidate(&mut self, level: i32) {
        if level >= 0 && (level as usize) < self.candidates.len() {
            self.candidates[level as usize] = None;
        }
    }

    /// Refreshes caches after the flags of `v` changed.
    fn touch(&mut self, v: NodeId) {
        let level = self.tree.level_of(v);
        self.invalidate(level);
        for x in std::iter::once(v).chain(self.tree.parent(v)) {
            let now = is_guesser(self.tree, &self.state, x);
            if now != self.guesser[x.index()] {
                self.guesser[x.index()] = now;
                self.invalidate(self.tree.level_of(x) + 1);
            }
        }
    }

    fn count(&mut self, v: NodeId, a: u64) {
        self.state.mark_counted(self.tree, v, a);
        self.touch(v);
    }

    fn level_candidate(&self, level: usize) -> Option<(NodeId, NodeId)> {
        let nodes = &self.sorted_levels[level];
        if nodes.iter().any(|&v| self.state.is_guessed(v)) {
            return None;
        }
        nodes.iter().filter(|&&v| !self.state.is_counted(v)).find_map(|&v| {
            self.tree
                .red_edges(v)
                .iter()
                .filter(|&&(u, _)| self.guesser[u.index()])
                .min_by_key(|&&(u, _)| self.ranks[u.index()])
                .map(|&(u, _)| (v, u))
        })
    }

    /// The guessable non-counted node of smallest depth and its guesser.
    fn next_guessable(&mut self) -> Option<(NodeId, NodeId)> {
        for level in 0..self.candidates.len() {
            if self.candidates[level].is_none() {
                self.candidates[level] = Some(self.level_candidate(level));
            }
            if let Some(Some(pick)) = self.candidates[level] {
                return Some(pick);
            }
        }
        None
    }

    /// Fills in every non-trivial complete isle having `h` as root or leaf.
    fn resolve_isles(&mut self, h: NodeId, observer: &mut dyn CountingObserver) {
        loop {
            let upper = self.tree.ancestors(h).skip(1).find(|&x| self.state.is_counted(x));
            let isle = std::iter::once(h)
                .chain(upper)
                .filter_map(|s| isle_of(self.tree, &self.state, s))
                .find(|isle| isle.complete && !isle.is_trivial());
            let Some(isle) = isle else { break };
            // children before parents, so sums are available
            for &w in isle.internal.iter().rev() {
                let a = self
                    .tree
                    .children(w)
                    .iter()
                    .map(|&c| self.state.anonymity(c).expect("isle nodes below are counted"))
                    .sum();
                self.count(w, a);
                observer.event(&CountingEvent::Counted { node: w, anonymity: a });
            }
            observer.event(&CountingEvent::IsleResolved {
                root: isle.root,
                leaves: isle.leaves,
                internal: isle.internal,
            });
        }
    }
}
