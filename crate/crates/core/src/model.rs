//! Network model: process inputs, multigraph snapshots, dynamic network
//! traces and inventories.
//!
//! Process ids are 1-based at every public boundary (constructors, edge
//! iteration, the JSON trace format) and 0-based in the dense per-process
//! vectors used by the simulator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The input of a process: a leader flag plus an opaque symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessInput {
    pub leader: bool,
    pub value: Arc<str>,
}

impl ProcessInput {
    pub fn leader(value: &str) -> Self {
        ProcessInput { leader: true, value: value.into() }
    }

    pub fn follower(value: &str) -> Self {
        ProcessInput { leader: false, value: value.into() }
    }
}

impl fmt::Display for ProcessInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = if self.leader { 'L' } else { 'N' };
        write!(f, "({},{})", flag, self.value)
    }
}

/// One round of topology: a multiset of unordered process pairs.
///
/// Self-loops `{p,p}` are allowed. Multiplicities are always positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultigraphSnapshot {
    n: usize,
    // keyed by (u, v) with 1 <= u <= v <= n
    edges: BTreeMap<(usize, usize), u64>,
}

impl MultigraphSnapshot {
    /// Builds a snapshot from 1-based `(u, v, multiplicity)` triples.
    /// Repeated pairs accumulate their multiplicities.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, u64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::MalformedSnapshot("a snapshot needs at least one process".into()));
        }
        let mut map = BTreeMap::new();
        for (u, v, mult) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::MalformedSnapshot(format!(
                    "edge {{{u},{v}}} has an endpoint outside 1..={n}"
                )));
            }
            if mult == 0 {
                return Err(Error::MalformedSnapshot(format!(
                    "edge {{{u},{v}}} has multiplicity 0"
                )));
            }
            *map.entry((u.min(v), u.max(v))).or_insert(0) += mult;
        }
        Ok(MultigraphSnapshot { n, edges: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as 1-based `(u, v, multiplicity)` with `u <= v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.edges.iter().map(|(&(u, v), &m)| (u, v, m))
    }

    /// Multiplicity of the link `{u, v}` (1-based), 0 when absent.
    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        self.edges.get(&(u.min(v), u.max(v))).copied().unwrap_or(0)
    }

    /// 0-based adjacency: for each process, the processes it hears from and
    /// how many links carry their message. A self-loop of multiplicity `m`
    /// appears once, as `(p, m)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(u, v), &m) in &self.edges {
            adj[u - 1].push((v - 1, m));
            if u != v {
                adj[v - 1].push((u - 1, m));
            }
        }
        adj
    }

    /// Total number of message copies delivered in a round on this topology.
    pub fn delivered_copies(&self) -> u64 {
        self.edges.iter().map(|(&(u, v), &m)| if u == v { m } else { 2 * m }).sum()
    }

    pub fn is_connected(&self) -> bool {
        validate_connectivity(self)
    }
}

/// True iff the simple graph underlying `s` (multiplicities and self-loops
/// dropped) is connected. A single process is connected.
pub fn validate_connectivity(s: &MultigraphSnapshot) -> bool {
    let mut parent: Vec<usize> = (0..s.n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = s.n;
    for &(u, v) in s.edges.keys() {
        if u == v {
            continue;
        }
        let (a, b) = (find(&mut parent, u - 1), find(&mut parent, v - 1));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// A finite prefix of a 1-interval-connected dynamic network together with
/// its input assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicNetworkTrace {
    inputs: Vec<ProcessInput>,
    rounds: Vec<MultigraphSnapshot>,
}

impl DynamicNetworkTrace {
    /// Validates every trace invariant: one leader, a common `n`, and a
    /// connected snapshot in every round.
    pub fn new(inputs: Vec<ProcessInput>, rounds: Vec<MultigraphSnapshot>) -> Result<Self> {
        let n = inputs.len();
        if n == 0 {
            return Err(Error::InvalidTrace("the system has no processes".into()));
        }
        let leaders = inputs.iter().filter(|i| i.leader).count();
        if leaders != 1 {
            return Err(Error::InvalidTrace(format!("expected exactly one leader, found {leaders}")));
        }
        for (i, s) in rounds.iter().enumerate() {
            if s.n() != n {
                return Err(Error::InvalidTrace(format!(
                    "round {} has {} processes, expected {n}",
                    i + 1,
                    s.n()
                )));
            }
            if !s.is_connected() {
                return Err(Error::InvalidTrace(format!("round {} is disconnected", i + 1)));
            }
        }
        Ok(DynamicNetworkTrace { inputs, rounds })
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    /// Number of rounds `T`.
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Inputs indexed by 0-based process index.
    pub fn inputs(&self) -> &[ProcessInput] {
        &self.inputs
    }

    /// 0-based index of the leader.
    pub fn leader(&self) -> usize {
        self.inputs.iter().position(|i| i.leader).expect("validated trace has a leader")
    }

    /// Topology of round `round` (1-based, `1..=len()`).
    pub fn snapshot(&self, round: usize) -> &MultigraphSnapshot {
        assert!(round >= 1 && round <= self.rounds.len(), "round {round} out of range");
        &self.rounds[round - 1]
    }

    pub fn snapshots(&self) -> &[MultigraphSnapshot] {
        &self.rounds
    }

    pub fn inventory(&self) -> Inventory {
        inventory(&self.inputs)
    }

    /// Keeps only the first `rounds` rounds.
    pub fn truncated(&self, rounds: usize) -> Self {
        DynamicNetworkTrace {
            inputs: self.inputs.clone(),
            rounds: self.rounds.iter().take(rounds).cloned().collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: TraceFile = serde_json::from_str(s)?;
        file.into_trace()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the trace JSON format. Output is deterministic: edges
    /// are sorted and each round occupies one line.
    pub fn to_json_string(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "{{").unwrap();
        writeln!(out, "  \"n\": {},", self.n()).unwrap();
        writeln!(out, "  \"inputs\": [").unwrap();
        for (i, input) in self.inputs.iter().enumerate() {
            let sep = if i + 1 < self.inputs.len() { "," } else { "" };
            writeln!(
                out,
                "    {{\"leader\": {}, \"value\": {}}}{sep}",
                input.leader,
                serde_json::to_string(&*input.value).unwrap()
            )
            .unwrap();
        }
        writeln!(out, "  ],").unwrap();
        writeln!(out, "  \"rounds\": [").unwrap();
        for (i, s) in self.rounds.iter().enumerate() {
            let edges: Vec<String> = s.edges().map(|(u, v, m)| format!("[{u},{v},{m}]")).collect();
            let sep = if i + 1 < self.rounds.len() { "," } else { "" };
            writeln!(out, "    [{}]{sep}", edges.join(",")).unwrap();
        }
        writeln!(out, "  ]").unwrap();
        writeln!(out, "}}").unwrap();
        String::from_utf8(out).unwrap()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// On-disk trace layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct TraceFile {
    pub n: usize,
    pub inputs: Vec<TraceInput>,
    pub rounds: Vec<Vec<[u64; 3]>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceInput {
    pub leader: bool,
    pub value: String,
}

impl TraceFile {
    pub fn into_trace(self) -> Result<DynamicNetworkTrace> {
        if self.inputs.len() != self.n {
            return Err(Error::InvalidTrace(format!(
                "n = {} but {} inputs were given",
                self.n,
                self.inputs.len()
            )));
        }
        let inputs = self
            .inputs
            .into_iter()
            .map(|i| ProcessInput { leader: i.leader, value: i.value.into() })
            .collect();
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for (i, edges) in self.rounds.into_iter().enumerate() {
            let snapshot = MultigraphSnapshot::new(
                self.n,
                edges.into_iter().map(|[u, v, m]| (u as usize, v as usize, m)),
            )
            .map_err(|e| Error::InvalidTrace(format!("round {}: {e}", i + 1)))?;
            rounds.push(snapshot);
        }
        DynamicNetworkTrace::new(inputs, rounds)
    }
}

/// Multiset of process inputs: the answer to Generalized Counting.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Inventory(BTreeMap<ProcessInput, u64>);

impl Inventory {
    pub fn new() -> Self {
        Inventory(BTreeMap::new())
    }

    /// Adds `count` copies of `input`; zero counts are not stored.
    pub fn add(&mut self, input: ProcessInput, count: u64) {
        if count > 0 {
            *self.0.entry(input).or_insert(0) += count;
        }
    }

    pub fn count(&self, input: &ProcessInput) -> u64 {
        self.0.get(input).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProcessInput, u64)> {
        self.0.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(ProcessInput, u64)> for Inventory {
    fn from_iter<I: IntoIterator<Item = (ProcessInput, u64)>>(iter: I) -> Self {
        let mut inv = Inventory::new();
        for (k, v) in iter {
            inv.add(k, v);
        }
        inv
    }
}

impl fmt::Display for Inventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}:{v}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Inventory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            leader: bool,
            value: &'a str,
            count: u64,
        }
        serializer.collect_seq(
            self.0.iter().map(|(k, &count)| Entry { leader: k.leader, value: &k.value, count }),
        )
    }
}

/// Counts how many processes hold each input.
pub fn inventory(assignment: &[ProcessInput]) -> Inventory {
    assignment.iter().map(|i| (i.clone(), 1)).collect()
}

/// Evaluates a multi-aggregation signature on a process input and a full
/// inventory. Any counting algorithm becomes a solver for the problem
/// described by `signature` without extra rounds.
pub fn multi_aggregate<O>(
    input: &ProcessInput,
    inventory: &Inventory,
    signature: impl Fn(&ProcessInput, &Inventory) -> O,
) -> O {
    signature(input, inventory)
}
