//! Brute-force references for the history tree and the counting algorithms.
//!
//! Nothing here uses history trees to decide indistinguishability: process
//! states are digests of the full tree of messages received so far.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adversary::Family;
use crate::counting::{CountingAlgorithm, CountingOutput};
use crate::engine::{run_execution, ExecutionMode};
use crate::error::Result;
use crate::history::GroundTruth;
use crate::model::DynamicNetworkTrace;

/// Classes of indistinguishable processes (0-based indices into the
/// trace's inputs). Each class is sorted and classes are ordered by their
/// smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Partition(Vec<Vec<usize>>);

impl Partition {
    /// Groups `0..keys.len()` by equal key.
    pub fn from_keys<K: Ord>(keys: &[K]) -> Self {
        let mut groups: BTreeMap<&K, Vec<usize>> = BTreeMap::new();
        for (p, k) in keys.iter().enumerate() {
            groups.entry(k).or_default().push(p);
        }
        let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
        classes.sort();
        Partition(classes)
    }

    pub fn from_classes(mut classes: Vec<Vec<usize>>) -> Self {
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort();
        Partition(classes)
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut owner = BTreeMap::new();
        for (i, c) in coarser.0.iter().enumerate() {
            for &p in c {
                owner.insert(p, i);
            }
        }
        self.0.iter().all(|c| c.iter().all(|p| owner.get(p) == owner.get(&c[0])))
    }
}

type StateDigest = [u8; 32];

/// Structural digest of every process's state after each round `0..=t`.
fn state_digests(trace: &DynamicNetworkTrace, t: usize) -> Vec<Vec<StateDigest>> {
    let mut all = Vec::with_capacity(t + 1);
    let mut current: Vec<StateDigest> = trace
        .inputs()
        .iter()
        .map(|input| {
            let mut h = Sha256::new();
            h.update([0u8, input.leader as u8]);
            h.update((input.value.len() as u64).to_le_bytes());
            h.update(input.value.as_bytes());
            h.finalize().into()
        })
        .collect();
    all.push(current.clone());
    for round in 1..=t {
        let adjacency = trace.snapshot(round).adjacency();
        current = adjacency
            .iter()
            .enumerate()
            .map(|(p, links)| {
                let mut received: BTreeMap<StateDigest, u64> = BTreeMap::new();
                for &(q, m) in links {
                    *received.entry(current[q]).or_insert(0) += m;
                }
                let mut h = Sha256::new();
                h.update([1u8]);
                h.update(current[p]);
                h.update((received.len() as u64).to_le_bytes());
                for (d, m) in &received {
                    h.update(d);
                    h.update(m.to_le_bytes());
                }
                h.finalize().into()
            })
            .collect();
        all.push(current.clone());
    }
    all
}

/// Indistinguishability classes after round `t`, from the inductive
/// definition: equal inputs at round 0, then equal previous state and equal
/// multisets of received states.
///
/// Panics if `t` exceeds the trace length.
pub fn brute_force_partition(trace: &DynamicNetworkTrace, t: usize) -> Partition {
    assert!(t <= trace.len(), "round {t} beyond a trace of {} rounds", trace.len());
    Partition::from_keys(&state_digests(trace, t)[t])
}

/// Partitions for every round `0..=T`.
pub fn brute_force_partitions(trace: &DynamicNetworkTrace) -> Vec<Partition> {
    state_digests(trace, trace.len()).iter().map(|d| Partition::from_keys(d)).collect()
}

/// True iff `gt` is exactly the history tree of `trace`.
pub fn verify_ground_truth(gt: &GroundTruth, trace: &DynamicNetworkTrace) -> bool {
    ground_truth_violations(gt, trace).is_empty()
}

/// Every discrepancy between `gt` and a direct recount over `trace`.
pub fn ground_truth_violations(gt: &GroundTruth, trace: &DynamicNetworkTrace) -> Vec<String> {
    let mut out = Vec::new();
    let tree = gt.tree();
    let n = trace.n();
    if gt.depth() != trace.len() as i32 || tree.depth() != gt.depth() {
        out.push(format!("depth {} for a trace of {} rounds", tree.depth(), trace.len()));
        return out;
    }

    // black structure
    for id in tree.node_ids().skip(1) {
        let Some(parent) = tree.parent(id) else {
            out.push(format!("{id} has no parent"));
            continue;
        };
        if tree.level_of(parent) + 1 != tree.level_of(id) {
            out.push(format!("{id} at level {} under {parent} at level {}", tree.level_of(id), tree.level_of(parent)));
        }
        if !tree.children(parent).contains(&id) {
            out.push(format!("{id} missing from the children of {parent}"));
        }
        for &(u, m) in tree.red_edges(id) {
            if m == 0 || tree.level_of(u) + 1 != tree.level_of(id) {
                out.push(format!("red edge {id}-{u} of multiplicity {m} skips a level"));
            }
        }
        if tree.level_of(id) > 0 && tree.label(id) != tree.label(parent) {
            out.push(format!("{id} carries a label different from its parent {parent}"));
        }
    }
    for id in tree.node_ids() {
        for &c in tree.children(id) {
            if tree.parent(c) != Some(id) {
                out.push(format!("{c} listed as child of {id} but has another parent"));
            }
        }
    }
    let mut l0_labels: Vec<_> = tree.level(0).iter().map(|&v| tree.label(v)).collect();
    l0_labels.sort();
    if l0_labels.windows(2).any(|w| w[0] == w[1]) {
        out.push("two level-0 nodes share a label".into());
    }

    // representation, anonymity, partitions
    let partitions = brute_force_partitions(trace);
    for level in 0..=gt.depth() {
        let nodes = tree.level(level);
        let mut count = vec![0u64; tree.len()];
        for p in 0..n {
            let h = gt.rho(level, p);
            if tree.level_of(h) != level {
                out.push(format!("process {p} mapped to {h} outside level {level}"));
                continue;
            }
            count[h.index()] += 1;
            let parent = tree.parent(h).unwrap();
            if parent != gt.rho(level - 1, p) {
                out.push(format!("process {p}: {h} at level {level} is not below its level-{} node", level - 1));
            }
            if tree.label(h) != Some(&trace.inputs()[p]) {
                out.push(format!("process {p} represented by {h} with a different label"));
            }
        }
        for &h in nodes {
            if count[h.index()] == 0 {
                out.push(format!("{h} at level {level} represents no process"));
            }
            if gt.alpha(h) != count[h.index()] {
                out.push(format!("{h}: anonymity {} but represents {}", gt.alpha(h), count[h.index()]));
            }
            if !tree.children(h).is_empty() {
                let below: u64 = tree.children(h).iter().map(|&c| gt.alpha(c)).sum();
                if below != gt.alpha(h) {
                    out.push(format!("{h}: anonymity {} but children sum to {below}", gt.alpha(h)));
                }
            }
        }
        let sum: u64 = nodes.iter().map(|&h| gt.alpha(h)).sum();
        if sum != n as u64 {
            out.push(format!("level {level} anonymities sum to {sum}, not {n}"));
        }
        if gt.level_partition(level) != partitions[level as usize].classes() {
            out.push(format!("level {level} partition differs from the brute-force classes"));
        }
    }

    // red multiplicities against the raw links of each round
    for level in 1..=gt.depth() {
        let adjacency = trace.snapshot(level as usize).adjacency();
        for (p, links) in adjacency.iter().enumerate() {
            let h = gt.rho(level, p);
            let mut seen: BTreeMap<_, u64> = BTreeMap::new();
            for &(q, m) in links {
                *seen.entry(gt.rho(level - 1, q)).or_insert(0) += m;
            }
            let stored: BTreeMap<_, u64> = tree.red_edges(h).iter().copied().collect();
            if seen != stored {
                out.push(format!("process {p}: red edges of {h} at level {level} disagree with its observations"));
            }
        }
    }
    out
}

/// One broken guarantee in a counting run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub round: usize,
    /// 1-based process id, as in trace files.
    pub process: usize,
    pub kind: ViolationKind,
    pub output: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Terminated with an inventory other than the true one.
    WrongTermination,
    /// Still running at round `3n-2` of a trace long enough to reach it.
    LateTermination,
    /// Wrong stabilizing output at a round `>= 2n-2`.
    UnstableOutput,
    /// Leader of the lower-bound network terminated before round `2n-4`.
    EarlyTermination,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountingReport {
    pub algorithm: &'static str,
    pub n: usize,
    pub rounds: usize,
    pub truth: String,
    pub stabilization_round: Option<usize>,
    pub termination_round: Option<usize>,
    /// Every process ends the trace with the true inventory (and, for the
    /// terminating rule, terminated).
    pub correct: bool,
    pub violations: Vec<Violation>,
}

impl CountingReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `algorithm` on `trace` and checks every output against the true
/// inventory and the round bounds: terminating runs never end wrong and end
/// by round `3n-2`; stabilizing outputs are right from round `2n-2` on.
/// Bounds beyond the trace length are not checked. When `family` is the
/// lower-bound family, the leader (terminating) must not stop before
/// round `2n-4`.
pub fn verify_counting_run(
    trace: &DynamicNetworkTrace,
    algorithm: CountingAlgorithm,
    family: Option<Family>,
) -> Result<CountingReport> {
    let result = run_execution(trace, &algorithm, ExecutionMode::UntilTerminated)?;
    let truth = CountingOutput::Inventory(trace.inventory());
    let n = trace.n();
    let rounds = trace.len();
    let mut violations = Vec::new();
    let final_outputs = result.final_outputs();

    let correct = match algorithm {
        CountingAlgorithm::Stabilizing => {
            for round in (2 * n).saturating_sub(2)..=rounds {
                for (p, out) in result.outputs[round].iter().enumerate() {
                    if *out != truth {
                        violations.push(Violation {
                            round,
                            process: p + 1,
                            kind: ViolationKind::UnstableOutput,
                            output: out.to_string(),
                        });
                    }
                }
            }
            final_outputs.iter().all(|o| *o == truth)
        }
        CountingAlgorithm::Terminating(_) => {
            let deadline = 3 * n - 2;
            for (p, at) in result.terminated_at.iter().enumerate() {
                match *at {
                    Some(round) => {
                        let out = &result.outputs[round][p];
                        if *out != truth {
                            violations.push(Violation {
                                round,
                                process: p + 1,
                                kind: ViolationKind::WrongTermination,
                                output: out.to_string(),
                            });
                        }
                        if round > deadline {
                            violations.push(Violation {
                                round,
                                process: p + 1,
                                kind: ViolationKind::LateTermination,
                                output: out.to_string(),
                            });
                        }
                    }
                    None if rounds >= deadline => violations.push(Violation {
                        round: deadline,
                        process: p + 1,
                        kind: ViolationKind::LateTermination,
                        output: result.outputs[deadline][p].to_string(),
                    }),
                    None => {}
                }
            }
            if family == Some(Family::LowerBoundGn) && n >= 4 {
                let leader = trace.leader();
                if let Some(at) = result.terminated_at[leader].filter(|&r| r < 2 * n - 4) {
                    violations.push(Violation {
                        round: at,
                        process: leader + 1,
                        kind: ViolationKind::EarlyTermination,
                        output: result.outputs[at][leader].to_string(),
                    });
                }
            }
            result.termination_round.is_some() && final_outputs.iter().all(|o| *o == truth)
        }
    };

    Ok(CountingReport {
        algorithm: algorithm.name(),
        n,
        rounds,
        truth: truth.to_string(),
        stabilization_round: result.stabilization_round,
        termination_round: result.termination_round,
        correct,
        violations,
    })
}
