//! Named network families and seeded random corpora.
//!
//! Every generator places the leader at process 1 and emits 1-based ids.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counting::{stabilizing_count, CountingOutput};
use crate::error::{Error, Result};
use crate::history::build_ground_truth;
use crate::model::{DynamicNetworkTrace, Inventory, MultigraphSnapshot, ProcessInput};

/// Inputs for generated traces: process 1 is the leader with
/// `leader_value`; processes `2..=n` take `follower_values` round-robin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputScheme {
    pub leader_value: String,
    pub follower_values: Vec<String>,
}

impl Default for InputScheme {
    fn default() -> Self {
        InputScheme { leader_value: "x".into(), follower_values: vec!["x".into()] }
    }
}

impl InputScheme {
    pub fn with_followers(values: &[&str]) -> Self {
        InputScheme { leader_value: "x".into(), follower_values: values.iter().map(|s| s.to_string()).collect() }
    }

    pub fn assign(&self, n: usize) -> Vec<ProcessInput> {
        let values = &self.follower_values;
        let followers = (0..n.saturating_sub(1))
            .map(|i| ProcessInput::follower(values.get(i % values.len().max(1)).map_or("x", String::as_str)));
        std::iter::once(ProcessInput::leader(&self.leader_value)).chain(followers).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LowerBoundGn,
    CycleToPath,
    StaticComplete,
    RandomConnected,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LowerBoundGn => "gn",
            Family::CycleToPath => "cycle-to-path",
            Family::StaticComplete => "complete",
            Family::RandomConnected => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "gn" | "lower-bound-gn" | "lower_bound_gn" => Some(Family::LowerBoundGn),
            "cycle-to-path" | "cycle_to_path" | "gnm" => Some(Family::CycleToPath),
            "complete" | "static-complete" | "static_complete" | "kn" => Some(Family::StaticComplete),
            "random" | "random-connected" | "random_connected" => Some(Family::RandomConnected),
            _ => None,
        }
    }
}

/// Parameters for one generated trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Switch round for `cycle_to_path`; ignored elsewhere.
    #[serde(default)]
    pub m: usize,
    pub rounds: usize,
    /// Extra random links per round for `random_connected`.
    #[serde(default)]
    pub density: usize,
    /// Probability of a parallel link or self-loop per extra link.
    #[serde(default)]
    pub multi_prob: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub inputs: InputScheme,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize, rounds: usize) -> Self {
        GeneratorSpec { family, n, m: 0, rounds, density: 0, multi_prob: 0.0, seed: 0, inputs: InputScheme::default() }
    }

    pub fn generate(&self) -> Result<DynamicNetworkTrace> {
        match self.family {
            Family::LowerBoundGn => gen_lower_bound_gn_with(self.n, self.rounds, &self.inputs),
            Family::CycleToPath => gen_cycle_to_path_with(self.n, self.m, self.rounds, &self.inputs),
            Family::StaticComplete => gen_static_complete(self.n, &self.inputs, self.rounds),
            Family::RandomConnected => {
                gen_random_connected(self.n, self.rounds, self.density, self.multi_prob, self.seed, &self.inputs)
            }
        }
    }
}

fn path_edges(n: usize) -> impl Iterator<Item = (usize, usize, u64)> {
    (1..n).map(|j| (j, j + 1, 1))
}

/// The lower-bound family `G_n`: in round `t <= n-3` the path
/// `p_1 .. p_n` plus the link `{p_(t+1), p_n}`; afterwards the plain path.
pub fn gen_lower_bound_gn(n: usize, rounds: usize) -> Result<DynamicNetworkTrace> {
    gen_lower_bound_gn_with(n, rounds, &InputScheme::default())
}

pub fn gen_lower_bound_gn_with(n: usize, rounds: usize, inputs: &InputScheme) -> Result<DynamicNetworkTrace> {
    if n < 4 {
        return Err(Error::Parameter(format!("G_n needs n >= 4, got {n}")));
    }
    let snapshots = (1..=rounds)
        .map(|t| {
            let extra = (t + 3 <= n).then_some((t + 1, n, 1));
            MultigraphSnapshot::new(n, path_edges(n).chain(extra))
        })
        .collect::<Result<Vec<_>>>()?;
    DynamicNetworkTrace::new(inputs.assign(n), snapshots)
}

/// `G_(n,m)`: a cycle on `1..=n` for rounds `1..m`, then from round `m` on
/// the path obtained by dropping `(m,m+1)` and `(1,n)` and adding `(m,n)`.
pub fn gen_cycle_to_path(n: usize, m: usize, rounds: usize) -> Result<DynamicNetworkTrace> {
    gen_cycle_to_path_with(n, m, rounds, &InputScheme::default())
}

pub fn gen_cycle_to_path_with(
    n: usize,
    m: usize,
    rounds: usize,
    inputs: &InputScheme,
) -> Result<DynamicNetworkTrace> {
    if m == 0 || m >= n {
        return Err(Error::Parameter(format!("cycle-to-path needs 1 <= m < n, got n={n}, m={m}")));
    }
    let snapshots = (1..=rounds)
        .map(|i| {
            if i < m {
                MultigraphSnapshot::new(n, path_edges(n).chain(std::iter::once((1, n, 1))))
            } else {
                MultigraphSnapshot::new(
                    n,
                    path_edges(n).filter(|&(j, _, _)| j != m).chain(std::iter::once((m, n, 1))),
                )
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DynamicNetworkTrace::new(inputs.assign(n), snapshots)
}

/// The complete graph `K_n` in every round.
pub fn gen_static_complete(n: usize, inputs: &InputScheme, rounds: usize) -> Result<DynamicNetworkTrace> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let edges: Vec<_> = (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v, 1))).collect();
    let snapshot = MultigraphSnapshot::new(n, edges)?;
    DynamicNetworkTrace::new(inputs.assign(n), vec![snapshot; rounds])
}

/// A seeded random connected multigraph per round: a random spanning tree
/// plus up to `extra_edge_budget` extra links. Each extra link is, with
/// probability `loop_and_parallel_prob`, a self-loop or a parallel copy of
/// an existing link instead of a fresh pair.
pub fn gen_random_connected(
    n: usize,
    rounds: usize,
    extra_edge_budget: usize,
    loop_and_parallel_prob: f64,
    seed: u64,
    inputs: &InputScheme,
) -> Result<DynamicNetworkTrace> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&loop_and_parallel_prob) {
        return Err(Error::Parameter(format!("probability {loop_and_parallel_prob} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshots = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize, u64)> =
            (1..n).map(|i| (order[rng.gen_range(0..i)], order[i], 1)).collect();
        let extra = if extra_edge_budget > 0 { rng.gen_range(0..=extra_edge_budget) } else { 0 };
        for _ in 0..extra {
            if rng.gen_bool(loop_and_parallel_prob) {
                if n == 1 || rng.gen_bool(0.5) {
                    let p = rng.gen_range(1..=n);
                    edges.push((p, p, rng.gen_range(1..=2)));
                } else {
                    let (u, v, _) = edges[rng.gen_range(0..edges.len())];
                    edges.push((u, v, 1));
                }
            } else if n > 1 {
                let u = rng.gen_range(1..=n);
                let mut v = rng.gen_range(1..n);
                if v >= u {
                    v += 1;
                }
                edges.push((u, v, 1));
            }
        }
        snapshots.push(MultigraphSnapshot::new(n, edges)?);
    }
    DynamicNetworkTrace::new(inputs.assign(n), snapshots)
}

/// A history on which the stabilizing algorithm reports a wrong total.
#[derive(Clone, Debug)]
pub struct NaiveFailure {
    pub seed: u64,
    pub trace: DynamicNetworkTrace,
    pub round: usize,
    /// 0-based process whose history yields the wrong answer.
    pub process: usize,
    pub output: Inventory,
}

/// Randomized search for a trace, round and process at which the
/// stabilizing algorithm outputs an inventory whose total differs from `n`.
///
/// Tries seeds `seed, seed+1, ..` for `budget` attempts; each attempt draws
/// `n` from `n_range`, a sparse random trace of `2n-3` rounds, and checks
/// every history before round `2n-2`.
pub fn search_naive_failure(seed: u64, n_range: RangeInclusive<usize>, budget: u64) -> Option<NaiveFailure> {
    let lo = (*n_range.start()).max(2);
    let hi = (*n_range.end()).max(lo);
    for attempt in seed..seed.saturating_add(budget) {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt);
        let n = rng.gen_range(lo..=hi);
        let rounds = 2 * n - 3;
        let density = rng.gen_range(0..=n);
        let inputs = if rng.gen_bool(0.5) { InputScheme::default() } else { InputScheme::with_followers(&["x", "y"]) };
        let trace = gen_random_connected(n, rounds, density, 0.25, rng.gen(), &inputs).ok()?;
        let gt = build_ground_truth(&trace);
        for round in 1..=rounds {
            for &node in gt.tree().level(round as i32) {
                if let CountingOutput::Inventory(inv) = stabilizing_count(&gt.view_of(node)) {
                    if inv.total() != n as u64 {
                        let process = gt.represented(node)[0];
                        return Some(NaiveFailure { seed: attempt, trace, round, process, output: inv });
                    }
                }
            }
        }
    }
    None
}
