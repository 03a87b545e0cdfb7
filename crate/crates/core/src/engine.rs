//! Round-synchronous execution of a local algorithm over a trace.

use crate::error::{Error, Result};
use crate::model::{DynamicNetworkTrace, ProcessInput};

/// A deterministic anonymous local algorithm. All processes run the same
/// instance; they differ only in their inputs and in what they receive.
pub trait LocalAlgorithm {
    type State: Clone;
    type Output: Clone + PartialEq;

    fn init(&self, input: &ProcessInput) -> Self::State;

    /// Computes the next state from the current (non-terminal) state and the
    /// multiset of states received this round, given as `(state, copies)`.
    fn step(&self, state: &Self::State, received: &[(&Self::State, u64)]) -> Result<Self::State>;

    fn output(&self, state: &Self::State) -> Self::Output;

    fn is_terminal(&self, state: &Self::State) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    /// Simulate every round of the trace.
    #[default]
    Full,
    /// Stop simulating once every process is terminal; the remaining rounds
    /// repeat the terminal outputs.
    UntilTerminated,
}

#[derive(Clone, Debug)]
pub struct ExecutionResult<S, O> {
    /// `outputs[i][p]` is the output of process `p` (0-based) after round
    /// `i`; round 0 is the initial state.
    pub outputs: Vec<Vec<O>>,
    /// Round at which each process entered a terminal state.
    pub terminated_at: Vec<Option<usize>>,
    /// Earliest round from which every output stays constant through the end
    /// of the trace. `None` when outputs still changed in the final round and
    /// not every process is terminal.
    pub stabilization_round: Option<usize>,
    /// Earliest round at which every process is terminal, if within the trace.
    pub termination_round: Option<usize>,
    pub final_states: Vec<S>,
}

impl<S, O: PartialEq> ExecutionResult<S, O> {
    pub fn rounds(&self) -> usize {
        self.outputs.len() - 1
    }

    pub fn final_outputs(&self) -> &[O] {
        self.outputs.last().expect("round 0 is always recorded")
    }
}

/// Runs `algorithm` on every process of `trace` for rounds `1..=T`.
///
/// In round `i` each process broadcasts its round-`(i-1)` state on every
/// incident link; a link of multiplicity `m` (including a self-loop) delivers
/// `m` copies. Terminal states never change.
pub fn run_execution<A: LocalAlgorithm>(
    trace: &DynamicNetworkTrace,
    algorithm: &A,
    mode: ExecutionMode,
) -> Result<ExecutionResult<A::State, A::Output>> {
    // re-validate: traces are normally valid by construction, but the
    // snapshot list is the contract here
    let trace = DynamicNetworkTrace::new(trace.inputs().to_vec(), trace.snapshots().to_vec())?;
    let n = trace.n();
    let rounds = trace.len();

    let mut states: Vec<A::State> = trace.inputs().iter().map(|i| algorithm.init(i)).collect();
    let mut terminated_at: Vec<Option<usize>> =
        states.iter().map(|s| algorithm.is_terminal(s).then_some(0)).collect();
    let mut outputs = Vec::with_capacity(rounds + 1);
    outputs.push(states.iter().map(|s| algorithm.output(s)).collect::<Vec<_>>());

    for round in 1..=rounds {
        if mode == ExecutionMode::UntilTerminated && terminated_at.iter().all(Option::is_some) {
            let last = outputs.last().cloned().unwrap();
            outputs.push(last);
            continue;
        }
        let adjacency = trace.snapshot(round).adjacency();
        let mut next = Vec::with_capacity(n);
        for (p, links) in adjacency.iter().enumerate() {
            if terminated_at[p].is_some() {
                next.push(states[p].clone());
                continue;
            }
            let received: Vec<(&A::State, u64)> = links.iter().map(|&(q, m)| (&states[q], m)).collect();
            let state = algorithm
                .step(&states[p], &received)
                .map_err(|e| Error::Execution { round, source: Box::new(e) })?;
            next.push(state);
        }
        states = next;
        for (p, s) in states.iter().enumerate() {
            if terminated_at[p].is_none() && algorithm.is_terminal(s) {
                terminated_at[p] = Some(round);
            }
        }
        outputs.push(states.iter().map(|s| algorithm.output(s)).collect());
    }

    let termination_round = if terminated_at.iter().all(Option::is_some) {
        terminated_at.iter().map(|r| r.unwrap()).max()
    } else {
        None
    };
    let mut stable_from = rounds;
    while stable_from > 0 && outputs[stable_from - 1] == outputs[rounds] {
        stable_from -= 1;
    }
    let stabilization_round = if stable_from == rounds && rounds > 0 && termination_round.is_none() {
        None
    } else {
        Some(stable_from)
    };

    Ok(ExecutionResult { outputs, terminated_at, stabilization_round, termination_round, final_states: states })
}

/// Keeps its input as state and never terminates.
#[derive(Clone, Copy, Debug, Default)]
pub struct Echo;

impl LocalAlgorithm for Echo {
    type State = ProcessInput;
    type Output = ProcessInput;

    fn init(&self, input: &ProcessInput) -> ProcessInput {
        input.clone()
    }

    fn step(&self, state: &ProcessInput, _received: &[(&ProcessInput, u64)]) -> Result<ProcessInput> {
        Ok(state.clone())
    }

    fn output(&self, state: &ProcessInput) -> ProcessInput {
        state.clone()
    }

    fn is_terminal(&self, _state: &ProcessInput) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MultigraphSnapshot;

    fn path_trace(n: usize, rounds: usize) -> DynamicNetworkTrace {
        let mut inputs = vec![ProcessInput::leader("x")];
        inputs.extend((1..n).map(|_| ProcessInput::follower("x")));
        let snap = MultigraphSnapshot::new(n, (1..n).map(|i| (i, i + 1, 1))).unwrap();
        DynamicNetworkTrace::new(inputs, vec![snap; rounds]).unwrap()
    }

    #[test]
    fn echo_is_stable_from_round_zero() {
        let result = run_execution(&path_trace(4, 5), &Echo, ExecutionMode::Full).unwrap();
        assert_eq!(result.stabilization_round, Some(0));
        assert_eq!(result.termination_round, None);
        assert_eq!(result.outputs.len(), 6);
    }

    /// Counts message copies received so far.
    struct Tally;

    impl LocalAlgorithm for Tally {
        type State = u64;
        type Output = u64;
        fn init(&self, _: &ProcessInput) -> u64 {
            0
        }
        fn step(&self, s: &u64, received: &[(&u64, u64)]) -> Result<u64> {
            Ok(s + received.iter().map(|(_, m)| m).sum::<u64>())
        }
        fn output(&self, s: &u64) -> u64 {
            *s
        }
        fn is_terminal(&self, s: &u64) -> bool {
            *s >= 6
        }
    }

    #[test]
    fn delivered_copies_match_link_multiplicities() {
        let snap = MultigraphSnapshot::new(3, [(1, 2, 2), (2, 3, 1), (3, 3, 2)]).unwrap();
        let trace = DynamicNetworkTrace::new(
            vec![ProcessInput::leader("x"), ProcessInput::follower("x"), ProcessInput::follower("x")],
            vec![snap.clone()],
        )
        .unwrap();
        let result = run_execution(&trace, &Tally, ExecutionMode::Full).unwrap();
        assert_eq!(result.outputs[1], vec![2, 3, 3]);
        assert_eq!(result.outputs[1].iter().sum::<u64>(), snap.delivered_copies());
    }

    #[test]
    fn terminal_states_freeze() {
        let result = run_execution(&path_trace(3, 8), &Tally, ExecutionMode::Full).unwrap();
        // the middle process hears two copies per round, the ends one
        assert_eq!(result.terminated_at, vec![Some(6), Some(3), Some(6)]);
        assert_eq!(result.termination_round, Some(6));
        assert_eq!(result.final_outputs(), &[6, 6, 6]);
        assert!(result.stabilization_round.unwrap() <= 6);
        let fast = run_execution(&path_trace(3, 8), &Tally, ExecutionMode::UntilTerminated).unwrap();
        assert_eq!(fast.outputs, result.outputs);
    }

    struct Fails;

    impl LocalAlgorithm for Fails {
        type State = ();
        type Output = ();
        fn init(&self, _: &ProcessInput) {}
        fn step(&self, _: &(), _: &[(&(), u64)]) -> Result<()> {
            Err(Error::Protocol("inconsistent".into()))
        }
        fn output(&self, _: &()) {}
        fn is_terminal(&self, _: &()) -> bool {
            false
        }
    }

    #[test]
    fn algorithm_errors_carry_the_round() {
        let err = run_execution(&path_trace(2, 3), &Fails, ExecutionMode::Full).unwrap_err();
        assert!(matches!(err, Error::Execution { round: 1, .. }));
    }
}
