use std::sync::Arc;

use super::{stabilizing_count, terminating_count_with, CountingOutput, TerminatingConfig};
use crate::engine::LocalAlgorithm;
use crate::error::Result;
use crate::history::{extend_and_merge, View};
use crate::model::{Inventory, ProcessInput};

/// Full-information counting: every process broadcasts its history, merges
/// what it receives and evaluates a counting rule on the result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountingAlgorithm {
    Stabilizing,
    Terminating(TerminatingConfig),
}

impl CountingAlgorithm {
    pub fn terminating() -> Self {
        CountingAlgorithm::Terminating(TerminatingConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            CountingAlgorithm::Stabilizing => "stabilizing",
            CountingAlgorithm::Terminating(_) => "terminating",
        }
    }

    pub fn evaluate(&self, view: &View) -> CountingOutput {
        match self {
            CountingAlgorithm::Stabilizing => stabilizing_count(view),
            CountingAlgorithm::Terminating(config) => terminating_count_with(view, *config, &mut ()).output,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HistoryState {
    pub view: Arc<View>,
    pub output: CountingOutput,
    pub terminal: bool,
}

impl LocalAlgorithm for CountingAlgorithm {
    type State = HistoryState;
    type Output = CountingOutput;

    fn init(&self, input: &ProcessInput) -> HistoryState {
        let view = View::initial(input);
        let output = self.evaluate(&view);
        let terminal = matches!(self, CountingAlgorithm::Terminating(_)) && output != CountingOutput::Unknown;
        HistoryState { view: Arc::new(view), output, terminal }
    }

    /// A process that hears from a terminated neighbor adopts its output and
    /// terminates as well; histories of different depths cannot be merged.
    fn step(&self, state: &HistoryState, received: &[(&HistoryState, u64)]) -> Result<HistoryState> {
        if state.terminal {
            return Ok(state.clone());
        }
        let adopted = received.iter().filter(|(s, _)| s.terminal).map(|(s, _)| &s.output).min();
        if let Some(output) = adopted {
            return Ok(HistoryState { view: state.view.clone(), output: output.clone(), terminal: true });
        }
        let views: Vec<(&View, u64)> = received.iter().map(|(s, m)| (s.view.as_ref(), *m)).collect();
        let view = extend_and_merge(&state.view, &views)?;
        let output = self.evaluate(&view);
        let terminal = matches!(self, CountingAlgorithm::Terminating(_)) && output != CountingOutput::Unknown;
        Ok(HistoryState { view: Arc::new(view), output, terminal })
    }

    fn output(&self, state: &HistoryState) -> CountingOutput {
        state.output.clone()
    }

    fn is_terminal(&self, state: &HistoryState) -> bool {
        state.terminal
    }
}

/// Runs a counting algorithm and applies a multi-aggregation signature to
/// each process's input and its current inventory.
#[derive(Clone)]
pub struct MultiAggregation<A, F> {
    pub counting: A,
    pub signature: F,
}

impl<A, F, O> LocalAlgorithm for MultiAggregation<A, F>
where
    A: LocalAlgorithm<Output = CountingOutput>,
    F: Fn(&ProcessInput, &Inventory) -> O,
    O: Clone + PartialEq,
{
    type State = (A::State, ProcessInput);
    type Output = Option<O>;

    fn init(&self, input: &ProcessInput) -> Self::State {
        (self.counting.init(input), input.clone())
    }

    fn step(&self, state: &Self::State, received: &[(&Self::State, u64)]) -> Result<Self::State> {
        let inner: Vec<(&A::State, u64)> = received.iter().map(|((s, _), m)| (s, *m)).collect();
        Ok((self.counting.step(&state.0, &inner)?, state.1.clone()))
    }

    fn output(&self, state: &Self::State) -> Option<O> {
        match self.counting.output(&state.0) {
            CountingOutput::Inventory(inv) => Some((self.signature)(&state.1, &inv)),
            CountingOutput::Unknown => None,
        }
    }

    fn is_terminal(&self, state: &Self::State) -> bool {
        self.counting.is_terminal(&state.0)
    }
}
