//! Counting rules evaluated on a single view, and the local algorithms that
//! run them every round.

mod algorithm;
mod exposed;
mod stabilizing;
mod terminating;

use std::fmt;

use serde::Serialize;

use crate::history::{HistoryTree, NodeId};
use crate::model::Inventory;

pub use algorithm::{CountingAlgorithm, HistoryState, MultiAggregation};
pub use exposed::{find_exposed_pairs, ExposedPair};
pub use stabilizing::stabilizing_count;
pub use terminating::{
    compute_guess, find_counting_cut, is_guesser, isle_of, terminating_count, terminating_count_with,
    CountingEvent, CountingObserver, EventLog, GuessRule, GuessState, Isle, TerminatingConfig,
    TerminatingRun,
};

/// What a process outputs after evaluating a counting rule.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingOutput {
    #[default]
    Unknown,
    Inventory(Inventory),
}

impl CountingOutput {
    pub fn inventory(&self) -> Option<&Inventory> {
        match self {
            CountingOutput::Unknown => None,
            CountingOutput::Inventory(inv) => Some(inv),
        }
    }
}

impl fmt::Display for CountingOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountingOutput::Unknown => f.write_str("unknown"),
            CountingOutput::Inventory(inv) => inv.fmt(f),
        }
    }
}

/// Sums anonymities of nodes at one level into their level-0 ancestors and
/// reads off the inventory from the level-0 labels.
pub(crate) fn level0_inventory(tree: &HistoryTree, anonymities: impl Iterator<Item = (NodeId, u64)>) -> Inventory {
    let mut inv = Inventory::new();
    for (v, a) in anonymities {
        let top = tree.ancestors(v).find(|&x| tree.level_of(x) == 0).expect("node below level 0");
        inv.add(tree.label(top).unwrap().clone(), a);
    }
    inv
}
