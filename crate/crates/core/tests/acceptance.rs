//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use anondyn_core::adversary::{
    gen_cycle_to_path, gen_lower_bound_gn, gen_random_connected, gen_static_complete, search_naive_failure, Family,
    InputScheme,
};
use anondyn_core::counting::{
    isle_of, stabilizing_count, terminating_count, terminating_count_with, CountingEvent, CountingObserver,
    CountingOutput, GuessState, TerminatingConfig,
};
use anondyn_core::experiment::{default_corpus, run_experiment, worst_round_by_n, AlgorithmKind, ExperimentConfig};
use anondyn_core::history::{build_ground_truth, views_isomorphic, GroundTruth, HistoryTree};
use anondyn_core::oracle::{brute_force_partitions, verify_counting_run};
use anondyn_core::{run_execution, CountingAlgorithm, DynamicNetworkTrace, ExecutionMode};

type Outcome = Result<String, String>;

/// Random corpus entries per (n, density) in the corpora of criteria 2, 3, 7.
const RANDOM_PER_CELL: u64 = 5;

fn oracle_equivalence() -> Outcome {
    let rounds = 12;
    let two = InputScheme::with_followers(&["a", "b"]);
    let mut traces: Vec<DynamicNetworkTrace> = Vec::new();
    for n in 2..=8 {
        if n >= 4 {
            traces.push(gen_lower_bound_gn(n, rounds).unwrap());
        }
        for m in 1..n {
            traces.push(gen_cycle_to_path(n, m, rounds).unwrap());
        }
        traces.push(gen_static_complete(n, &InputScheme::default(), rounds).unwrap());
        traces.push(gen_static_complete(n, &two, rounds).unwrap());
    }
    for seed in 0..200u64 {
        let n = 2 + (seed % 7) as usize;
        let density = (seed / 7 % 4) as usize * n / 2;
        traces.push(gen_random_connected(n, rounds, density, 0.3, seed, &two).unwrap());
    }
    let mut levels = 0;
    for (i, trace) in traces.iter().enumerate() {
        let gt = build_ground_truth(trace);
        let partitions = brute_force_partitions(trace);
        for t in 0..=rounds {
            if gt.level_partition(t as i32) != partitions[t].classes() {
                return Err(format!("trace #{i}: partitions differ at round {t}"));
            }
            levels += 1;
        }
    }
    Ok(format!("{} traces, {levels} rounds compared", traces.len()))
}

fn stabilization_bound() -> Outcome {
    let corpus = default_corpus(2..=16, RANDOM_PER_CELL).unwrap();
    for entry in &corpus {
        let report = verify_counting_run(&entry.trace, CountingAlgorithm::Stabilizing, entry.family).unwrap();
        if !report.ok() {
            let v = &report.violations[0];
            return Err(format!("{}: process {} outputs {} at round {}", entry.label, v.process, v.output, v.round));
        }
    }
    Ok(format!("{} traces, n in 2..=16, all outputs exact from round 2n-2", corpus.len()))
}

fn termination_bound() -> Outcome {
    let corpus = default_corpus(2..=16, RANDOM_PER_CELL).unwrap();
    let mut histories = 0;
    for entry in &corpus {
        let trace = &entry.trace;
        let n = trace.n();
        let truth = CountingOutput::Inventory(trace.inventory());
        let report = verify_counting_run(trace, CountingAlgorithm::terminating(), entry.family).unwrap();
        if !report.ok() {
            let v = &report.violations[0];
            return Err(format!("{}: {:?} by process {} at round {}", entry.label, v.kind, v.process, v.round));
        }
        match report.termination_round {
            Some(r) if r <= 3 * n - 2 => {}
            other => return Err(format!("{}: termination round {other:?} for n = {n}", entry.label)),
        }
        // every history on its own, independent of how outputs spread
        let gt = build_ground_truth(trace);
        for level in 0..=(3 * n - 2) as i32 {
            for &node in gt.tree().level(level) {
                let out = terminating_count(&gt.view_of(node));
                histories += 1;
                let late = level as usize == 3 * n - 2;
                if (late && out != truth) || (out != CountingOutput::Unknown && out != truth) {
                    return Err(format!("{}: history {node} at round {level} yields {out}", entry.label));
                }
            }
        }
    }
    Ok(format!("{} traces, {histories} histories, no early or wrong termination", corpus.len()))
}

fn leader_history(gt: &GroundTruth, round: usize) -> anondyn_core::View {
    gt.history(0, round)
}

fn lower_bound_family() -> Outcome {
    for n in 4..=12 {
        let t = 2 * n - 4;
        let a = build_ground_truth(&gen_lower_bound_gn(n, t).unwrap());
        let b = build_ground_truth(&gen_lower_bound_gn(n + 1, t).unwrap());
        for r in 0..=t - 1 {
            if !views_isomorphic(&leader_history(&a, r), &leader_history(&b, r)) {
                return Err(format!("G_{n} and G_{} leaders differ at round {r}", n + 1));
            }
        }
        if views_isomorphic(&leader_history(&a, t), &leader_history(&b, t)) {
            return Err(format!("G_{n} and G_{} leaders still agree at round {t}", n + 1));
        }
        for r in 0..t {
            if terminating_count(&leader_history(&a, r)) != CountingOutput::Unknown {
                return Err(format!("G_{n} leader history answers at round {r}"));
            }
        }
        let run = run_execution(&gen_lower_bound_gn(n, t).unwrap(), &CountingAlgorithm::terminating(), ExecutionMode::Full)
            .unwrap();
        if let Some(r) = (0..t).find(|&r| run.outputs[r][0] != CountingOutput::Unknown) {
            return Err(format!("G_{n} leader outputs an inventory at round {r}"));
        }
    }
    Ok("n in 4..=12: agree through 2n-5, differ at 2n-4, leader Unknown before 2n-4".into())
}

fn cycle_to_path_family() -> Outcome {
    for m in 2..=6 {
        let t = 3 * m - 2;
        let a = build_ground_truth(&gen_cycle_to_path(2 * m, m, t).unwrap());
        let b = build_ground_truth(&gen_cycle_to_path(2 * m + 1, m, t).unwrap());
        for r in 0..=t {
            if !views_isomorphic(&leader_history(&a, r), &leader_history(&b, r)) {
                return Err(format!("m = {m}: leaders differ at round {r}"));
            }
        }
    }
    Ok("m in 2..=6: leaders of G_(2m,m) and G_(2m+1,m) agree through round 3m-2".into())
}

fn complete_graph() -> Outcome {
    let rounds = 12;
    let inputs = InputScheme::with_followers(&["a", "b"]);
    for n in 2..=10 {
        let trace = gen_static_complete(n, &inputs, rounds).unwrap();
        let distinct = trace.inventory().len();
        if distinct < 2 {
            return Err(format!("K_{n} has {distinct} distinct inputs"));
        }
        let gt = build_ground_truth(&trace);
        let tree = gt.tree();
        for v in tree.node_ids().skip(1) {
            if tree.level_of(v) < rounds as i32 && tree.children(v).len() != 1 {
                return Err(format!("K_{n}: {v} at level {} has {} children", tree.level_of(v), tree.children(v).len()));
            }
        }
    }
    Ok(format!("n in 2..=10, levels 0..{rounds}: every node has one child"))
}

/// Checks the invariants of the terminating rule against ground-truth
/// anonymities while it runs on one history.
struct InvariantChecker<'a> {
    alpha: Vec<u64>,
    // node has no siblings in the full history tree
    sibling_free: Vec<bool>,
    n: usize,
    error: &'a mut Option<String>,
    guesses: u64,
    heads: u64,
}

impl CountingObserver for InvariantChecker<'_> {
    fn loop_head(&mut self, tree: &HistoryTree, state: &GuessState) {
        self.heads += 1;
        let locked = state.locked_levels(tree);
        let guessed = state.guessed_nodes().count();
        if guessed != locked.len() {
            self.fail(format!("{guessed} guessed nodes on {} levels", locked.len()));
        }
        if locked.len() > self.n - 1 {
            self.fail(format!("{} locked levels for n = {}", locked.len(), self.n));
        }
        if let Some(v) = state.guessed_nodes().find(|&v| state.is_heavy(v)) {
            self.fail(format!("heavy node {v} at loop head"));
        }
        for s in state.counted_nodes() {
            if let Some(isle) = isle_of(tree, state, s) {
                if isle.complete && !isle.is_trivial() {
                    self.fail(format!("complete isle at {s} has {} internal nodes", isle.internal.len()));
                }
            }
        }
    }

    fn event(&mut self, event: &CountingEvent) {
        match *event {
            CountingEvent::Guessed { node, guess, .. } => {
                self.guesses += 1;
                let alpha = self.alpha[node.index()];
                if guess < alpha || (self.sibling_free[node.index()] && guess != alpha) {
                    self.fail(format!("guess {guess} for {node} with anonymity {alpha}"));
                }
            }
            CountingEvent::Counted { node, anonymity } => {
                if anonymity != self.alpha[node.index()] {
                    self.fail(format!("counted {node} as {anonymity}, anonymity {}", self.alpha[node.index()]));
                }
            }
            _ => {}
        }
    }
}

impl InvariantChecker<'_> {
    fn fail(&mut self, msg: String) {
        self.error.get_or_insert(msg);
    }
}

fn terminating_invariants() -> Outcome {
    let corpus = default_corpus(2..=12, RANDOM_PER_CELL).unwrap();
    let (mut runs, mut guesses, mut heads) = (0u64, 0u64, 0u64);
    for entry in &corpus {
        let gt = build_ground_truth(&entry.trace);
        let tree = gt.tree();
        let n = gt.n();
        for level in 0..=(3 * n - 2).min(entry.trace.len()) as i32 {
            for &node in tree.level(level) {
                let (view, origin) = gt.view_with_origin(node);
                let mut error = None;
                let mut checker = InvariantChecker {
                    alpha: origin.iter().map(|&o| gt.alpha(o)).collect(),
                    sibling_free: origin
                        .iter()
                        .map(|&o| tree.parent(o).is_some_and(|p| tree.children(p).len() == 1))
                        .collect(),
                    n,
                    error: &mut error,
                    guesses: 0,
                    heads: 0,
                };
                terminating_count_with(&view, TerminatingConfig::default(), &mut checker);
                runs += 1;
                guesses += checker.guesses;
                heads += checker.heads;
                if let Some(e) = error {
                    return Err(format!("{}: history {node} at round {level}: {e}", entry.label));
                }
            }
        }
    }
    Ok(format!("{runs} instrumented runs, {guesses} guesses, {heads} loop heads, no violation"))
}

fn empirical_worst_case() -> Outcome {
    let mut config = ExperimentConfig::new(
        vec![Family::LowerBoundGn, Family::CycleToPath, Family::StaticComplete, Family::RandomConnected],
        (2..=16).collect(),
    );
    config.algorithms = vec![AlgorithmKind::Terminating];
    config.seeds = (0..4).collect();
    config.m = (1..16).collect();
    let rows = run_experiment(&config).unwrap();
    if let Some(bad) = rows.iter().find(|r| !r.correct) {
        return Err(format!("incorrect run: {bad:?}"));
    }
    let worst = worst_round_by_n(&rows, AlgorithmKind::Terminating);
    let mut summary = Vec::new();
    for (&n, &round) in &worst {
        match round {
            Some(r) if r <= 3 * n - 2 => summary.push(format!("{n}:{r}")),
            other => return Err(format!("n = {n}: worst termination {other:?} exceeds {}", 3 * n - 2)),
        }
    }

    let Some(witness) = search_naive_failure(0, 3..=8, 10_000) else {
        return Err("no premature stabilizing answer found in 10^4 seeds".into());
    };
    let n = witness.trace.n();
    let gt = build_ground_truth(&witness.trace);
    let recomputed = stabilizing_count(&gt.history(witness.process, witness.round));
    let confirmed = matches!(&recomputed, CountingOutput::Inventory(inv) if inv.total() != n as u64 && *inv == witness.output);
    if !confirmed || witness.round >= 2 * n - 2 {
        return Err(format!("witness at seed {} does not reproduce", witness.seed));
    }
    Ok(format!(
        "{} runs, worst termination round per n [{}]; naive witness: seed {}, n = {n}, round {}, total {}",
        rows.len(),
        summary.join(" "),
        witness.seed,
        witness.round,
        witness.output.total()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("stabilization by round 2n-2", stabilization_bound),
        ("termination by round 3n-2", termination_bound),
        ("lower-bound family G_n", lower_bound_family),
        ("cycle-to-path family", cycle_to_path_family),
        ("complete graph never splits", complete_graph),
        ("terminating-rule invariants", terminating_invariants),
        ("empirical worst case and naive failure", empirical_worst_case),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.ends_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} ({name}): FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
