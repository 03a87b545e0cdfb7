use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anondyn_core::adversary::{gen_cycle_to_path, gen_lower_bound_gn, Family, GeneratorSpec, InputScheme};
use anondyn_core::counting::{terminating_count, terminating_count_with, EventLog, TerminatingConfig};
use anondyn_core::experiment::{
    default_corpus, load_corpus_dir, rows_to_csv, run_experiment, worst_round_by_n, AlgorithmKind, CorpusEntry,
    ExperimentConfig,
};
use anondyn_core::history::{build_ground_truth, to_dot, views_isomorphic, GroundTruth};
use anondyn_core::oracle::{ground_truth_violations, verify_counting_run, CountingReport};
use anondyn_core::{run_execution, CountingAlgorithm, CountingOutput, DynamicNetworkTrace, ExecutionMode};
use serde::Serialize;

use crate::{AlgArg, ExperimentArgs, GenerateArgs, LowerBoundArg, RunArgs, VerifyArgs};

/// Environment variable naming the directory used by `--corpus default`.
pub const CORPUS_ENV: &str = "ANONDYN_CORPUS";

#[derive(Debug)]
pub enum CmdError {
    /// A check ran and found a problem.
    Failure(String),
    /// Bad arguments, configuration or input files.
    Usage(String),
}

impl CmdError {
    pub fn code(&self) -> u8 {
        match self {
            CmdError::Failure(_) => 1,
            CmdError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Failure(m) | CmdError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<anondyn_core::Error> for CmdError {
    fn from(e: anondyn_core::Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

type CmdResult = Result<(), CmdError>;

/// A list of numbers given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumList(pub Vec<u64>);

/// Parses `4,6,8`, `7`, `4..16` or `4..=16` (ranges are inclusive).
pub fn parse_list(s: &str) -> Result<NumList, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("`{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        return Ok(NumList((lo..=hi).collect()));
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<_, _>>().map(NumList)
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CmdError::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_trace(path: &Path) -> Result<DynamicNetworkTrace, CmdError> {
    DynamicNetworkTrace::load(path).map_err(|e| CmdError::Usage(format!("{}: {e}", path.display())))
}

fn algorithm(alg: AlgArg) -> CountingAlgorithm {
    match alg {
        AlgArg::Stabilizing => CountingAlgorithm::Stabilizing,
        AlgArg::Terminating => CountingAlgorithm::terminating(),
    }
}

pub fn generate(args: GenerateArgs) -> CmdResult {
    let spec = GeneratorSpec {
        family: args.family.family(),
        n: args.n,
        m: args.m,
        rounds: args.rounds.unwrap_or(3 * args.n),
        density: args.density.unwrap_or(args.n / 2),
        multi_prob: args.multi_prob,
        seed: args.seed,
        inputs: InputScheme { leader_value: args.inputs.leader_value, follower_values: args.inputs.values },
    };
    let trace = spec.generate()?;
    write_output(args.out.as_deref(), &trace.to_json_string())
}

#[derive(Serialize)]
struct ProcessSummary {
    process: usize,
    output: String,
    terminated_at: Option<usize>,
}

#[derive(Serialize)]
struct RunSummary {
    n: usize,
    rounds: usize,
    algorithm: &'static str,
    truth: String,
    stabilization_round: Option<usize>,
    termination_round: Option<usize>,
    correct: bool,
    processes: Vec<ProcessSummary>,
}

pub fn run(args: RunArgs) -> CmdResult {
    let trace = load_trace(&args.trace)?;
    let alg = algorithm(args.alg);
    let mode = match alg {
        CountingAlgorithm::Stabilizing => ExecutionMode::Full,
        CountingAlgorithm::Terminating(_) => ExecutionMode::UntilTerminated,
    };
    let result = run_execution(&trace, &alg, mode)?;
    let truth = CountingOutput::Inventory(trace.inventory());
    let finals = result.final_outputs();
    let summary = RunSummary {
        n: trace.n(),
        rounds: trace.len(),
        algorithm: alg.name(),
        truth: truth.to_string(),
        stabilization_round: result.stabilization_round,
        termination_round: result.termination_round,
        correct: finals.iter().all(|o| *o == truth)
            && (alg == CountingAlgorithm::Stabilizing || result.termination_round.is_some()),
        processes: finals
            .iter()
            .enumerate()
            .map(|(p, o)| ProcessSummary { process: p + 1, output: o.to_string(), terminated_at: result.terminated_at[p] })
            .collect(),
    };

    if args.json {
        write_output(None, &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
    } else {
        let round = |r: Option<usize>| r.map_or(format!("not within {} rounds", trace.len()), |r| r.to_string());
        let mut text = format!(
            "n = {}, rounds = {}, algorithm = {}\ntrue inventory: {}\nstabilization round: {}\ntermination round: {}\n",
            summary.n,
            summary.rounds,
            summary.algorithm,
            summary.truth,
            round(summary.stabilization_round),
            round(summary.termination_round),
        );
        for p in &summary.processes {
            let stop = p.terminated_at.map(|r| format!(" (terminated at round {r})")).unwrap_or_default();
            text.push_str(&format!("process {}: {}{stop}\n", p.process, p.output));
        }
        text.push_str(&format!("correct: {}\n", summary.correct));
        write_output(None, &text)?;
    }

    let leader_view = &result.final_states[trace.leader()].view;
    if let Some(path) = &args.dot {
        write_output(Some(path), &to_dot(leader_view.tree(), None, Some(leader_view.viewpoint())))?;
    }
    if let Some(path) = &args.ground_truth {
        let gt = build_ground_truth(&trace);
        write_output(Some(path), &to_dot(gt.tree(), Some(gt.alphas()), None))?;
    }
    if let Some(path) = &args.events {
        let mut log = EventLog::default();
        terminating_count_with(leader_view, TerminatingConfig::default(), &mut log);
        let lines: String = log.0.iter().map(|e| serde_json::to_string(e).unwrap() + "\n").collect();
        write_output(Some(path), &lines)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceVerdict {
    label: String,
    n: usize,
    rounds: usize,
    ground_truth_violations: Vec<String>,
    runs: Vec<CountingReport>,
}

impl TraceVerdict {
    fn ok(&self) -> bool {
        self.ground_truth_violations.is_empty() && self.runs.iter().all(CountingReport::ok)
    }
}

#[derive(Serialize)]
struct VerifyReport {
    ok: bool,
    traces: Vec<TraceVerdict>,
}

#[derive(Serialize)]
struct LowerBoundReport {
    ok: bool,
    family: &'static str,
    /// The two networks whose leaders are compared.
    sizes: [usize; 2],
    /// Rounds through which the leaders' histories must agree.
    expected_agreement_through: usize,
    /// Last round through which they actually agree, within the checked range.
    agreement_through: Option<usize>,
    /// Round at which the histories must differ, if any.
    expected_difference_at: Option<usize>,
    /// Rounds before `expected_difference_at` at which the smaller network's
    /// leader history already yields an inventory.
    premature_answers: Vec<usize>,
}

fn leader_agreement(a: &GroundTruth, b: &GroundTruth, through: usize) -> Option<usize> {
    (0..=through).take_while(|&r| views_isomorphic(&a.history(0, r), &b.history(0, r))).last()
}

fn verify_lower_bound(kind: LowerBoundArg, n: Option<usize>, m: Option<usize>) -> Result<LowerBoundReport, CmdError> {
    match kind {
        LowerBoundArg::Gn => {
            let n = n.ok_or_else(|| CmdError::Usage("--lower-bound gn needs --n".into()))?;
            let t = (2 * n).saturating_sub(4);
            let a = build_ground_truth(&gen_lower_bound_gn(n, t)?);
            let b = build_ground_truth(&gen_lower_bound_gn(n + 1, t)?);
            let agreement = leader_agreement(&a, &b, t);
            let premature: Vec<usize> =
                (0..t).filter(|&r| terminating_count(&a.history(0, r)) != CountingOutput::Unknown).collect();
            Ok(LowerBoundReport {
                ok: agreement == Some(t - 1) && premature.is_empty(),
                family: "gn",
                sizes: [n, n + 1],
                expected_agreement_through: t - 1,
                agreement_through: agreement,
                expected_difference_at: Some(t),
                premature_answers: premature,
            })
        }
        LowerBoundArg::CycleToPath => {
            let m = m.ok_or_else(|| CmdError::Usage("--lower-bound cycle-to-path needs --m".into()))?;
            if m < 1 {
                return Err(CmdError::Usage("--m must be positive".into()));
            }
            let t = 3 * m - 2;
            let a = build_ground_truth(&gen_cycle_to_path(2 * m, m, t)?);
            let b = build_ground_truth(&gen_cycle_to_path(2 * m + 1, m, t)?);
            let agreement = leader_agreement(&a, &b, t);
            Ok(LowerBoundReport {
                ok: agreement == Some(t),
                family: "cycle-to-path",
                sizes: [2 * m, 2 * m + 1],
                expected_agreement_through: t,
                agreement_through: agreement,
                expected_difference_at: None,
                premature_answers: Vec::new(),
            })
        }
    }
}

fn corpus_entries(args: &VerifyArgs) -> Result<Vec<CorpusEntry>, CmdError> {
    let mut entries = Vec::new();
    match args.corpus.as_deref() {
        None => {}
        Some("default") => match std::env::var_os(CORPUS_ENV) {
            Some(dir) => entries.extend(load_corpus_dir(Path::new(&dir))?),
            None => entries.extend(default_corpus(2..=args.max_n.max(2), args.seeds)?),
        },
        Some(dir) => entries.extend(load_corpus_dir(Path::new(dir))?),
    }
    for path in &args.traces {
        entries.push(CorpusEntry {
            label: path.display().to_string(),
            family: None,
            trace: load_trace(path)?,
        });
    }
    if entries.is_empty() {
        return Err(CmdError::Usage("nothing to verify: give trace files, --corpus or --lower-bound".into()));
    }
    Ok(entries)
}

pub fn verify(args: VerifyArgs) -> CmdResult {
    let (ok, json) = if let Some(kind) = args.lower_bound {
        let report = verify_lower_bound(kind, args.n, args.m)?;
        (report.ok, serde_json::to_string_pretty(&report).unwrap())
    } else {
        let mut traces = Vec::new();
        for entry in corpus_entries(&args)? {
            let gt = build_ground_truth(&entry.trace);
            let runs = [CountingAlgorithm::Stabilizing, CountingAlgorithm::terminating()]
                .into_iter()
                .map(|alg| verify_counting_run(&entry.trace, alg, entry.family))
                .collect::<Result<Vec<_>, _>>()?;
            traces.push(TraceVerdict {
                label: entry.label,
                n: entry.trace.n(),
                rounds: entry.trace.len(),
                ground_truth_violations: ground_truth_violations(&gt, &entry.trace),
                runs,
            });
        }
        let report = VerifyReport { ok: traces.iter().all(TraceVerdict::ok), traces };
        (report.ok, serde_json::to_string_pretty(&report).unwrap())
    };
    write_output(args.report.as_deref(), &(json + "\n"))?;
    if ok {
        Ok(())
    } else {
        Err(CmdError::Failure("verification failed".into()))
    }
}

fn to_usizes(v: NumList) -> Vec<usize> {
    v.0.into_iter().map(|x| x as usize).collect()
}

pub fn experiment(args: ExperimentArgs) -> CmdResult {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CmdError::Usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json_str(&text).map_err(|e| CmdError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let families: Vec<Family> = args.family.iter().map(|f| f.family()).collect();
            let mut config = ExperimentConfig::new(families, args.n.map(to_usizes).unwrap_or_default());
            if let Some(m) = args.m {
                config.m = to_usizes(m);
            }
            if let Some(seeds) = args.seeds {
                config.seeds = seeds.0;
            }
            if !args.alg.is_empty() {
                config.algorithms = args
                    .alg
                    .iter()
                    .map(|a| match a {
                        AlgArg::Stabilizing => AlgorithmKind::Stabilizing,
                        AlgArg::Terminating => AlgorithmKind::Terminating,
                    })
                    .collect();
            }
            config.rounds = args.rounds;
            config.density = args.density;
            if let Some(p) = args.multi_prob {
                config.multi_prob = p;
            }
            config
        }
    };
    if let Some(out) = args.out {
        config.output = Some(out);
    }

    let rows = run_experiment(&config)?;
    let output: Option<PathBuf> = config.output.clone();
    write_output(output.as_deref(), &rows_to_csv(&rows))?;

    for alg in [AlgorithmKind::Stabilizing, AlgorithmKind::Terminating] {
        let worst = worst_round_by_n(&rows, alg);
        if worst.is_empty() {
            continue;
        }
        let cells: Vec<String> = worst
            .iter()
            .map(|(n, r)| format!("{n}:{}", r.map_or("-".to_string(), |r| r.to_string())))
            .collect();
        eprintln!("worst {} round per n: {}", alg.name(), cells.join(" "));
    }
    let wrong = rows.iter().filter(|r| !r.correct).count();
    if wrong > 0 {
        return Err(CmdError::Failure(format!("{wrong} of {} runs incorrect", rows.len())));
    }
    Ok(())
}
