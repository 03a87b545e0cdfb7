//! Parameter sweeps over generated networks and the standard test corpus.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{Family, GeneratorSpec, InputScheme};
use crate::counting::CountingAlgorithm;
use crate::error::{Error, Result};
use crate::model::DynamicNetworkTrace;
use crate::oracle::verify_counting_run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Stabilizing,
    Terminating,
}

impl AlgorithmKind {
    pub fn algorithm(self) -> CountingAlgorithm {
        match self {
            AlgorithmKind::Stabilizing => CountingAlgorithm::Stabilizing,
            AlgorithmKind::Terminating => CountingAlgorithm::terminating(),
        }
    }

    pub fn name(self) -> &'static str {
        self.algorithm().name()
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stabilizing" => Some(AlgorithmKind::Stabilizing),
            "terminating" => Some(AlgorithmKind::Terminating),
            _ => None,
        }
    }
}

fn both_algorithms() -> Vec<AlgorithmKind> {
    vec![AlgorithmKind::Stabilizing, AlgorithmKind::Terminating]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_multi_prob() -> f64 {
    0.3
}

/// A grid of generated networks and the algorithms to run on each.
///
/// Cells are the product families x n x (m for cycle-to-path) x (seeds for
/// the random family) x algorithms. Combinations a family does not accept
/// (for instance `G_n` with `n < 4`) are skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub n: Vec<usize>,
    /// Switch rounds for cycle-to-path; empty means `n / 2`.
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "both_algorithms")]
    pub algorithms: Vec<AlgorithmKind>,
    /// Trace length; `None` means `3n`.
    #[serde(default)]
    pub rounds: Option<usize>,
    /// Extra random links per round; `None` means `n / 2`.
    #[serde(default)]
    pub density: Option<usize>,
    #[serde(default = "default_multi_prob")]
    pub multi_prob: f64,
    #[serde(default)]
    pub inputs: InputScheme,
    /// Where the CSV goes; standard output when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(families: Vec<Family>, n: Vec<usize>) -> Self {
        ExperimentConfig {
            families,
            n,
            m: Vec::new(),
            seeds: default_seeds(),
            algorithms: both_algorithms(),
            rounds: None,
            density: None,
            multi_prob: default_multi_prob(),
            inputs: InputScheme::default(),
            output: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Generator specs and algorithms of every cell, in row order.
    pub fn cells(&self) -> Result<Vec<(GeneratorSpec, AlgorithmKind)>> {
        if self.rounds == Some(0) {
            return Err(Error::Parameter("round cap must be positive".into()));
        }
        let mut cells = Vec::new();
        for &family in &self.families {
            for &n in &self.n {
                for spec in self.specs_for(family, n) {
                    for &alg in &self.algorithms {
                        cells.push((spec.clone(), alg));
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Parameter("experiment grid is empty".into()));
        }
        Ok(cells)
    }

    fn specs_for(&self, family: Family, n: usize) -> Vec<GeneratorSpec> {
        let base = GeneratorSpec {
            family,
            n,
            m: 0,
            rounds: self.rounds.unwrap_or(3 * n),
            density: self.density.unwrap_or(n / 2),
            multi_prob: self.multi_prob,
            seed: 0,
            inputs: self.inputs.clone(),
        };
        match family {
            Family::LowerBoundGn if n < 4 => vec![],
            Family::CycleToPath => {
                let ms = if self.m.is_empty() { vec![(n / 2).max(1)] } else { self.m.clone() };
                ms.into_iter().filter(|&m| m >= 1 && m < n).map(|m| GeneratorSpec { m, ..base.clone() }).collect()
            }
            Family::RandomConnected => {
                self.seeds.iter().map(|&seed| GeneratorSpec { seed, ..base.clone() }).collect()
            }
            _ if n == 0 => vec![],
            _ => vec![base],
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentRow {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub algorithm: &'static str,
    pub stabilization_round: Option<usize>,
    pub termination_round: Option<usize>,
    /// The run met every checked bound and ended with the true inventory.
    pub correct: bool,
}

pub const CSV_HEADER: &str = "family,n,m,seed,algorithm,stabilization_round,termination_round,correct";

pub fn run_cell(spec: &GeneratorSpec, alg: AlgorithmKind) -> Result<ExperimentRow> {
    let trace = spec.generate()?;
    let report = verify_counting_run(&trace, alg.algorithm(), Some(spec.family))?;
    Ok(ExperimentRow {
        family: spec.family.name().to_string(),
        n: spec.n,
        m: spec.m,
        seed: spec.seed,
        algorithm: alg.name(),
        stabilization_round: report.stabilization_round,
        termination_round: report.termination_round,
        correct: report.correct && report.ok(),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.cells()?.iter().map(|(spec, alg)| run_cell(spec, *alg)).collect()
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    fn opt(v: Option<usize>) -> String {
        v.map(|r| r.to_string()).unwrap_or_default()
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.n,
            r.m,
            r.seed,
            r.algorithm,
            opt(r.stabilization_round),
            opt(r.termination_round),
            r.correct
        )
        .unwrap();
    }
    out
}

/// Largest termination (or stabilization) round per `n` among rows of
/// `alg`; `None` when some run never got there.
pub fn worst_round_by_n(rows: &[ExperimentRow], alg: AlgorithmKind) -> BTreeMap<usize, Option<usize>> {
    let mut worst: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.algorithm == alg.name()) {
        let round = match alg {
            AlgorithmKind::Stabilizing => r.stabilization_round,
            AlgorithmKind::Terminating => r.termination_round,
        };
        let slot = worst.entry(r.n).or_insert(Some(0));
        *slot = match (*slot, round) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
    }
    worst
}

/// A trace of the corpus with where it came from.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub label: String,
    pub family: Option<Family>,
    pub trace: DynamicNetworkTrace,
}

/// Generator specs of the standard corpus for each `n` in `sizes`:
/// `G_n`, cycle-to-path with `m` in `{1, n/2, n-1}`, `K_n` with one and with
/// two follower values, and `random_seeds` random networks at each of two
/// densities. Traces have `3n` rounds.
pub fn default_corpus_specs(sizes: RangeInclusive<usize>, random_seeds: u64) -> Vec<GeneratorSpec> {
    let mut specs = Vec::new();
    for n in sizes {
        let rounds = 3 * n;
        if n >= 4 {
            specs.push(GeneratorSpec::new(Family::LowerBoundGn, n, rounds));
        }
        let mut ms = vec![1, n / 2, n.saturating_sub(1)];
        ms.retain(|&m| m >= 1 && m < n);
        ms.dedup();
        for m in ms {
            specs.push(GeneratorSpec { m, ..GeneratorSpec::new(Family::CycleToPath, n, rounds) });
        }
        for values in [&["x"][..], &["a", "b"][..]] {
            let inputs = InputScheme::with_followers(values);
            specs.push(GeneratorSpec { inputs, ..GeneratorSpec::new(Family::StaticComplete, n, rounds) });
        }
        for density in [1, n] {
            for i in 0..random_seeds {
                specs.push(GeneratorSpec {
                    density,
                    multi_prob: 0.3,
                    seed: (n as u64) * 1000 + density as u64 * 100 + i,
                    inputs: InputScheme::with_followers(&["a", "b"]),
                    ..GeneratorSpec::new(Family::RandomConnected, n, rounds)
                });
            }
        }
    }
    specs
}

pub fn default_corpus(sizes: RangeInclusive<usize>, random_seeds: u64) -> Result<Vec<CorpusEntry>> {
    default_corpus_specs(sizes, random_seeds)
        .into_iter()
        .map(|spec| {
            Ok(CorpusEntry {
                label: spec_label(&spec),
                family: Some(spec.family),
                trace: spec.generate()?,
            })
        })
        .collect()
}

pub fn spec_label(spec: &GeneratorSpec) -> String {
    match spec.family {
        Family::LowerBoundGn => format!("gn-{}", spec.n),
        Family::CycleToPath => format!("cycle-to-path-{}-{}", spec.n, spec.m),
        Family::StaticComplete => {
            format!("complete-{}-{}", spec.n, spec.inputs.follower_values.join(""))
        }
        Family::RandomConnected => format!("random-{}-d{}-s{}", spec.n, spec.density, spec.seed),
    }
}

/// Every `*.json` trace in `dir`, sorted by file name.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let trace = DynamicNetworkTrace::load(&p)?;
            Ok(CorpusEntry { label: p.file_stem().unwrap().to_string_lossy().into_owned(), family: None, trace })
        })
        .collect()
}
