//! Replicated comparison experiments.
//!
//! For every `k` in the sweep, `landscapes` landscape instances are generated
//! from the master seed and every requested algorithm is run
//! `runs_per_landscape` times on each of them. Each run owns a random stream
//! derived from its grid coordinates, so results do not depend on execution
//! order or on the number of worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    self, Algorithm, EvolutionConfig, HistoryPoint, NkProblem, RbnkProblem, ReplacementPolicy,
};
use crate::nk::{evaluate_nk, generate_nk, BitGenome, NkLandscape};
use crate::operators::{MutationMode, Variation};
use crate::rbn::{assign_traits, check_network_shape, TraitMap};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{self, WelchTest};

/// Header of the results file.
pub const RESULTS_HEADER: [&str; 11] = [
    "task",
    "n",
    "k",
    "r",
    "b",
    "algorithm",
    "landscape_id",
    "run_id",
    "generations",
    "evaluations",
    "best_fitness",
];

/// Significance level used by [`summarize`].
pub const ALPHA: f64 = 0.05;

/// Largest `n` accepted by [`effective_landscape`].
pub const EFFECTIVE_LANDSCAPE_MAX_N: usize = 16;

const TAG_LANDSCAPE: u64 = 0x4c41_4e44;
const TAG_TRAITS: u64 = 0x5452_4149;
const TAG_RUN: u64 = 0x5255_4e53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Nk,
    Rbnk,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Nk => "nk",
            Task::Rbnk => "rbnk",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nk" => Ok(Task::Nk),
            "rbnk" => Ok(Task::Rbnk),
            other => Err(Error::format("task", format!("unknown task {other:?}"))),
        }
    }
}

/// Full parameterisation of a comparison study.
///
/// H-EA always runs for twice `hdea_generations`, which gives both
/// algorithms the same per-generation evaluation budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n: usize,
    pub k_sweep: Vec<usize>,
    /// Network size (RBNK only).
    pub r: usize,
    /// Connections per node (RBNK only).
    pub b: usize,
    /// Synchronous updates before the trait readout (RBNK only).
    pub t_cycles: usize,
    /// Random-start simulations averaged per evaluation (RBNK only).
    pub trials: usize,
    pub pop_size: usize,
    pub hdea_generations: u64,
    pub algorithms: Vec<Algorithm>,
    pub crossover: bool,
    pub mutation: MutationMode,
    pub replacement: ReplacementPolicy,
    pub landscapes: usize,
    pub runs_per_landscape: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Nk,
            n: 50,
            k_sweep: vec![0, 2, 4, 6, 8, 10],
            r: 100,
            b: 2,
            t_cycles: 50,
            trials: 10,
            pop_size: 50,
            hdea_generations: 20_000,
            algorithms: Algorithm::ALL.to_vec(),
            crossover: true,
            mutation: MutationMode::OneLocus,
            replacement: ReplacementPolicy::Worst,
            landscapes: 10,
            runs_per_landscape: 10,
            master_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, value: u64| {
            if value == 0 {
                Err(Error::param(name, "must be positive"))
            } else {
                Ok(())
            }
        };
        positive("n", self.n as u64)?;
        positive("pop_size", self.pop_size as u64)?;
        positive("hdea_generations", self.hdea_generations)?;
        positive("landscapes", self.landscapes as u64)?;
        positive("runs_per_landscape", self.runs_per_landscape as u64)?;
        if self.k_sweep.is_empty() {
            return Err(Error::param("k_sweep", "must list at least one k"));
        }
        if let Some(&k) = self.k_sweep.iter().find(|&&k| k + 1 > self.n) {
            return Err(Error::param(
                "k_sweep",
                format!("k = {k} violates k <= n-1 = {}", self.n - 1),
            ));
        }
        if self.k_sweep.iter().collect::<BTreeSet<_>>().len() != self.k_sweep.len() {
            return Err(Error::param("k_sweep", "duplicate k values"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::param(
                "algorithms",
                "must list at least one algorithm",
            ));
        }
        if self.algorithms.iter().collect::<BTreeSet<_>>().len() != self.algorithms.len() {
            return Err(Error::param("algorithms", "duplicate algorithms"));
        }
        if self.hdea_generations.checked_mul(2).is_none() {
            return Err(Error::param("hdea_generations", "too large"));
        }
        if self.task == Task::Rbnk {
            check_network_shape(self.r, self.b)?;
            if self.n > self.r {
                return Err(Error::param("n", format!("rbnk needs n <= r = {}", self.r)));
            }
            positive("t_cycles", self.t_cycles as u64)?;
            positive("trials", self.trials as u64)?;
        }
        Ok(())
    }

    pub fn hea_generations(&self) -> u64 {
        2 * self.hdea_generations
    }

    pub fn generations_for(&self, algorithm: Algorithm) -> u64 {
        match algorithm {
            Algorithm::Hdea => self.hdea_generations,
            Algorithm::Hea => self.hea_generations(),
        }
    }

    pub fn evolution_config(&self, algorithm: Algorithm) -> EvolutionConfig {
        EvolutionConfig {
            pop_size: self.pop_size,
            generations: self.generations_for(algorithm),
            variation: Variation {
                mutation: self.mutation,
                crossover: self.crossover,
            },
            replacement: self.replacement,
        }
    }

    /// Number of runs in the grid.
    pub fn grid_size(&self) -> usize {
        self.k_sweep.len() * self.landscapes * self.runs_per_landscape * self.algorithms.len()
    }

    /// Fitness evaluations for one run of `algorithm`, initialisation included.
    pub fn run_evaluations(&self, algorithm: Algorithm) -> u64 {
        algorithm.initial_evaluations(self.pop_size)
            + algorithm.evaluations_per_generation() * self.generations_for(algorithm)
    }

    /// Fitness evaluations over the whole grid.
    pub fn total_evaluations(&self) -> u64 {
        let per_cell: u64 = self
            .algorithms
            .iter()
            .map(|&a| self.run_evaluations(a))
            .sum();
        per_cell * (self.k_sweep.len() * self.landscapes * self.runs_per_landscape) as u64
    }

    pub fn landscape_seed(&self, k: usize, landscape_id: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[TAG_LANDSCAPE, k as u64, landscape_id as u64],
        )
    }

    pub fn trait_seed(&self, k: usize, landscape_id: usize) -> u64 {
        derive_seed(self.landscape_seed(k, landscape_id), &[TAG_TRAITS])
    }

    pub fn run_seed(&self, cell: &GridCell) -> u64 {
        let algorithm = match cell.algorithm {
            Algorithm::Hdea => 0,
            Algorithm::Hea => 1,
        };
        derive_seed(
            self.master_seed,
            &[
                TAG_RUN,
                cell.k as u64,
                cell.landscape_id as u64,
                cell.run_id as u64,
                algorithm,
            ],
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("config", e.to_string().trim_end()))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }
}

/// Coordinates of one run in the experiment grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCell {
    pub k: usize,
    pub landscape_id: usize,
    pub run_id: usize,
    pub algorithm: Algorithm,
}

impl GridCell {
    /// Every cell of the grid in canonical order.
    pub fn enumerate(config: &ExperimentConfig) -> Vec<GridCell> {
        let mut ks = config.k_sweep.clone();
        ks.sort_unstable();
        let mut algorithms = config.algorithms.clone();
        algorithms.sort_unstable();
        let mut cells = Vec::with_capacity(config.grid_size());
        for &k in &ks {
            for landscape_id in 0..config.landscapes {
                for run_id in 0..config.runs_per_landscape {
                    for &algorithm in &algorithms {
                        cells.push(GridCell {
                            k,
                            landscape_id,
                            run_id,
                            algorithm,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One row of the results file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub task: Task,
    pub n: usize,
    pub k: usize,
    pub r: Option<usize>,
    pub b: Option<usize>,
    pub algorithm: Algorithm,
    pub landscape_id: usize,
    pub run_id: usize,
    pub generations: u64,
    pub evaluations: u64,
    pub best_fitness: f64,
}

impl RunRecord {
    fn sort_key(&self) -> (usize, usize, usize, Algorithm) {
        (self.k, self.landscape_id, self.run_id, self.algorithm)
    }
}

/// A run's record plus the trace details that do not go into the results file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub initial_evaluations: u64,
    pub diploid_checks: u64,
    pub diploid_violations: u64,
    pub history: Vec<HistoryPoint>,
}

/// The landscape (and trait map, for RBNK) used by one `(k, landscape_id)` pair.
#[derive(Clone, Debug)]
pub struct LandscapeInstance {
    pub landscape: NkLandscape,
    pub traits: Option<TraitMap>,
}

impl LandscapeInstance {
    pub fn generate(config: &ExperimentConfig, k: usize, landscape_id: usize) -> Result<Self> {
        let landscape = generate_nk(config.n, k, config.landscape_seed(k, landscape_id))?;
        let traits = match config.task {
            Task::Nk => None,
            Task::Rbnk => Some(assign_traits(
                config.r,
                config.n,
                config.trait_seed(k, landscape_id),
            )?),
        };
        Ok(LandscapeInstance { landscape, traits })
    }
}

/// Executes a single grid cell on a prepared landscape instance.
pub fn run_cell(
    config: &ExperimentConfig,
    instance: &LandscapeInstance,
    cell: GridCell,
) -> Result<RunOutcome> {
    let evo = config.evolution_config(cell.algorithm);
    let mut rng = rng_from_seed(config.run_seed(&cell));
    let trace = match (&config.task, &instance.traits) {
        (Task::Nk, _) => {
            let problem = NkProblem {
                landscape: &instance.landscape,
            };
            let t = evolution::run(cell.algorithm, &evo, &problem, &mut rng)?;
            (
                t.final_best,
                t.evaluations,
                t.initial_evaluations,
                t.diploid_checks,
                t.diploid_violations,
                t.history,
            )
        }
        (Task::Rbnk, Some(traits)) => {
            let problem = RbnkProblem {
                landscape: &instance.landscape,
                traits,
                b: config.b,
                t_cycles: config.t_cycles,
                trials: config.trials,
            };
            let t = evolution::run(cell.algorithm, &evo, &problem, &mut rng)?;
            (
                t.final_best,
                t.evaluations,
                t.initial_evaluations,
                t.diploid_checks,
                t.diploid_violations,
                t.history,
            )
        }
        (Task::Rbnk, None) => return Err(Error::param("traits", "rbnk run without a trait map")),
    };
    let (
        best_fitness,
        evaluations,
        initial_evaluations,
        diploid_checks,
        diploid_violations,
        history,
    ) = trace;
    let rbnk = config.task == Task::Rbnk;
    Ok(RunOutcome {
        record: RunRecord {
            task: config.task,
            n: config.n,
            k: cell.k,
            r: rbnk.then_some(config.r),
            b: rbnk.then_some(config.b),
            algorithm: cell.algorithm,
            landscape_id: cell.landscape_id,
            run_id: cell.run_id,
            generations: evo.generations,
            evaluations,
            best_fitness,
        },
        initial_evaluations,
        diploid_checks,
        diploid_violations,
        history,
    })
}

/// Execution options for [`run_experiment_with`].
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `0` means one per available processor.
    pub workers: usize,
    /// Called once per finished run, from whichever worker ran it.
    pub progress: Option<&'a (dyn Fn(&RunOutcome) + Sync)>,
}

/// Runs the whole grid and returns outcomes in canonical order.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    options: &RunOptions<'_>,
) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| {
        let pairs: Vec<(usize, usize)> = GridCell::enumerate(config)
            .iter()
            .map(|c| (c.k, c.landscape_id))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let instances: BTreeMap<(usize, usize), LandscapeInstance> = pairs
            .par_iter()
            .map(|&(k, id)| LandscapeInstance::generate(config, k, id).map(|inst| ((k, id), inst)))
            .collect::<Result<_>>()?;
        let mut outcomes = GridCell::enumerate(config)
            .into_par_iter()
            .map(|cell| {
                let instance = &instances[&(cell.k, cell.landscape_id)];
                let outcome = run_cell(config, instance, cell).map_err(|source| Error::Run {
                    k: cell.k,
                    landscape_id: cell.landscape_id,
                    run_id: cell.run_id,
                    algorithm: cell.algorithm.to_string(),
                    source: Box::new(source),
                })?;
                if let Some(progress) = options.progress {
                    progress(&outcome);
                }
                Ok(outcome)
            })
            .collect::<Result<Vec<_>>>()?;
        outcomes.sort_by_key(|o| o.record.sort_key());
        Ok(outcomes)
    })
}

/// Runs the whole grid on all available processors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    Ok(run_experiment_with(config, &RunOptions::default())?
        .into_iter()
        .map(|o| o.record)
        .collect())
}

/// Formats a fitness with 17 significant digits in positional notation.
pub fn format_fitness(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_field(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results<W: Write>(records: &[RunRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::format("results", e);
    out.write_record(RESULTS_HEADER).map_err(io)?;
    for r in records {
        out.write_record([
            r.task.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            opt_field(r.r),
            opt_field(r.b),
            r.algorithm.to_string(),
            r.landscape_id.to_string(),
            r.run_id.to_string(),
            r.generations.to_string(),
            r.evaluations.to_string(),
            format_fitness(r.best_fitness),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| Error::format("results", e))?;
    Ok(())
}

pub fn write_results_file(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(records, std::io::BufWriter::new(file))
}

/// Parses a results file; errors name the offending line.
pub fn read_results<R: Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format("results", e))?
        .clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(Error::format(
            "results",
            format!("line 1: expected header `{}`", RESULTS_HEADER.join(",")),
        ));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::format("results", e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |field: &str, reason: String| {
            Error::format("results", format!("line {line}, field `{field}`: {reason}"))
        };
        let get = |i: usize| row.get(i).unwrap_or("");
        fn num<T: FromStr>(s: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("{e} ({s:?})"))
        }
        let opt = |i: usize| -> Result<Option<usize>> {
            let s = get(i);
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some).map_err(|e| bad(RESULTS_HEADER[i], e))
            }
        };
        let record = RunRecord {
            task: get(0)
                .parse()
                .map_err(|e: Error| bad("task", e.to_string()))?,
            n: num(get(1)).map_err(|e| bad("n", e))?,
            k: num(get(2)).map_err(|e| bad("k", e))?,
            r: opt(3)?,
            b: opt(4)?,
            algorithm: get(5)
                .parse()
                .map_err(|e: Error| bad("algorithm", e.to_string()))?,
            landscape_id: num(get(6)).map_err(|e| bad("landscape_id", e))?,
            run_id: num(get(7)).map_err(|e| bad("run_id", e))?,
            generations: num(get(8)).map_err(|e| bad("generations", e))?,
            evaluations: num(get(9)).map_err(|e| bad("evaluations", e))?,
            best_fitness: num(get(10)).map_err(|e| bad("best_fitness", e))?,
        };
        if !(0.0..=1.0).contains(&record.best_fitness) {
            return Err(bad(
                "best_fitness",
                format!("{} outside [0, 1]", record.best_fitness),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_results_file(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(std::io::BufReader::new(file))
}

/// Mean, max and min best fitness for one `(k, algorithm)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub k: usize,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonStatus {
    Compared,
    /// A cell has fewer than two runs.
    Skipped,
    /// One of the two algorithms has no runs at this k.
    Incomparable,
}

/// HD-EA vs H-EA at one k. Positive `t` favours HD-EA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KComparison {
    pub k: usize,
    pub status: ComparisonStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub significant: bool,
    /// The algorithm with the higher mean, when the difference is significant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub better: Option<Algorithm>,
}

impl KComparison {
    pub fn test(&self) -> Option<WelchTest> {
        Some(WelchTest {
            t: self.t?,
            df: self.df?,
            p: self.p?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub task: Task,
    pub alpha: f64,
    pub cells: Vec<CellSummary>,
    pub comparisons: Vec<KComparison>,
}

impl ComparisonSummary {
    pub fn cell(&self, k: usize, algorithm: Algorithm) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.k == k && c.algorithm == algorithm)
    }

    pub fn comparison(&self, k: usize) -> Option<&KComparison> {
        self.comparisons.iter().find(|c| c.k == k)
    }

    pub fn k_values(&self) -> Vec<usize> {
        self.cells
            .iter()
            .map(|c| c.k)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("summary", e.to_string().trim_end()))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ComparisonSummary::from_toml(&text)
    }
}

/// Groups records by `(k, algorithm)` and tests HD-EA against H-EA at each k.
pub fn summarize(records: &[RunRecord]) -> Result<ComparisonSummary> {
    let first = records
        .first()
        .ok_or_else(|| Error::param("records", "nothing to summarise"))?;
    if records.iter().any(|r| r.task != first.task) {
        return Err(Error::param("records", "results mix several tasks"));
    }
    // Samples are ordered by grid position so the arithmetic is independent of row order.
    let mut groups: BTreeMap<(usize, Algorithm), BTreeMap<(usize, usize), f64>> = BTreeMap::new();
    for r in records {
        let prev = groups
            .entry((r.k, r.algorithm))
            .or_default()
            .insert((r.landscape_id, r.run_id), r.best_fitness);
        if prev.is_some() {
            return Err(Error::param(
                "records",
                format!(
                    "duplicate row for k={}, {}, landscape {}, run {}",
                    r.k, r.algorithm, r.landscape_id, r.run_id
                ),
            ));
        }
    }
    let samples: BTreeMap<(usize, Algorithm), Vec<f64>> = groups
        .into_iter()
        .map(|(key, runs)| (key, runs.into_values().collect()))
        .collect();
    let cells = samples
        .iter()
        .map(|(&(k, algorithm), xs)| CellSummary {
            k,
            algorithm,
            runs: xs.len(),
            mean: stats::mean(xs),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        })
        .collect();
    let ks: BTreeSet<usize> = samples.keys().map(|&(k, _)| k).collect();
    let comparisons = ks
        .into_iter()
        .map(|k| {
            let blank = |status| KComparison {
                k,
                status,
                t: None,
                df: None,
                p: None,
                significant: false,
                better: None,
            };
            match (
                samples.get(&(k, Algorithm::Hdea)),
                samples.get(&(k, Algorithm::Hea)),
            ) {
                (Some(hd), Some(h)) if hd.len() >= 2 && h.len() >= 2 => {
                    let test = stats::welch_t_test(hd, h).expect("both samples have two points");
                    let significant = test.p < ALPHA;
                    let better = significant.then_some({
                        if test.t > 0.0 {
                            Algorithm::Hdea
                        } else {
                            Algorithm::Hea
                        }
                    });
                    KComparison {
                        k,
                        status: ComparisonStatus::Compared,
                        t: Some(test.t),
                        df: Some(test.df),
                        p: Some(test.p),
                        significant,
                        better,
                    }
                }
                (Some(_), Some(_)) => blank(ComparisonStatus::Skipped),
                _ => blank(ComparisonStatus::Incomparable),
            }
        })
        .collect();
    Ok(ComparisonSummary {
        task: first.task,
        alpha: ALPHA,
        cells,
        comparisons,
    })
}

/// Attributed fitness of every genome when it sits in a diploid with its
/// partner: `(f(g) + f(pairing[g])) / 2`.
///
/// Genomes are indexed as in [`BitGenome::from_index`] (locus 0 is the most
/// significant bit); `pairing` must map every one of the `2^n` indices.
pub fn effective_landscape(landscape: &NkLandscape, pairing: &[u64]) -> Result<Vec<f64>> {
    let n = landscape.n();
    if n > EFFECTIVE_LANDSCAPE_MAX_N {
        return Err(Error::Refused(format!(
            "effective landscape over 2^{n} genomes (limit n <= {EFFECTIVE_LANDSCAPE_MAX_N})"
        )));
    }
    let size = 1u64 << n;
    if pairing.len() as u64 != size {
        return Err(Error::param(
            "pairing",
            format!("covers {} genomes, expected {size}", pairing.len()),
        ));
    }
    if let Some(&bad) = pairing.iter().find(|&&p| p >= size) {
        return Err(Error::param(
            "pairing",
            format!("partner {bad} outside [0, {size})"),
        ));
    }
    let raw: Vec<f64> = (0..size)
        .map(|i| evaluate_nk(landscape, &BitGenome::from_index(n, i)))
        .collect::<Result<_>>()?;
    Ok(pairing
        .iter()
        .enumerate()
        .map(|(g, &partner)| (raw[g] + raw[partner as usize]) / 2.0)
        .collect())
}

/// Identity pairing with the given genome pairs swapped in both directions.
pub fn pairing_with(n: usize, pairs: &[(u64, u64)]) -> Vec<u64> {
    let mut pairing: Vec<u64> = (0..1u64 << n).collect();
    for &(a, b) in pairs {
        pairing[a as usize] = b;
        pairing[b as usize] = a;
    }
    pairing
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        k: usize,
        algorithm: Algorithm,
        landscape_id: usize,
        run_id: usize,
        best_fitness: f64,
    ) -> RunRecord {
        RunRecord {
            task: Task::Nk,
            n: 10,
            k,
            r: None,
            b: None,
            algorithm,
            landscape_id,
            run_id,
            generations: 10,
            evaluations: 30,
            best_fitness,
        }
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 8,
            k_sweep: vec![0, 3],
            pop_size: 10,
            hdea_generations: 50,
            landscapes: 2,
            runs_per_landscape: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_grid_is_1200_runs() {
        let config = ExperimentConfig::default();
        assert_eq!(config.grid_size(), 6 * 10 * 10 * 2);
        assert_eq!(config.hea_generations(), 40_000);
        assert_eq!(config.run_evaluations(Algorithm::Hdea), 100 + 40_000);
        assert_eq!(config.run_evaluations(Algorithm::Hea), 50 + 40_000);
    }

    #[test]
    fn validation_names_the_field() {
        let bad = ExperimentConfig {
            k_sweep: vec![50],
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::Parameter {
                name: "k_sweep",
                ..
            })
        ));
        let bad = ExperimentConfig {
            landscapes: 0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::Parameter {
                name: "landscapes",
                ..
            })
        ));
        let bad = ExperimentConfig {
            task: Task::Rbnk,
            r: 40,
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::Parameter { name: "n", .. })
        ));
    }

    #[test]
    fn config_toml_round_trip() {
        let config = tiny_config();
        let text = config.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), config);
        let err = ExperimentConfig::from_toml("pop_size = \"many\"").unwrap_err();
        assert!(err.to_string().contains("pop_size"), "{err}");
        let err = ExperimentConfig::from_toml("popsize = 3").unwrap_err();
        assert!(err.to_string().contains("popsize"), "{err}");
    }

    #[test]
    fn experiment_is_complete_and_deterministic() {
        let config = tiny_config();
        let a = run_experiment_with(
            &config,
            &RunOptions {
                workers: 1,
                progress: None,
            },
        )
        .unwrap();
        let b = run_experiment_with(
            &config,
            &RunOptions {
                workers: 3,
                progress: None,
            },
        )
        .unwrap();
        assert_eq!(a.len(), config.grid_size());
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|o| (0.0..=1.0).contains(&o.record.best_fitness)));
        assert!(a.iter().all(|o| o.diploid_violations == 0));
    }

    #[test]
    fn both_algorithms_share_landscapes_but_not_seeds() {
        let config = tiny_config();
        let cell = GridCell {
            k: 3,
            landscape_id: 1,
            run_id: 0,
            algorithm: Algorithm::Hdea,
        };
        let other = GridCell {
            algorithm: Algorithm::Hea,
            ..cell
        };
        assert_ne!(config.run_seed(&cell), config.run_seed(&other));
        // Adding k values leaves existing landscape seeds untouched.
        let wider = ExperimentConfig {
            k_sweep: vec![0, 1, 3, 5],
            ..config.clone()
        };
        assert_eq!(config.landscape_seed(3, 1), wider.landscape_seed(3, 1));
    }

    #[test]
    fn results_round_trip() {
        let records = vec![
            record(0, Algorithm::Hdea, 0, 0, 0.712_345_678_901_234_5),
            record(0, Algorithm::Hea, 0, 0, 1.0),
            record(2, Algorithm::Hea, 1, 3, 0.000_123_456_789_012_345_67),
            RunRecord {
                task: Task::Rbnk,
                r: Some(40),
                b: Some(2),
                ..record(0, Algorithm::Hea, 0, 0, 0.0)
            },
        ];
        let mut buf = Vec::new();
        write_results(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "task,n,k,r,b,algorithm,landscape_id,run_id,generations,evaluations,best_fitness\n"
        ));
        assert!(text.contains("nk,10,0,,,hdea,0,0,10,30,0.71234567890123446\n"));
        assert_eq!(read_results(&buf[..]).unwrap(), records);
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let text =
            "task,n,k,r,b,algorithm,landscape_id,run_id,generations,evaluations,best_fitness\n\
                    nk,10,0,,,hdea,0,0,10,30,0.5\n\
                    nk,10,0,,,hea,0,zero,10,30,0.5\n";
        let err = read_results(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("run_id"), "{err}");
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_fitness(0.5), "0.50000000000000000");
        assert_eq!(format_fitness(1.0), "1.0000000000000000");
        assert_eq!(format_fitness(0.0), "0.0000000000000000");
        for x in [0.1, 0.3, 2.0 / 3.0, 1e-5 / 3.0, 0.999_999_999_999_999_9] {
            assert_eq!(format_fitness(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn hand_checked_group_means() {
        let records = vec![
            record(4, Algorithm::Hdea, 0, 0, 0.70),
            record(4, Algorithm::Hdea, 0, 1, 0.80),
            record(4, Algorithm::Hea, 0, 0, 0.60),
            record(4, Algorithm::Hea, 0, 1, 0.66),
        ];
        let s = summarize(&records).unwrap();
        let hd = s.cell(4, Algorithm::Hdea).unwrap();
        assert!((hd.mean - 0.75).abs() < 1e-15);
        assert_eq!((hd.max, hd.min), (0.80, 0.70));
        let h = s.cell(4, Algorithm::Hea).unwrap();
        assert!((h.mean - 0.63).abs() < 1e-15);
        let c = s.comparison(4).unwrap();
        assert_eq!(c.status, ComparisonStatus::Compared);
        let direct = stats::welch_t_test(&[0.70, 0.80], &[0.60, 0.66]).unwrap();
        assert_eq!(c.test().unwrap(), direct);
    }

    #[test]
    fn degenerate_cells() {
        let s = summarize(&[
            record(0, Algorithm::Hdea, 0, 0, 0.4),
            record(0, Algorithm::Hea, 0, 0, 0.5),
        ])
        .unwrap();
        let cell = s.cell(0, Algorithm::Hdea).unwrap();
        assert_eq!((cell.mean, cell.max, cell.min), (0.4, 0.4, 0.4));
        assert_eq!(s.comparison(0).unwrap().status, ComparisonStatus::Skipped);

        let s = summarize(&[
            record(0, Algorithm::Hdea, 0, 0, 0.4),
            record(0, Algorithm::Hdea, 0, 1, 0.5),
        ])
        .unwrap();
        assert_eq!(
            s.comparison(0).unwrap().status,
            ComparisonStatus::Incomparable
        );

        let same: Vec<_> = (0..6)
            .flat_map(|i| {
                [
                    record(2, Algorithm::Hdea, 0, i, 0.61),
                    record(2, Algorithm::Hea, 0, i, 0.61),
                ]
            })
            .collect();
        let s = summarize(&same).unwrap();
        assert_eq!(s.cell(2, Algorithm::Hea).unwrap().mean, 0.61);
        let c = s.comparison(2).unwrap();
        assert_eq!(c.p, Some(1.0));
        assert!(!c.significant);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_toml_round_trip() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(record(0, Algorithm::Hdea, 0, i, 0.5 + i as f64 / 97.0));
            records.push(record(0, Algorithm::Hea, 0, i, 0.51 + i as f64 / 89.0));
            records.push(record(6, Algorithm::Hdea, 0, i, 0.7));
            records.push(record(6, Algorithm::Hea, 0, i, 0.6));
        }
        records.push(record(9, Algorithm::Hea, 0, 0, 0.6));
        let s = summarize(&records).unwrap();
        assert_eq!(s.comparison(6).unwrap().t, Some(f64::INFINITY));
        assert_eq!(s.comparison(6).unwrap().better, Some(Algorithm::Hdea));
        assert_eq!(ComparisonSummary::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn identity_pairing_leaves_fitness_unchanged() {
        for n in 1..=10 {
            let landscape = generate_nk(n, n.min(3) - 1, n as u64).unwrap();
            let eff = effective_landscape(&landscape, &pairing_with(n, &[])).unwrap();
            for (i, &e) in eff.iter().enumerate() {
                assert_eq!(
                    e,
                    evaluate_nk(&landscape, &BitGenome::from_index(n, i as u64)).unwrap()
                );
            }
        }
    }

    #[test]
    fn two_locus_valley_is_lifted() {
        // Per-genome fitness with k = 1: f(g) = (t0[g0 g1] + t1[g1 g0]) / 2.
        // f(00) = 0.5, f(01) = 0.1, f(10) = 0.3, f(11) = 0.9.
        let landscape = NkLandscape::from_parts(
            2,
            1,
            0,
            vec![vec![1], vec![0]],
            vec![vec![0.5, 0.1, 0.3, 0.9], vec![0.5, 0.3, 0.1, 0.9]],
        )
        .unwrap();
        let eff = effective_landscape(&landscape, &pairing_with(2, &[(0b01, 0b11)])).unwrap();
        let f = |s: &str| evaluate_nk(&landscape, &s.parse().unwrap()).unwrap();
        assert_eq!([f("00"), f("01"), f("10"), f("11")], [0.5, 0.1, 0.3, 0.9]);
        assert_eq!(eff[0b01], (0.1 + 0.9) / 2.0);
        assert_eq!(eff[0b11], eff[0b01]);
        assert_eq!(eff[0b00], 0.5);
        assert_eq!(eff[0b10], 0.3);
    }

    #[test]
    fn partial_pairing_is_rejected() {
        let landscape = generate_nk(3, 1, 1).unwrap();
        assert!(effective_landscape(&landscape, &[0, 1, 2]).is_err());
        assert!(effective_landscape(&landscape, &[0, 1, 2, 3, 4, 5, 6, 8]).is_err());
        let big = generate_nk(17, 1, 1).unwrap();
        assert!(effective_landscape(&big, &[]).is_err());
    }
}
