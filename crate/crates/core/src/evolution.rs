//! Steady-state evolutionary loops.
//!
//! Both algorithms produce one offspring per generation, pick parents with a
//! binary tournament and overwrite the worst member. The haploid-diploid
//! algorithm (HD-EA) builds its offspring from two gametes and evaluates both
//! haploids; the haploid baseline (H-EA) evaluates one genome per generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nk::{evaluate_nk, BitGenome, NkLandscape};
use crate::operators::{crossover_one_point, gametogenesis, Diploid, Genome, Variation};
use crate::rbn::{evaluate_rbnk, RbnGenome, TraitMap};

/// Upper bound on the number of points kept in a best-fitness history.
pub const HISTORY_POINTS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Haploid-diploid EA.
    Hdea,
    /// Traditional haploid EA.
    Hea,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Hdea, Algorithm::Hea];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Hdea => "hdea",
            Algorithm::Hea => "hea",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Hdea => "HD-EA",
            Algorithm::Hea => "H-EA",
        }
    }

    /// Evaluations per generation after initialisation.
    pub fn evaluations_per_generation(self) -> u64 {
        match self {
            Algorithm::Hdea => 2,
            Algorithm::Hea => 1,
        }
    }

    /// Evaluations spent on the initial population.
    pub fn initial_evaluations(self, pop_size: usize) -> u64 {
        self.evaluations_per_generation() * pop_size as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hdea" => Ok(Algorithm::Hdea),
            "hea" => Ok(Algorithm::Hea),
            other => Err(Error::format(
                "algorithm",
                format!("unknown algorithm {other:?}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementPolicy {
    /// The worst member is always overwritten.
    #[default]
    Worst,
    /// The worst member is overwritten only by a strictly fitter newcomer.
    WorstIfBetter,
}

/// The task being optimised: how to draw random genomes and how to score them.
pub trait Problem: Sync {
    type Genome: Genome;

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genome;

    fn evaluate<R: Rng + ?Sized>(&self, genome: &Self::Genome, rng: &mut R) -> Result<f64>;
}

/// Binary genomes scored directly on an NK landscape.
#[derive(Clone, Copy, Debug)]
pub struct NkProblem<'a> {
    pub landscape: &'a NkLandscape,
}

impl Problem for NkProblem<'_> {
    type Genome = BitGenome;

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> BitGenome {
        BitGenome::random(self.landscape.n(), rng)
    }

    fn evaluate<R: Rng + ?Sized>(&self, genome: &BitGenome, _rng: &mut R) -> Result<f64> {
        evaluate_nk(self.landscape, genome)
    }
}

/// Boolean networks whose trait nodes are scored on an NK landscape.
#[derive(Clone, Copy, Debug)]
pub struct RbnkProblem<'a> {
    pub landscape: &'a NkLandscape,
    pub traits: &'a TraitMap,
    pub b: usize,
    pub t_cycles: usize,
    pub trials: usize,
}

impl Problem for RbnkProblem<'_> {
    type Genome = RbnGenome;

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> RbnGenome {
        RbnGenome::random(self.traits.r(), self.b, rng)
    }

    fn evaluate<R: Rng + ?Sized>(&self, genome: &RbnGenome, rng: &mut R) -> Result<f64> {
        evaluate_rbnk(
            genome,
            self.landscape,
            self.traits,
            self.t_cycles,
            self.trials,
            rng,
        )
    }
}

/// Wraps a problem and counts fitness evaluations.
#[derive(Debug)]
pub struct Evaluator<'p, P> {
    problem: &'p P,
    count: u64,
}

impl<'p, P: Problem> Evaluator<'p, P> {
    pub fn new(problem: &'p P) -> Self {
        Evaluator { problem, count: 0 }
    }

    pub fn evaluate<R: Rng + ?Sized>(&mut self, genome: &P::Genome, rng: &mut R) -> Result<f64> {
        self.count += 1;
        self.problem.evaluate(genome, rng)
    }

    pub fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> P::Genome {
        self.problem.random_genome(rng)
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

pub trait Member {
    fn fitness(&self) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Haploid<G> {
    pub genome: G,
    pub fitness: f64,
}

impl<G> Member for Haploid<G> {
    fn fitness(&self) -> f64 {
        self.fitness
    }
}

impl<G: Genome> Member for Diploid<G> {
    fn fitness(&self) -> f64 {
        Diploid::fitness(self)
    }
}

/// Fixed-size population of evaluated members.
#[derive(Clone, Debug, PartialEq)]
pub struct Population<M> {
    members: Vec<M>,
}

impl<M: Member> Population<M> {
    pub fn new(members: Vec<M>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::param("pop_size", "population must be non-empty"));
        }
        Ok(Population { members })
    }

    pub fn members(&self) -> &[M] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the fittest member; ties go to the lowest index.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate().skip(1) {
            if m.fitness() > self.members[best].fitness() {
                best = i;
            }
        }
        best
    }

    pub fn best_fitness(&self) -> f64 {
        self.members[self.best_index()].fitness()
    }

    pub fn worst_fitness(&self) -> f64 {
        self.members
            .iter()
            .map(Member::fitness)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Binary tournament: two uniform draws with replacement, the fitter wins,
/// ties are settled by a fair coin.
pub fn tournament_select<M: Member, R: Rng + ?Sized>(pop: &Population<M>, rng: &mut R) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    let (fa, fb) = (pop.members[a].fitness(), pop.members[b].fitness());
    if fa > fb {
        a
    } else if fb > fa {
        b
    } else if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Overwrites a uniformly chosen minimal-fitness member with `newcomer`.
/// Returns the replaced index, or `None` if the policy rejected the newcomer.
pub fn replace_worst<M: Member, R: Rng + ?Sized>(
    pop: &mut Population<M>,
    newcomer: M,
    policy: ReplacementPolicy,
    rng: &mut R,
) -> Option<usize> {
    let worst = pop.worst_fitness();
    if policy == ReplacementPolicy::WorstIfBetter && newcomer.fitness() <= worst {
        return None;
    }
    let ties = pop.members.iter().filter(|m| m.fitness() == worst).count();
    let mut pick = if ties > 1 { rng.gen_range(0..ties) } else { 0 };
    let slot = pop
        .members
        .iter()
        .position(|m| {
            if m.fitness() == worst {
                if pick == 0 {
                    return true;
                }
                pick -= 1;
            }
            false
        })
        .expect("population has a worst member");
    pop.members[slot] = newcomer;
    Some(slot)
}

/// What happened during one steady-state generation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationReport {
    pub offspring_fitness: f64,
    pub replaced: Option<usize>,
    /// Whether the offspring satisfied its invariants (always true for haploids).
    pub consistent: bool,
}

/// One HD-EA generation: two gametes from two independently selected parents
/// form a diploid offspring whose haploids are both evaluated.
pub fn hdea_generation<P: Problem, R: Rng + ?Sized>(
    pop: &mut Population<Diploid<P::Genome>>,
    evaluator: &mut Evaluator<'_, P>,
    variation: Variation,
    policy: ReplacementPolicy,
    rng: &mut R,
) -> Result<GenerationReport> {
    let first = tournament_select(pop, rng);
    let gamete_a = gametogenesis(&pop.members[first], variation, rng);
    let second = tournament_select(pop, rng);
    let gamete_b = gametogenesis(&pop.members[second], variation, rng);
    let fitness_a = evaluator.evaluate(&gamete_a, rng)?;
    let fitness_b = evaluator.evaluate(&gamete_b, rng)?;
    let offspring = Diploid::new(gamete_a, fitness_a, gamete_b, fitness_b)?;
    let consistent = offspring.is_consistent();
    let offspring_fitness = offspring.fitness();
    let replaced = replace_worst(pop, offspring, policy, rng);
    Ok(GenerationReport {
        offspring_fitness,
        replaced,
        consistent,
    })
}

/// One H-EA generation: crossover of two tournament winners, one child kept
/// at random, mutated and evaluated.
pub fn hea_generation<P: Problem, R: Rng + ?Sized>(
    pop: &mut Population<Haploid<P::Genome>>,
    evaluator: &mut Evaluator<'_, P>,
    variation: Variation,
    policy: ReplacementPolicy,
    rng: &mut R,
) -> Result<GenerationReport> {
    let first = tournament_select(pop, rng);
    let second = tournament_select(pop, rng);
    let p1 = &pop.members[first].genome;
    let p2 = &pop.members[second].genome;
    let mut child = if variation.crossover && p1.locus_count() >= 2 {
        let (c1, c2) = crossover_one_point(p1, p2, rng)?;
        if rng.gen_bool(0.5) {
            c1
        } else {
            c2
        }
    } else {
        p1.clone()
    };
    variation.mutation.apply(&mut child, rng);
    let fitness = evaluator.evaluate(&child, rng)?;
    let replaced = replace_worst(
        pop,
        Haploid {
            genome: child,
            fitness,
        },
        policy,
        rng,
    );
    Ok(GenerationReport {
        offspring_fitness: fitness,
        replaced,
        consistent: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    /// Generations for this run (the harness doubles them for H-EA).
    pub generations: u64,
    pub variation: Variation,
    pub replacement: ReplacementPolicy,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            pop_size: 50,
            generations: 20_000,
            variation: Variation::default(),
            replacement: ReplacementPolicy::Worst,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size == 0 {
            return Err(Error::param("pop_size", "must be positive"));
        }
        Ok(())
    }

    /// Generations between two history samples: `ceil(G / 1000)`, at least 1.
    pub fn history_interval(&self) -> u64 {
        self.generations.div_ceil(HISTORY_POINTS).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub generation: u64,
    pub best_fitness: f64,
}

/// Genome(s) of the best individual at the end of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum BestGenomes<G> {
    Haploid(G),
    Diploid(G, G),
}

impl<G> BestGenomes<G> {
    pub fn genomes(&self) -> Vec<&G> {
        match self {
            BestGenomes::Haploid(g) => vec![g],
            BestGenomes::Diploid(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace<G> {
    pub algorithm: Algorithm,
    pub pop_size: usize,
    pub generations: u64,
    /// All evaluations, initialisation included.
    pub evaluations: u64,
    /// Evaluations spent on the initial population (2P for HD-EA, P for H-EA).
    pub initial_evaluations: u64,
    pub history: Vec<HistoryPoint>,
    /// Best member fitness at the end (composite fitness for HD-EA).
    pub final_best: f64,
    pub best: BestGenomes<G>,
    /// Diploids checked against the averaging invariant, and failures.
    pub diploid_checks: u64,
    pub diploid_violations: u64,
}

fn record<M: Member>(history: &mut Vec<HistoryPoint>, generation: u64, pop: &Population<M>) {
    history.push(HistoryPoint {
        generation,
        best_fitness: pop.best_fitness(),
    });
}

/// Runs one algorithm on one problem from a fresh random population.
pub fn run<P: Problem, R: Rng + ?Sized>(
    algorithm: Algorithm,
    config: &EvolutionConfig,
    problem: &P,
    rng: &mut R,
) -> Result<RunTrace<P::Genome>> {
    config.validate()?;
    match algorithm {
        Algorithm::Hdea => run_hdea(config, problem, rng),
        Algorithm::Hea => run_hea(config, problem, rng),
    }
}

/// Random diploid population; both haploids of every member are evaluated.
pub fn init_diploids<P: Problem, R: Rng + ?Sized>(
    pop_size: usize,
    evaluator: &mut Evaluator<'_, P>,
    rng: &mut R,
) -> Result<Population<Diploid<P::Genome>>> {
    let members = (0..pop_size)
        .map(|_| {
            let a = evaluator.random_genome(rng);
            let b = evaluator.random_genome(rng);
            let fa = evaluator.evaluate(&a, rng)?;
            let fb = evaluator.evaluate(&b, rng)?;
            Diploid::new(a, fa, b, fb)
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(members)
}

pub fn init_haploids<P: Problem, R: Rng + ?Sized>(
    pop_size: usize,
    evaluator: &mut Evaluator<'_, P>,
    rng: &mut R,
) -> Result<Population<Haploid<P::Genome>>> {
    let members = (0..pop_size)
        .map(|_| {
            let genome = evaluator.random_genome(rng);
            let fitness = evaluator.evaluate(&genome, rng)?;
            Ok(Haploid { genome, fitness })
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(members)
}

fn run_hdea<P: Problem, R: Rng + ?Sized>(
    config: &EvolutionConfig,
    problem: &P,
    rng: &mut R,
) -> Result<RunTrace<P::Genome>> {
    let mut evaluator = Evaluator::new(problem);
    let mut pop = init_diploids(config.pop_size, &mut evaluator, rng)?;
    let initial_evaluations = evaluator.count();
    let mut diploid_checks = pop.len() as u64;
    let mut diploid_violations = pop.members().iter().filter(|d| !d.is_consistent()).count() as u64;
    let interval = config.history_interval();
    let mut history = Vec::new();
    record(&mut history, 0, &pop);
    for generation in 1..=config.generations {
        let report = hdea_generation(
            &mut pop,
            &mut evaluator,
            config.variation,
            config.replacement,
            rng,
        )?;
        diploid_checks += 1;
        diploid_violations += u64::from(!report.consistent);
        if generation % interval == 0 || generation == config.generations {
            record(&mut history, generation, &pop);
        }
    }
    diploid_checks += pop.len() as u64;
    diploid_violations += pop.members().iter().filter(|d| !d.is_consistent()).count() as u64;
    let best = &pop.members()[pop.best_index()];
    Ok(RunTrace {
        algorithm: Algorithm::Hdea,
        pop_size: config.pop_size,
        generations: config.generations,
        evaluations: evaluator.count(),
        initial_evaluations,
        history,
        final_best: best.fitness(),
        best: BestGenomes::Diploid(best.genome_a().clone(), best.genome_b().clone()),
        diploid_checks,
        diploid_violations,
    })
}

fn run_hea<P: Problem, R: Rng + ?Sized>(
    config: &EvolutionConfig,
    problem: &P,
    rng: &mut R,
) -> Result<RunTrace<P::Genome>> {
    let mut evaluator = Evaluator::new(problem);
    let mut pop = init_haploids(config.pop_size, &mut evaluator, rng)?;
    let initial_evaluations = evaluator.count();
    let interval = config.history_interval();
    let mut history = Vec::new();
    record(&mut history, 0, &pop);
    for generation in 1..=config.generations {
        hea_generation(
            &mut pop,
            &mut evaluator,
            config.variation,
            config.replacement,
            rng,
        )?;
        if generation % interval == 0 || generation == config.generations {
            record(&mut history, generation, &pop);
        }
    }
    let best = &pop.members()[pop.best_index()];
    Ok(RunTrace {
        algorithm: Algorithm::Hea,
        pop_size: config.pop_size,
        generations: config.generations,
        evaluations: evaluator.count(),
        initial_evaluations,
        history,
        final_best: best.fitness,
        best: BestGenomes::Haploid(best.genome.clone()),
        diploid_checks: 0,
        diploid_violations: 0,
    })
}
