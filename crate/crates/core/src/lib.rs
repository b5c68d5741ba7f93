//! Haploid-diploid evolutionary algorithms on tuneable fitness landscapes.
//!
//! The crate is organised bottom-up:
//!
//! - [`nk`]: NK landscapes, binary genomes and a brute-force optimum oracle.
//! - [`rbn`]: random Boolean networks and RBNK fitness (trait nodes scored on an NK landscape).
//! - [`operators`]: mutation, one-point crossover and diploid gametogenesis.
//! - [`evolution`]: steady-state loops for the haploid baseline (H-EA) and the
//!   haploid-diploid algorithm (HD-EA).
//! - [`harness`]: replicated experiment grids, summaries and the effective-landscape diagnostic.
//! - [`stats`]: Welch's t-test on top of the regularized incomplete beta function.

pub mod error;
pub mod evolution;
pub mod harness;
pub mod nk;
pub mod operators;
pub mod rbn;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use evolution::{
    Algorithm, BestGenomes, EvolutionConfig, Haploid, Population, Problem, ReplacementPolicy,
    RunTrace,
};
pub use harness::{
    effective_landscape, run_experiment, summarize, ComparisonSummary, ExperimentConfig, RunRecord,
    Task,
};
pub use nk::{brute_force_optimum, evaluate_nk, generate_nk, BitGenome, NkLandscape};
pub use operators::{
    crossover_one_point, gametogenesis, mutate_bit, mutate_rbn, Diploid, Genome, MutationMode,
    Variation,
};
pub use rbn::{
    assign_traits, evaluate_rbnk, generate_rbn, run_for, step, NetworkState, RbnGenome, RbnNode,
    TraitMap,
};
pub use stats::{welch_t_test, WelchTest};
