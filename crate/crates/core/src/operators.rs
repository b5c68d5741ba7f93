//! Variation operators and diploid gametogenesis.

use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nk::BitGenome;
use crate::rbn::RbnGenome;

/// A haploid genome that the variation operators can act on.
///
/// Loci are the atomic alleles: bits for [`BitGenome`], whole nodes for
/// [`RbnGenome`] (crossover never cuts inside a node).
pub trait Genome: Clone + PartialEq + Debug + Send + Sync {
    fn locus_count(&self) -> usize;

    /// Mutates a single locus in place.
    fn mutate_locus<R: Rng + ?Sized>(&mut self, locus: usize, rng: &mut R);

    /// Children `(self[..cut] + other[cut..], other[..cut] + self[cut..])`.
    fn crossover_at(&self, other: &Self, cut: usize) -> (Self, Self);
}

impl Genome for BitGenome {
    fn locus_count(&self) -> usize {
        self.len()
    }

    fn mutate_locus<R: Rng + ?Sized>(&mut self, locus: usize, _rng: &mut R) {
        self.flip(locus);
    }

    fn crossover_at(&self, other: &Self, cut: usize) -> (Self, Self) {
        let (a, b) = (self.bits(), other.bits());
        let c1 = a[..cut].iter().chain(&b[cut..]).copied().collect();
        let c2 = b[..cut].iter().chain(&a[cut..]).copied().collect();
        (BitGenome::new(c1), BitGenome::new(c2))
    }
}

impl Genome for RbnGenome {
    fn locus_count(&self) -> usize {
        self.r()
    }

    /// Flips one truth-table bit or rewires one input, with equal probability.
    fn mutate_locus<R: Rng + ?Sized>(&mut self, locus: usize, rng: &mut R) {
        let r = self.r();
        let node = &mut self.nodes_mut()[locus];
        if rng.gen_bool(0.5) {
            let bit = rng.gen_range(0..node.function.len());
            node.function[bit] = !node.function[bit];
        } else {
            let input = rng.gen_range(0..node.inputs.len());
            node.inputs[input] = rng.gen_range(0..r);
        }
    }

    fn crossover_at(&self, other: &Self, cut: usize) -> (Self, Self) {
        let (a, b) = (self.nodes(), other.nodes());
        let c1 = a[..cut].iter().chain(&b[cut..]).cloned().collect();
        let c2 = b[..cut].iter().chain(&a[cut..]).cloned().collect();
        // Both parents share b and r, so the children are well formed.
        (
            RbnGenome::new(self.b(), c1).expect("crossover of compatible networks"),
            RbnGenome::new(self.b(), c2).expect("crossover of compatible networks"),
        )
    }
}

/// How mutation is applied to each genome copy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationMode {
    /// Exactly one uniformly chosen locus per copy (rate 1/L as a fixed count).
    #[default]
    OneLocus,
    /// Each locus independently with probability 1/L.
    PerLocus,
    Off,
}

impl MutationMode {
    pub fn apply<G: Genome, R: Rng + ?Sized>(self, genome: &mut G, rng: &mut R) {
        let len = genome.locus_count();
        if len == 0 {
            return;
        }
        match self {
            MutationMode::OneLocus => {
                let locus = rng.gen_range(0..len);
                genome.mutate_locus(locus, rng);
            }
            MutationMode::PerLocus => {
                let p = 1.0 / len as f64;
                for locus in 0..len {
                    if rng.gen_bool(p) {
                        genome.mutate_locus(locus, rng);
                    }
                }
            }
            MutationMode::Off => {}
        }
    }
}

/// Variation settings shared by both algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variation {
    pub mutation: MutationMode,
    pub crossover: bool,
}

impl Default for Variation {
    fn default() -> Self {
        Variation {
            mutation: MutationMode::OneLocus,
            crossover: true,
        }
    }
}

/// Copy of `genome` with exactly one bit flipped.
pub fn mutate_bit<R: Rng + ?Sized>(genome: &BitGenome, rng: &mut R) -> BitGenome {
    let mut out = genome.clone();
    MutationMode::OneLocus.apply(&mut out, rng);
    out
}

/// Copy of `genome` with one node mutated: either one truth-table bit flipped
/// or one input redrawn uniformly (possibly to its old value).
pub fn mutate_rbn<R: Rng + ?Sized>(genome: &RbnGenome, rng: &mut R) -> RbnGenome {
    let mut out = genome.clone();
    MutationMode::OneLocus.apply(&mut out, rng);
    out
}

/// One-point crossover with the cut drawn uniformly from `[1, L-1]`.
pub fn crossover_one_point<G: Genome, R: Rng + ?Sized>(
    parent1: &G,
    parent2: &G,
    rng: &mut R,
) -> Result<(G, G)> {
    let len = parent1.locus_count();
    if len != parent2.locus_count() {
        return Err(Error::param(
            "parents",
            format!("locus counts differ ({len} vs {})", parent2.locus_count()),
        ));
    }
    if len < 2 {
        return Err(Error::param("parents", "crossover needs at least two loci"));
    }
    let cut = rng.gen_range(1..len);
    Ok(parent1.crossover_at(parent2, cut))
}

/// A diploid individual: two haploid genomes and their averaged fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Diploid<G> {
    genome_a: G,
    genome_b: G,
    fitness_a: f64,
    fitness_b: f64,
    fitness: f64,
}

impl<G: Genome> Diploid<G> {
    pub fn new(genome_a: G, fitness_a: f64, genome_b: G, fitness_b: f64) -> Result<Self> {
        if genome_a.locus_count() != genome_b.locus_count() {
            return Err(Error::param(
                "diploid",
                format!(
                    "haploids differ in size ({} vs {})",
                    genome_a.locus_count(),
                    genome_b.locus_count()
                ),
            ));
        }
        Ok(Diploid {
            genome_a,
            genome_b,
            fitness_a,
            fitness_b,
            fitness: (fitness_a + fitness_b) / 2.0,
        })
    }

    pub fn genome_a(&self) -> &G {
        &self.genome_a
    }

    pub fn genome_b(&self) -> &G {
        &self.genome_b
    }

    pub fn fitness_a(&self) -> f64 {
        self.fitness_a
    }

    pub fn fitness_b(&self) -> f64 {
        self.fitness_b
    }

    /// Composite fitness, the mean of the two haploid fitnesses.
    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    /// Re-checks the averaging invariant with the half-sum formulation.
    pub fn is_consistent(&self) -> bool {
        self.fitness == 0.5 * self.fitness_a + 0.5 * self.fitness_b
            && self.genome_a.locus_count() == self.genome_b.locus_count()
    }
}

/// The four pre-selection gamete candidates: copies of A and B and the two
/// non-sister recombinants. Without crossover the recombinants are plain copies.
pub fn gamete_candidates<G: Genome, R: Rng + ?Sized>(
    parent: &Diploid<G>,
    crossover: bool,
    rng: &mut R,
) -> [G; 4] {
    let a = parent.genome_a().clone();
    let b = parent.genome_b().clone();
    let (c1, c2) = if crossover && a.locus_count() >= 2 {
        crossover_one_point(&a, &b, rng).expect("diploid haploids share dimensions")
    } else {
        (a.clone(), b.clone())
    };
    [a, b, c1, c2]
}

/// Produces one haploid gamete from a diploid parent.
///
/// Both genomes are copied, one copy of each is recombined at a shared cut,
/// all four genomes are mutated, and one is returned uniformly at random.
pub fn gametogenesis<G: Genome, R: Rng + ?Sized>(
    parent: &Diploid<G>,
    variation: Variation,
    rng: &mut R,
) -> G {
    let mut candidates = gamete_candidates(parent, variation.crossover, rng);
    for genome in candidates.iter_mut() {
        variation.mutation.apply(genome, rng);
    }
    let pick = rng.gen_range(0..4);
    candidates.into_iter().nth(pick).expect("four candidates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbn::generate_rbn;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitGenome {
        s.parse().unwrap()
    }

    #[test]
    fn mutate_bit_flips_each_locus_equally_often() {
        let mut rng = rng_from_seed(1);
        let zero = bits("0000");
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            let m = mutate_bit(&zero, &mut rng);
            assert_eq!(m.hamming(&zero), 1);
            counts[m.bits().iter().position(|&b| b).unwrap()] += 1;
        }
        for c in counts {
            assert!((9_500..=10_500).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn mutate_bit_is_reproducible() {
        let g = bits("0101100111");
        assert_eq!(
            mutate_bit(&g, &mut rng_from_seed(3)),
            mutate_bit(&g, &mut rng_from_seed(3))
        );
    }

    #[test]
    fn mutate_rbn_touches_one_node() {
        let mut rng = rng_from_seed(2);
        let g = generate_rbn(30, 2, 5).unwrap();
        let (mut function_hits, mut wiring_hits) = (0, 0);
        for _ in 0..2_000 {
            let m = mutate_rbn(&g, &mut rng);
            let changed: Vec<_> = (0..30).filter(|&i| g.nodes()[i] != m.nodes()[i]).collect();
            assert!(changed.len() <= 1);
            for i in changed {
                let (old, new) = (&g.nodes()[i], &m.nodes()[i]);
                if old.inputs == new.inputs {
                    let d = old
                        .function
                        .iter()
                        .zip(&new.function)
                        .filter(|(a, b)| a != b)
                        .count();
                    assert_eq!(d, 1);
                    function_hits += 1;
                } else {
                    assert_eq!(old.function, new.function);
                    let d = old
                        .inputs
                        .iter()
                        .zip(&new.inputs)
                        .filter(|(a, b)| a != b)
                        .count();
                    assert_eq!(d, 1);
                    wiring_hits += 1;
                }
            }
        }
        // Rewiring to the same index (p = 1/30) shows up as no change.
        assert!(
            function_hits > 900 && wiring_hits > 850,
            "{function_hits} {wiring_hits}"
        );
    }

    #[test]
    fn crossover_at_cut_two() {
        let (c1, c2) = bits("0000").crossover_at(&bits("1111"), 2);
        assert_eq!(c1, bits("0011"));
        assert_eq!(c2, bits("1100"));
    }

    #[test]
    fn crossover_needs_two_loci() {
        let mut rng = rng_from_seed(0);
        assert!(crossover_one_point(&bits("1"), &bits("0"), &mut rng).is_err());
        assert!(crossover_one_point(&bits("10"), &bits("011"), &mut rng).is_err());
    }

    #[test]
    fn rbn_crossover_cuts_between_nodes() {
        let a = generate_rbn(8, 2, 1).unwrap();
        let b = generate_rbn(8, 2, 2).unwrap();
        let (c1, c2) = a.crossover_at(&b, 3);
        assert_eq!(&c1.nodes()[..3], &a.nodes()[..3]);
        assert_eq!(&c1.nodes()[3..], &b.nodes()[3..]);
        assert_eq!(&c2.nodes()[..3], &b.nodes()[..3]);
        assert_eq!(&c2.nodes()[3..], &a.nodes()[3..]);
    }

    #[test]
    fn diploid_fitness_is_the_mean() {
        let d = Diploid::new(bits("01"), 0.3, bits("10"), 0.6).unwrap();
        assert_eq!(d.fitness(), (0.3 + 0.6) / 2.0);
        assert!(d.is_consistent());
        assert!(Diploid::new(bits("01"), 0.3, bits("100"), 0.6).is_err());
    }

    #[test]
    fn homozygous_parent_without_mutation_yields_itself() {
        let a = bits("0110100111");
        let parent = Diploid::new(a.clone(), 0.5, a.clone(), 0.5).unwrap();
        let v = Variation {
            mutation: MutationMode::Off,
            crossover: true,
        };
        let mut rng = rng_from_seed(8);
        for _ in 0..500 {
            assert_eq!(gametogenesis(&parent, v, &mut rng), a);
        }
    }

    #[test]
    fn without_crossover_gametes_are_mutated_parents() {
        let a = bits("0000000000");
        let b = bits("1111111111");
        let parent = Diploid::new(a.clone(), 0.0, b.clone(), 0.0).unwrap();
        let v = Variation {
            mutation: MutationMode::OneLocus,
            crossover: false,
        };
        let mut rng = rng_from_seed(8);
        for _ in 0..500 {
            let g = gametogenesis(&parent, v, &mut rng);
            assert!(g.hamming(&a) == 1 || g.hamming(&b) == 1);
        }
    }

    #[test]
    fn per_locus_mutation_rate() {
        let mut rng = rng_from_seed(4);
        let g = BitGenome::zeros(50);
        let total: usize = (0..4_000)
            .map(|_| {
                let mut m = g.clone();
                MutationMode::PerLocus.apply(&mut m, &mut rng);
                m.hamming(&g)
            })
            .sum();
        let mean = total as f64 / 4_000.0;
        assert!((mean - 1.0).abs() < 0.06, "{mean}");
    }

    fn genome_pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn crossover_conserves_alleles_per_position((a, b) in genome_pair(), seed in any::<u64>()) {
            let (pa, pb) = (BitGenome::new(a), BitGenome::new(b));
            let (c1, c2) = crossover_one_point(&pa, &pb, &mut rng_from_seed(seed)).unwrap();
            for i in 0..pa.len() {
                let mut parents = [pa.get(i), pb.get(i)];
                let mut children = [c1.get(i), c2.get(i)];
                parents.sort();
                children.sort();
                prop_assert_eq!(parents, children);
            }
        }

        #[test]
        fn crossover_of_identical_parents_is_identity((a, _) in genome_pair(), seed in any::<u64>()) {
            let p = BitGenome::new(a);
            let (c1, c2) = crossover_one_point(&p, &p, &mut rng_from_seed(seed)).unwrap();
            prop_assert_eq!(&c1, &p);
            prop_assert_eq!(&c2, &p);
        }

        #[test]
        fn gamete_is_one_flip_from_a_candidate((a, b) in genome_pair(), seed in any::<u64>()) {
            let parent = Diploid::new(BitGenome::new(a), 0.0, BitGenome::new(b), 0.0).unwrap();
            let candidates = gamete_candidates(&parent, true, &mut rng_from_seed(seed));
            let gamete = gametogenesis(&parent, Variation::default(), &mut rng_from_seed(seed));
            prop_assert!(candidates.iter().any(|c| c.hamming(&gamete) == 1));
        }
    }
}
