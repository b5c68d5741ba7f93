//! NK fitness landscapes.
//!
//! Each of the `n` loci contributes a value looked up from its own table of
//! `2^(k+1)` entries. The lookup index is built from the locus' own allele
//! (most significant bit) followed by the alleles of its `k` neighbours in
//! stored order. Fitness is the mean contribution.

use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Largest `n` accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Binary genome; one allele per locus.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitGenome {
    bits: Vec<bool>,
}

impl BitGenome {
    pub fn new(bits: Vec<bool>) -> Self {
        BitGenome { bits }
    }

    pub fn zeros(n: usize) -> Self {
        BitGenome {
            bits: vec![false; n],
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        BitGenome {
            bits: (0..n).map(|_| rng.gen()).collect(),
        }
    }

    /// Genome whose bit string, read with locus 0 as the most significant bit, equals `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        BitGenome {
            bits: (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect(),
        }
    }

    /// Inverse of [`BitGenome::from_index`]. Only meaningful for `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, locus: usize) -> bool {
        self.bits[locus]
    }

    pub fn set(&mut self, locus: usize, value: bool) {
        self.bits[locus] = value;
    }

    pub fn flip(&mut self, locus: usize) {
        self.bits[locus] = !self.bits[locus];
    }

    pub fn hamming(&self, other: &BitGenome) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
            + self.len().abs_diff(other.len())
    }

    pub(crate) fn bits_mut(&mut self) -> &mut Vec<bool> {
        &mut self.bits
    }
}

impl fmt::Debug for BitGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitGenome({self})")
    }
}

impl fmt::Display for BitGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitGenome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::format("bit string", format!("unexpected {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitGenome::new)
    }
}

/// An NK landscape. Immutable once built.
#[derive(Clone, PartialEq)]
pub struct NkLandscape {
    n: usize,
    k: usize,
    seed: u64,
    // Row-major, n rows of k entries.
    neighbors: Vec<usize>,
    // Row-major, n rows of 2^(k+1) entries.
    tables: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NkFile {
    n: usize,
    k: usize,
    seed: u64,
    neighbors: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl NkLandscape {
    /// Builds a landscape from explicit rows, checking every invariant.
    pub fn from_parts(
        n: usize,
        k: usize,
        seed: u64,
        neighbors: Vec<Vec<usize>>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_dimensions(n, k)?;
        if neighbors.len() != n {
            return Err(Error::param(
                "neighbors",
                format!("expected {n} rows, got {}", neighbors.len()),
            ));
        }
        if tables.len() != n {
            return Err(Error::param(
                "tables",
                format!("expected {n} rows, got {}", tables.len()),
            ));
        }
        let width = 1usize << (k + 1);
        for (i, row) in neighbors.iter().enumerate() {
            if row.len() != k {
                return Err(Error::param(
                    "neighbors",
                    format!("row {i} has {} entries, expected {k}", row.len()),
                ));
            }
            for (j, &nb) in row.iter().enumerate() {
                if nb >= n || nb == i || row[..j].contains(&nb) {
                    return Err(Error::param(
                        "neighbors",
                        format!("row {i} entry {nb} must be distinct, in [0, {n}) and not {i}"),
                    ));
                }
            }
        }
        for (i, row) in tables.iter().enumerate() {
            if row.len() != width {
                return Err(Error::param(
                    "tables",
                    format!("row {i} has {} entries, expected {width}", row.len()),
                ));
            }
            if let Some(bad) = row.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                return Err(Error::param(
                    "tables",
                    format!("row {i} entry {bad} outside [0, 1]"),
                ));
            }
        }
        Ok(NkLandscape {
            n,
            k,
            seed,
            neighbors: neighbors.into_iter().flatten().collect(),
            tables: tables.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn table_width(&self) -> usize {
        1 << (self.k + 1)
    }

    pub fn neighbors(&self, locus: usize) -> &[usize] {
        &self.neighbors[locus * self.k..(locus + 1) * self.k]
    }

    pub fn table(&self, locus: usize) -> &[f64] {
        let w = self.table_width();
        &self.tables[locus * w..(locus + 1) * w]
    }

    /// Table index used by `locus` for the given genome.
    pub fn table_index(&self, locus: usize, genome: &[bool]) -> usize {
        self.neighbors(locus)
            .iter()
            .fold(genome[locus] as usize, |idx, &nb| {
                (idx << 1) | genome[nb] as usize
            })
    }

    /// Fitness contribution of a single locus.
    pub fn contribution(&self, locus: usize, genome: &[bool]) -> f64 {
        self.table(locus)[self.table_index(locus, genome)]
    }

    /// Evaluates a raw allele slice. The caller guarantees `genome.len() == n`.
    pub(crate) fn evaluate_bits(&self, genome: &[bool]) -> f64 {
        debug_assert_eq!(genome.len(), self.n);
        let sum: f64 = (0..self.n).map(|i| self.contribution(i, genome)).sum();
        sum / self.n as f64
    }

    pub fn to_json(&self) -> String {
        let file = NkFile {
            n: self.n,
            k: self.k,
            seed: self.seed,
            neighbors: (0..self.n).map(|i| self.neighbors(i).to_vec()).collect(),
            tables: (0..self.n).map(|i| self.table(i).to_vec()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("landscape serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NkFile =
            serde_json::from_str(text).map_err(|e| Error::format("NK landscape", e))?;
        NkLandscape::from_parts(file.n, file.k, file.seed, file.neighbors, file.tables)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NkLandscape::from_json(&text)
    }
}

impl fmt::Debug for NkLandscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NkLandscape")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

fn check_dimensions(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if k > n - 1 {
        return Err(Error::param(
            "k",
            format!("must satisfy k <= n-1 = {}", n - 1),
        ));
    }
    // Keeps table allocation sane.
    if k >= 30 {
        return Err(Error::param(
            "k",
            "tables of 2^(k+1) entries are too large for k >= 30",
        ));
    }
    Ok(())
}

/// Generates an NK landscape. Neighbours are sampled without replacement from
/// the other `n - 1` loci; table entries are uniform on `[0, 1)`.
pub fn generate_nk(n: usize, k: usize, seed: u64) -> Result<NkLandscape> {
    check_dimensions(n, k)?;
    let mut rng = rng_from_seed(seed);
    let mut neighbors = Vec::with_capacity(n * k);
    for i in 0..n {
        neighbors.extend(index::sample(&mut rng, n - 1, k).into_iter().map(|j| {
            if j < i {
                j
            } else {
                j + 1
            }
        }));
    }
    let width = 1usize << (k + 1);
    let tables = (0..n * width).map(|_| rng.gen::<f64>()).collect();
    Ok(NkLandscape {
        n,
        k,
        seed,
        neighbors,
        tables,
    })
}

pub fn evaluate_nk(landscape: &NkLandscape, genome: &BitGenome) -> Result<f64> {
    if genome.len() != landscape.n() {
        return Err(Error::param(
            "genome",
            format!(
                "length {} does not match n = {}",
                genome.len(),
                landscape.n()
            ),
        ));
    }
    Ok(landscape.evaluate_bits(genome.bits()))
}

/// Exhaustively finds a globally optimal genome. Ties go to the
/// lexicographically smallest bit string.
pub fn brute_force_optimum(landscape: &NkLandscape) -> Result<(BitGenome, f64)> {
    let n = landscape.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Refused(format!(
            "brute force over 2^{n} genomes (limit n <= {BRUTE_FORCE_MAX_N})"
        )));
    }
    let mut best_index = 0u64;
    let mut best = f64::NEG_INFINITY;
    let mut genome = BitGenome::zeros(n);
    for index in 0..(1u64 << n) {
        for (i, bit) in genome.bits_mut().iter_mut().enumerate() {
            *bit = (index >> (n - 1 - i)) & 1 == 1;
        }
        let f = landscape.evaluate_bits(genome.bits());
        if f > best {
            best = f;
            best_index = index;
        }
    }
    Ok((BitGenome::from_index(n, best_index), best))
}
