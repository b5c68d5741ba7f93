//! Random Boolean networks and the RBNK fitness model.
//!
//! Node indices are 0-based everywhere, including the network file format.
//! A node's truth table is indexed by the states of its inputs in stored
//! order, first input as the most significant bit.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nk::NkLandscape;
use crate::seed::rng_from_seed;

/// Upper bound on connections per node; truth tables hold `2^b` bits.
pub const MAX_CONNECTIONS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RbnNode {
    pub inputs: Vec<usize>,
    pub function: Vec<bool>,
}

impl RbnNode {
    pub fn random<R: Rng + ?Sized>(r: usize, b: usize, rng: &mut R) -> Self {
        RbnNode {
            inputs: (0..b).map(|_| rng.gen_range(0..r)).collect(),
            function: (0..1usize << b).map(|_| rng.gen()).collect(),
        }
    }

    #[inline]
    fn output(&self, state: &[bool]) -> bool {
        let idx = self
            .inputs
            .iter()
            .fold(0usize, |idx, &src| (idx << 1) | state[src] as usize);
        self.function[idx]
    }
}

/// An R-node network with B inputs per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RbnGenome {
    b: usize,
    nodes: Vec<RbnNode>,
}

impl RbnGenome {
    pub fn new(b: usize, nodes: Vec<RbnNode>) -> Result<Self> {
        let r = nodes.len();
        if r == 0 {
            return Err(Error::param("r", "network needs at least one node"));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.inputs.len() != b {
                return Err(Error::param(
                    "nodes",
                    format!("node {i} has {} inputs, expected {b}", node.inputs.len()),
                ));
            }
            if node.function.len() != 1 << b {
                return Err(Error::param(
                    "nodes",
                    format!(
                        "node {i} has {} function bits, expected {}",
                        node.function.len(),
                        1 << b
                    ),
                ));
            }
            if let Some(&bad) = node.inputs.iter().find(|&&src| src >= r) {
                return Err(Error::param(
                    "nodes",
                    format!("node {i} input {bad} outside [0, {r})"),
                ));
            }
        }
        Ok(RbnGenome { b, nodes })
    }

    pub fn random<R: Rng + ?Sized>(r: usize, b: usize, rng: &mut R) -> Self {
        RbnGenome {
            b,
            nodes: (0..r).map(|_| RbnNode::random(r, b, rng)).collect(),
        }
    }

    pub fn r(&self) -> usize {
        self.nodes.len()
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn nodes(&self) -> &[RbnNode] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<RbnNode> {
        &mut self.nodes
    }

    /// Writes the synchronous successor of `current` into `next`.
    pub fn step_into(&self, current: &[bool], next: &mut [bool]) {
        assert_eq!(current.len(), self.r(), "state length must equal R");
        for (out, node) in next.iter_mut().zip(&self.nodes) {
            *out = node.output(current);
        }
    }

    pub fn to_json(&self) -> String {
        let file = RbnFile {
            r: self.r(),
            b: self.b,
            indexing: "zero-based".into(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeFile {
                    inputs: n.inputs.clone(),
                    function: n
                        .function
                        .iter()
                        .map(|&b| if b { '1' } else { '0' })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RbnFile = serde_json::from_str(text).map_err(|e| Error::format("network", e))?;
        if file.indexing != "zero-based" {
            return Err(Error::format(
                "network",
                format!("unsupported indexing {:?}", file.indexing),
            ));
        }
        let nodes = file
            .nodes
            .into_iter()
            .map(|n| {
                let function = n
                    .function
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::format(
                            "network",
                            format!("bad function bit {other:?}"),
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(RbnNode {
                    inputs: n.inputs,
                    function,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if nodes.len() != file.r {
            return Err(Error::format(
                "network",
                format!("declared r = {} but {} nodes listed", file.r, nodes.len()),
            ));
        }
        RbnGenome::new(file.b, nodes)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RbnGenome::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct RbnFile {
    r: usize,
    b: usize,
    indexing: String,
    nodes: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    inputs: Vec<usize>,
    function: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetworkState {
    pub bits: Vec<bool>,
}

impl NetworkState {
    pub fn new(bits: Vec<bool>) -> Self {
        NetworkState { bits }
    }

    pub fn random<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Self {
        NetworkState {
            bits: (0..r).map(|_| rng.gen()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Which network nodes are read out as the N phenotypic traits, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitMap {
    r: usize,
    seed: u64,
    trait_nodes: Vec<usize>,
}

impl TraitMap {
    pub fn new(r: usize, seed: u64, trait_nodes: Vec<usize>) -> Result<Self> {
        if trait_nodes.len() > r {
            return Err(Error::param(
                "n",
                format!("{} traits exceed r = {r}", trait_nodes.len()),
            ));
        }
        for (i, &node) in trait_nodes.iter().enumerate() {
            if node >= r || trait_nodes[..i].contains(&node) {
                return Err(Error::param(
                    "trait_nodes",
                    format!("entry {node} must be distinct and in [0, {r})"),
                ));
            }
        }
        Ok(TraitMap {
            r,
            seed,
            trait_nodes,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nodes(&self) -> &[usize] {
        &self.trait_nodes
    }

    pub fn len(&self) -> usize {
        self.trait_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trait_nodes.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trait map serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TraitMap =
            serde_json::from_str(text).map_err(|e| Error::format("trait map", e))?;
        TraitMap::new(raw.r, raw.seed, raw.trait_nodes)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TraitMap::from_json(&text)
    }
}

pub(crate) fn check_network_shape(r: usize, b: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::param("r", "must be positive"));
    }
    if b == 0 {
        return Err(Error::param("b", "must be positive"));
    }
    if b > r {
        return Err(Error::param("b", format!("must satisfy b <= r = {r}")));
    }
    if b > MAX_CONNECTIONS {
        return Err(Error::param(
            "b",
            format!("at most {MAX_CONNECTIONS} connections per node"),
        ));
    }
    Ok(())
}

/// Random network: inputs uniform with replacement over all nodes (self
/// connections allowed), truth-table bits uniform.
pub fn generate_rbn(r: usize, b: usize, seed: u64) -> Result<RbnGenome> {
    check_network_shape(r, b)?;
    Ok(RbnGenome::random(r, b, &mut rng_from_seed(seed)))
}

pub fn step(genome: &RbnGenome, state: &NetworkState) -> NetworkState {
    let mut next = vec![false; genome.r()];
    genome.step_into(&state.bits, &mut next);
    NetworkState { bits: next }
}

/// Applies `t` synchronous updates.
pub fn run_for(genome: &RbnGenome, state0: &NetworkState, t: usize) -> NetworkState {
    let mut current = state0.bits.clone();
    let mut next = vec![false; current.len()];
    for _ in 0..t {
        genome.step_into(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    NetworkState { bits: current }
}

/// Picks `n` distinct trait nodes out of `r`.
pub fn assign_traits(r: usize, n: usize, seed: u64) -> Result<TraitMap> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if n > r {
        return Err(Error::param("n", format!("must satisfy n <= r = {r}")));
    }
    let mut rng = rng_from_seed(seed);
    let nodes = index::sample(&mut rng, r, n).into_vec();
    TraitMap::new(r, seed, nodes)
}

fn check_rbnk(
    genome: &RbnGenome,
    landscape: &NkLandscape,
    traits: &TraitMap,
    t: usize,
    trials: usize,
) -> Result<()> {
    if traits.len() != landscape.n() {
        return Err(Error::param(
            "traits",
            format!(
                "{} trait nodes but landscape has n = {}",
                traits.len(),
                landscape.n()
            ),
        ));
    }
    if traits.r() != genome.r() {
        return Err(Error::param(
            "traits",
            format!(
                "trait map built for r = {} but network has r = {}",
                traits.r(),
                genome.r()
            ),
        ));
    }
    if t == 0 {
        return Err(Error::param("t_cycles", "must be positive"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    Ok(())
}

/// Scores each of `trials` random-start simulations: run `t` cycles, read the
/// trait nodes in order, evaluate on the landscape.
pub fn rbnk_trial_scores<R: Rng + ?Sized>(
    genome: &RbnGenome,
    landscape: &NkLandscape,
    traits: &TraitMap,
    t: usize,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_rbnk(genome, landscape, traits, t, trials)?;
    let r = genome.r();
    let mut current = vec![false; r];
    let mut next = vec![false; r];
    let mut readout = vec![false; traits.len()];
    let mut scores = Vec::with_capacity(trials);
    for _ in 0..trials {
        current.iter_mut().for_each(|b| *b = rng.gen());
        for _ in 0..t {
            genome.step_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        for (slot, &node) in readout.iter_mut().zip(traits.nodes()) {
            *slot = current[node];
        }
        scores.push(landscape.evaluate_bits(&readout));
    }
    Ok(scores)
}

/// Mean of [`rbnk_trial_scores`].
pub fn evaluate_rbnk<R: Rng + ?Sized>(
    genome: &RbnGenome,
    landscape: &NkLandscape,
    traits: &TraitMap,
    t: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let scores = rbnk_trial_scores(genome, landscape, traits, t, trials, rng)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nk::{evaluate_nk, generate_nk, BitGenome};

    fn node(inputs: &[usize], function: &str) -> RbnNode {
        RbnNode {
            inputs: inputs.to_vec(),
            function: function.chars().map(|c| c == '1').collect(),
        }
    }

    fn state(s: &str) -> NetworkState {
        NetworkState::new(s.chars().map(|c| c == '1').collect())
    }

    #[test]
    fn single_node_is_self_wired() {
        let g = generate_rbn(1, 1, 1234).unwrap();
        assert_eq!(g.nodes()[0].inputs, vec![0]);
        assert_eq!(g.nodes()[0].function.len(), 2);
    }

    #[test]
    fn generation_shape_and_determinism() {
        let g = generate_rbn(100, 2, 9).unwrap();
        assert_eq!(g.r(), 100);
        assert!(g
            .nodes()
            .iter()
            .all(|n| n.inputs.len() == 2 && n.function.len() == 4));
        assert!(g.nodes().iter().flat_map(|n| &n.inputs).all(|&i| i < 100));
        assert_eq!(g, generate_rbn(100, 2, 9).unwrap());
        assert!(generate_rbn(2, 3, 1).is_err());
    }

    #[test]
    fn constant_zero_network_zeroes_state() {
        let g = RbnGenome::new(
            2,
            vec![
                node(&[1, 2], "0000"),
                node(&[0, 0], "0000"),
                node(&[2, 1], "0000"),
            ],
        )
        .unwrap();
        assert_eq!(step(&g, &state("111")), state("000"));
        assert_eq!(run_for(&g, &state("101"), 50), state("000"));
    }

    #[test]
    fn self_identity_network_is_identity() {
        let g = RbnGenome::new(1, (0..4).map(|i| node(&[i], "01")).collect()).unwrap();
        for s in ["0000", "1010", "1111", "0110"] {
            assert_eq!(step(&g, &state(s)), state(s));
        }
    }

    #[test]
    fn hand_traced_three_node_network() {
        // node0 = AND(n1, n2), node1 = NOT n0 (inputs n0,n0; table 1100 = NOT first),
        // node2 = XOR(n0, n1).
        let g = RbnGenome::new(
            2,
            vec![
                node(&[1, 2], "0001"),
                node(&[0, 0], "1100"),
                node(&[0, 1], "0110"),
            ],
        )
        .unwrap();
        // 011 -> n0 = 1&1 = 1, n1 = !0 = 1, n2 = 0^1 = 1 -> 111
        // 111 -> n0 = 1, n1 = 0, n2 = 0 -> 100
        // 100 -> n0 = 0&0 = 0, n1 = 0, n2 = 1^0 = 1 -> 001
        let s1 = step(&g, &state("011"));
        assert_eq!(s1, state("111"));
        let s2 = step(&g, &s1);
        assert_eq!(s2, state("100"));
        let s3 = step(&g, &s2);
        assert_eq!(s3, state("001"));
        assert_eq!(run_for(&g, &state("011"), 3), s3);
    }

    #[test]
    fn run_for_composes() {
        let g = generate_rbn(12, 2, 4).unwrap();
        let s = NetworkState::random(12, &mut rng_from_seed(5));
        assert_eq!(run_for(&g, &s, 1), step(&g, &s));
        assert_eq!(run_for(&g, &s, 17), run_for(&g, &run_for(&g, &s, 9), 8));
    }

    #[test]
    fn trait_assignment() {
        let t = assign_traits(5, 5, 3).unwrap();
        let mut nodes = t.nodes().to_vec();
        nodes.sort_unstable();
        assert_eq!(nodes, vec![0, 1, 2, 3, 4]);

        let a = assign_traits(100, 50, 2).unwrap();
        assert_eq!(a, assign_traits(100, 50, 2).unwrap());
        let mut nodes = a.nodes().to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        assert_eq!(nodes.len(), 50);
        assert!(assign_traits(4, 5, 1).is_err());
    }

    #[test]
    fn frozen_network_has_zero_trial_variance() {
        // Constant functions: after one step the state is 1,0,1,1,0 whatever the start.
        let funcs = ["1111", "0000", "1111", "1111", "0000"];
        let g = RbnGenome::new(
            2,
            funcs
                .iter()
                .enumerate()
                .map(|(i, f)| node(&[i, (i + 1) % 5], f))
                .collect(),
        )
        .unwrap();
        let landscape = generate_nk(3, 1, 11).unwrap();
        let traits = TraitMap::new(5, 0, vec![4, 0, 3]).unwrap();
        let scores =
            rbnk_trial_scores(&g, &landscape, &traits, 7, 10, &mut rng_from_seed(1)).unwrap();
        let expected = evaluate_nk(&landscape, &"011".parse::<BitGenome>().unwrap()).unwrap();
        assert!(scores.iter().all(|&s| s == expected));
        let mean = evaluate_rbnk(&g, &landscape, &traits, 7, 10, &mut rng_from_seed(2)).unwrap();
        assert!((mean - expected).abs() < 1e-15);
    }

    #[test]
    fn rbnk_is_reproducible_and_bounded() {
        let g = generate_rbn(20, 2, 1).unwrap();
        let landscape = generate_nk(6, 3, 2).unwrap();
        let traits = assign_traits(20, 6, 3).unwrap();
        let a = evaluate_rbnk(&g, &landscape, &traits, 10, 1, &mut rng_from_seed(4)).unwrap();
        let b = evaluate_rbnk(&g, &landscape, &traits, 10, 1, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn rbnk_dimension_mismatch() {
        let g = generate_rbn(20, 2, 1).unwrap();
        let landscape = generate_nk(6, 3, 2).unwrap();
        let traits = assign_traits(20, 5, 3).unwrap();
        assert!(evaluate_rbnk(&g, &landscape, &traits, 10, 1, &mut rng_from_seed(4)).is_err());
        let traits = assign_traits(30, 6, 3).unwrap();
        assert!(evaluate_rbnk(&g, &landscape, &traits, 10, 1, &mut rng_from_seed(4)).is_err());
    }

    #[test]
    fn network_file_round_trip() {
        let g = generate_rbn(9, 3, 77).unwrap();
        assert_eq!(RbnGenome::from_json(&g.to_json()).unwrap(), g);
        let t = assign_traits(9, 4, 1).unwrap();
        assert_eq!(TraitMap::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn network_file_rejects_out_of_range_input() {
        let text =
            r#"{"r":1,"b":1,"indexing":"zero-based","nodes":[{"inputs":[1],"function":"01"}]}"#;
        assert!(RbnGenome::from_json(text).is_err());
    }
}
