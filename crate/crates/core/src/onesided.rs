//! The deterministic threshold mechanism `f_t` and its randomized mixture
//! `R_t` for one-sided matching.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::bipartite::{max_weight_matching, BipartiteMatching, Edge, WeightedBipartiteGraph};
use crate::error::{Error, Result};
use crate::model::{Matching, OneSidedInput, ThresholdVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Randomized,
}

/// Thresholds `tau_k = delta^-k` plus the randomization mode and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismConfig {
    pub t: usize,
    pub delta: f64,
    pub taus: ThresholdVector,
    pub mode: Mode,
    pub seed: u64,
}

impl MechanismConfig {
    pub fn new(t: usize, delta: f64, mode: Mode, seed: u64) -> Result<Self> {
        let taus = ThresholdVector::geometric(delta, t)?;
        Ok(Self {
            t,
            delta,
            taus,
            mode,
            seed,
        })
    }

    /// `f_t` with `delta = (2n)^(1/t)`.
    pub fn deterministic(n: usize, t: usize) -> Result<Self> {
        Self::new(t, default_ft_delta(n, t), Mode::Deterministic, 0)
    }

    /// `R_t` with `delta = n^(1/(t+1))`.
    pub fn randomized(n: usize, t: usize, seed: u64) -> Result<Self> {
        Self::new(t, default_rt_delta(n, t), Mode::Randomized, seed)
    }
}

pub fn default_ft_delta(n: usize, t: usize) -> f64 {
    (2.0 * n as f64).powf(1.0 / t as f64)
}

pub fn default_rt_delta(n: usize, t: usize) -> f64 {
    (n as f64).powf(1.0 / (t as f64 + 1.0))
}

fn check_input(input: &OneSidedInput, config: &MechanismConfig) -> Result<usize> {
    if !input.taus().approx_eq(&config.taus, 1e-12) {
        return Err(Error::ThresholdMismatch);
    }
    let n = input.agents();
    if n == 0 {
        return Err(Error::Dimension("no agents".into()));
    }
    input.check_items(n)?;
    Ok(n)
}

/// `G_S`: an edge `(v_i, z_a)` of weight `tau_k` for every `a` in `S_{i,k}`.
pub fn build_threshold_graph(input: &OneSidedInput) -> WeightedBipartiteGraph {
    let n = input.agents();
    let taus = input.taus();
    let edges = (0..n)
        .flat_map(|i| {
            input.approvals(i).map(move |(k, a)| Edge {
                left: i,
                right: a,
                weight: taus.tau(k),
            })
        })
        .collect();
    WeightedBipartiteGraph::new(n, n, edges).expect("approval sets are disjoint and positive")
}

/// Extends a partial matching to a bijection: unmatched agents, ascending,
/// take unmatched items, ascending.
fn complete(n: usize, partial: &BipartiteMatching) -> Matching {
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for &(i, a) in &partial.pairs {
        assign[i] = a;
        taken[a] = true;
    }
    let mut free = (0..n).filter(|&a| !taken[a]);
    for slot in assign.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = free.next().expect("as many free items as free agents");
    }
    Matching::new(assign).expect("completion yields a bijection")
}

/// Runs `f_t`; also returns the max-weight matching of `G_S` it is built on.
pub fn run_ft_detailed(
    input: &OneSidedInput,
    config: &MechanismConfig,
) -> Result<(Matching, BipartiteMatching)> {
    let n = check_input(input, config)?;
    let partial = max_weight_matching(&build_threshold_graph(input));
    Ok((complete(n, &partial), partial))
}

pub fn run_ft(input: &OneSidedInput, config: &MechanismConfig) -> Result<Matching> {
    run_ft_detailed(input, config).map(|(m, _)| m)
}

/// Total `G_S` weight of the pairs a matching uses.
pub fn threshold_weight(input: &OneSidedInput, matching: &Matching) -> f64 {
    let taus = input.taus();
    (0..matching.n())
        .filter_map(|i| input.level_of(i, &matching.item_of(i)).map(|k| taus.tau(k)))
        .sum()
}

/// Uniformly random bijection on `n` agents (Fisher-Yates).
pub fn uniform_matching<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matching {
    let mut assign: Vec<usize> = (0..n).collect();
    assign.shuffle(rng);
    Matching::new(assign).expect("a permutation")
}

/// Samples `R_t`: a fair coin chooses between a uniform matching and `f_t`.
pub fn run_rt<R: RngCore + ?Sized>(
    input: &OneSidedInput,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<Matching> {
    let n = check_input(input, config)?;
    if rng.gen_bool(0.5) {
        Ok(uniform_matching(n, rng))
    } else {
        run_ft(input, config)
    }
}

/// Exact assignment probabilities of `R_t`:
/// `p(i, a) = 1/(2n) + [f_t gives a to i] / 2`.
pub fn rt_distribution(input: &OneSidedInput, config: &MechanismConfig) -> Result<Vec<Vec<f64>>> {
    let det = run_ft(input, config)?;
    let n = det.n();
    let base = 0.5 / n as f64;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|a| {
                    if det.item_of(i) == a {
                        base + 0.5
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect())
}

/// 0/1 assignment matrix of a deterministic matching.
pub fn indicator(matching: &Matching) -> Vec<Vec<f64>> {
    let n = matching.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|a| if matching.item_of(i) == a { 1.0 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// A one-sided mechanism that can be sampled.
pub trait MatchingMechanism: Sync {
    fn sample(&self, input: &OneSidedInput, rng: &mut dyn RngCore) -> Result<Matching>;
}

/// `f_t` or `R_t`, depending on the config's mode.
#[derive(Debug, Clone)]
pub struct ThresholdMechanism {
    pub config: MechanismConfig,
}

impl MatchingMechanism for ThresholdMechanism {
    fn sample(&self, input: &OneSidedInput, rng: &mut dyn RngCore) -> Result<Matching> {
        match self.config.mode {
            Mode::Deterministic => run_ft(input, &self.config),
            Mode::Randomized => run_rt(input, &self.config, rng),
        }
    }
}

/// Ignores the input and returns a uniform matching.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformMechanism;

impl MatchingMechanism for UniformMechanism {
    fn sample(&self, input: &OneSidedInput, rng: &mut dyn RngCore) -> Result<Matching> {
        Ok(uniform_matching(input.agents(), rng))
    }
}
