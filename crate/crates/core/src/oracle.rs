//! Exact distortion at desk scale.
//!
//! For a fixed alternative `B` the worst consistent utility profile solves
//! `sup N(u) / D(u)` over a product of box-constrained simplices, where `N`
//! is the welfare of `B` and `D` the (expected) welfare of the mechanism.
//! Both are linear, so Dinkelbach iteration with a separable water-filling
//! inner step is exact. The distortion is the maximum over all `B`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bipartite::max_weight_assignment;
use crate::elicitation::CONSISTENCY_SLACK;
use crate::error::{Error, Result};
use crate::generalized::allocation_coefficients;
use crate::model::{
    Allocation, GeneralizedDims, GeneralizedInput, InputProfile, Matching, OneSidedInput,
    UtilityProfile,
};
use crate::onesided::MatchingMechanism;
use crate::sampling::derive_seed;

/// Dinkelbach stops once `max N - lambda D` drops below this.
pub const DINKELBACH_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
/// Largest one-sided instance the oracle enumerates (`n!` alternatives).
pub const MAX_AGENTS: usize = 9;
/// Largest generalized total `T` the oracle enumerates.
pub const MAX_TOTAL: usize = 8;

const ZERO_TOL: f64 = 1e-12;
/// A later alternative replaces the incumbent only if it beats it by this.
const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Closure of the set of utility profiles consistent with an input profile:
/// one interval per agent and slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyBox {
    agents: Vec<Vec<Interval>>,
}

impl ConsistencyBox {
    /// Checks `lo <= hi` everywhere and `sum lo <= 1 <= sum hi` per agent.
    pub fn new(agents: Vec<Vec<Interval>>) -> Result<Self> {
        for (agent, row) in agents.iter().enumerate() {
            if let Some(s) = row.iter().position(|iv| !(iv.lo <= iv.hi) || iv.lo < 0.0) {
                return Err(Error::Precondition(format!(
                    "agent {agent} slot {s}: interval [{}, {}] is empty or negative",
                    row[s].lo, row[s].hi
                )));
            }
            let (lo_sum, hi_sum) = sums(row);
            if lo_sum > 1.0 + CONSISTENCY_SLACK || hi_sum < 1.0 - CONSISTENCY_SLACK {
                return Err(Error::InfeasibleBox {
                    agent,
                    lo_sum,
                    hi_sum,
                });
            }
        }
        Ok(Self { agents })
    }

    fn from_input<K: Ord + Copy + std::fmt::Debug>(
        input: &InputProfile<K>,
        slots: impl Fn(usize) -> Vec<K>,
    ) -> Result<Self> {
        let taus = input.taus();
        let agents = (0..input.agents())
            .map(|i| {
                slots(i)
                    .iter()
                    .map(|s| {
                        let (lo, hi) = taus.interval(input.level_of(i, s));
                        Interval { lo, hi }
                    })
                    .collect()
            })
            .collect();
        Self::new(agents)
    }

    /// Approved at level `k`: `[tau_k, tau_{k-1}]`; unlisted: `[0, tau_t]`.
    pub fn one_sided(input: &OneSidedInput, n_items: usize) -> Result<Self> {
        input.check_items(n_items)?;
        Self::from_input(input, |_| (0..n_items).collect())
    }

    /// Slots follow [`GeneralizedDims::slots`].
    pub fn generalized(input: &GeneralizedInput, dims: &GeneralizedDims) -> Result<Self> {
        input.check_slots(dims)?;
        if input.agents() != dims.n() {
            return Err(Error::Dimension(format!(
                "input profile has {} agents, instance has {}",
                input.agents(),
                dims.n()
            )));
        }
        Self::from_input(input, |i| dims.slots(i))
    }

    pub fn agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, i: usize) -> &[Interval] {
        &self.agents[i]
    }

    /// Whether `u` lies in the box and has unit-sum rows, within `tol`.
    pub fn contains(&self, u: &[Vec<f64>], tol: f64) -> bool {
        u.len() == self.agents.len()
            && u.iter().zip(&self.agents).all(|(row, b)| {
                row.len() == b.len()
                    && (row.iter().sum::<f64>() - 1.0).abs() <= tol
                    && row
                        .iter()
                        .zip(b)
                        .all(|(x, iv)| *x >= iv.lo - tol && *x <= iv.hi + tol)
            })
    }
}

fn sums(row: &[Interval]) -> (f64, f64) {
    row.iter()
        .fold((0.0, 0.0), |(l, h), iv| (l + iv.lo, h + iv.hi))
}

/// Maximizes `coeffs . u` over `lo <= u <= hi`, `sum u = 1`: start at `lo`
/// and pour the remaining mass into slots by descending coefficient.
pub fn agent_linear_max(coeffs: &[f64], bx: &[Interval]) -> Result<(Vec<f64>, f64)> {
    if coeffs.len() != bx.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} slots",
            coeffs.len(),
            bx.len()
        )));
    }
    let (lo_sum, hi_sum) = sums(bx);
    if lo_sum > 1.0 + CONSISTENCY_SLACK || hi_sum < 1.0 - CONSISTENCY_SLACK {
        return Err(Error::InfeasibleBox {
            agent: 0,
            lo_sum,
            hi_sum,
        });
    }
    let mut u: Vec<f64> = bx.iter().map(|iv| iv.lo).collect();
    let mut order: Vec<usize> = (0..bx.len()).collect();
    order.sort_by(|&a, &b| coeffs[b].total_cmp(&coeffs[a]).then(a.cmp(&b)));
    let mut rest = (1.0 - lo_sum).max(0.0);
    for j in order {
        if rest <= 0.0 {
            break;
        }
        let add = (bx[j].hi - bx[j].lo).min(rest);
        u[j] += add;
        rest -= add;
    }
    let value = dot(coeffs, &u);
    Ok((u, value))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sup N/D` with its witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioOutcome {
    /// `+inf` when some consistent profile has `D = 0 < N`.
    pub ratio: f64,
    pub witness: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn eval(coeffs: &[Vec<f64>], u: &[Vec<f64>]) -> f64 {
    coeffs.iter().zip(u).map(|(c, row)| dot(c, row)).sum()
}

fn maximize(coeffs: &[Vec<f64>], bx: &[Vec<Interval>]) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut u = Vec::with_capacity(bx.len());
    let mut total = 0.0;
    for (agent, (c, b)) in coeffs.iter().zip(bx).enumerate() {
        let (row, v) = agent_linear_max(c, b).map_err(|e| match e {
            Error::InfeasibleBox { lo_sum, hi_sum, .. } => Error::InfeasibleBox {
                agent,
                lo_sum,
                hi_sum,
            },
            other => other,
        })?;
        u.push(row);
        total += v;
    }
    Ok((u, total))
}

/// `sup_u N(u) / D(u)` with `N(u) = sum_i num_i . u_i` and
/// `D(u) = sum_i den_i . u_i` over the box. Coefficients must be
/// nonnegative.
pub fn fractional_max(
    num: &[Vec<f64>],
    den: &[Vec<f64>],
    bx: &ConsistencyBox,
) -> Result<RatioOutcome> {
    let n = bx.agents();
    if num.len() != n || den.len() != n {
        return Err(Error::Dimension(format!(
            "coefficients for {} / {} agents, box has {n}",
            num.len(),
            den.len()
        )));
    }
    if num
        .iter()
        .chain(den)
        .flatten()
        .any(|c| !(c.is_finite() && *c >= 0.0))
    {
        return Err(Error::Precondition(
            "ratio coefficients must be finite and nonnegative".into(),
        ));
    }

    // D = 0 is reachable iff every agent can put all mass on slots with zero
    // denominator coefficient.
    let restricted: Option<Vec<Vec<Interval>>> = (0..n)
        .map(|i| {
            let row: Vec<Interval> = bx
                .agent(i)
                .iter()
                .zip(&den[i])
                .map(|(iv, &d)| {
                    if d > 0.0 {
                        Interval { lo: iv.lo, hi: 0.0 }
                    } else {
                        *iv
                    }
                })
                .collect();
            let feasible =
                row.iter().all(|iv| iv.lo <= iv.hi) && sums(&row).1 >= 1.0 - CONSISTENCY_SLACK;
            feasible.then_some(row)
        })
        .collect();
    if let Some(rb) = restricted {
        let (u, value) = maximize(num, &rb)?;
        if value > ZERO_TOL {
            return Ok(RatioOutcome {
                ratio: f64::INFINITY,
                witness: u,
                iterations: 0,
            });
        }
    }

    let mut lambda = 0.0;
    let mut witness: Option<Vec<Vec<f64>>> = None;
    for iteration in 1..=MAX_ITERATIONS {
        let coeffs: Vec<Vec<f64>> = num
            .iter()
            .zip(den)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - lambda * y).collect())
            .collect();
        let (u, value) = maximize(&coeffs, &bx.agents)?;
        if value < DINKELBACH_TOL {
            let witness = witness.unwrap_or(u);
            return Ok(RatioOutcome {
                ratio: lambda,
                witness,
                iterations: iteration,
            });
        }
        let d = eval(den, &u);
        if d <= 0.0 {
            return Ok(RatioOutcome {
                ratio: f64::INFINITY,
                witness: u,
                iterations: iteration,
            });
        }
        lambda = eval(num, &u) / d;
        witness = Some(u);
    }
    let residual = {
        let coeffs: Vec<Vec<f64>> = num
            .iter()
            .zip(den)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - lambda * y).collect())
            .collect();
        maximize(&coeffs, &bx.agents)?.1
    };
    Err(Error::Divergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// Worst-case ratio between matching `alt` and a mechanism that assigns item
/// `a` to agent `i` with probability `p[i][a]`.
pub fn worst_case_ratio(
    p: &[Vec<f64>],
    alt: &Matching,
    bx: &ConsistencyBox,
) -> Result<RatioOutcome> {
    let n = alt.n();
    check_square(p, n)?;
    let num: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|a| if alt.item_of(i) == a { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    fractional_max(&num, p, bx)
}

fn check_square(p: &[Vec<f64>], n: usize) -> Result<()> {
    if p.len() != n || p.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "probability matrix must be {n} x {n}"
        )));
    }
    Ok(())
}

fn serialize_ratio<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *x == f64::INFINITY {
        s.serialize_str("+inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// Result of an exhaustive distortion computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport<B> {
    #[serde(serialize_with = "serialize_ratio")]
    pub distortion: f64,
    /// The alternative attaining the distortion.
    pub alternative: B,
    /// Worst consistent utility profile for that alternative.
    pub witness: Vec<Vec<f64>>,
    pub alternatives_checked: usize,
}

struct Best<B> {
    ratio: f64,
    alt: B,
    witness: Vec<Vec<f64>>,
}

fn improve<B>(best: &mut Option<Best<B>>, cand: Best<B>) {
    let better = match best {
        None => true,
        Some(b) => cand.ratio > b.ratio + IMPROVEMENT_TOL,
    };
    if better {
        *best = Some(cand);
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// The `rank`-th permutation of `0..n` in lexicographic order.
fn unrank(n: usize, mut rank: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let f = factorial(k);
        out.push(pool.remove(rank / f));
        rank %= f;
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("a larger suffix element");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

const CHUNK: usize = 720;

/// Distortion of a one-sided mechanism with assignment probabilities `p`
/// on `input`: the worst ratio over every alternative matching. Exhaustive
/// and deterministic; refuses `n > 9`.
pub fn exact_distortion(
    p: &[Vec<f64>],
    input: &OneSidedInput,
) -> Result<DistortionReport<Matching>> {
    let n = input.agents();
    if n > MAX_AGENTS {
        return Err(Error::SizeLimit {
            what: "agent count",
            size: n,
            limit: MAX_AGENTS,
        });
    }
    if n == 0 {
        return Err(Error::Dimension("no agents".into()));
    }
    check_square(p, n)?;
    let bx = ConsistencyBox::one_sided(input, n)?;
    let total = factorial(n);
    let chunks: Vec<Option<Best<Matching>>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let mut perm = unrank(n, start);
            let mut best = None;
            for _ in start..(start + CHUNK).min(total) {
                let alt = Matching::new(perm.clone()).expect("a permutation");
                let r = worst_case_ratio(p, &alt, &bx)?;
                improve(
                    &mut best,
                    Best {
                        ratio: r.ratio,
                        alt,
                        witness: r.witness,
                    },
                );
                next_permutation(&mut perm);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best = None;
    for b in chunks.into_iter().flatten() {
        improve(&mut best, b);
    }
    let best = best.expect("at least one alternative");
    Ok(DistortionReport {
        distortion: best.ratio,
        alternative: best.alt,
        witness: best.witness,
        alternatives_checked: total,
    })
}

/// Every feasible allocation to which no single copy can be added, in
/// lexicographic order of the row-major copy-count vector. Without copy
/// limits these are exactly the allocations handing out `min(sum c, sum m)`
/// copies.
pub fn maximal_allocations(dims: &GeneralizedDims) -> Result<Vec<Allocation>> {
    if dims.total() > MAX_TOTAL {
        return Err(Error::SizeLimit {
            what: "total capacity/supply",
            size: dims.total(),
            limit: MAX_TOTAL,
        });
    }
    let (n, m) = (dims.n(), dims.m());
    let mut out = Vec::new();
    let mut x = vec![vec![0usize; m]; n];
    let mut row_left: Vec<usize> = dims.capacities().to_vec();
    let mut col_left: Vec<usize> = dims.supplies().to_vec();
    fn dfs(
        cell: usize,
        dims: &GeneralizedDims,
        x: &mut Vec<Vec<usize>>,
        row_left: &mut [usize],
        col_left: &mut [usize],
        out: &mut Vec<Allocation>,
    ) {
        let (n, m) = (dims.n(), dims.m());
        if cell == n * m {
            let blocked = (0..n).all(|i| {
                (0..m).all(|a| {
                    row_left[i] == 0 || col_left[a] == 0 || x[i][a] >= dims.max_copies(i, a)
                })
            });
            if blocked {
                out.push(Allocation::new(x.clone()));
            }
            return;
        }
        let (i, a) = (cell / m, cell % m);
        let top = dims.max_copies(i, a).min(row_left[i]).min(col_left[a]);
        for c in 0..=top {
            x[i][a] = c;
            row_left[i] -= c;
            col_left[a] -= c;
            dfs(cell + 1, dims, x, row_left, col_left, out);
            row_left[i] += c;
            col_left[a] += c;
        }
        x[i][a] = 0;
    }
    dfs(0, dims, &mut x, &mut row_left, &mut col_left, &mut out);
    Ok(out)
}

/// Distortion of a generalized mechanism whose expected welfare puts
/// coefficient `den[i][s]` on agent `i`'s slot `s` (slot order as in
/// [`GeneralizedDims::slots`]). Refuses `T > 8`.
pub fn exact_distortion_generalized(
    den: &[Vec<f64>],
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
) -> Result<DistortionReport<Allocation>> {
    let alts = maximal_allocations(dims)?;
    let bx = ConsistencyBox::generalized(input, dims)?;
    let results: Vec<RatioOutcome> = alts
        .par_iter()
        .map(|b| fractional_max(&allocation_coefficients(b, dims), den, &bx))
        .collect::<Result<_>>()?;
    let checked = alts.len();
    let mut best = None;
    for (alt, r) in alts.into_iter().zip(results) {
        improve(
            &mut best,
            Best {
                ratio: r.ratio,
                alt,
                witness: r.witness,
            },
        );
    }
    let best = best.expect("the empty allocation is extended to at least one maximal one");
    Ok(DistortionReport {
        distortion: best.ratio,
        alternative: best.alt,
        witness: best.witness,
        alternatives_checked: checked,
    })
}

/// `sum_{i,a} p[i][a] u_i(a)`.
pub fn expected_welfare(p: &[Vec<f64>], profile: &UtilityProfile) -> f64 {
    eval(p, profile.rows())
}

/// A welfare-maximizing matching and its welfare.
pub fn optimal_matching(profile: &UtilityProfile) -> (Matching, f64) {
    let assign = max_weight_assignment(profile.rows());
    let m = Matching::new(assign).expect("assignment is a permutation");
    let w = (0..m.n()).map(|i| profile.get(i, m.item_of(i))).sum();
    (m, w)
}

const SAMPLE_BLOCK: usize = 4096;

/// Monte Carlo assignment frequencies over `samples` draws. Blocks of
/// draws use seeds derived from `seed`, so the result does not depend on
/// the thread count.
pub fn estimate_probabilities(
    mechanism: &dyn MatchingMechanism,
    input: &OneSidedInput,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let n = input.agents();
    let blocks: Vec<Vec<Vec<u64>>> = (0..samples.div_ceil(SAMPLE_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
            let mut counts = vec![vec![0u64; n]; n];
            for _ in b * SAMPLE_BLOCK..((b + 1) * SAMPLE_BLOCK).min(samples) {
                let m = mechanism.sample(input, &mut rng)?;
                for (i, row) in counts.iter_mut().enumerate() {
                    row[m.item_of(i)] += 1;
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![vec![0u64; n]; n];
    for block in blocks {
        for (t, c) in total.iter_mut().zip(block) {
            t.iter_mut().zip(c).for_each(|(x, y)| *x += y);
        }
    }
    Ok(total
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / samples as f64).collect())
        .collect())
}
