//! Lower-bound instance families for one-sided mechanisms.
//!
//! All generators place utilities on the closure of the consistent set
//! (values equal to a threshold are allowed), matching the closed-interval
//! validator and oracle.

use crate::bipartite::min_probability_matching;
use crate::error::{Error, Result};
use crate::model::{InputProfile, Matching, OneSidedInput, ThresholdVector, UtilityProfile};

/// `argmax_k tau_{k-1} / tau_k` (1-based, `tau_0 = 1`), smallest `k` on
/// ties.
pub fn max_gap_index(taus: &ThresholdVector) -> usize {
    let mut best = 1;
    let mut best_gap = 1.0 / taus.tau(1);
    for k in 2..=taus.len() {
        let gap = taus.tau(k - 1) / taus.tau(k);
        if gap > best_gap {
            best = k;
            best_gap = gap;
        }
    }
    best
}

/// The gap construction at level `k`, before the mechanism is consulted.
///
/// Items `0..=m` form the block approved at level `k`, item `m + 1` is the
/// residual item and the rest are worthless. Every agent reports the same
/// sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GapInstance {
    pub k: usize,
    /// Largest `m` with `tau_{k-1}/2 + m tau_k <= 1`.
    pub m: usize,
    /// Level of the residual item, `None` when it is unlisted.
    pub residual_level: Option<usize>,
    /// `1 - tau_{k-1}/2 - m tau_k`, each agent's utility for the residual item.
    pub residual: f64,
    pub input: OneSidedInput,
}

impl GapInstance {
    /// Builds the input profile. Needs `tau_{k-1} > 2 tau_k` and `n >= m + 2`.
    pub fn new(taus: &ThresholdVector, k: usize, n: usize) -> Result<Self> {
        let t = taus.len();
        if k == 0 || k > t {
            return Err(Error::Precondition(format!("level {k} is outside 1..={t}")));
        }
        let (hi, lo) = (taus.tau(k - 1), taus.tau(k));
        if hi <= 2.0 * lo {
            return Err(Error::Precondition(format!(
                "gap tau_{{k-1}}/tau_k = {} must exceed 2",
                hi / lo
            )));
        }
        let m = ((1.0 - hi / 2.0) / lo + 1e-12).floor() as usize;
        if n < m + 2 {
            return Err(Error::Precondition(format!(
                "needs n >= m + 2 = {}, got {n}",
                m + 2
            )));
        }
        let residual = (1.0 - hi / 2.0 - m as f64 * lo).max(0.0);
        // smallest deeper level whose closed interval holds the residual
        let residual_level = (k + 1..=t).find(|&j| taus.tau(j) <= residual);
        let mut row = vec![Vec::new(); t];
        row[k - 1] = (0..=m).collect();
        if let Some(j) = residual_level {
            row[j - 1] = vec![m + 1];
        }
        let input = InputProfile::new(taus.clone(), vec![row; n])?;
        Ok(Self {
            k,
            m,
            residual_level,
            residual,
            input,
        })
    }

    /// Items approved at level `k`.
    pub fn block(&self) -> Vec<usize> {
        (0..=self.m).collect()
    }

    /// The pinned item every agent outside the min-probability matching
    /// values highly.
    pub fn pinned_item(&self) -> usize {
        0
    }

    /// The utility profile tailored to a mechanism with assignment
    /// probabilities `p` on [`GapInstance::input`]. Returns the profile and
    /// the min-probability matching of the block as `(agent, item)` pairs.
    pub fn utilities(&self, p: &[Vec<f64>]) -> Result<(UtilityProfile, Vec<(usize, usize)>)> {
        let n = self.input.agents();
        let taus = self.input.taus();
        let (half, low) = (taus.tau(self.k - 1) / 2.0, taus.tau(self.k));
        let pm = min_probability_matching(p, &self.block())?;
        let mut rows = vec![vec![0.0; n]; n];
        for row in rows.iter_mut() {
            for a in self.block() {
                row[a] = low;
            }
            row[self.m + 1] = self.residual;
        }
        let mut matched = vec![false; n];
        for &(i, a) in &pm.picks {
            rows[i][a] = half;
            matched[i] = true;
        }
        for (i, row) in rows.iter_mut().enumerate() {
            if !matched[i] {
                row[self.pinned_item()] = half;
            }
            // the block already sums past 1/2, so `1 - s` is exact and the
            // row sums to exactly 1 in index order
            let s: f64 = row[..=self.m].iter().sum();
            row[self.m + 1] = 1.0 - s;
        }
        Ok((UtilityProfile::new(rows)?, pm.picks))
    }
}

/// Two-phase convenience: builds the input profile, asks `probabilities` for
/// the mechanism's assignment probabilities on it, then builds utilities.
pub fn gen_gap_instance(
    taus: &ThresholdVector,
    k: usize,
    n: usize,
    probabilities: impl FnOnce(&OneSidedInput) -> Result<Vec<Vec<f64>>>,
) -> Result<(GapInstance, UtilityProfile)> {
    let inst = GapInstance::new(taus, k, n)?;
    let p = probabilities(&inst.input)?;
    let (u, _) = inst.utilities(&p)?;
    Ok((inst, u))
}

/// Utilities against a deterministic mechanism that returns `a` on the
/// all-empty input: 0 for the assigned item, `tau_t` for the item of the
/// next agent (cyclically), and the rest spread evenly.
pub fn gen_empty_det_adversary(
    taus: &ThresholdVector,
    n: usize,
    a: &Matching,
) -> Result<UtilityProfile> {
    let tau = taus.last();
    if n < 3 {
        return Err(Error::Precondition(format!("needs n >= 3, got {n}")));
    }
    if a.n() != n {
        return Err(Error::Dimension(format!(
            "matching has {} agents, expected {n}",
            a.n()
        )));
    }
    if tau < 1.0 / (n as f64 - 1.0) {
        return Err(Error::Precondition(format!(
            "tau_t = {tau} is below 1/(n-1)"
        )));
    }
    let rest = (1.0 - tau) / (n as f64 - 2.0);
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![rest; n];
            row[a.item_of(i)] = 0.0;
            row[a.item_of((i + 1) % n)] = tau;
            row
        })
        .collect();
    UtilityProfile::new(rows)
}

/// The alternative used by [`gen_empty_det_adversary`]: agent `i` gets the
/// item `a` gives agent `i + 1`.
pub fn cyclic_shift(a: &Matching) -> Matching {
    let n = a.n();
    Matching::new((0..n).map(|i| a.item_of((i + 1) % n)).collect()).expect("a shifted bijection")
}

/// Utilities against a randomized mechanism with probabilities `p` on the
/// all-empty input: `tau_t` for the min-probability partner, the rest spread
/// evenly. Returns the profile and that matching.
pub fn gen_empty_rand_adversary(
    taus: &ThresholdVector,
    n: usize,
    p: &[Vec<f64>],
) -> Result<(UtilityProfile, Matching)> {
    let tau = taus.last();
    if n < 2 {
        return Err(Error::Precondition(format!("needs n >= 2, got {n}")));
    }
    if tau <= 1.0 / n as f64 {
        return Err(Error::Precondition(format!(
            "tau_t = {tau} must exceed 1/n"
        )));
    }
    let pm = min_probability_matching(p, &(0..n).collect::<Vec<_>>())?;
    let mut assign = vec![0; n];
    for &(i, a) in &pm.picks {
        assign[i] = a;
    }
    let matching = Matching::new(assign)?;
    let rest = (1.0 - tau) / (n as f64 - 1.0);
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![rest; n];
            row[matching.item_of(i)] = tau;
            row
        })
        .collect();
    Ok((UtilityProfile::new(rows)?, matching))
}
