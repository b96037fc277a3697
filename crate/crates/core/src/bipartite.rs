//! Weighted bipartite graphs, exact max-weight matching, and the two greedy
//! matchings used by the bound constructions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Slack for weight equality when choosing among optimal matchings.
pub const TIE_TOL: f64 = 1e-12;

/// Slack on probability-matrix preconditions.
const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBipartiteGraph {
    left: usize,
    right: usize,
    edges: Vec<Edge>,
    dense: Vec<Vec<Option<f64>>>,
}

impl WeightedBipartiteGraph {
    pub fn new(left: usize, right: usize, mut edges: Vec<Edge>) -> Result<Self> {
        let mut dense = vec![vec![None; right]; left];
        for e in &edges {
            if e.left >= left || e.right >= right {
                return Err(Error::Dimension(format!(
                    "edge ({}, {}) outside a {left} x {right} graph",
                    e.left, e.right
                )));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::Precondition(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.left, e.right, e.weight
                )));
            }
            if dense[e.left][e.right].replace(e.weight).is_some() {
                return Err(Error::Precondition(format!(
                    "duplicate edge ({}, {})",
                    e.left, e.right
                )));
            }
        }
        edges.sort_by_key(|e| (e.left, e.right));
        Ok(Self {
            left,
            right,
            edges,
            dense,
        })
    }

    pub fn left_count(&self) -> usize {
        self.left
    }

    pub fn right_count(&self) -> usize {
        self.right
    }

    /// Edges sorted by `(left, right)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, left: usize, right: usize) -> Option<f64> {
        self.dense[left][right]
    }

    pub fn incident(&self, left: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.left == left)
    }
}

/// A set of disjoint edges, sorted by left node.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMatching {
    pub pairs: Vec<(usize, usize)>,
    pub weight: f64,
}

impl BipartiteMatching {
    pub fn right_of(&self, left: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == left).map(|p| p.1)
    }
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns `assign[row] = column`.
pub(crate) fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row (1-based) matched to column j; way[j]: previous column on the path
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Perfect assignment maximizing `sum weights[row][assign[row]]` on a square
/// matrix.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|r| r.iter().map(|w| -w).collect())
        .collect();
    solve_assignment(&cost)
}

/// Best total weight over the sub-graph induced by the given node subsets.
fn restricted_optimum(g: &WeightedBipartiteGraph, lefts: &[usize], rights: &[usize]) -> f64 {
    let size = lefts.len().max(rights.len());
    if size == 0 || lefts.is_empty() || rights.is_empty() {
        return 0.0;
    }
    let mut cost = vec![vec![0.0; size]; size];
    for (r, &i) in lefts.iter().enumerate() {
        for (c, &j) in rights.iter().enumerate() {
            if let Some(w) = g.weight(i, j) {
                cost[r][c] = -w;
            }
        }
    }
    let assign = solve_assignment(&cost);
    let mut total = 0.0;
    for (r, &c) in assign.iter().enumerate() {
        if r < lefts.len() && c < rights.len() {
            if let Some(w) = g.weight(lefts[r], rights[c]) {
                total += w;
            }
        }
    }
    total
}

/// Exact maximum-weight matching (not necessarily perfect).
///
/// Among optimal matchings the one returned is canonical: left nodes are
/// processed in ascending order and each takes the smallest right node (or
/// stays unmatched, as the last resort) that still admits an optimal
/// completion within [`TIE_TOL`].
pub fn max_weight_matching(g: &WeightedBipartiteGraph) -> BipartiteMatching {
    let all_left: Vec<usize> = (0..g.left).collect();
    let all_right: Vec<usize> = (0..g.right).collect();
    let best = restricted_optimum(g, &all_left, &all_right);

    let mut free_right: BTreeSet<usize> = all_right.into_iter().collect();
    let mut pairs = Vec::new();
    let mut acc = 0.0;
    for i in 0..g.left {
        let rest_left: Vec<usize> = (i + 1..g.left).collect();
        let candidates: Vec<Edge> = g
            .incident(i)
            .filter(|e| free_right.contains(&e.right))
            .copied()
            .collect();
        for e in candidates {
            free_right.remove(&e.right);
            let rights: Vec<usize> = free_right.iter().copied().collect();
            if acc + e.weight + restricted_optimum(g, &rest_left, &rights) >= best - TIE_TOL {
                acc += e.weight;
                pairs.push((i, e.right));
                break;
            }
            free_right.insert(e.right);
        }
        // if nothing fit, `i` stays unmatched and the rest still reaches `best`
    }
    BipartiteMatching { pairs, weight: acc }
}

/// The constructive matching used to show that a graph whose left nodes
/// each carry incident weight at least `w_min` and whose edges weigh at least
/// `l_min` has a matching of weight at least `min(w_min, n * l_min)`.
///
/// Right nodes are visited in ascending order; each takes the heaviest edge
/// to a still-free left node (smallest left index on ties).
pub fn greedy_bound_matching(
    g: &WeightedBipartiteGraph,
    w_min: f64,
    l_min: f64,
) -> Result<BipartiteMatching> {
    for i in 0..g.left {
        let total: f64 = g.incident(i).map(|e| e.weight).sum();
        if total < w_min - TIE_TOL {
            return Err(Error::Precondition(format!(
                "left node {i} has incident weight {total} < W = {w_min}"
            )));
        }
    }
    if let Some(e) = g.edges.iter().find(|e| e.weight < l_min - TIE_TOL) {
        return Err(Error::Precondition(format!(
            "edge ({}, {}) weighs {} < L = {l_min}",
            e.left, e.right, e.weight
        )));
    }
    let mut free_left = vec![true; g.left];
    let mut pairs = Vec::new();
    let mut weight = 0.0;
    for a in 0..g.right {
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..g.left {
            if !free_left[i] {
                continue;
            }
            if let Some(w) = g.weight(i, a) {
                if pick.map_or(true, |(_, best)| w > best) {
                    pick = Some((i, w));
                }
            }
        }
        if let Some((i, w)) = pick {
            free_left[i] = false;
            pairs.push((i, a));
            weight += w;
        }
    }
    pairs.sort();
    Ok(BipartiteMatching { pairs, weight })
}

/// Greedy low-probability matching of an item subset to distinct agents.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatching {
    /// `(agent, item)` in the order the greedy picked them.
    pub picks: Vec<(usize, usize)>,
    /// `partial_sums[j-1]` is the probability mass after `j` picks.
    pub partial_sums: Vec<f64>,
}

impl ProbabilityMatching {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    /// Agent matched to `item`, if the item was in the subset.
    pub fn agent_of(&self, item: usize) -> Option<usize> {
        self.picks.iter().find(|p| p.1 == item).map(|p| p.0)
    }
}

/// Repeatedly picks the remaining `(agent, item)` pair with the smallest
/// assignment probability `p[agent][item]` (ties: smallest agent, then item).
///
/// `p` must be `n x m` with entries in `[0, 1]`, row and column sums at most 1,
/// and `items` must hold at most `n` distinct item indices.
pub fn min_probability_matching(p: &[Vec<f64>], items: &[usize]) -> Result<ProbabilityMatching> {
    let n = p.len();
    let m = p.first().map_or(0, Vec::len);
    if p.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("probability matrix is ragged".into()));
    }
    let subset: BTreeSet<usize> = items.iter().copied().collect();
    if subset.len() != items.len() {
        return Err(Error::Precondition("item subset has duplicates".into()));
    }
    if let Some(&a) = subset.iter().find(|&&a| a >= m) {
        return Err(Error::Dimension(format!("item {a} outside {m} items")));
    }
    if subset.len() > n {
        return Err(Error::Precondition(format!(
            "{} items cannot be matched to {n} agents",
            subset.len()
        )));
    }
    for (i, row) in p.iter().enumerate() {
        if let Some(a) = row
            .iter()
            .position(|&x| !(-PROB_TOL..=1.0 + PROB_TOL).contains(&x))
        {
            return Err(Error::Precondition(format!(
                "p[{i}][{a}] = {} is not a probability",
                row[a]
            )));
        }
        let s: f64 = row.iter().sum();
        if s > 1.0 + PROB_TOL {
            return Err(Error::Precondition(format!(
                "agent {i} probabilities sum to {s}"
            )));
        }
    }
    for a in 0..m {
        let s: f64 = p.iter().map(|r| r[a]).sum();
        if s > 1.0 + PROB_TOL {
            return Err(Error::Precondition(format!(
                "item {a} probabilities sum to {s}"
            )));
        }
    }

    let mut free_agents = vec![true; n];
    let mut free_items = subset;
    let mut picks = Vec::with_capacity(free_items.len());
    let mut partial_sums = Vec::with_capacity(free_items.len());
    let mut acc = 0.0;
    while !free_items.is_empty() {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| free_agents[i]) {
            for &a in &free_items {
                if best.map_or(true, |(_, _, v)| p[i][a] < v) {
                    best = Some((i, a, p[i][a]));
                }
            }
        }
        let (i, a, v) = best.expect("at least as many agents as items");
        free_agents[i] = false;
        free_items.remove(&a);
        acc += v;
        picks.push((i, a));
        partial_sums.push(acc);
    }
    Ok(ProbabilityMatching {
        picks,
        partial_sums,
    })
}
