//! Domain types shared by every mechanism, plus welfare and profile checks.
//!
//! Items are always addressed by index `0..m`. Threshold levels are 1-based
//! (`1..=t`) with the implicit level-0 threshold equal to 1, and copy indices
//! in the generalized setting are 1-based as well (`1..=min(c_i, m_a)`).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for unit-sum checks and welfare comparisons.
pub const UNIT_SUM_TOL: f64 = 1e-9;

/// Strictly decreasing thresholds `1 > tau_1 > ... > tau_t > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector {
    taus: Vec<f64>,
}

impl ThresholdVector {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::Thresholds(
                "at least one threshold is required".into(),
            ));
        }
        let mut prev = 1.0;
        for (k, &tau) in taus.iter().enumerate() {
            if !(tau > 0.0 && tau < prev) {
                return Err(Error::Thresholds(format!(
                    "tau_{} = {tau} must lie strictly between 0 and {prev}",
                    k + 1
                )));
            }
            prev = tau;
        }
        Ok(Self { taus })
    }

    /// The schedule `tau_k = delta^-k` for `k = 1..=t`.
    pub fn geometric(delta: f64, t: usize) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return Err(Error::Thresholds(format!(
                "ratio delta = {delta} must exceed 1"
            )));
        }
        Self::new((1..=t).map(|k| delta.powi(-(k as i32))).collect())
    }

    /// Number of thresholds `t`.
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `tau_k` for `k in 0..=t`, with `tau_0 = 1`.
    pub fn tau(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.taus[k - 1]
        }
    }

    pub fn last(&self) -> f64 {
        self.taus[self.taus.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.taus
    }

    /// Level `k` with `tau_{k-1} >= u > tau_k`, or `None` when `u <= tau_t`.
    /// Values above 1 land in level 1.
    pub fn level_of(&self, u: f64) -> Option<usize> {
        self.taus.iter().position(|&tau| u > tau).map(|k| k + 1)
    }

    /// Closed interval of utilities consistent with `level` (`None` = unlisted).
    pub fn interval(&self, level: Option<usize>) -> (f64, f64) {
        match level {
            Some(k) => (self.tau(k), self.tau(k - 1)),
            None => (0.0, self.last()),
        }
    }

    /// Whether both vectors agree entrywise within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .taus
                .iter()
                .zip(&other.taus)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Self {
        t.taus
    }
}

/// A one-sided house allocation instance: `n` agents and `n` labelled items.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSidedInstance {
    item_labels: Vec<String>,
}

impl OneSidedInstance {
    pub fn new(item_labels: Vec<String>) -> Result<Self> {
        if item_labels.is_empty() {
            return Err(Error::Dimension(
                "an instance needs at least one item".into(),
            ));
        }
        let distinct: BTreeSet<_> = item_labels.iter().collect();
        if distinct.len() != item_labels.len() {
            return Err(Error::Dimension("item labels must be distinct".into()));
        }
        Ok(Self { item_labels })
    }

    /// Items labelled `0..n`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn n(&self) -> usize {
        self.item_labels.len()
    }

    pub fn label(&self, item: usize) -> &str {
        &self.item_labels[item]
    }

    pub fn labels(&self) -> &[String] {
        &self.item_labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.item_labels.iter().position(|l| l == label)
    }
}

/// A problem with a utility profile, reported as data.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnitSum {
        agent: usize,
        sum: f64,
    },
    Range {
        agent: usize,
        item: usize,
        copy: Option<usize>,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnitSum { agent, sum } => {
                write!(f, "unit-sum: agent {agent} utilities sum to {sum}")
            }
            Violation::Range {
                agent,
                item,
                copy: None,
                value,
            } => {
                write!(
                    f,
                    "range: agent {agent} item {item} has utility {value} outside [0,1]"
                )
            }
            Violation::Range {
                agent,
                item,
                copy: Some(j),
                value,
            } => write!(
                f,
                "range: agent {agent} item {item} copy {j} has marginal {value} outside [0,1]"
            ),
        }
    }
}

/// One-sided utilities, `rows[i][j] = u_i(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityProfile {
    rows: Vec<Vec<f64>>,
}

impl UtilityProfile {
    /// Checked constructor: square shape, range and unit-sum.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let profile = Self::from_rows(rows)?;
        let violations = validate_profile(&profile);
        if violations.is_empty() {
            Ok(profile)
        } else {
            Err(Error::InvalidProfile(violations))
        }
    }

    /// Shape-only constructor; run [`validate_profile`] for the value checks.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension(
                "a profile needs at least one agent".into(),
            ));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "agent {i} has {} utilities, expected {n}",
                row.len()
            )));
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, agent: usize, item: usize) -> f64 {
        self.rows[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        &self.rows[agent]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

pub fn validate_profile(profile: &UtilityProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    for (agent, row) in profile.rows.iter().enumerate() {
        for (item, &value) in row.iter().enumerate() {
            if !(-UNIT_SUM_TOL..=1.0 + UNIT_SUM_TOL).contains(&value) {
                out.push(Violation::Range {
                    agent,
                    item,
                    copy: None,
                    value,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > UNIT_SUM_TOL {
            out.push(Violation::UnitSum { agent, sum });
        }
    }
    out
}

/// A member of a generalized approval set: copy `copy` (1-based) of `item`.
/// Serialized as the pair `[item, copy]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CopySlot(pub usize, pub usize);

impl CopySlot {
    pub fn item(self) -> usize {
        self.0
    }

    pub fn copy(self) -> usize {
        self.1
    }
}

/// Threshold approval sets `S_{i,1..t}` of every agent, plus the thresholds
/// they were elicited against. Sets are kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawInputProfile<K>",
    into = "RawInputProfile<K>",
    bound(
        serialize = "K: Serialize + Clone",
        deserialize = "K: Deserialize<'de> + Ord + Copy + fmt::Debug"
    )
)]
pub struct InputProfile<K> {
    taus: ThresholdVector,
    sets: Vec<Vec<Vec<K>>>,
}

pub type OneSidedInput = InputProfile<usize>;
pub type GeneralizedInput = InputProfile<CopySlot>;

#[derive(Serialize, Deserialize)]
struct RawInputProfile<K> {
    t: usize,
    taus: ThresholdVector,
    sets: Vec<Vec<Vec<K>>>,
}

impl<K: Ord + Copy + fmt::Debug> TryFrom<RawInputProfile<K>> for InputProfile<K> {
    type Error = Error;
    fn try_from(raw: RawInputProfile<K>) -> Result<Self> {
        if raw.t != raw.taus.len() {
            return Err(Error::InvalidInput(format!(
                "t = {} but {} thresholds given",
                raw.t,
                raw.taus.len()
            )));
        }
        InputProfile::new(raw.taus, raw.sets)
    }
}

impl<K: Clone> From<InputProfile<K>> for RawInputProfile<K> {
    fn from(p: InputProfile<K>) -> Self {
        RawInputProfile {
            t: p.taus.len(),
            taus: p.taus,
            sets: p.sets,
        }
    }
}

impl<K: Ord + Copy + fmt::Debug> InputProfile<K> {
    /// Builds a profile from `sets[i][k-1] = S_{i,k}`; checks that each agent
    /// has exactly `t` pairwise disjoint sets.
    pub fn new(taus: ThresholdVector, mut sets: Vec<Vec<Vec<K>>>) -> Result<Self> {
        let t = taus.len();
        for (i, agent_sets) in sets.iter_mut().enumerate() {
            if agent_sets.len() != t {
                return Err(Error::InvalidInput(format!(
                    "agent {i} reports {} sets, expected {t}",
                    agent_sets.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for (k, set) in agent_sets.iter_mut().enumerate() {
                set.sort();
                for member in set.iter() {
                    if !seen.insert(*member) {
                        return Err(Error::InvalidInput(format!(
                            "agent {i} lists {member:?} twice (again at level {})",
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(Self { taus, sets })
    }

    /// Every agent reports `t` empty sets.
    pub fn empty(taus: ThresholdVector, agents: usize) -> Self {
        let t = taus.len();
        Self {
            taus,
            sets: vec![vec![Vec::new(); t]; agents],
        }
    }

    pub fn taus(&self) -> &ThresholdVector {
        &self.taus
    }

    pub fn agents(&self) -> usize {
        self.sets.len()
    }

    /// `S_{agent, level}` with `level` in `1..=t`.
    pub fn set(&self, agent: usize, level: usize) -> &[K] {
        &self.sets[agent][level - 1]
    }

    pub fn agent_sets(&self, agent: usize) -> &[Vec<K>] {
        &self.sets[agent]
    }

    /// Level at which `agent` approves `member`, if any.
    pub fn level_of(&self, agent: usize, member: &K) -> Option<usize> {
        self.sets[agent]
            .iter()
            .position(|s| s.binary_search(member).is_ok())
            .map(|k| k + 1)
    }

    /// Approved `(level, member)` pairs of `agent`, level-major.
    pub fn approvals(&self, agent: usize) -> impl Iterator<Item = (usize, K)> + '_ {
        self.sets[agent]
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.iter().map(move |&m| (k + 1, m)))
    }
}

impl OneSidedInput {
    /// Checks that all members are items `< n_items`.
    pub fn check_items(&self, n_items: usize) -> Result<()> {
        for i in 0..self.agents() {
            if let Some((k, a)) = self.approvals(i).find(|&(_, a)| a >= n_items) {
                return Err(Error::InvalidInput(format!(
                    "agent {i} approves item {a} at level {k}, but there are only {n_items} items"
                )));
            }
        }
        Ok(())
    }
}

impl GeneralizedInput {
    /// Checks that members reference valid items and copy indices
    /// `1..=min(c_i, m_a)`.
    pub fn check_slots(&self, dims: &GeneralizedDims) -> Result<()> {
        if self.agents() != dims.n() {
            return Err(Error::Dimension(format!(
                "input profile has {} agents, instance has {}",
                self.agents(),
                dims.n()
            )));
        }
        for i in 0..self.agents() {
            for (k, slot) in self.approvals(i) {
                let ok = slot.item() < dims.m()
                    && slot.copy() >= 1
                    && slot.copy() <= dims.copy_bound(i, slot.item());
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "agent {i} approves {slot:?} at level {k}, which is not a valid copy"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A bijection between agents and items: `assign[i]` is agent `i`'s item.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Matching {
    assign: Vec<usize>,
}

impl Matching {
    pub fn new(assign: Vec<usize>) -> Result<Self> {
        let n = assign.len();
        let mut seen = vec![false; n];
        for (i, &a) in assign.iter().enumerate() {
            if a >= n {
                return Err(Error::NotABijection(format!(
                    "agent {i} gets item {a} of {n}"
                )));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::NotABijection(format!("item {a} is assigned twice")));
            }
        }
        Ok(Self { assign })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            assign: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn item_of(&self, agent: usize) -> usize {
        self.assign[agent]
    }

    /// Inverse permutation: `agents()[a]` is the agent holding item `a`.
    pub fn agents(&self) -> Vec<usize> {
        let mut inv = vec![0; self.assign.len()];
        for (i, &a) in self.assign.iter().enumerate() {
            inv[a] = i;
        }
        inv
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assign
    }
}

impl TryFrom<Vec<usize>> for Matching {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Matching> for Vec<usize> {
    fn from(m: Matching) -> Self {
        m.assign
    }
}

pub fn social_welfare(matching: &Matching, profile: &UtilityProfile) -> Result<f64> {
    if matching.n() != profile.n() {
        return Err(Error::Dimension(format!(
            "matching over {} agents, profile over {}",
            matching.n(),
            profile.n()
        )));
    }
    Ok(matching
        .assign
        .iter()
        .enumerate()
        .map(|(i, &a)| profile.get(i, a))
        .sum())
}

/// Capacities, supplies and optional per-pair copy limits.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedDims {
    capacities: Vec<usize>,
    supplies: Vec<usize>,
    limits: Option<Vec<Vec<usize>>>,
}

impl GeneralizedDims {
    pub fn new(
        capacities: Vec<usize>,
        supplies: Vec<usize>,
        limits: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if capacities.is_empty() || supplies.is_empty() {
            return Err(Error::Dimension(
                "need at least one agent and one item".into(),
            ));
        }
        if let Some(i) = capacities.iter().position(|&c| c == 0) {
            return Err(Error::Dimension(format!("agent {i} has zero capacity")));
        }
        if let Some(a) = supplies.iter().position(|&s| s == 0) {
            return Err(Error::Dimension(format!("item {a} has zero supply")));
        }
        if let Some(l) = &limits {
            if l.len() != capacities.len() || l.iter().any(|r| r.len() != supplies.len()) {
                return Err(Error::Dimension(
                    "copy limits must be an n x m matrix".into(),
                ));
            }
        }
        Ok(Self {
            capacities,
            supplies,
            limits,
        })
    }

    /// Unit capacities and supplies on an `n x n` instance.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(vec![1; n], vec![1; n], None)
    }

    pub fn n(&self) -> usize {
        self.capacities.len()
    }

    pub fn m(&self) -> usize {
        self.supplies.len()
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn supplies(&self) -> &[usize] {
        &self.supplies
    }

    pub fn limits(&self) -> Option<&[Vec<usize>]> {
        self.limits.as_deref()
    }

    pub fn capacity(&self, agent: usize) -> usize {
        self.capacities[agent]
    }

    pub fn supply(&self, item: usize) -> usize {
        self.supplies[item]
    }

    /// `min(c_i, m_a)`: the number of marginal utilities agent `i` has for `a`.
    pub fn copy_bound(&self, agent: usize, item: usize) -> usize {
        self.capacities[agent].min(self.supplies[item])
    }

    /// Largest number of copies of `item` that `agent` may receive.
    pub fn max_copies(&self, agent: usize, item: usize) -> usize {
        let bound = self.copy_bound(agent, item);
        match &self.limits {
            Some(l) => bound.min(l[agent][item]),
            None => bound,
        }
    }

    pub fn total_capacity(&self) -> usize {
        self.capacities.iter().sum()
    }

    pub fn total_supply(&self) -> usize {
        self.supplies.iter().sum()
    }

    /// `T`, the larger of total capacity and total supply.
    pub fn total(&self) -> usize {
        self.total_capacity().max(self.total_supply())
    }

    /// Number of copies a maximal allocation hands out (ignoring limits).
    pub fn flow_value(&self) -> usize {
        self.total_capacity().min(self.total_supply())
    }

    pub fn max_capacity(&self) -> usize {
        self.capacities.iter().copied().max().unwrap_or(0)
    }

    /// Copy slots `(a, j)` of `agent`, item-major, copies ascending.
    pub fn slots(&self, agent: usize) -> Vec<CopySlot> {
        (0..self.m())
            .flat_map(|a| (1..=self.copy_bound(agent, a)).map(move |j| CopySlot(a, j)))
            .collect()
    }

    /// Position of `slot` within [`GeneralizedDims::slots`].
    pub fn slot_index(&self, agent: usize, slot: CopySlot) -> usize {
        let before: usize = (0..slot.item()).map(|a| self.copy_bound(agent, a)).sum();
        before + slot.copy() - 1
    }
}

/// Generalized instance: dims plus marginals `utilities[i][a][j-1] = u_i(a, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedInstance {
    dims: GeneralizedDims,
    utilities: Vec<Vec<Vec<f64>>>,
}

impl GeneralizedInstance {
    pub fn new(dims: GeneralizedDims, utilities: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let inst = Self::from_parts(dims, utilities)?;
        let violations = validate_generalized(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(Error::InvalidProfile(violations))
        }
    }

    /// Shape-only constructor.
    pub fn from_parts(dims: GeneralizedDims, utilities: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if utilities.len() != dims.n() {
            return Err(Error::Dimension(format!(
                "{} utility rows for {} agents",
                utilities.len(),
                dims.n()
            )));
        }
        for (i, row) in utilities.iter().enumerate() {
            if row.len() != dims.m() {
                return Err(Error::Dimension(format!(
                    "agent {i} has utilities for {} items, expected {}",
                    row.len(),
                    dims.m()
                )));
            }
            for (a, marg) in row.iter().enumerate() {
                if marg.len() != dims.copy_bound(i, a) {
                    return Err(Error::Dimension(format!(
                        "agent {i} item {a}: {} marginals, expected min(c_i, m_a) = {}",
                        marg.len(),
                        dims.copy_bound(i, a)
                    )));
                }
            }
        }
        Ok(Self { dims, utilities })
    }

    pub fn dims(&self) -> &GeneralizedDims {
        &self.dims
    }

    pub fn utilities(&self) -> &[Vec<Vec<f64>>] {
        &self.utilities
    }

    /// Marginal `u_i(a, j)` for 1-based `j`.
    pub fn marginal(&self, agent: usize, item: usize, copy: usize) -> f64 {
        self.utilities[agent][item][copy - 1]
    }

    /// `u+_i(a, j)`: total utility of `j` copies.
    pub fn cumulative(&self, agent: usize, item: usize, copies: usize) -> f64 {
        self.utilities[agent][item][..copies].iter().sum()
    }

    /// Marginals of `agent` in [`GeneralizedDims::slots`] order.
    pub fn slot_utilities(&self, agent: usize) -> Vec<f64> {
        self.utilities[agent].iter().flatten().copied().collect()
    }

    /// Embeds a one-sided profile as a unit-capacity generalized instance.
    pub fn from_one_sided(profile: &UtilityProfile) -> Self {
        let n = profile.n();
        let utilities = profile
            .rows()
            .iter()
            .map(|row| row.iter().map(|&u| vec![u]).collect())
            .collect();
        Self {
            dims: GeneralizedDims::unit(n).expect("n >= 1"),
            utilities,
        }
    }
}

pub fn validate_generalized(inst: &GeneralizedInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    for (agent, row) in inst.utilities.iter().enumerate() {
        for (item, marg) in row.iter().enumerate() {
            for (j, &value) in marg.iter().enumerate() {
                if !(-UNIT_SUM_TOL..=1.0 + UNIT_SUM_TOL).contains(&value) {
                    out.push(Violation::Range {
                        agent,
                        item,
                        copy: Some(j + 1),
                        value,
                    });
                }
            }
        }
        let sum: f64 = row.iter().flatten().sum();
        if (sum - 1.0).abs() > UNIT_SUM_TOL {
            out.push(Violation::UnitSum { agent, sum });
        }
    }
    out
}

/// Copy counts `x[i][a]` of item `a` given to agent `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    x: Vec<Vec<usize>>,
}

impl Allocation {
    pub fn new(x: Vec<Vec<usize>>) -> Self {
        Self { x }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![vec![0; m]; n],
        }
    }

    pub fn get(&self, agent: usize, item: usize) -> usize {
        self.x[agent][item]
    }

    pub fn set(&mut self, agent: usize, item: usize, copies: usize) {
        self.x[agent][item] = copies;
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.x
    }

    pub fn total(&self) -> usize {
        self.x.iter().flatten().sum()
    }

    /// Checks shape, capacities, supplies and copy limits.
    pub fn check_feasible(&self, dims: &GeneralizedDims) -> Result<()> {
        if self.x.len() != dims.n() || self.x.iter().any(|r| r.len() != dims.m()) {
            return Err(Error::Dimension(format!(
                "allocation is not a {} x {} matrix",
                dims.n(),
                dims.m()
            )));
        }
        for (agent, row) in self.x.iter().enumerate() {
            let assigned: usize = row.iter().sum();
            if assigned > dims.capacity(agent) {
                return Err(Error::CapacityExceeded {
                    agent,
                    assigned,
                    capacity: dims.capacity(agent),
                });
            }
            for (item, &copies) in row.iter().enumerate() {
                if copies > dims.max_copies(agent, item) {
                    return Err(Error::LimitExceeded {
                        agent,
                        item,
                        assigned: copies,
                        limit: dims.max_copies(agent, item),
                    });
                }
            }
        }
        for item in 0..dims.m() {
            let assigned: usize = self.x.iter().map(|r| r[item]).sum();
            if assigned > dims.supply(item) {
                return Err(Error::SupplyExceeded {
                    item,
                    assigned,
                    supply: dims.supply(item),
                });
            }
        }
        Ok(())
    }
}

pub fn allocation_welfare(alloc: &Allocation, inst: &GeneralizedInstance) -> Result<f64> {
    alloc.check_feasible(inst.dims())?;
    let mut total = 0.0;
    for (i, row) in alloc.rows().iter().enumerate() {
        for (a, &copies) in row.iter().enumerate() {
            total += inst.cumulative(i, a, copies);
        }
    }
    Ok(total)
}
