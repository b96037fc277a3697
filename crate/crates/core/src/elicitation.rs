//! Threshold approval elicitation and consistency checks.

use std::fmt;

use crate::model::{
    CopySlot, GeneralizedDims, GeneralizedInput, GeneralizedInstance, InputProfile, OneSidedInput,
    ThresholdVector, UtilityProfile,
};

/// Slack used when checking a utility profile against approval sets. The
/// check accepts the closure of the consistent set.
pub const CONSISTENCY_SLACK: f64 = 1e-12;

/// Classifies every `(member, utility)` pair of each agent by threshold level.
fn elicit_rows<K, I>(rows: I, taus: &ThresholdVector) -> InputProfile<K>
where
    K: Ord + Copy + fmt::Debug,
    I: IntoIterator<Item = Vec<(K, f64)>>,
{
    let t = taus.len();
    let sets = rows
        .into_iter()
        .map(|row| {
            let mut sets = vec![Vec::new(); t];
            for (member, u) in row {
                if let Some(k) = taus.level_of(u) {
                    sets[k - 1].push(member);
                }
            }
            sets
        })
        .collect();
    InputProfile::new(taus.clone(), sets).expect("levels are disjoint by construction")
}

/// `S_{i,k} = { j : tau_{k-1} >= u_i(j) > tau_k }`.
pub fn elicit(profile: &UtilityProfile, taus: &ThresholdVector) -> OneSidedInput {
    elicit_rows(
        profile
            .rows()
            .iter()
            .map(|r| r.iter().copied().enumerate().collect()),
        taus,
    )
}

/// Classifies every `(item, copy)` pair by its marginal utility.
pub fn elicit_generalized(inst: &GeneralizedInstance, taus: &ThresholdVector) -> GeneralizedInput {
    let dims = inst.dims();
    elicit_rows(
        (0..dims.n()).map(|i| {
            dims.slots(i)
                .into_iter()
                .map(|s| (s, inst.marginal(i, s.item(), s.copy())))
                .collect()
        }),
        taus,
    )
}

/// The first place where a utility profile disagrees with approval sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyViolation<K> {
    pub agent: usize,
    /// Level of the offending member, `None` when it is unlisted.
    pub level: Option<usize>,
    pub member: K,
    pub utility: f64,
}

impl<K: fmt::Debug> fmt::Display for ConsistencyViolation<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(k) => write!(
                f,
                "agent {} approves {:?} at level {k} but has utility {}",
                self.agent, self.member, self.utility
            ),
            None => write!(
                f,
                "agent {} leaves {:?} unlisted but has utility {}",
                self.agent, self.member, self.utility
            ),
        }
    }
}

fn check_rows<K, I>(rows: I, input: &InputProfile<K>) -> Result<(), ConsistencyViolation<K>>
where
    K: Ord + Copy + fmt::Debug,
    I: IntoIterator<Item = Vec<(K, f64)>>,
{
    let taus = input.taus();
    for (agent, row) in rows.into_iter().enumerate() {
        for (member, u) in row {
            let level = input.level_of(agent, &member);
            let ok = match level {
                Some(k) => {
                    u <= taus.tau(k - 1) + CONSISTENCY_SLACK && u > taus.tau(k) - CONSISTENCY_SLACK
                }
                None => u <= taus.last() + CONSISTENCY_SLACK,
            };
            if !ok {
                return Err(ConsistencyViolation {
                    agent,
                    level,
                    member,
                    utility: u,
                });
            }
        }
    }
    Ok(())
}

/// Checks `u |> S` on the closure of the consistent set.
///
/// Members that reference items outside the profile are never visited, so
/// callers should run [`OneSidedInput::check_items`] first.
pub fn is_consistent(
    profile: &UtilityProfile,
    input: &OneSidedInput,
) -> Result<(), ConsistencyViolation<usize>> {
    if input.agents() != profile.n() {
        return Err(ConsistencyViolation {
            agent: input.agents().min(profile.n()),
            level: None,
            member: 0,
            utility: f64::NAN,
        });
    }
    check_rows(
        profile
            .rows()
            .iter()
            .map(|r| r.iter().copied().enumerate().collect()),
        input,
    )
}

pub fn is_consistent_generalized(
    inst: &GeneralizedInstance,
    input: &GeneralizedInput,
) -> Result<(), ConsistencyViolation<CopySlot>> {
    let dims = inst.dims();
    if input.agents() != dims.n() {
        return Err(ConsistencyViolation {
            agent: input.agents().min(dims.n()),
            level: None,
            member: CopySlot(0, 1),
            utility: f64::NAN,
        });
    }
    check_rows(
        (0..dims.n()).map(|i| {
            dims.slots(i)
                .into_iter()
                .map(|s| (s, inst.marginal(i, s.item(), s.copy())))
                .collect()
        }),
        input,
    )
}

/// Per-agent interval sums `(sum lo, sum hi)` of the closed consistent box.
fn bound_sums<K: Ord + Copy + fmt::Debug>(
    input: &InputProfile<K>,
    agent: usize,
    slot_count: usize,
) -> (f64, f64) {
    let taus = input.taus();
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut listed = 0;
    for (k, _) in input.approvals(agent) {
        lo += taus.tau(k);
        hi += taus.tau(k - 1);
        listed += 1;
    }
    hi += slot_count.saturating_sub(listed) as f64 * taus.last();
    (lo, hi)
}

fn feasible_sums(lo: f64, hi: f64) -> bool {
    lo <= 1.0 + CONSISTENCY_SLACK && hi >= 1.0 - CONSISTENCY_SLACK
}

/// Whether some unit-sum utility profile over `n_items` items is consistent
/// with `input` (closed-interval relaxation).
pub fn feasibility(input: &OneSidedInput, n_items: usize) -> bool {
    if input.check_items(n_items).is_err() {
        return false;
    }
    (0..input.agents()).all(|i| {
        let (lo, hi) = bound_sums(input, i, n_items);
        feasible_sums(lo, hi)
    })
}

pub fn feasibility_generalized(input: &GeneralizedInput, dims: &GeneralizedDims) -> bool {
    if input.check_slots(dims).is_err() {
        return false;
    }
    (0..input.agents()).all(|i| {
        let (lo, hi) = bound_sums(input, i, dims.slots(i).len());
        feasible_sums(lo, hi)
    })
}
