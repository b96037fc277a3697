//! The generalized mechanisms `g_t` (min-cost flow over approval values) and
//! `GR_t` (a fair coin between a bundled uniform matching and `g_t`).

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::flow::{build_network, extract_allocation, solve_min_cost, solve_min_cost_max_flow};
use crate::model::{Allocation, CopySlot, GeneralizedDims, GeneralizedInput, GeneralizedInstance};
use crate::onesided::{MechanismConfig, Mode};

/// `g_t` with `delta = (2T)^(1/t)`.
pub fn default_gt_delta(total: usize, t: usize) -> f64 {
    (2.0 * total as f64).powf(1.0 / t as f64)
}

/// `GR_t` with `delta = (2T)^(1/(t+1))`.
pub fn default_grt_delta(total: usize, t: usize) -> f64 {
    (2.0 * total as f64).powf(1.0 / (t as f64 + 1.0))
}

impl MechanismConfig {
    pub fn generalized_deterministic(dims: &GeneralizedDims, t: usize) -> Result<Self> {
        Self::new(t, default_gt_delta(dims.total(), t), Mode::Deterministic, 0)
    }

    pub fn generalized_randomized(dims: &GeneralizedDims, t: usize, seed: u64) -> Result<Self> {
        Self::new(
            t,
            default_grt_delta(dims.total(), t),
            Mode::Randomized,
            seed,
        )
    }
}

fn check_input(
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
    config: &MechanismConfig,
) -> Result<()> {
    if !input.taus().approx_eq(&config.taus, 1e-12) {
        return Err(Error::ThresholdMismatch);
    }
    if input.agents() != dims.n() {
        return Err(Error::Dimension(format!(
            "input profile has {} agents, instance has {}",
            input.agents(),
            dims.n()
        )));
    }
    input.check_slots(dims)
}

/// `V[i][a][j-1] = tau_k` when `(a, j)` is in `S_{i,k}`, else 0. Each list
/// stops at the copy limit, which forbids later copies in the network.
///
/// Fails on the first `(i, a, j)` where `V` increases with `j`.
pub fn values_from_input(
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let taus = input.taus();
    let mut values = Vec::with_capacity(dims.n());
    for i in 0..dims.n() {
        let mut row = Vec::with_capacity(dims.m());
        for a in 0..dims.m() {
            let v: Vec<f64> = (1..=dims.max_copies(i, a))
                .map(|j| {
                    input
                        .level_of(i, &CopySlot(a, j))
                        .map_or(0.0, |k| taus.tau(k))
                })
                .collect();
            if let Some(j) = (1..v.len()).find(|&j| v[j] > v[j - 1]) {
                return Err(Error::IncreasingMarginals {
                    agent: i,
                    item: a,
                    copy: j + 1,
                });
            }
            row.push(v);
        }
        values.push(row);
    }
    Ok(values)
}

/// An allocation together with its welfare under the approval values `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtOutcome {
    pub allocation: Allocation,
    pub value_welfare: f64,
}

/// Runs `g_t`. With copy limits the flow may fall short of `F`; the solver
/// then returns a cheapest maximum flow.
pub fn run_gt(
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
    config: &MechanismConfig,
) -> Result<GtOutcome> {
    check_input(input, dims, config)?;
    let values = values_from_input(input, dims)?;
    let net = build_network(dims.capacities(), dims.supplies(), &values)?;
    let sol = if dims.limits().is_some() {
        solve_min_cost_max_flow(&net)
    } else {
        solve_min_cost(&net)?
    };
    let allocation = extract_allocation(&net, &sol);
    let value_welfare = allocation
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(a, &x)| values[i][a][..x].iter().sum::<f64>())
                .sum::<f64>()
        })
        .sum();
    Ok(GtOutcome {
        allocation,
        value_welfare,
    })
}

/// Uniform injective matching between agents and items on the smaller side;
/// each matched pair gets as many copies as its capacity, supply and limit
/// allow.
pub fn bundled_uniform_allocation<R: Rng + ?Sized>(
    dims: &GeneralizedDims,
    rng: &mut R,
) -> Allocation {
    let (n, m) = (dims.n(), dims.m());
    let mut alloc = Allocation::zeros(n, m);
    if n <= m {
        let mut items: Vec<usize> = (0..m).collect();
        items.shuffle(rng);
        for (i, &a) in items.iter().take(n).enumerate() {
            alloc.set(i, a, dims.max_copies(i, a));
        }
    } else {
        let mut agents: Vec<usize> = (0..n).collect();
        agents.shuffle(rng);
        for (a, &i) in agents.iter().take(m).enumerate() {
            alloc.set(i, a, dims.max_copies(i, a));
        }
    }
    alloc
}

/// Samples `GR_t`.
pub fn run_grt<R: RngCore + ?Sized>(
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
    config: &MechanismConfig,
    rng: &mut R,
) -> Result<Allocation> {
    check_input(input, dims, config)?;
    if rng.gen_bool(0.5) {
        Ok(bundled_uniform_allocation(dims, rng))
    } else {
        run_gt(input, dims, config).map(|o| o.allocation)
    }
}

/// Probability that the bundled uniform part matches any given agent/item
/// pair: `1 / max(n, m)`.
pub fn grt_random_part_distribution(dims: &GeneralizedDims) -> f64 {
    1.0 / dims.n().max(dims.m()) as f64
}

/// Lower bound on the welfare of `g_t`: `delta^-1 (s* - T tau_t)`.
pub fn welfare_lower_bound_gt(s_star: f64, total: usize, tau_last: f64, delta: f64) -> f64 {
    (s_star - total as f64 * tau_last) / delta
}

/// Per-agent coefficient of each copy slot (in [`GeneralizedDims::slots`]
/// order) in the welfare of `alloc`: 1 for the copies it hands out.
pub fn allocation_coefficients(alloc: &Allocation, dims: &GeneralizedDims) -> Vec<Vec<f64>> {
    (0..dims.n())
        .map(|i| {
            dims.slots(i)
                .into_iter()
                .map(|s| {
                    if s.copy() <= alloc.get(i, s.item()) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Expected-welfare coefficients of `GR_t` given the `g_t` allocation:
/// `q [j <= max_copies] / 2 + [j <= x_gt] / 2` with `q = 1/max(n, m)`.
pub fn grt_coefficients(gt_allocation: &Allocation, dims: &GeneralizedDims) -> Vec<Vec<f64>> {
    let q = grt_random_part_distribution(dims);
    (0..dims.n())
        .map(|i| {
            dims.slots(i)
                .into_iter()
                .map(|s| {
                    let random = if s.copy() <= dims.max_copies(i, s.item()) {
                        q
                    } else {
                        0.0
                    };
                    let det = if s.copy() <= gt_allocation.get(i, s.item()) {
                        1.0
                    } else {
                        0.0
                    };
                    0.5 * random + 0.5 * det
                })
                .collect()
        })
        .collect()
}

/// Exact expected welfare of `GR_t` on a generalized instance.
pub fn grt_expected_welfare(gt_allocation: &Allocation, inst: &GeneralizedInstance) -> f64 {
    let coeffs = grt_coefficients(gt_allocation, inst.dims());
    (0..inst.dims().n())
        .map(|i| {
            coeffs[i]
                .iter()
                .zip(inst.slot_utilities(i))
                .map(|(c, u)| c * u)
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicitation::elicit_generalized;
    use crate::model::{allocation_welfare, InputProfile};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(t: usize, delta: f64) -> MechanismConfig {
        MechanismConfig::new(t, delta, Mode::Deterministic, 0).unwrap()
    }

    #[test]
    fn empty_approvals_give_a_maximal_zero_value_allocation() {
        let dims = GeneralizedDims::new(vec![2, 1], vec![1, 2], None).unwrap();
        let c = cfg(1, 2.0);
        let out = run_gt(&InputProfile::empty(c.taus.clone(), 2), &dims, &c).unwrap();
        assert_eq!(out.allocation.total(), 3);
        assert_eq!(out.value_welfare, 0.0);
        out.allocation.check_feasible(&dims).unwrap();
    }

    #[test]
    fn follows_approvals() {
        let dims = GeneralizedDims::new(vec![2, 1], vec![2, 1], None).unwrap();
        let c = cfg(2, 2.0);
        // agent 0 wants both copies of item 0, agent 1 wants item 1
        let input = InputProfile::new(
            c.taus.clone(),
            vec![
                vec![vec![CopySlot(0, 1)], vec![CopySlot(0, 2)]],
                vec![vec![CopySlot(1, 1)], vec![]],
            ],
        )
        .unwrap();
        let out = run_gt(&input, &dims, &c).unwrap();
        assert_eq!(out.allocation.rows(), &[vec![2, 0], vec![0, 1]]);
        assert!((out.value_welfare - 1.25).abs() < 1e-12);
    }

    #[test]
    fn increasing_values_are_rejected() {
        let dims = GeneralizedDims::new(vec![2], vec![2], None).unwrap();
        let c = cfg(1, 2.0);
        let input = InputProfile::new(c.taus.clone(), vec![vec![vec![CopySlot(0, 2)]]]).unwrap();
        assert!(matches!(
            run_gt(&input, &dims, &c),
            Err(Error::IncreasingMarginals {
                agent: 0,
                item: 0,
                copy: 2
            })
        ));
    }

    #[test]
    fn limits_are_respected() {
        let dims = GeneralizedDims::new(vec![2, 2], vec![2, 2], Some(vec![vec![1, 1], vec![1, 1]]))
            .unwrap();
        let c = cfg(1, 2.0);
        let input = InputProfile::new(
            c.taus.clone(),
            vec![vec![vec![CopySlot(0, 1), CopySlot(0, 2)]], vec![vec![]]],
        )
        .unwrap();
        let out = run_gt(&input, &dims, &c).unwrap();
        out.allocation.check_feasible(&dims).unwrap();
        assert_eq!(out.allocation.total(), 4);
    }

    #[test]
    fn random_part_probability() {
        let square = GeneralizedDims::new(vec![1; 3], vec![1; 3], None).unwrap();
        assert!((grt_random_part_distribution(&square) - 1.0 / 3.0).abs() < 1e-15);
        let wide = GeneralizedDims::new(vec![2, 1], vec![1, 1, 1], None).unwrap();
        assert!((grt_random_part_distribution(&wide) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bundled_allocation_is_feasible() {
        let dims = GeneralizedDims::new(vec![3, 1, 2], vec![2, 4], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = bundled_uniform_allocation(&dims, &mut rng);
            x.check_feasible(&dims).unwrap();
            assert_eq!(
                x.rows().iter().filter(|r| r.iter().any(|&c| c > 0)).count(),
                2
            );
        }
    }

    #[test]
    fn grt_expectation_matches_coefficients() {
        let dims = GeneralizedDims::new(vec![1, 1], vec![1, 1], None).unwrap();
        let inst = GeneralizedInstance::new(
            dims.clone(),
            vec![vec![vec![0.8], vec![0.2]], vec![vec![0.5], vec![0.5]]],
        )
        .unwrap();
        let c = MechanismConfig::new(1, 2.0, Mode::Randomized, 0).unwrap();
        let input = elicit_generalized(&inst, &c.taus);
        let gt = run_gt(&input, &dims, &c).unwrap();
        assert_eq!(gt.allocation.rows(), &[vec![1, 0], vec![0, 1]]);
        let e = grt_expected_welfare(&gt.allocation, &inst);
        let det = allocation_welfare(&gt.allocation, &inst).unwrap();
        assert!((e - (0.5 * det + 0.5 * 0.5 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(welfare_lower_bound_gt(2.0, 4, 0.5, 3.0), 0.0);
        let (t, total) = (2, 8);
        let delta = default_gt_delta(total, t);
        let tau_t = delta.powi(-(t as i32));
        assert!((welfare_lower_bound_gt(1.0, total, tau_t, delta) - 0.5 / delta).abs() < 1e-12);
    }
}
