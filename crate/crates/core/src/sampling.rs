//! Seed derivation and random instance generators.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{GeneralizedDims, GeneralizedInstance, UtilityProfile};

/// Child seed for `index` under `master` (two rounds of splitmix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master) ^ index)
}

/// Uniform point on the simplex with `len` coordinates.
fn simplex_point<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = draws.iter().sum();
    draws.iter().map(|d| d / sum).collect()
}

/// Random `n x n` unit-sum profile, rows uniform on the simplex.
pub fn random_profile<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UtilityProfile {
    UtilityProfile::new((0..n).map(|_| simplex_point(n, rng)).collect())
        .expect("simplex rows are unit-sum")
}

/// Random generalized instance with nonincreasing marginals per
/// agent/item pair. Draws dims until `T <= max_total`.
pub fn random_generalized<R: Rng + ?Sized>(
    max_agents: usize,
    max_items: usize,
    max_count: usize,
    max_total: usize,
    rng: &mut R,
) -> GeneralizedInstance {
    let dims = loop {
        let n = rng.gen_range(1..=max_agents);
        let m = rng.gen_range(1..=max_items);
        let caps: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_count)).collect();
        let sups: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=max_count)).collect();
        let dims = GeneralizedDims::new(caps, sups, None).expect("positive counts");
        if dims.total() <= max_total {
            break dims;
        }
    };
    random_marginals(dims, rng)
}

/// Random nonincreasing marginals for fixed dims.
pub fn random_marginals<R: Rng + ?Sized>(
    dims: GeneralizedDims,
    rng: &mut R,
) -> GeneralizedInstance {
    let utilities = (0..dims.n())
        .map(|i| {
            let slots: usize = (0..dims.m()).map(|a| dims.copy_bound(i, a)).sum();
            let mut flat = simplex_point(slots, rng).into_iter();
            (0..dims.m())
                .map(|a| {
                    let mut v: Vec<f64> = flat.by_ref().take(dims.copy_bound(i, a)).collect();
                    v.sort_by(|x, y| y.total_cmp(x));
                    v
                })
                .collect()
        })
        .collect();
    GeneralizedInstance::new(dims, utilities).expect("simplex marginals are valid")
}

/// Random doubly substochastic `n x n` matrix: a mixture of random
/// permutation matrices with total weight in `[0.5, 1]`.
pub fn random_substochastic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let parts = rng.gen_range(1..=n.max(1) + 2);
    let mut weights: Vec<f64> = (0..parts).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let scale = rng.gen_range(0.5..=1.0) / weights.iter().sum::<f64>();
    weights.iter_mut().for_each(|w| *w *= scale);
    let mut p = vec![vec![0.0; n]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for w in weights {
        perm.shuffle(rng);
        for (i, &a) in perm.iter().enumerate() {
            p[i][a] += w;
        }
    }
    p
}
