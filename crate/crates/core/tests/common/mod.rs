#![allow(dead_code)]

use clusterkit::convergence::{auto_tune_a, kp_check, TuneMode, DEFAULT_TOLERANCE, TUNE_MAX_ITER};
use clusterkit::polymer_space::{DiscreteKernel, DiscretePolymerSpace, WeightFunctions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random hard-core system whose criterion holds, with tuned plain weights
/// and a tuned tilted variant.
pub struct RandomSystem {
    pub space: DiscretePolymerSpace,
    pub kernel: DiscreteKernel,
    pub plain: WeightFunctions,
    pub tilted: WeightFunctions,
}

/// `|w| <= 8/1024`: dyadic, so the exact oracles see the same numbers.
pub fn random_hard_core_systems(count: usize, max_polymers: usize, seed: u64) -> Vec<RandomSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.random_range(1..=max_polymers);
        let weights: Vec<f64> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..=8) as f64 / 1024.0;
                if rng.random_bool(0.5) { k } else { -k }
            })
            .collect();
        let mut hit = vec![false; n * n];
        for i in 0..n {
            hit[i * n + i] = true;
            for j in 0..i {
                let h = rng.random_bool(0.5);
                hit[i * n + j] = h;
                hit[j * n + i] = h;
            }
        }
        let space = DiscretePolymerSpace::from_real_weights(format!("random{}", out.len()), &weights).unwrap();
        let kernel = DiscreteKernel::hard_core(n, |i, j| hit[i * n + j]);
        // tilts: |1 + ζ_c| <= 1 on overlapping pairs needs c <= ln 2
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..=4) as f64 / 16.0).collect();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random_range(0..=10) as f64 / 16.0;
                c[i * n + j] = v;
                c[j * n + i] = v;
            }
        }
        let tilt = WeightFunctions::tilted(vec![0.0; n], b, c).unwrap();
        let Ok(plain) = auto_tune_a(&space, &kernel, &WeightFunctions::zero(n), TUNE_MAX_ITER, &TuneMode::PerPolymer) else {
            continue;
        };
        let Ok(tilted) = auto_tune_a(&space, &kernel, &tilt, TUNE_MAX_ITER, &TuneMode::PerPolymer) else {
            continue;
        };
        if !kp_check(&space, &kernel, &plain, DEFAULT_TOLERANCE).unwrap().passed
            || !kp_check(&space, &kernel, &tilted, DEFAULT_TOLERANCE).unwrap().passed
        {
            continue;
        }
        out.push(RandomSystem { space, kernel, plain, tilted });
    }
    out
}

/// Every ordered tuple over `0..n` of length `1..=max_len`.
pub fn tuples(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut level: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_len {
        level = level
            .iter()
            .flat_map(|t| {
                (0..n).map(move |p| {
                    let mut u = t.clone();
                    u.push(p);
                    u
                })
            })
            .collect();
        all.extend(level.iter().cloned());
    }
    all
}
