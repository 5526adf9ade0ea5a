//! Convergence criterion, the bounds it implies, and the decay estimate for
//! correlations.
//!
//! All discrete checks work with the tilted objects `|μ_b| = |μ| e^b` and
//! `ζ_c = ζ e^c`; plain mode is the special case `b ≡ 0`, `c ≡ 0`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::cluster::{self, Multiset};
use crate::error::{invalid, Error, Result};
use crate::expansion::{DiscreteCluster, SCHEMA_VERSION};
use crate::number::{binomial, factorial_f64};
use crate::polymer_space::{
    mc_estimate, zeta_c, ContinuousPolymerSpace, DiscreteKernel, DiscretePolymerSpace, PointKernel, WeightFunctions,
};
use crate::rng;
use crate::ursell::{min_connectivity_cost, EdgeWeightMatrix, DEFAULT_N_MAX};

/// Slack tolerance for exact (discrete) comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Monte Carlo comparisons pass within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;
pub const TUNE_MAX_ITER: usize = 200;
pub const TUNE_DIVERGENCE_CAP: f64 = 50.0;
/// Largest tuple size probed when sampling `γ`.
pub const GAMMA_MAX_PROBE: usize = 16;
const GAMMA_DRAWS_PER_SIZE: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    Plain,
    Tilted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolymerSlack {
    pub id: String,
    pub lhs: f64,
    pub a: f64,
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub schema: u32,
    pub mode: CriterionMode,
    pub passed: bool,
    pub worst_slack: f64,
    pub per_polymer: Vec<PolymerSlack>,
    /// `∫ d|μ|(A) e^{a(A)}` (an upper bound for sampled spaces).
    pub weighted_mass: f64,
    /// `|1 + ζ_c| <= 1` on every pair.
    pub kernel_stable: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistical_error: Option<f64>,
}

fn criterion_lhs(space: &DiscretePolymerSpace, kernel: &DiscreteKernel, w: &WeightFunctions, a: &[f64], i: usize) -> f64 {
    (0..space.len())
        .map(|j| space.abs_weight(j) * w.b[j].exp() * zeta_c(kernel, w, i, j).norm() * a[j].exp())
        .sum()
}

fn check_weights(space: &DiscretePolymerSpace, kernel: &DiscreteKernel, w: &WeightFunctions) -> Result<()> {
    if space.len() != kernel.n() || w.len() != space.len() {
        return Err(invalid("space, kernel and weight functions differ in size"));
    }
    w.validate()
}

/// Checks `∫ d|μ_b|(A') |ζ_c(A, A')| e^{a(A')} <= a(A)` for every polymer,
/// together with finiteness of `∫ d|μ| e^a`.
pub fn kp_check(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    weights: &WeightFunctions,
    tolerance: f64,
) -> Result<CriterionReport> {
    check_weights(space, kernel, weights)?;
    let mode = if weights.is_plain() { CriterionMode::Plain } else { CriterionMode::Tilted };
    let per_polymer: Vec<PolymerSlack> = (0..space.len())
        .map(|i| {
            let lhs = criterion_lhs(space, kernel, weights, &weights.a, i);
            PolymerSlack { id: space.id(i).to_string(), lhs, a: weights.a[i], slack: weights.a[i] - lhs, stderr: None }
        })
        .collect();
    let worst_slack = per_polymer.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    let weighted_mass: f64 = (0..space.len()).map(|i| space.abs_weight(i) * weights.a[i].exp()).sum();
    let n = space.len();
    let kernel_stable = (0..n).all(|i| {
        (0..n).all(|j| (1.0 + zeta_c(kernel, weights, i, j)).norm() <= 1.0 + crate::polymer_space::STABILITY_EPS)
    });
    let passed = weighted_mass.is_finite() && per_polymer.iter().all(|p| p.slack.is_finite() && p.slack >= -tolerance);
    Ok(CriterionReport {
        schema: SCHEMA_VERSION,
        mode,
        passed,
        worst_slack: if n == 0 { 0.0 } else { worst_slack },
        per_polymer,
        weighted_mass,
        kernel_stable,
        tolerance,
        statistical_error: None,
    })
}

/// Plain criterion with `b ≡ 0`, `c ≡ 0`.
pub fn kp_check_plain(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    a: &[f64],
    tolerance: f64,
) -> Result<CriterionReport> {
    kp_check(space, kernel, &WeightFunctions::plain(a.to_vec())?, tolerance)
}

/// Criterion on a sampled space at a finite set of probe points; integrals
/// are Monte Carlo estimates and a probe passes when its slack is above
/// `-3 stderr`. `a_sup` bounds `a` on the domain and enters the mass bound.
#[allow(clippy::too_many_arguments)]
pub fn kp_check_continuous(
    space: &dyn ContinuousPolymerSpace,
    kernel: &dyn PointKernel,
    probes: &[Vec<f64>],
    a: &(dyn Fn(&[f64]) -> f64 + Sync),
    b: &(dyn Fn(&[f64]) -> f64 + Sync),
    c: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    a_sup: f64,
    n_samples: u64,
    seed: u64,
) -> Result<CriterionReport> {
    let d = space.dimension();
    let mut per_polymer = Vec::with_capacity(probes.len());
    let mut tilted = false;
    for (k, x) in probes.iter().enumerate() {
        if x.len() != d {
            return Err(invalid(format!("probe {k} has dimension {} instead of {d}", x.len())));
        }
        let ax = a(x);
        if !(ax >= 0.0) {
            return Err(invalid(format!("a is negative at probe {k}")));
        }
        let est = mc_estimate(n_samples, seed, rng::tags::KP_PROBE + k as u64, |r| {
            let mut y = vec![0.0; d];
            let w = space.sample(r, &mut y);
            let (by, cxy) = (b(&y), c(x, &y));
            w * by.exp() * kernel.zeta(x, &y).abs() * cxy.exp() * a(&y).exp()
        })?;
        tilted |= b(x) != 0.0 || c(x, x) != 0.0;
        per_polymer.push(PolymerSlack {
            id: format!("probe{k}"),
            lhs: est.mean,
            a: ax,
            slack: ax - est.mean,
            stderr: Some(est.stderr),
        });
    }
    let worst = per_polymer.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    let max_se = per_polymer.iter().filter_map(|p| p.stderr).fold(0.0, f64::max);
    let weighted_mass = space.total_mass() * a_sup.exp();
    let passed = weighted_mass.is_finite()
        && per_polymer.iter().all(|p| p.slack >= -MC_SIGMAS * p.stderr.unwrap_or(0.0));
    Ok(CriterionReport {
        schema: SCHEMA_VERSION,
        mode: if tilted { CriterionMode::Tilted } else { CriterionMode::Plain },
        passed,
        worst_slack: worst,
        per_polymer,
        weighted_mass,
        kernel_stable: kernel.stability_certified(),
        tolerance: MC_SIGMAS,
        statistical_error: Some(max_se),
    })
}

/// Parametrization searched by [`auto_tune_a`].
#[derive(Clone, Debug, PartialEq)]
pub enum TuneMode {
    /// Independent value per polymer.
    PerPolymer,
    /// One constant for all polymers.
    Scalar,
    /// `a(A) = t · size(A)` with the given positive sizes.
    Proportional(Vec<f64>),
}

/// Fixed-point iteration `a_{k+1} = ∫ d|μ_b| |ζ_c| e^{a_k}` from `a_0 ≡ 0`
/// within the chosen family. `base` supplies `b` and `c`; its `a` is ignored.
/// Returns weight functions whose `a` satisfies the criterion, or
/// [`Error::TuningFailed`] when the iterates exceed the divergence cap or do
/// not settle within `max_iter` steps.
pub fn auto_tune_a(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    base: &WeightFunctions,
    max_iter: usize,
    mode: &TuneMode,
) -> Result<WeightFunctions> {
    check_weights(space, kernel, base)?;
    let n = space.len();
    let sizes: Vec<f64> = match mode {
        TuneMode::Proportional(s) => {
            if s.len() != n || s.iter().any(|&x| !(x > 0.0)) {
                return Err(invalid("proportional tuning needs one positive size per polymer"));
            }
            s.clone()
        }
        _ => vec![1.0; n],
    };
    let step = |a: &[f64]| -> Vec<f64> {
        let f: Vec<f64> = (0..n).map(|i| criterion_lhs(space, kernel, base, a, i)).collect();
        match mode {
            TuneMode::PerPolymer => f,
            TuneMode::Scalar | TuneMode::Proportional(_) => {
                let t = f.iter().zip(&sizes).map(|(v, s)| v / s).fold(0.0, f64::max);
                sizes.iter().map(|s| t * s).collect()
            }
        }
    };
    let satisfies = |a: &[f64]| -> bool {
        (0..n).all(|i| criterion_lhs(space, kernel, base, a, i) <= a[i])
    };
    let mut a = vec![0.0; n];
    for iter in 1..=max_iter {
        let next = step(&a);
        let max_a = next.iter().copied().fold(0.0, f64::max);
        if !max_a.is_finite() || max_a > TUNE_DIVERGENCE_CAP {
            return Err(Error::TuningFailed { iterations: iter, max_a });
        }
        let delta = next.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a = next;
        if delta <= 1e-14 * (1.0 + max_a) {
            // the iterates approach the least fixed point from below; nudge
            // upward until the inequality holds without tolerance
            for bump in [0.0, 1e-13, 1e-12, 1e-10, 1e-8] {
                let cand: Vec<f64> = a.iter().map(|x| x * (1.0 + bump) + bump).collect();
                if satisfies(&cand) {
                    return Ok(base.with_a(cand));
                }
            }
            return Ok(base.with_a(a));
        }
    }
    Err(Error::TuningFailed { iterations: max_iter, max_a: a.iter().copied().fold(0.0, f64::max) })
}

/// Result of comparing a truncated bound's left side with its right side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub polymers: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    /// Cumulative left side after each order, starting at the lowest order.
    pub partial_lhs: Vec<f64>,
    pub truncation_order: usize,
}

fn mst_exponent(weights: &WeightFunctions, v: &Multiset) -> Result<f64> {
    if weights.c.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let verts = cluster::vertices_of(v);
    min_connectivity_cost(&EdgeWeightMatrix::from_fn(verts.len(), |i, j| weights.c(verts[i], verts[j])))
}

/// `Σ_{n=m}^{N} n!/(n-m)! ∫d|μ_b|(A_{m+1})…∫d|μ_b|(A_n) |φ_c(A_1, .., A_n)|`,
/// cumulative per order `n`.
fn tilted_cluster_sums(
    dc: &mut DiscreteCluster,
    space: &DiscretePolymerSpace,
    weights: &WeightFunctions,
    fixed: &[usize],
    max_order: usize,
) -> Result<Vec<f64>> {
    let m = fixed.len();
    let abs_w: Vec<f64> = (0..space.len()).map(|i| space.abs_weight(i) * weights.b[i].exp()).collect();
    let base = cluster::multiset_of(fixed);
    let mut per_order = vec![0.0; max_order - m + 1];
    for (free, combined) in cluster::cluster_extensions(&dc.sums, &dc.neighbours, &base, max_order - m) {
        let c = dc.sums.connected_sum(&combined).norm();
        if c == 0.0 {
            continue;
        }
        let mult: f64 = free.iter().map(|&(t, k)| abs_w[t].powi(k as i32) / factorial_f64(k as usize)).product();
        per_order[cluster::total(&free)] += mult * c * mst_exponent(weights, &combined)?.exp();
    }
    let mut acc = 0.0;
    Ok(per_order
        .into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect())
}

fn check_bound_args(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    weights: &WeightFunctions,
    polymers: &[usize],
    max_order: usize,
) -> Result<()> {
    check_weights(space, kernel, weights)?;
    if max_order > DEFAULT_N_MAX {
        return Err(Error::Capacity { what: "bound order", requested: max_order as u64, limit: DEFAULT_N_MAX as u64 });
    }
    if let Some(&i) = polymers.iter().find(|&&i| i >= space.len()) {
        return Err(invalid(format!("polymer index {i} out of range")));
    }
    if max_order < polymers.len().max(1) {
        return Err(invalid("truncation order below the number of fixed polymers"));
    }
    Ok(())
}

/// `1 + Σ_{n=2}^{N} n ∫d|μ_b|(A_2)…d|μ_b|(A_n) |φ_c(A_1, .., A_n)| <= e^{a(A_1)}`.
pub fn verify_b1(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    weights: &WeightFunctions,
    max_order: usize,
    fixed_polymer: usize,
) -> Result<BoundCheck> {
    check_bound_args(space, kernel, weights, &[fixed_polymer], max_order)?;
    let mut dc = DiscreteCluster::new(kernel);
    let partial = tilted_cluster_sums(&mut dc, space, weights, &[fixed_polymer], max_order)?;
    let lhs = *partial.last().expect("order >= 1");
    let rhs = weights.a[fixed_polymer].exp();
    Ok(BoundCheck {
        polymers: vec![space.id(fixed_polymer).to_string()],
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs,
        partial_lhs: partial,
        truncation_order: max_order,
    })
}

/// `Σ_{n=1}^{N} ∫d|μ_b|(A_1)…d|μ_b|(A_n) (Σ_i |ζ_c(A, A_i)|) |φ_c(A_1, .., A_n)| <= a(A)`.
pub fn verify_b2(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    weights: &WeightFunctions,
    max_order: usize,
    probe_polymer: usize,
) -> Result<BoundCheck> {
    check_bound_args(space, kernel, weights, &[probe_polymer], max_order)?;
    let mut dc = DiscreteCluster::new(kernel);
    let abs_w: Vec<f64> = (0..space.len()).map(|i| space.abs_weight(i) * weights.b[i].exp()).collect();
    let mut per_order = vec![0.0; max_order];
    for n in 1..=max_order {
        for m in cluster::cluster_multisets_of_order(&dc.sums, &dc.neighbours, n) {
            let touch: f64 = m.iter().map(|&(t, k)| k as f64 * zeta_c(kernel, weights, probe_polymer, t).norm()).sum();
            if touch == 0.0 {
                continue;
            }
            let c = dc.sums.connected_sum(&m).norm();
            let mult: f64 = m.iter().map(|&(t, k)| abs_w[t].powi(k as i32) / factorial_f64(k as usize)).product();
            per_order[n - 1] += touch * mult * c * mst_exponent(weights, &m)?.exp();
        }
    }
    let mut acc = 0.0;
    let partial: Vec<f64> = per_order
        .into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    let lhs = acc;
    let rhs = weights.a[probe_polymer];
    Ok(BoundCheck {
        polymers: vec![space.id(probe_polymer).to_string()],
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs,
        partial_lhs: partial,
        truncation_order: max_order,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    AnalyticHardCore,
    /// Exact for real kernels with `|1 + ζ| <= 1`: products of factors in
    /// `[-1, 1]` with unbounded repetition.
    AnalyticReal,
    Sampled,
    UserSupplied,
}

/// `γ = sup_n sup |Π_{i=1}^n (1 + ζ(A_0, A_i)) - 1|`, `0 <= γ <= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub method: GammaMethod,
    pub n_probe: usize,
    /// Sampled values only bound the supremum from below.
    pub lower_bound: bool,
}

impl GammaEstimate {
    pub fn user_supplied(value: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&value) {
            return Err(invalid(format!("γ = {value} outside [0, 2]")));
        }
        Ok(GammaEstimate { value, method: GammaMethod::UserSupplied, n_probe: 0, lower_bound: false })
    }

    fn analytic(value: f64, method: GammaMethod) -> Self {
        GammaEstimate { value, method, n_probe: 0, lower_bound: false }
    }
}

/// `γ` for a discrete kernel: analytic for hard-core and real kernels,
/// sampled otherwise.
pub fn gamma_estimate(kernel: &DiscreteKernel, space: &DiscretePolymerSpace, n_probe: usize, seed: u64) -> GammaEstimate {
    let n = kernel.n();
    if kernel.is_zero() {
        let method = if kernel.is_hard_core() { GammaMethod::AnalyticHardCore } else { GammaMethod::AnalyticReal };
        return GammaEstimate::analytic(0.0, method);
    }
    if kernel.is_hard_core() {
        return GammaEstimate::analytic(1.0, GammaMethod::AnalyticHardCore);
    }
    if kernel.is_real() {
        // a factor f < 0 alone gives |f - 1| = 1 + |f|; otherwise powers of a
        // factor below 1 drive the product to 0
        let most_negative = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| 1.0 + kernel.zeta(i, j).re)
            .fold(0.0, f64::min);
        return GammaEstimate::analytic((1.0 - most_negative).min(2.0), GammaMethod::AnalyticReal);
    }
    gamma_sampled(kernel, space, n_probe, seed)
}

/// Sampled lower bound on `γ`: for each tuple size up to `n_probe`, a fixed
/// number of random tuples keyed by `(seed, size, draw)`. Raising `n_probe`
/// only adds tuples, so the estimate is nondecreasing in it.
pub fn gamma_sampled(kernel: &DiscreteKernel, space: &DiscretePolymerSpace, n_probe: usize, seed: u64) -> GammaEstimate {
    let n = kernel.n().min(space.len());
    let n_probe = n_probe.clamp(1, GAMMA_MAX_PROBE);
    let mut best: f64 = 0.0;
    if n > 0 {
        for size in 1..=n_probe {
            for draw in 0..GAMMA_DRAWS_PER_SIZE {
                let mut r = rng::stream(seed, rng::tags::GAMMA_PROBE + size as u64, draw);
                let a0 = r.random_range(0..n);
                let mut prod = Complex64::new(1.0, 0.0);
                for _ in 0..size {
                    prod *= 1.0 + kernel.zeta(a0, r.random_range(0..n));
                }
                best = best.max((prod - 1.0).norm());
            }
        }
    }
    let cap = if kernel.is_real() && (0..kernel.n()).all(|i| (0..kernel.n()).all(|j| kernel.zeta(i, j).re <= 0.0 && kernel.zeta(i, j).re >= -1.0)) {
        1.0
    } else {
        2.0
    };
    GammaEstimate { value: best.clamp(0.0, cap), method: GammaMethod::Sampled, n_probe, lower_bound: true }
}

/// `γ` for a point kernel; hard-core and nonpositive kernels take the exact
/// value 1, other kernels are sampled from the space.
pub fn gamma_estimate_point(
    kernel: &dyn PointKernel,
    space: &dyn ContinuousPolymerSpace,
    n_probe: usize,
    seed: u64,
) -> GammaEstimate {
    if kernel.is_hard_core() {
        return GammaEstimate::analytic(1.0, GammaMethod::AnalyticHardCore);
    }
    if kernel.is_nonpositive() {
        return GammaEstimate::analytic(1.0, GammaMethod::AnalyticReal);
    }
    let d = space.dimension();
    let n_probe = n_probe.clamp(1, GAMMA_MAX_PROBE);
    let mut best: f64 = 0.0;
    for size in 1..=n_probe {
        for draw in 0..GAMMA_DRAWS_PER_SIZE {
            let mut r = rng::stream(seed, rng::tags::GAMMA_PROBE + size as u64, draw);
            let mut x0 = vec![0.0; d];
            space.sample(&mut r, &mut x0);
            let mut y = vec![0.0; d];
            let mut prod = 1.0;
            for _ in 0..size {
                space.sample(&mut r, &mut y);
                prod *= 1.0 + kernel.zeta(&x0, &y);
            }
            best = best.max((prod - 1.0).abs());
        }
    }
    GammaEstimate { value: best.clamp(0.0, 2.0), method: GammaMethod::Sampled, n_probe, lower_bound: true }
}

/// `(1/(mγ)) [(1 + γ)^m - 1]`, written as `Σ_k C(m, k) γ^{k-1} / m` so that
/// `m = 1` and `γ = 0` give exactly 1.
pub fn decay_prefactor(m: usize, gamma: f64) -> f64 {
    let sum: f64 = (1..=m).map(|k| binomial(m as u64, k as u64) as f64 * gamma.powi(k as i32 - 1)).sum();
    if m == 1 {
        sum
    } else {
        sum / m as f64
    }
}

/// `exp{(1/(mγ))[(1+γ)^m - 1] Σ_i a(A_i)} Π_{i<j} (1 + |ζ_c(A_i, A_j)|)`.
pub fn decay_bound_rhs(fixed: &[usize], weights: &WeightFunctions, gamma: f64, kernel: &DiscreteKernel) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(invalid(format!("γ = {gamma} must be nonnegative")));
    }
    if fixed.is_empty() {
        return Err(invalid("decay bound needs at least one polymer"));
    }
    if let Some(&i) = fixed.iter().find(|&&i| i >= weights.len() || i >= kernel.n()) {
        return Err(invalid(format!("polymer index {i} out of range")));
    }
    let sum_a: f64 = fixed.iter().map(|&i| weights.a[i]).sum();
    let mut pair = 1.0;
    for (k, &i) in fixed.iter().enumerate() {
        for &j in &fixed[..k] {
            pair *= 1.0 + zeta_c(kernel, weights, i, j).norm();
        }
    }
    Ok((decay_prefactor(fixed.len(), gamma) * sum_a).exp() * pair)
}

/// Truncated left side of the decay estimate against its right side.
pub fn decay_check(
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    weights: &WeightFunctions,
    max_order: usize,
    gamma: &GammaEstimate,
) -> Result<BoundCheck> {
    check_bound_args(space, kernel, weights, fixed, max_order)?;
    if fixed.is_empty() {
        return Err(invalid("decay check needs at least one polymer"));
    }
    let mut dc = DiscreteCluster::new(kernel);
    let partial = tilted_cluster_sums(&mut dc, space, weights, fixed, max_order)?;
    let lhs = *partial.last().expect("order >= m");
    let rhs = decay_bound_rhs(fixed, weights, gamma.value, kernel)?;
    Ok(BoundCheck {
        polymers: fixed.iter().map(|&i| space.id(i).to_string()).collect(),
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs,
        partial_lhs: partial,
        truncation_order: max_order,
    })
}
