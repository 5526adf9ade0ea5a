//! Cluster series for `log Z` and the correlation quantities `Ẑ` and
//! `Z(A_1, .., A_m) / Z`, plus direct evaluations of the defining sums.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::cluster::{self, ClusterSums, Multiset};
use crate::error::{invalid, Error, Result};
use crate::number::{factorial_f64, Number};
use crate::polymer_space::{mc_estimate, ContinuousPolymerSpace, DiscreteKernel, DiscretePolymerSpace, PointKernel, WeightFunctions};
use crate::rng;
use crate::ursell::{self, EdgeWeightMatrix, DEFAULT_N_MAX};

pub const DEFAULT_DISCRETE_ORDER: usize = 6;
pub const DEFAULT_CONTINUOUS_ORDER: usize = 4;
/// Node budget for direct tuple enumeration.
pub const DEFAULT_TUPLE_BUDGET: u64 = 10_000_000;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub order: usize,
    pub term: Number,
    pub partial_sum: Number,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

/// Per-order terms of a truncated series with prefix sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub schema: u32,
    pub quantity: String,
    pub truncation_order: usize,
    pub orders: Vec<SeriesTerm>,
    pub tail_bound: Option<f64>,
    /// Set when `tail_bound` is an estimate rather than a proved bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound_kind: Option<String>,
}

impl SeriesReport {
    pub(crate) fn from_terms(quantity: &str, first_order: usize, terms: Vec<(Complex64, Option<f64>)>) -> Self {
        let mut acc = Complex64::new(0.0, 0.0);
        let orders: Vec<SeriesTerm> = terms
            .into_iter()
            .enumerate()
            .map(|(k, (t, se))| {
                acc += t;
                SeriesTerm { order: first_order + k, term: t.into(), partial_sum: acc.into(), stderr: se, tail_bound: None }
            })
            .collect();
        SeriesReport {
            schema: SCHEMA_VERSION,
            quantity: quantity.to_string(),
            truncation_order: orders.last().map_or(0, |o| o.order),
            orders,
            tail_bound: None,
            tail_bound_kind: None,
        }
    }

    pub fn sum(&self) -> Complex64 {
        self.orders.last().map_or(Complex64::new(0.0, 0.0), |o| o.partial_sum.0)
    }

    pub fn terms(&self) -> Vec<Complex64> {
        self.orders.iter().map(|o| o.term.0).collect()
    }

    /// Combined standard error of the partial sum, for Monte Carlo series.
    pub fn stderr(&self) -> f64 {
        self.orders.iter().filter_map(|o| o.stderr).map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Attaches the labeled tail estimate `M · |t_N / t_{N-1}|` after every
    /// order `N >= 2`, where `M = Σ_A |μ|({A}) e^{a(A)}`.
    fn attach_heuristic_tail(&mut self, mass: f64) {
        for k in 0..self.orders.len() {
            if k == 0 {
                continue;
            }
            let last = self.orders[k].term.0.norm();
            let prev = self.orders[k - 1].term.0.norm();
            let ratio = if last == 0.0 {
                0.0
            } else if prev == 0.0 {
                1.0
            } else {
                (last / prev).min(1.0)
            };
            self.orders[k].tail_bound = Some(mass * ratio);
        }
        self.tail_bound = self.orders.last().and_then(|o| o.tail_bound).or(Some(0.0));
        self.tail_bound_kind = Some("heuristic".to_string());
    }

    /// CSV with columns `order,term,partial_sum,stderr,tail_bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["order", "term", "partial_sum", "stderr", "tail_bound"])
            .map_err(csv_err)?;
        for o in &self.orders {
            w.write_record([
                o.order.to_string(),
                o.term.to_string(),
                o.partial_sum.to_string(),
                o.stderr.map(|s| s.to_string()).unwrap_or_default(),
                o.tail_bound.map(|s| s.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_order(max_order: usize) -> Result<()> {
    if max_order > DEFAULT_N_MAX {
        return Err(Error::Capacity { what: "series order", requested: max_order as u64, limit: DEFAULT_N_MAX as u64 });
    }
    Ok(())
}

fn check_sizes(space: &DiscretePolymerSpace, kernel: &DiscreteKernel) -> Result<()> {
    if space.len() != kernel.n() {
        return Err(invalid(format!("space has {} polymers but kernel has {}", space.len(), kernel.n())));
    }
    Ok(())
}

/// Everything the discrete series need: the memoized connected sums and the
/// interaction graph.
pub(crate) struct DiscreteCluster {
    pub(crate) sums: ClusterSums<Complex64>,
    pub(crate) neighbours: Vec<Vec<usize>>,
}

impl DiscreteCluster {
    pub(crate) fn new(kernel: &DiscreteKernel) -> Self {
        let n = kernel.n();
        let zeta = (0..n * n).map(|k| kernel.zeta(k / n, k % n)).collect();
        DiscreteCluster { sums: ClusterSums::new(n, zeta), neighbours: kernel.neighbours() }
    }

    /// `Σ_{ordered tuples} Π μ · φ` for one multiset equals
    /// `C(k) Π_t w_t^{k_t} / k_t!`.
    fn weight_of(weights: &[Complex64], free: &Multiset) -> Complex64 {
        free.iter()
            .map(|&(t, k)| cluster::pow(&weights[t], k as u64) / factorial_f64(k as usize))
            .product()
    }
}

fn ensure_finite(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Numerical(format!("non-finite {what}")))
    }
}

/// Terms `t_n = ∫dμ(A_1)…∫dμ(A_n) φ(A_1, .., A_n)` for `n = 1..=max_order`
/// on a discrete space; non-cluster tuples are skipped.
pub fn log_partition_series(
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    max_order: usize,
    certificate: Option<&WeightFunctions>,
) -> Result<SeriesReport> {
    check_order(max_order)?;
    check_sizes(space, kernel)?;
    kernel.require_stable()?;
    let weights: Vec<Complex64> = (0..space.len()).map(|i| space.weight(i)).collect();
    let mut dc = DiscreteCluster::new(kernel);
    let mut terms = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        let multisets = cluster::cluster_multisets_of_order(&dc.sums, &dc.neighbours, n);
        let mut t = Complex64::new(0.0, 0.0);
        for m in &multisets {
            t += dc.sums.connected_sum(m) * DiscreteCluster::weight_of(&weights, m);
        }
        terms.push((ensure_finite(t, "cluster term")?, None));
    }
    let mut report = SeriesReport::from_terms("log_partition_function", 1, terms);
    report.truncation_order = max_order;
    if let Some(w) = certificate {
        if w.len() != space.len() {
            return Err(invalid("certificate size differs from the space"));
        }
        let mass: f64 = (0..space.len()).map(|i| space.abs_weight(i) * w.a[i].exp()).sum();
        report.attach_heuristic_tail(mass);
    }
    Ok(report)
}

/// Monte Carlo terms of the `log Z` series on a continuous space. Each draw
/// samples the whole `n`-tuple from the product proposal.
pub fn log_partition_series_mc(
    space: &dyn ContinuousPolymerSpace,
    kernel: &dyn PointKernel,
    max_order: usize,
    n_samples: u64,
    seed: u64,
) -> Result<SeriesReport> {
    check_order(max_order)?;
    if !kernel.stability_certified() {
        return Err(invalid("kernel is not certified stable"));
    }
    let d = space.dimension();
    let mut terms = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        let est = mc_estimate(n_samples, seed, rng::tags::LOGZ_TERM + n as u64, |r| {
            let mut pts = vec![0.0; n * d];
            let mut weight = 1.0;
            for p in pts.chunks_mut(d) {
                weight *= space.sample(r, p);
            }
            weight * ursell_of_points(kernel, &pts, d)
        })?;
        terms.push((Complex64::new(est.mean, 0.0), Some(est.stderr)));
    }
    let mut report = SeriesReport::from_terms("log_partition_function", 1, terms);
    report.truncation_order = max_order;
    Ok(report)
}

/// `φ(x_1, .., x_n)` for points packed in `pts` with dimension `d`.
pub(crate) fn ursell_of_points(kernel: &dyn PointKernel, pts: &[f64], d: usize) -> f64 {
    let n = pts.len() / d;
    let w = EdgeWeightMatrix::from_fn(n, |i, j| {
        let z = kernel.zeta(&pts[i * d..(i + 1) * d], &pts[j * d..(j + 1) * d]);
        debug_assert!((1.0 + z).abs() <= 1.0 + crate::polymer_space::STABILITY_EPS);
        z
    });
    ursell::ursell_f64(&w).unwrap_or(f64::NAN)
}

/// Direct tuple enumeration: multisets in nondecreasing index order, with a
/// running product of `(1 + ζ)` factors. Branches whose product vanishes are
/// cut (every extension multiplies by the same zero).
struct DirectSum<'a> {
    space: &'a DiscretePolymerSpace,
    kernel: &'a DiscreteKernel,
    max_len: usize,
    budget: u64,
    visited: u64,
    seq: Vec<usize>,
}

impl DirectSum<'_> {
    /// `prod` already holds the weights of the free part, the pair factors,
    /// and `1 / Π k!` of the free part; `run` is the multiplicity of the last
    /// free element.
    fn go(&mut self, start: usize, free_from: usize, prod: Complex64, run: u32) -> Result<Complex64> {
        let mut total = prod;
        if self.seq.len() == self.max_len {
            return Ok(total);
        }
        for a in start..self.space.len() {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::Capacity { what: "direct tuple enumeration", requested: self.visited, limit: self.budget });
            }
            let mut p = prod * self.space.weight(a);
            for &b in &self.seq {
                p *= 1.0 + self.kernel.zeta(a, b);
                if p == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let same = self.seq.len() > free_from && self.seq.last() == Some(&a);
            let r = if same { run + 1 } else { 1 };
            p /= r as f64;
            self.seq.push(a);
            total += self.go(a, free_from, p, r)?;
            self.seq.pop();
        }
        Ok(total)
    }
}

/// `Σ_{n=0}^{N} (1/n!) Σ_{ordered n-tuples} Π_{i<j} (1 + ζ) Π_i μ({A_i})`.
pub fn partition_direct(space: &DiscretePolymerSpace, kernel: &DiscreteKernel, n_max: usize) -> Result<Complex64> {
    constrained_partition_direct(&[], space, kernel, n_max)
}

/// `Z(A_1, .., A_m)`: the sum over added tuples `(A_{m+1}, .., A_n)`,
/// `n <= n_max`, of `Π_{i<j<=n} (1 + ζ) Π_{i>m} μ / (n-m)!`.
pub fn constrained_partition_direct(
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    n_max: usize,
) -> Result<Complex64> {
    constrained_partition_direct_budget(fixed, space, kernel, n_max, DEFAULT_TUPLE_BUDGET)
}

pub fn constrained_partition_direct_budget(
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    n_max: usize,
    budget: u64,
) -> Result<Complex64> {
    check_sizes(space, kernel)?;
    check_fixed(fixed, space)?;
    let mut base = Complex64::new(1.0, 0.0);
    for (i, &a) in fixed.iter().enumerate() {
        for &b in &fixed[..i] {
            base *= 1.0 + kernel.zeta(a, b);
        }
    }
    if n_max < fixed.len() || base == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut ds = DirectSum { space, kernel, max_len: n_max, budget, visited: 0, seq: fixed.to_vec() };
    ds.go(0, fixed.len(), base, 0)
}

fn check_fixed(fixed: &[usize], space: &DiscretePolymerSpace) -> Result<()> {
    if let Some(&bad) = fixed.iter().find(|&&i| i >= space.len()) {
        return Err(invalid(format!("fixed polymer index {bad} out of range")));
    }
    Ok(())
}

/// `Ẑ(A_1, .., A_m) = Σ_{n=m}^{N} n!/(n-m)! ∫dμ(A_{m+1})…∫dμ(A_n) φ(A_1, .., A_n)`,
/// returned per order `n`.
pub fn zhat_terms(
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    max_order: usize,
) -> Result<Vec<Complex64>> {
    let mut dc = DiscreteCluster::new(kernel);
    zhat_terms_with(&mut dc, fixed, space, kernel, max_order)
}

pub(crate) fn zhat_terms_with(
    dc: &mut DiscreteCluster,
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    max_order: usize,
) -> Result<Vec<Complex64>> {
    check_order(max_order)?;
    check_sizes(space, kernel)?;
    check_fixed(fixed, space)?;
    kernel.require_stable()?;
    let m = fixed.len();
    if m == 0 {
        return Err(invalid("Ẑ needs at least one fixed polymer"));
    }
    if max_order < m {
        return Err(invalid(format!("order {max_order} is below the number of fixed polymers {m}")));
    }
    let weights: Vec<Complex64> = (0..space.len()).map(|i| space.weight(i)).collect();
    let base = cluster::multiset_of(fixed);
    let mut terms = vec![Complex64::new(0.0, 0.0); max_order - m + 1];
    for (free, combined) in cluster::cluster_extensions(&dc.sums, &dc.neighbours, &base, max_order - m) {
        // n!/(n-m)! · (n-m)!/Π k! · Π w^k · C/n!
        let k = cluster::total(&free);
        terms[k] += dc.sums.connected_sum(&combined) * DiscreteCluster::weight_of(&weights, &free);
    }
    for t in &terms {
        ensure_finite(*t, "Ẑ term")?;
    }
    Ok(terms)
}

pub fn zhat(fixed: &[usize], space: &DiscretePolymerSpace, kernel: &DiscreteKernel, max_order: usize) -> Result<Complex64> {
    Ok(zhat_terms(fixed, space, kernel, max_order)?.into_iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockValue {
    /// Positions within the fixed tuple.
    pub positions: Vec<usize>,
    pub polymers: Vec<String>,
    pub zhat: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub schema: u32,
    pub fixed_polymers: Vec<String>,
    /// `Ẑ` of every nonempty subset of positions, keyed by subset.
    pub zhat_values: Vec<BlockValue>,
    pub ratio: Number,
    pub n_partitions: usize,
    pub truncation_order: usize,
}

/// `Z(A_1, .., A_m) / Z` as the sum over set partitions of `{1, .., m}` of
/// products of block `Ẑ` values.
pub fn correlation_ratio(
    fixed: &[usize],
    space: &DiscretePolymerSpace,
    kernel: &DiscreteKernel,
    max_order: usize,
) -> Result<CorrelationReport> {
    let m = fixed.len();
    let mut dc = DiscreteCluster::new(kernel);
    let mut blocks: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let mut ratio = Complex64::new(0.0, 0.0);
    let mut n_partitions = 0;
    for p in ursell::enumerate_set_partitions(m)? {
        n_partitions += 1;
        let mut prod = Complex64::new(1.0, 0.0);
        for block in p.blocks() {
            let v = match blocks.get(block) {
                Some(v) => *v,
                None => {
                    let sub: Vec<usize> = block.iter().map(|&i| fixed[i]).collect();
                    let v: Complex64 = zhat_terms_with(&mut dc, &sub, space, kernel, max_order)?.into_iter().sum();
                    blocks.insert(block.clone(), v);
                    v
                }
            };
            prod *= v;
        }
        ratio += prod;
    }
    let zhat_values = blocks
        .into_iter()
        .map(|(positions, v)| BlockValue {
            polymers: positions.iter().map(|&i| space.id(fixed[i]).to_string()).collect(),
            positions,
            zhat: v.into(),
        })
        .collect();
    Ok(CorrelationReport {
        schema: SCHEMA_VERSION,
        fixed_polymers: fixed.iter().map(|&i| space.id(i).to_string()).collect(),
        zhat_values,
        ratio: ratio.into(),
        n_partitions,
        truncation_order: max_order,
    })
}
