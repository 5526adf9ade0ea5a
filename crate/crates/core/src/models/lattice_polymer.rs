//! Polymers as connected subsets of a box in `Z^d`, interacting by exclusion.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::convergence::{kp_check, CriterionReport, DEFAULT_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::expansion::SCHEMA_VERSION;
use crate::polymer_space::{DiscreteKernel, DiscretePolymerSpace, Polymer, WeightFunctions};

/// Golden ratio `(√5 + 1) / 2`.
pub fn golden_ratio() -> f64 {
    (5f64.sqrt() + 1.0) / 2.0
}

/// `η = 2 log(2dφ) + 1/φ`.
pub fn eta(d: u32) -> f64 {
    let phi = golden_ratio();
    2.0 * (2.0 * d as f64 * phi).ln() + 1.0 / phi
}

/// Default maximal polymer size per dimension.
pub fn default_size_cap(d: u32) -> usize {
    match d {
        1 => 32,
        2 => 8,
        _ => 6,
    }
}

/// The kernel is stored densely, so the polymer count is bounded.
pub const MAX_POLYMERS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightRule {
    /// `w(A) = e^{-η|A|}`.
    GoldenRatio,
    /// `w(A) = weights[|A| - 1]`.
    BySize { weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticePolymerParams {
    pub d: u32,
    /// Side lengths; sites are `0 <= x_k < box[k]`.
    #[serde(rename = "box")]
    pub box_dims: Vec<u32>,
    pub max_size: usize,
    #[serde(default = "default_rule")]
    pub weight_rule: WeightRule,
    /// Overrides [`default_size_cap`].
    #[serde(default)]
    pub size_cap: Option<usize>,
}

fn default_rule() -> WeightRule {
    WeightRule::GoldenRatio
}

impl LatticePolymerParams {
    pub fn new(d: u32, box_dims: Vec<u32>, max_size: usize) -> Self {
        LatticePolymerParams { d, box_dims, max_size, weight_rule: WeightRule::GoldenRatio, size_cap: None }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if self.box_dims.len() != self.d as usize || self.box_dims.contains(&0) {
            return Err(invalid("box needs d positive side lengths"));
        }
        if self.max_size == 0 {
            return Err(invalid("maximal polymer size must be positive"));
        }
        let cap = self.size_cap.unwrap_or_else(|| default_size_cap(self.d));
        if self.max_size > cap {
            return Err(Error::Capacity { what: "polymer size", requested: self.max_size as u64, limit: cap as u64 });
        }
        if let WeightRule::BySize { weights } = &self.weight_rule {
            if weights.len() < self.max_size || weights.iter().any(|w| !w.is_finite()) {
                return Err(invalid("by-size weights need one finite value per size up to max_size"));
            }
        }
        Ok(())
    }

    fn weight(&self, size: usize) -> f64 {
        match &self.weight_rule {
            WeightRule::GoldenRatio => (-eta(self.d) * size as f64).exp(),
            WeightRule::BySize { weights } => weights[size - 1],
        }
    }
}

pub type Site = Vec<i32>;

/// Enumerated polymers with the derived space and exclusion kernel.
#[derive(Clone, Debug)]
pub struct LatticeSystem {
    /// Sites of each polymer, sorted.
    pub polymers: Vec<Vec<Site>>,
    pub space: DiscretePolymerSpace,
    pub kernel: DiscreteKernel,
}

impl LatticeSystem {
    pub fn sizes(&self) -> Vec<usize> {
        self.polymers.iter().map(Vec::len).collect()
    }
}

fn neighbours_of(site: &[i32]) -> impl Iterator<Item = Site> + '_ {
    (0..site.len()).flat_map(move |k| {
        [-1, 1].into_iter().map(move |s| {
            let mut n = site.to_vec();
            n[k] += s;
            n
        })
    })
}

/// Connected sets grown by single-site additions, deduplicated by their
/// sorted site list. `level[k]` holds the sets of size `k + 1`.
fn grow(seeds: Vec<BTreeSet<Site>>, max_size: usize, inside: impl Fn(&[i32]) -> bool, limit: usize) -> Result<Vec<Vec<BTreeSet<Site>>>> {
    let mut levels = vec![seeds];
    let mut total = levels[0].len();
    while levels.len() < max_size {
        let mut seen: HashSet<Vec<Site>> = HashSet::new();
        let mut next = Vec::new();
        for set in levels.last().expect("nonempty") {
            for site in set {
                for n in neighbours_of(site) {
                    if set.contains(&n) || !inside(&n) {
                        continue;
                    }
                    let mut grown = set.clone();
                    grown.insert(n);
                    if seen.insert(grown.iter().cloned().collect()) {
                        next.push(grown);
                        total += 1;
                        if total > limit {
                            return Err(Error::Capacity { what: "lattice polymers", requested: total as u64, limit: limit as u64 });
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        levels.push(next);
    }
    Ok(levels)
}

fn sites_of_box(dims: &[u32]) -> Vec<Site> {
    let mut out = vec![vec![]];
    for &len in dims {
        out = out
            .into_iter()
            .flat_map(|p: Site| {
                (0..len as i32).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out.sort();
    out
}

fn site_label(s: &[i32]) -> String {
    let parts: Vec<String> = s.iter().map(i32::to_string).collect();
    format!("({})", parts.join(","))
}

/// All connected subsets of the box with at most `max_size` sites, their
/// weights, and `ζ(A, A') = -1` iff `A ∩ A' ≠ ∅`.
pub fn enumerate_lattice_polymers(params: &LatticePolymerParams) -> Result<LatticeSystem> {
    params.validate()?;
    let dims = &params.box_dims;
    let seeds: Vec<BTreeSet<Site>> = sites_of_box(dims).into_iter().map(|s| BTreeSet::from([s])).collect();
    let inside = |s: &[i32]| s.iter().zip(dims).all(|(&x, &l)| x >= 0 && x < l as i32);
    let levels = grow(seeds, params.max_size, inside, MAX_POLYMERS)?;
    let polymers: Vec<Vec<Site>> = levels.into_iter().flatten().map(|s| s.into_iter().collect()).collect();
    let space = DiscretePolymerSpace::new(
        format!("lattice d={} box={:?} max_size={}", params.d, dims, params.max_size),
        polymers
            .iter()
            .map(|p| Polymer {
                id: p.iter().map(|s| site_label(s)).collect::<Vec<_>>().join(";"),
                weight: params.weight(p.len()).into(),
            })
            .collect(),
    )?;
    let kernel = DiscreteKernel::hard_core(polymers.len(), |i, j| {
        let (a, b) = (&polymers[i], &polymers[j]);
        a.iter().any(|s| b.binary_search(s).is_ok())
    });
    Ok(LatticeSystem { polymers, space, kernel })
}

/// Number of connected subsets of `Z^d` of each size `1..=max_size` that
/// contain the origin.
pub fn origin_polymer_counts(d: u32, max_size: usize) -> Result<Vec<u64>> {
    if d == 0 || max_size == 0 {
        return Err(invalid("dimension and size must be positive"));
    }
    let origin = vec![0; d as usize];
    let levels = grow(vec![BTreeSet::from([origin])], max_size, |_| true, 50_000_000)?;
    Ok(levels.iter().map(|l| l.len() as u64).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoldenRatioReport {
    pub schema: u32,
    pub d: u32,
    pub golden_ratio: f64,
    pub eta: f64,
    /// `Σ_{n>=1} (2d)^{2n} e^{-(η - 1/φ) n}` in closed form.
    pub dominating_sum: f64,
    pub inverse_golden_ratio: f64,
    pub identity_error: f64,
    pub identity_holds: bool,
    /// Criterion on the enumerated box with `a(A) = |A| / φ`.
    pub criterion: CriterionReport,
}

pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// The geometric sum bounding the criterion, and the criterion itself on
/// the finite box.
pub fn golden_ratio_criterion(params: &LatticePolymerParams) -> Result<GoldenRatioReport> {
    if params.weight_rule != WeightRule::GoldenRatio {
        return Err(invalid("golden-ratio criterion needs the golden_ratio weight rule"));
    }
    let system = enumerate_lattice_polymers(params)?;
    let phi = golden_ratio();
    let eta = eta(params.d);
    let ratio = (2.0 * params.d as f64).powi(2) * (-(eta - 1.0 / phi)).exp();
    let dominating_sum = ratio / (1.0 - ratio);
    let identity_error = (dominating_sum - 1.0 / phi).abs();
    let a = system.polymers.iter().map(|p| p.len() as f64 / phi).collect();
    let criterion = kp_check(&system.space, &system.kernel, &WeightFunctions::plain(a)?, DEFAULT_TOLERANCE)?;
    Ok(GoldenRatioReport {
        schema: SCHEMA_VERSION,
        d: params.d,
        golden_ratio: phi,
        eta,
        dominating_sum,
        inverse_golden_ratio: 1.0 / phi,
        identity_error,
        identity_holds: identity_error <= IDENTITY_TOLERANCE,
        criterion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_examples() {
        let one = enumerate_lattice_polymers(&LatticePolymerParams::new(2, vec![1, 1], 4)).unwrap();
        assert_eq!(one.polymers.len(), 1);
        let s = enumerate_lattice_polymers(&LatticePolymerParams::new(2, vec![3, 3], 2)).unwrap();
        assert_eq!(s.polymers.len(), 21);
        assert_eq!(s.sizes().iter().filter(|&&n| n == 2).count(), 12);
        // the whole 2×2 box: 4 + 4 + 4 + 1
        let s = enumerate_lattice_polymers(&LatticePolymerParams::new(2, vec![2, 2], 4)).unwrap();
        assert_eq!(s.polymers.len(), 13);
        assert!(s.kernel.is_hard_core());
        let too_big = LatticePolymerParams::new(2, vec![9, 9], 9);
        assert!(matches!(enumerate_lattice_polymers(&too_big), Err(Error::Capacity { .. })));
    }

    #[test]
    fn rooted_counts() {
        assert_eq!(origin_polymer_counts(2, 6).unwrap(), vec![1, 4, 18, 76, 315, 1296]);
        assert_eq!(origin_polymer_counts(1, 5).unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(origin_polymer_counts(3, 3).unwrap(), vec![1, 6, 45]);
    }

    #[test]
    fn eta_value() {
        assert!((eta(2) - 4.353_046_361_108_883).abs() < 1e-14);
        // e^{-(η - 1/φ)} = (2dφ)^{-2}
        for d in 1..=3 {
            let phi = golden_ratio();
            let want = (2.0 * d as f64 * phi).powi(-2);
            assert!(((-(eta(d) - 1.0 / phi)).exp() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn by_size_weights_are_validated() {
        let mut p = LatticePolymerParams::new(1, vec![5], 3);
        p.weight_rule = WeightRule::BySize { weights: vec![0.1, 0.01] };
        assert!(enumerate_lattice_polymers(&p).is_err());
        p.weight_rule = WeightRule::BySize { weights: vec![0.1, 0.01, 0.001] };
        let s = enumerate_lattice_polymers(&p).unwrap();
        assert_eq!(s.space.len(), 5 + 4 + 3);
        assert!(golden_ratio_criterion(&p).is_err());
    }
}
