//! Polymer spaces, interaction kernels and auxiliary weight functions.
//!
//! Discrete spaces carry complex weights and are integrated exactly.
//! Continuous spaces are sampled: a proposal draws points together with the
//! importance weight `d|μ|/dq`, and integrals are Monte Carlo estimates.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::number::Number;
use crate::rng;

/// Slack allowed on `|1 + ζ| <= 1` in runtime spot-checks.
pub const STABILITY_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polymer {
    pub id: String,
    pub weight: Number,
}

/// A finite polymer set with a (possibly signed or complex) weight per polymer.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePolymerSpace {
    label: String,
    polymers: Vec<Polymer>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDocument {
    #[serde(default)]
    label: String,
    polymers: Vec<Polymer>,
}

impl DiscretePolymerSpace {
    pub fn new(label: impl Into<String>, polymers: Vec<Polymer>) -> Result<Self> {
        let mut ids = HashSet::new();
        for p in &polymers {
            if !ids.insert(p.id.as_str()) {
                return Err(invalid(format!("duplicate polymer id `{}`", p.id)));
            }
            if !(p.weight.re().is_finite() && p.weight.im().is_finite()) {
                return Err(invalid(format!("non-finite weight for polymer `{}`", p.id)));
            }
        }
        Ok(DiscretePolymerSpace { label: label.into(), polymers })
    }

    /// Real weights with generated ids `p0, p1, ...`.
    pub fn from_real_weights(label: impl Into<String>, weights: &[f64]) -> Result<Self> {
        let polymers = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Polymer { id: format!("p{i}"), weight: Number::real(w) })
            .collect();
        Self::new(label, polymers)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpaceDocument = serde_json::from_str(text)?;
        Self::new(doc.label, doc.polymers)
    }

    pub fn empty() -> Self {
        DiscretePolymerSpace { label: String::new(), polymers: Vec::new() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.polymers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polymers.is_empty()
    }

    pub fn polymers(&self) -> &[Polymer] {
        &self.polymers
    }

    pub fn id(&self, i: usize) -> &str {
        &self.polymers[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.polymers.iter().position(|p| p.id == id)
    }

    pub fn weight(&self, i: usize) -> Complex64 {
        self.polymers[i].weight.0
    }

    pub fn abs_weight(&self, i: usize) -> f64 {
        self.polymers[i].weight.0.norm()
    }

    pub fn is_real(&self) -> bool {
        self.polymers.iter().all(|p| p.weight.is_real())
    }

    /// `Σ f(A) μ({A})`, or `Σ f(A) |μ({A})|` when `absolute` is set.
    pub fn integrate(&self, f: impl Fn(usize) -> Complex64, absolute: bool) -> Complex64 {
        (0..self.len())
            .map(|i| {
                let w = if absolute { Complex64::new(self.abs_weight(i), 0.0) } else { self.weight(i) };
                f(i) * w
            })
            .sum()
    }

    /// `|μ|(𝔸)`.
    pub fn total_variation(&self) -> f64 {
        (0..self.len()).map(|i| self.abs_weight(i)).sum()
    }

    /// Same polymers with weights multiplied by `e^{b(A)}`.
    pub fn tilted(&self, b: &[f64]) -> Self {
        let polymers = self
            .polymers
            .iter()
            .zip(b)
            .map(|(p, &bi)| Polymer { id: p.id.clone(), weight: Number(p.weight.0 * bi.exp()) })
            .collect();
        DiscretePolymerSpace { label: self.label.clone(), polymers }
    }

    /// Reorders polymers; `perm[k]` is the old index placed at position `k`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let polymers = perm.iter().map(|&i| self.polymers[i].clone()).collect();
        DiscretePolymerSpace { label: self.label.clone(), polymers }
    }
}

/// Pair interaction `ζ(A, A')` on a discrete space, stored as a dense
/// symmetric matrix with its certificate flags.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteKernel {
    n: usize,
    zeta: Vec<Complex64>,
    hard_core: bool,
    stability_certified: bool,
}

impl DiscreteKernel {
    /// Evaluates `f(i, j)` for `i <= j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut zeta = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..=j {
                let z = f(i, j);
                zeta[i * n + j] = z;
                zeta[j * n + i] = z;
            }
        }
        let hard_core = zeta.iter().all(|z| z.im == 0.0 && (z.re == 0.0 || z.re == -1.0));
        let stability_certified = zeta.iter().all(|z| (1.0 + z).norm() <= 1.0 + STABILITY_EPS);
        DiscreteKernel { n, zeta, hard_core, stability_certified }
    }

    pub fn from_real_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(n, |i, j| Complex64::new(f(i, j), 0.0))
    }

    /// `ζ = -1` on overlapping pairs, `0` otherwise.
    pub fn hard_core(n: usize, mut overlaps: impl FnMut(usize, usize) -> bool) -> Self {
        Self::from_real_fn(n, |i, j| if overlaps(i, j) { -1.0 } else { 0.0 })
    }

    /// `ζ ≡ 0`.
    pub fn zero(n: usize) -> Self {
        Self::from_real_fn(n, |_, _| 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn zeta(&self, i: usize, j: usize) -> Complex64 {
        self.zeta[i * self.n + j]
    }

    pub fn is_hard_core(&self) -> bool {
        self.hard_core
    }

    pub fn is_stability_certified(&self) -> bool {
        self.stability_certified
    }

    pub fn is_real(&self) -> bool {
        self.zeta.iter().all(|z| z.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.zeta.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn interacts(&self, i: usize, j: usize) -> bool {
        let z = self.zeta(i, j);
        z.re != 0.0 || z.im != 0.0
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.stability_certified {
            Ok(())
        } else {
            Err(invalid("kernel violates |1 + ζ| <= 1"))
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(perm.len(), |i, j| self.zeta(perm[i], perm[j]))
    }

    /// Neighbour lists of the interaction graph, self-loops excluded.
    pub(crate) fn neighbours(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| j != i && self.interacts(i, j)).collect())
            .collect()
    }
}

/// The auxiliary nonnegative functions `a`, `b` and the symmetric `c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFunctions {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Row-major `n × n`.
    pub c: Vec<f64>,
}

impl WeightFunctions {
    /// `a` only; `b ≡ 0`, `c ≡ 0`.
    pub fn plain(a: Vec<f64>) -> Result<Self> {
        let n = a.len();
        Self::tilted(a, vec![0.0; n], vec![0.0; n * n])
    }

    pub fn tilted(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let w = WeightFunctions { a, b, c };
        w.validate()?;
        Ok(w)
    }

    pub fn zero(n: usize) -> Self {
        WeightFunctions { a: vec![0.0; n], b: vec![0.0; n], c: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.len();
        if self.b.len() != n || self.c.len() != n * n {
            return Err(invalid("weight function sizes disagree"));
        }
        let bad = |v: f64| !(v >= 0.0) || v.is_infinite();
        if let Some(i) = self.a.iter().position(|&v| bad(v)) {
            return Err(invalid(format!("a({i}) = {} is not a finite nonnegative value", self.a[i])));
        }
        if let Some(i) = self.b.iter().position(|&v| bad(v)) {
            return Err(invalid(format!("b({i}) = {} is not a finite nonnegative value", self.b[i])));
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.c[i * n + j];
                if bad(v) {
                    return Err(invalid(format!("c({i}, {j}) = {v} is not a finite nonnegative value")));
                }
                if v != self.c[j * n + i] {
                    return Err(invalid(format!("c is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn is_plain(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0) && self.c.iter().all(|&v| v == 0.0)
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.a.len() + j]
    }

    pub fn with_a(&self, a: Vec<f64>) -> Self {
        WeightFunctions { a, b: self.b.clone(), c: self.c.clone() }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.a.len();
        WeightFunctions {
            a: perm.iter().map(|&i| self.a[i]).collect(),
            b: perm.iter().map(|&i| self.b[i]).collect(),
            c: (0..perm.len() * perm.len())
                .map(|k| self.c[perm[k / perm.len()] * n + perm[k % perm.len()]])
                .collect(),
        }
    }
}

/// `ζ_c(A, A') = ζ(A, A') e^{c(A, A')}`.
pub fn zeta_c(kernel: &DiscreteKernel, weights: &WeightFunctions, i: usize, j: usize) -> Complex64 {
    let z = kernel.zeta(i, j);
    let c = weights.c(i, j);
    if c == 0.0 {
        z
    } else {
        z * c.exp()
    }
}

/// Bounding region of a continuous space.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Finite { size: usize },
}

/// A measure space accessed through an importance sampler.
pub trait ContinuousPolymerSpace: Sync {
    fn dimension(&self) -> usize;
    /// Upper bound on `|μ|(𝔸)`.
    fn total_mass(&self) -> f64;
    /// Draws a point into `out` and returns the importance weight
    /// `d|μ|/dq` at that point.
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> f64;
    fn domain(&self) -> Domain;
}

/// `μ = density · Lebesgue` on an axis-aligned box, uniform proposal.
#[derive(Clone, Debug)]
pub struct UniformBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    density: f64,
    volume: f64,
}

impl UniformBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, density: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("box corners must have the same positive dimension"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(invalid("box must have positive extent"));
        }
        if !(density >= 0.0 && density.is_finite()) {
            return Err(invalid("density must be finite and nonnegative"));
        }
        let volume = lower.iter().zip(&upper).map(|(l, u)| u - l).product();
        Ok(UniformBox { lower, upper, density, volume })
    }

    pub fn unit_cube(d: usize) -> Self {
        UniformBox::new(vec![0.0; d], vec![1.0; d], 1.0).expect("valid cube")
    }
}

impl ContinuousPolymerSpace for UniformBox {
    fn dimension(&self) -> usize {
        self.lower.len()
    }
    fn total_mass(&self) -> f64 {
        self.density * self.volume
    }
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> f64 {
        for (k, x) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *x = self.lower[k] + u * (self.upper[k] - self.lower[k]);
        }
        self.total_mass()
    }
    fn domain(&self) -> Domain {
        Domain::Box { lower: self.lower.clone(), upper: self.upper.clone() }
    }
}

/// `μ = density · Lebesgue` on a ball, uniform proposal.
#[derive(Clone, Debug)]
pub struct UniformBall {
    center: Vec<f64>,
    radius: f64,
    density: f64,
}

impl UniformBall {
    pub fn new(center: Vec<f64>, radius: f64, density: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("ball needs a positive dimension"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("ball radius must be positive"));
        }
        if !(density >= 0.0 && density.is_finite()) {
            return Err(invalid("density must be finite and nonnegative"));
        }
        Ok(UniformBall { center, radius, density })
    }
}

/// Draws a uniform point of the ball into `out`.
pub(crate) fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = out.len();
    let mut norm2 = 0.0;
    loop {
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm2 += *x * *x;
        }
        if norm2 > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64) / norm2.sqrt();
    for (x, c) in out.iter_mut().zip(center) {
        *x = c + *x * r;
    }
}

impl ContinuousPolymerSpace for UniformBall {
    fn dimension(&self) -> usize {
        self.center.len()
    }
    fn total_mass(&self) -> f64 {
        self.density * ball_volume(self.center.len() as u32, self.radius)
    }
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> f64 {
        sample_ball(rng, &self.center, self.radius, out);
        self.total_mass()
    }
    fn domain(&self) -> Domain {
        Domain::Ball { center: self.center.clone(), radius: self.radius }
    }
}

/// A finite space with nonnegative weights seen as a one-dimensional
/// continuous space: the sampled "point" is the polymer index, drawn with
/// probability proportional to its weight.
#[derive(Clone, Debug)]
pub struct EmbeddedDiscrete {
    cumulative: Vec<f64>,
    total: f64,
}

impl EmbeddedDiscrete {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(invalid("embedded weights must be nonnegative"));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(invalid("embedded space must have positive mass"));
        }
        Ok(EmbeddedDiscrete { cumulative, total: acc })
    }
}

impl ContinuousPolymerSpace for EmbeddedDiscrete {
    fn dimension(&self) -> usize {
        1
    }
    fn total_mass(&self) -> f64 {
        self.total
    }
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> f64 {
        let u: f64 = rng.random::<f64>() * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        out[0] = idx as f64;
        self.total
    }
    fn domain(&self) -> Domain {
        Domain::Finite { size: self.cumulative.len() }
    }
}

/// Real pair interaction on a continuous space.
pub trait PointKernel: Sync {
    fn zeta(&self, x: &[f64], y: &[f64]) -> f64;
    /// `ζ ∈ {0, -1}` everywhere.
    fn is_hard_core(&self) -> bool {
        false
    }
    /// Certificate that `|1 + ζ| <= 1` everywhere.
    fn stability_certified(&self) -> bool;
    /// `ζ ∈ [-1, 0]` everywhere.
    fn is_nonpositive(&self) -> bool {
        false
    }
    /// Distance beyond which `ζ` vanishes, if any.
    fn range(&self) -> Option<f64> {
        None
    }
}

/// Mean and standard error of an importance-sampling estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

const MC_CHUNK: u64 = 1024;

/// Averages `draw(rng)` over `n_samples` independent streams keyed by
/// `(seed, tag, sample index)`. Each chunk is evaluated sequentially and the
/// chunk results are combined in index order, so the estimate does not depend
/// on the thread count.
pub(crate) fn mc_estimate<F>(n_samples: u64, seed: u64, tag: u64, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n_samples < 2 {
        return Err(invalid("Monte Carlo needs at least two samples"));
    }
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let chunks: Vec<Result<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = ((c + 1) * MC_CHUNK).min(n_samples);
            let mut out = Vec::with_capacity((hi - lo) as usize);
            for i in lo..hi {
                let mut rng = rng::stream(seed, tag, i);
                let v = draw(&mut rng);
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { sample: i });
                }
                out.push(v);
            }
            Ok(out)
        })
        .collect();
    let mut values = Vec::with_capacity(n_samples as usize);
    for c in chunks {
        values.extend(c?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate { mean, stderr: (var / n).sqrt(), n_samples })
}

/// Importance-sampling estimate of `∫ f d|μ|`.
pub fn mc_integrate<S, F>(space: &S, f: F, n_samples: u64, seed: u64) -> Result<McEstimate>
where
    S: ContinuousPolymerSpace + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = space.dimension();
    mc_estimate(n_samples, seed, rng::tags::MC_INTEGRATE, |rng| {
        let mut x = vec![0.0; d];
        let w = space.sample(rng, &mut x);
        f(&x) * w
    })
}

/// Volume of the `d`-dimensional ball of radius `r`.
pub fn ball_volume(d: u32, r: f64) -> f64 {
    // V_d = V_{d-2} · 2π/d, with V_0 = 1 and V_1 = 2
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v * r.powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrate_examples() {
        let one = DiscretePolymerSpace::from_real_weights("one", &[0.5]).unwrap();
        assert_eq!(one.integrate(|_| Complex64::new(1.0, 0.0), false).re, 0.5);
        let two = DiscretePolymerSpace::from_real_weights("two", &[0.3, -0.2]).unwrap();
        let unit = |_| Complex64::new(1.0, 0.0);
        assert!((two.integrate(unit, true).re - 0.5).abs() < 1e-15);
        assert!((two.integrate(unit, false).re - 0.1).abs() < 1e-15);
        assert!((two.total_variation() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn b_tilt_is_definitional() {
        let s = DiscretePolymerSpace::from_real_weights("s", &[0.3, -0.2, 0.05]).unwrap();
        let b = [0.1, 0.0, 2.0];
        let f = |i: usize| Complex64::new(i as f64 + 1.0, 0.5);
        let lhs = s.tilted(&b).integrate(f, false);
        let rhs = s.integrate(|i| f(i) * b[i].exp(), false);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn space_json_and_validation() {
        let s = DiscretePolymerSpace::from_json(
            r#"{"label":"x","polymers":[{"id":"A","weight":0.5},{"id":"B","weight":[0.1,-0.2]}]}"#,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.weight(1), Complex64::new(0.1, -0.2));
        assert!(!s.is_real());
        let err = DiscretePolymerSpace::from_json(r#"{"polymers":[{"id":"A","weight":1,"colour":2}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("colour"));
        let dup = DiscretePolymerSpace::from_json(r#"{"polymers":[{"id":"A","weight":1},{"id":"A","weight":2}]}"#);
        assert!(dup.is_err());
    }

    #[test]
    fn kernel_flags() {
        let hc = DiscreteKernel::hard_core(3, |i, j| i == j || (i, j) == (0, 1));
        assert!(hc.is_hard_core() && hc.is_stability_certified());
        assert_eq!(hc.zeta(1, 0).re, -1.0);
        assert_eq!(hc.neighbours(), vec![vec![1], vec![0], vec![]]);
        let unstable = DiscreteKernel::from_real_fn(2, |_, _| 0.5);
        assert!(!unstable.is_stability_certified());
        assert!(unstable.require_stable().is_err());
        let complex = DiscreteKernel::from_fn(2, |_, _| Complex64::new(-0.5, 0.5));
        assert!(complex.is_stability_certified() && !complex.is_real());
    }

    #[test]
    fn zeta_c_examples() {
        let k = DiscreteKernel::from_real_fn(2, |i, j| if i == j { 0.0 } else { -0.5 });
        let mut w = WeightFunctions::zero(2);
        assert_eq!(zeta_c(&k, &w, 0, 1).re, -0.5);
        w.c = vec![0.0, 2f64.ln(), 2f64.ln(), 0.0];
        assert!((zeta_c(&k, &w, 0, 1).re + 1.0).abs() < 1e-15);
        assert_eq!(zeta_c(&k, &w, 0, 0).re, 0.0);
        let neg = WeightFunctions::tilted(vec![1.0, -1.0], vec![0.0; 2], vec![0.0; 4]);
        assert!(neg.is_err());
        let asym = WeightFunctions::tilted(vec![0.0; 2], vec![0.0; 2], vec![0.0, 1.0, 2.0, 0.0]);
        assert!(asym.is_err());
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 1.0) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-15);
        assert!((ball_volume(3, 2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn mc_constant_integrand() {
        let space = UniformBox::new(vec![0.0, 0.0], vec![2.0, 1.5], 0.7).unwrap();
        let est = mc_integrate(&space, |_| 1.0, 1000, 3).unwrap();
        assert!((est.mean - 2.1).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn mc_linear_integrand() {
        let unit = UniformBox::unit_cube(1);
        let a = mc_integrate(&unit, |x| x[0], 1_000_000, 1).unwrap();
        assert!((a.mean - 0.5).abs() <= 3.0 * a.stderr, "{a:?}");
        let b = mc_integrate(&unit, |x| x[0], 1_000_000, 2).unwrap();
        assert_ne!(a.mean, b.mean);
        assert!((a.mean - b.mean).abs() <= 6.0 * a.stderr.max(b.stderr));
        let again = mc_integrate(&unit, |x| x[0], 1_000_000, 1).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn mc_reports_non_finite_sample() {
        let unit = UniformBox::unit_cube(1);
        let err = mc_integrate(&unit, |x| if x[0] < 0.5 { f64::NAN } else { 1.0 }, 100, 0).unwrap_err();
        assert!(matches!(err, Error::NonFiniteSample { .. }));
        assert!(mc_integrate(&unit, |_| 1.0, 1, 0).is_err());
    }

    #[test]
    fn mc_over_embedded_discrete_matches_exact_sum() {
        let weights = [0.2, 0.5, 0.05, 0.25];
        let space = DiscretePolymerSpace::from_real_weights("d", &weights).unwrap();
        let f = |i: usize| (i as f64 + 1.0).sqrt();
        let exact = space.integrate(|i| Complex64::new(f(i), 0.0), true).re;
        let embedded = EmbeddedDiscrete::new(&weights).unwrap();
        let est = mc_integrate(&embedded, |x| f(x[0] as usize), 200_000, 11).unwrap();
        assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn ball_samples_stay_inside() {
        let ball = UniformBall::new(vec![1.0, -1.0, 0.5], 0.3, 1.0).unwrap();
        let mut x = [0.0; 3];
        for i in 0..1000 {
            let mut rng = rng::stream(0, 0, i);
            ball.sample(&mut rng, &mut x);
            let r2 = (x[0] - 1.0).powi(2) + (x[1] + 1.0).powi(2) + (x[2] - 0.5).powi(2);
            assert!(r2 <= 0.09 + 1e-12);
        }
        let est = mc_integrate(&ball, |_| 1.0, 10, 0).unwrap();
        assert!((est.mean - ball_volume(3, 0.3)).abs() < 1e-14);
    }
}
