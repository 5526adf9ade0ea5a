//! Classical gas with a nonnegative pair potential and fugacity `z`.

use std::f64::consts::E;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expansion::{log_partition_series_mc, ursell_of_points, SeriesReport, SCHEMA_VERSION};
use crate::polymer_space::{ball_volume, mc_estimate, sample_ball, McEstimate, PointKernel, UniformBox};
use crate::rng;

const GL_DEGREE: usize = 48;
/// Radial panels per unit of `c · r` in tilted integrals.
const PANELS_PER_RATE: f64 = 4.0;
const SUP_GRID: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `U = ∞` for `r < radius`, 0 otherwise.
    HardSphere { radius: f64 },
    /// `U = height >= 0` for `r < radius`, 0 otherwise.
    SquareWell { radius: f64, height: f64 },
    /// Piecewise-linear `U(r)` through `(radii[k], values[k])`, constant
    /// below the first radius and 0 beyond the last.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
    /// `U ≡ 0`.
    None,
}

impl Potential {
    fn validate(&self) -> Result<()> {
        match self {
            Potential::HardSphere { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("hard-sphere radius must be positive"));
                }
            }
            Potential::SquareWell { radius, height } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("square-well radius must be positive"));
                }
                if !(*height >= 0.0 && height.is_finite()) {
                    return Err(invalid("square-well height must be finite and nonnegative (repulsive only)"));
                }
            }
            Potential::Tabulated { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(invalid("tabulated potential needs matching, nonempty radii and values"));
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) || !radii.iter().all(|r| r.is_finite()) {
                    return Err(invalid("tabulated radii must be finite, nonnegative and increasing"));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(invalid("tabulated potential values must be finite and nonnegative"));
                }
            }
            Potential::None => {}
        }
        Ok(())
    }

    /// Distance beyond which `U` vanishes.
    pub fn range(&self) -> f64 {
        match self {
            Potential::HardSphere { radius } | Potential::SquareWell { radius, .. } => *radius,
            Potential::Tabulated { radii, .. } => *radii.last().expect("validated"),
            Potential::None => 0.0,
        }
    }

    /// `1 - e^{-βU(r)}`.
    fn mayer_deficit(&self, beta: f64, r: f64) -> f64 {
        match self {
            Potential::HardSphere { radius } => f64::from(u8::from(r < *radius)),
            Potential::SquareWell { radius, height } => {
                if r < *radius {
                    -(-beta * height).exp_m1()
                } else {
                    0.0
                }
            }
            Potential::Tabulated { radii, values } => {
                let last = radii.len() - 1;
                let u = if r > radii[last] {
                    return 0.0;
                } else if r <= radii[0] {
                    values[0]
                } else {
                    let k = radii.partition_point(|&x| x < r);
                    let (r0, r1) = (radii[k - 1], radii[k]);
                    let t = (r - r0) / (r1 - r0);
                    values[k - 1] * (1.0 - t) + values[k] * t
                };
                -(-beta * u).exp_m1()
            }
            Potential::None => 0.0,
        }
    }

    /// Radii where the integrand may be non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::Tabulated { radii, .. } => radii.clone(),
            other => vec![other.range()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalGasParams {
    pub d: u32,
    pub beta: f64,
    pub z: f64,
    pub potential: Potential,
    /// `ζ` is set to 0 beyond this distance; defaults to the potential's range.
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default, rename = "box")]
    pub region: Option<BoxRegion>,
}

impl ClassicalGasParams {
    pub fn new(d: u32, beta: f64, z: f64, potential: Potential) -> Result<Self> {
        let p = ClassicalGasParams { d, beta, z, potential, cutoff: None, region: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be positive"));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(invalid("fugacity must be positive"));
        }
        if let Some(c) = self.cutoff {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid("cutoff must be finite and nonnegative"));
            }
        }
        if let Some(b) = &self.region {
            if b.lower.len() != self.d as usize || b.upper.len() != self.d as usize {
                return Err(invalid("box dimension differs from d"));
            }
        }
        self.potential.validate()
    }

    /// Distance beyond which `ζ` is zero.
    pub fn interaction_range(&self) -> f64 {
        let r = self.potential.range();
        self.cutoff.map_or(r, |c| c.min(r))
    }

    /// Radius per order of the Monte Carlo domains: the cutoff when given,
    /// otherwise the interaction range.
    pub fn domain_radius(&self) -> f64 {
        self.cutoff.unwrap_or_else(|| self.potential.range())
    }

    fn deficit(&self, r: f64) -> f64 {
        if r > self.interaction_range() {
            0.0
        } else {
            self.potential.mayer_deficit(self.beta, r)
        }
    }
}

/// `ζ(x, y) = e^{-βU(|x - y|)} - 1`.
pub fn mayer_zeta(params: &ClassicalGasParams, x: &[f64], y: &[f64]) -> f64 {
    let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    -params.deficit(r)
}

/// The Mayer function as a point kernel.
#[derive(Clone, Debug)]
pub struct MayerKernel {
    params: ClassicalGasParams,
}

impl MayerKernel {
    pub fn new(params: &ClassicalGasParams) -> Result<Self> {
        params.validate()?;
        Ok(MayerKernel { params: params.clone() })
    }
}

impl PointKernel for MayerKernel {
    fn zeta(&self, x: &[f64], y: &[f64]) -> f64 {
        mayer_zeta(&self.params, x, y)
    }
    fn is_hard_core(&self) -> bool {
        matches!(self.params.potential, Potential::HardSphere { .. } | Potential::None)
    }
    fn stability_certified(&self) -> bool {
        true
    }
    fn is_nonpositive(&self) -> bool {
        true
    }
    fn range(&self) -> Option<f64> {
        Some(self.params.interaction_range())
    }
}

/// Surface area of the unit sphere in `R^d`.
fn unit_sphere_area(d: u32) -> f64 {
    d as f64 * ball_volume(d, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMethod {
    ClosedForm,
    Quadrature,
}

/// `∫ dx (1 - e^{-βU(x)}) e^{c|x|}` and how it was obtained.
fn tilted_integral(params: &ClassicalGasParams, c: f64) -> Result<(f64, IntegralMethod)> {
    let range = params.interaction_range();
    let d = params.d;
    if range == 0.0 || matches!(params.potential, Potential::None) {
        return Ok((0.0, IntegralMethod::ClosedForm));
    }
    let flat = match params.potential {
        Potential::HardSphere { .. } => Some(1.0),
        Potential::SquareWell { height, .. } => Some(-(-params.beta * height).exp_m1()),
        _ => None,
    };
    if let Some(g) = flat {
        if c == 0.0 {
            return Ok((g * ball_volume(d, range), IntegralMethod::ClosedForm));
        }
        if d == 1 {
            return Ok((g * 2.0 * (c * range).exp_m1() / c, IntegralMethod::ClosedForm));
        }
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).expect("nonzero"));
    let mut knots: Vec<f64> = std::iter::once(0.0)
        .chain(params.potential.breakpoints().into_iter().filter(|&r| r > 0.0 && r < range))
        .chain(std::iter::once(range))
        .collect();
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let panels = ((c * (w[1] - w[0]) * PANELS_PER_RATE).ceil() as usize).max(1);
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let (lo, hi) = (w[0] + p as f64 * h, w[0] + (p + 1) as f64 * h);
            total += gl.integrate(lo, hi, |r| {
                r.powi(d as i32 - 1) * params.potential.mayer_deficit(params.beta, r) * (c * r).exp()
            });
        }
    }
    let total = total * unit_sphere_area(d);
    if !total.is_finite() {
        return Err(Error::Numerical("radial quadrature produced a non-finite value".into()));
    }
    Ok((total, IntegralMethod::Quadrature))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondconvReport {
    pub schema: u32,
    /// `I = ∫ dx (1 - e^{-βU(x)})`.
    pub integral: f64,
    pub method: IntegralMethod,
    pub z: f64,
    pub lhs: f64,
    /// `e^{-1}`.
    pub threshold: f64,
    pub passed: bool,
    /// `e^{-1} / I`; absent when `I = 0`.
    pub max_z: Option<f64>,
    /// The constant weight function that certifies the criterion.
    pub a: f64,
}

/// `z ∫ dx (1 - e^{-βU(x)}) <= e^{-1}`, the criterion with `a ≡ 1`.
pub fn check_condconv(params: &ClassicalGasParams) -> Result<CondconvReport> {
    params.validate()?;
    let (integral, method) = tilted_integral(params, 0.0)?;
    let lhs = params.z * integral;
    let threshold = (-1.0f64).exp();
    Ok(CondconvReport {
        schema: SCHEMA_VERSION,
        integral,
        method,
        z: params.z,
        lhs,
        threshold,
        passed: lhs <= threshold,
        max_z: (integral > 0.0).then(|| threshold / integral),
        a: 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayConditionReport {
    pub schema: u32,
    pub c_rate: f64,
    /// `I_c = ∫ dx (1 - e^{-βU(x)}) e^{c|x|}`.
    pub integral: f64,
    pub method: IntegralMethod,
    pub lhs: f64,
    pub threshold: f64,
    pub passed: bool,
    /// `K` in `|ρ_2^t(x_1, x_2)| <= K e^{-c|x_1 - x_2|}`, valid at every
    /// separation: `e^3 (1 + sup_r (1 - e^{-βU(r)}) e^{cr})`.
    pub decay_constant: Option<f64>,
    /// Large-separation limit of the constant, `e^3`.
    pub asymptotic_constant: f64,
}

fn sup_tilt(params: &ClassicalGasParams, c: f64) -> f64 {
    let range = params.interaction_range();
    if range == 0.0 {
        return 0.0;
    }
    match params.potential {
        Potential::HardSphere { .. } | Potential::SquareWell { .. } => params.deficit(0.0) * (c * range).exp(),
        _ => {
            let mut pts: Vec<f64> = (0..=SUP_GRID).map(|k| range * k as f64 / SUP_GRID as f64).collect();
            pts.extend(params.potential.breakpoints().into_iter().filter(|&r| r <= range));
            pts.into_iter().map(|r| params.deficit(r) * (c * r).exp()).fold(0.0, f64::max)
        }
    }
}

/// `z ∫ dx (1 - e^{-βU(x)}) e^{c|x|} <= e^{-1}` with `c(x) = c_rate |x|`.
pub fn check_decay_condition(params: &ClassicalGasParams, c_rate: f64) -> Result<DecayConditionReport> {
    params.validate()?;
    if !(c_rate >= 0.0 && c_rate.is_finite()) {
        return Err(invalid("decay rate must be finite and nonnegative"));
    }
    let (integral, method) = tilted_integral(params, c_rate)?;
    let lhs = params.z * integral;
    let threshold = (-1.0f64).exp();
    let passed = lhs <= threshold;
    Ok(DecayConditionReport {
        schema: SCHEMA_VERSION,
        c_rate,
        integral,
        method,
        lhs,
        threshold,
        passed,
        decay_constant: passed.then(|| E.powi(3) * (1.0 + sup_tilt(params, c_rate))),
        asymptotic_constant: E.powi(3),
    })
}

/// `z^2 (1/2) ∫ dx ζ(0, x) = -z^2 I / 2`.
pub fn pressure_order1_closed_form(params: &ClassicalGasParams) -> Result<f64> {
    let (integral, _) = tilted_integral(params, 0.0)?;
    Ok(-0.5 * params.z * params.z * integral)
}

/// `βp = z + Σ_{n>=1} z^{n+1} ∫ dx_1…dx_n φ(0, x_1, .., x_n)`. The order-`n`
/// term is a Monte Carlo integral with the `x_i` uniform in the ball of radius
/// `n · cutoff` about the origin, outside of which `φ` vanishes.
pub fn pressure_series(params: &ClassicalGasParams, max_order: usize, n_samples: u64, seed: u64) -> Result<SeriesReport> {
    params.validate()?;
    let kernel = MayerKernel::new(params)?;
    let d = params.d as usize;
    let range = params.interaction_range();
    let mut terms = vec![(Complex64::new(params.z, 0.0), Some(0.0))];
    for n in 1..=max_order {
        if range == 0.0 {
            terms.push((Complex64::new(0.0, 0.0), Some(0.0)));
            continue;
        }
        let radius = n as f64 * params.domain_radius();
        let vol = ball_volume(params.d, radius);
        let est = mc_estimate(n_samples, seed, rng::tags::PRESSURE_TERM + n as u64, |r| {
            let mut pts = vec![0.0; (n + 1) * d];
            let origin = vec![0.0; d];
            for p in pts[d..].chunks_mut(d) {
                sample_ball(r, &origin, radius, p);
            }
            vol.powi(n as i32) * ursell_of_points(&kernel, &pts, d)
        })?;
        let scale = params.z.powi(n as i32 + 1);
        terms.push((Complex64::new(scale * est.mean, 0.0), Some(scale * est.stderr)));
    }
    let mut report = SeriesReport::from_terms("beta_pressure", 0, terms);
    report.truncation_order = max_order;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rho2Report {
    pub schema: u32,
    pub value: f64,
    pub stderr: f64,
    /// Order-`n` contributions for `n = 2..=max_order`.
    pub terms: Vec<McEstimate>,
}

/// `ρ_2^t(x_1, x_2) = Σ_{n>=2} n(n-1) z^n ∫ dx_3…dx_n φ(x_1, .., x_n)`. The
/// `n = 2` term is exactly `z^2 ζ(x_1, x_2)`; higher terms sample the
/// intermediate points in the ball of radius `(n-1) · cutoff` about `x_1`.
pub fn rho2_truncated(
    params: &ClassicalGasParams,
    x1: &[f64],
    x2: &[f64],
    max_order: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Rho2Report> {
    params.validate()?;
    let d = params.d as usize;
    if x1.len() != d || x2.len() != d {
        return Err(invalid("points must have dimension d"));
    }
    if max_order < 2 {
        return Err(invalid("truncated correlation starts at order 2"));
    }
    let kernel = MayerKernel::new(params)?;
    let range = params.interaction_range();
    let z = params.z;
    let mut terms = vec![McEstimate { mean: z * z * mayer_zeta(params, x1, x2), stderr: 0.0, n_samples: 0 }];
    let sep = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    for n in 3..=max_order {
        let radius = (n - 1) as f64 * params.domain_radius();
        if range == 0.0 || sep > (n - 1) as f64 * range {
            terms.push(McEstimate { mean: 0.0, stderr: 0.0, n_samples: 0 });
            continue;
        }
        let vol = ball_volume(params.d, radius);
        let est = mc_estimate(n_samples, seed, rng::tags::RHO2_TERM + n as u64, |r| {
            let mut pts = vec![0.0; n * d];
            pts[..d].copy_from_slice(x1);
            pts[d..2 * d].copy_from_slice(x2);
            for p in pts[2 * d..].chunks_mut(d) {
                sample_ball(r, x1, radius, p);
            }
            vol.powi(n as i32 - 2) * ursell_of_points(&kernel, &pts, d)
        })?;
        let scale = (n * (n - 1)) as f64 * z.powi(n as i32);
        terms.push(McEstimate { mean: scale * est.mean, stderr: scale * est.stderr, n_samples: est.n_samples });
    }
    let value = terms.iter().map(|t| t.mean).sum();
    let stderr = terms.iter().map(|t| t.stderr * t.stderr).sum::<f64>().sqrt();
    Ok(Rho2Report { schema: SCHEMA_VERSION, value, stderr, terms })
}

/// `log Z` series for the gas confined to its box.
pub fn finite_volume_log_partition(params: &ClassicalGasParams, max_order: usize, n_samples: u64, seed: u64) -> Result<SeriesReport> {
    params.validate()?;
    let region = params.region.as_ref().ok_or_else(|| invalid("finite-volume run needs a box"))?;
    let space = UniformBox::new(region.lower.clone(), region.upper.clone(), params.z)?;
    log_partition_series_mc(&space, &MayerKernel::new(params)?, max_order, n_samples, seed)
}
