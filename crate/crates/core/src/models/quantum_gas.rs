//! Convergence criterion for the quantum gas in the Feynman–Kac loop
//! representation: `β (2πβ)^{-d/2} ∫U · Σ_{ℓ>=1} ℓ^{-d/2} <= -log z`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expansion::SCHEMA_VERSION;

/// Terms summed explicitly before the integral tail bracket.
pub const ZETA_PARTIAL_TERMS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    Bosons,
    Fermions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumGasParams {
    pub d: u32,
    pub beta: f64,
    pub z: f64,
    /// `∫ U(x) dx` for a nonnegative potential.
    pub potential_integral: f64,
    /// Does not enter the criterion.
    #[serde(default)]
    pub statistics: Option<Statistics>,
}

/// Rigorous bracket `[lo, hi]` for `Σ_{ℓ>=1} ℓ^{-s}`, `s > 1`: the first
/// `n_terms` terms plus `∫_{N+1}^∞ x^{-s} dx <= tail <= ∫_N^∞ x^{-s} dx`.
pub fn zeta_bracket(s: f64, n_terms: u64) -> Result<(f64, f64)> {
    if !(s > 1.0) {
        return Err(invalid(format!("Σ ℓ^-s diverges for s = {s}")));
    }
    if n_terms == 0 {
        return Err(invalid("need at least one explicit term"));
    }
    // smallest terms first
    let partial: f64 = (1..=n_terms).rev().map(|l| (l as f64).powf(-s)).sum();
    let n = n_terms as f64;
    let lo = partial + (n + 1.0).powf(1.0 - s) / (s - 1.0);
    let hi = partial + n.powf(1.0 - s) / (s - 1.0);
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumCriterionReport {
    pub schema: u32,
    pub d: u32,
    pub beta: f64,
    pub z: f64,
    pub potential_integral: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    pub zeta_lower: f64,
    pub zeta_upper: f64,
    /// Left side evaluated with the upper end of the bracket.
    pub lhs: f64,
    pub lhs_lower: f64,
    /// `-log z`.
    pub rhs: f64,
    pub passed: bool,
    /// Largest fugacity for which the criterion holds, `e^{-lhs}`.
    pub max_z: f64,
}

pub fn check_condconvquant(params: &QuantumGasParams) -> Result<QuantumCriterionReport> {
    if params.d <= 2 {
        return Err(Error::UnsupportedDimension(params.d));
    }
    if !(params.beta > 0.0 && params.beta.is_finite()) {
        return Err(invalid("beta must be positive"));
    }
    if params.z > 1.0 {
        return Err(invalid(format!("fugacity {} exceeds 1", params.z)));
    }
    if !(params.z > 0.0) {
        return Err(invalid("fugacity must be positive"));
    }
    if !(params.potential_integral >= 0.0 && params.potential_integral.is_finite()) {
        return Err(invalid("potential integral must be finite and nonnegative"));
    }
    let s = params.d as f64 / 2.0;
    let (zeta_lower, zeta_upper) = zeta_bracket(s, ZETA_PARTIAL_TERMS)?;
    let pre = params.beta / (2.0 * PI * params.beta).powf(s) * params.potential_integral;
    let lhs = pre * zeta_upper;
    let rhs = -params.z.ln();
    Ok(QuantumCriterionReport {
        schema: SCHEMA_VERSION,
        d: params.d,
        beta: params.beta,
        z: params.z,
        potential_integral: params.potential_integral,
        statistics: params.statistics,
        zeta_lower,
        zeta_upper,
        lhs,
        lhs_lower: pre * zeta_lower,
        rhs,
        passed: lhs <= rhs,
        max_z: (-lhs).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: u32, z: f64, u: f64) -> QuantumGasParams {
        QuantumGasParams { d, beta: 1.0, z, potential_integral: u, statistics: None }
    }

    #[test]
    fn zeta_three_halves() {
        let (lo, hi) = zeta_bracket(1.5, ZETA_PARTIAL_TERMS).unwrap();
        assert!(hi - lo <= 1e-6);
        assert!(lo <= 2.612_375_348_685_488 && 2.612_375_348_685_488 <= hi);
    }

    #[test]
    fn criterion_examples() {
        let r = check_condconvquant(&params(3, 0.9, 1.0)).unwrap();
        assert!((r.lhs - 0.1659).abs() < 1e-4);
        assert!((r.max_z - 0.847).abs() < 1e-3);
        assert!(!r.passed);
        assert!(check_condconvquant(&params(3, 0.8, 1.0)).unwrap().passed);
        assert!(check_condconvquant(&params(4, 1.0, 0.0)).unwrap().passed);
        assert!(matches!(check_condconvquant(&params(2, 0.5, 1.0)), Err(Error::UnsupportedDimension(2))));
        assert!(matches!(check_condconvquant(&params(3, 1.5, 1.0)), Err(Error::InvalidArgument(_))));
    }
}
