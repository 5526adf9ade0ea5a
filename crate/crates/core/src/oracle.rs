//! Slow reference implementations in exact rational arithmetic.
//!
//! Nothing here reuses the engine's combinatorics: graphs are filtered with
//! their own pair order and a union-find connectivity test, and partition
//! functions are literal sums over ordered tuples.

use std::fmt;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::number::ExactComplex;
use crate::polymer_space::{DiscreteKernel, DiscretePolymerSpace};
use crate::ursell::EdgeWeightMatrix;

pub const URSELL_ORACLE_MAX: usize = 6;
pub const DEFAULT_TUPLE_BUDGET: u64 = 20_000_000;

/// Exact value: a rational, or a complex number with rational parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactNumber {
    Rational(BigRational),
    Complex(ExactComplex),
}

impl ExactNumber {
    pub fn from_complex(z: ExactComplex) -> Self {
        if z.im.is_zero() {
            ExactNumber::Rational(z.re)
        } else {
            ExactNumber::Complex(z)
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        ExactNumber::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn as_complex(&self) -> ExactComplex {
        match self {
            ExactNumber::Rational(r) => Complex::new(r.clone(), BigRational::zero()),
            ExactNumber::Complex(z) => z.clone(),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExactNumber::Rational(r) => Some(r),
            ExactNumber::Complex(_) => None,
        }
    }

    /// Rounds to the nearest double (per part).
    pub fn to_complex64(&self) -> Complex64 {
        let z = self.as_complex();
        Complex64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_complex64().re
    }
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactNumber::Rational(r) => write!(f, "{r}"),
            ExactNumber::Complex(z) => write!(f, "{} + {}i", z.re, z.im),
        }
    }
}

/// The exact rational equal to a finite double.
pub fn exact_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid(format!("{x} has no exact rational value")))
}

pub fn exact_from_complex64(z: Complex64) -> Result<ExactComplex> {
    Ok(Complex::new(exact_from_f64(z.re)?, exact_from_f64(z.im)?))
}

fn czero() -> ExactComplex {
    Complex::new(BigRational::zero(), BigRational::zero())
}

fn cone() -> ExactComplex {
    Complex::new(BigRational::one(), BigRational::zero())
}

fn div_int(z: ExactComplex, k: u64) -> ExactComplex {
    let d = BigRational::from_integer(BigInt::from(k));
    Complex::new(z.re / d.clone(), z.im / d)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// `(1/n!) Σ_{connected G} Π_{ij ∈ G} w_ij` by testing each of the
/// `2^{n(n-1)/2}` edge sets for connectivity.
pub fn ursell_bruteforce(w: &EdgeWeightMatrix<ExactComplex>) -> Result<ExactNumber> {
    let n = w.n();
    if n > URSELL_ORACLE_MAX {
        return Err(Error::Capacity { what: "oracle graph size", requested: n as u64, limit: URSELL_ORACLE_MAX as u64 });
    }
    if n == 0 {
        return Err(invalid("empty tuple"));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut total = czero();
    for set in 0u64..(1u64 << pairs.len()) {
        let mut parent: Vec<usize> = (0..n).collect();
        let mut components = n;
        let mut prod = cone();
        for (e, &(i, j)) in pairs.iter().enumerate() {
            if set >> e & 1 == 1 {
                prod = prod * w.get(i, j).clone();
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                    components -= 1;
                }
            }
        }
        if components == 1 {
            total = total + prod;
        }
    }
    let fact: u64 = (1..=n as u64).product();
    Ok(ExactNumber::from_complex(div_int(total, fact)))
}

/// Discrete system with exact weights and kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSystem {
    pub weights: Vec<ExactComplex>,
    /// Row-major symmetric `n × n` table.
    pub zeta: Vec<ExactComplex>,
}

impl ExactSystem {
    /// Exact rational images of the double-precision data.
    pub fn from_discrete(space: &DiscretePolymerSpace, kernel: &DiscreteKernel) -> Result<Self> {
        let n = space.len();
        if kernel.n() != n {
            return Err(invalid("space and kernel differ in size"));
        }
        let weights = (0..n).map(|i| exact_from_complex64(space.weight(i))).collect::<Result<_>>()?;
        let mut zeta = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                zeta.push(exact_from_complex64(kernel.zeta(i, j))?);
            }
        }
        Ok(ExactSystem { weights, zeta })
    }

    /// Hard-core system with rational weights.
    pub fn hard_core(weights: Vec<BigRational>, overlaps: impl Fn(usize, usize) -> bool) -> Self {
        let n = weights.len();
        let mut zeta = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let hit = overlaps(i.min(j), i.max(j));
                zeta.push(if hit { -cone() } else { czero() });
            }
        }
        ExactSystem { weights: weights.into_iter().map(|w| Complex::new(w, BigRational::zero())).collect(), zeta }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn factor(&self, i: usize, j: usize) -> ExactComplex {
        cone() + self.zeta[i * self.len() + j].clone()
    }
}

struct TupleSum<'a> {
    sys: &'a ExactSystem,
    budget: u64,
    visited: u64,
    /// `by_len[k]` = Σ over free tuples of length `k` of the integrand.
    by_len: Vec<ExactComplex>,
}

impl TupleSum<'_> {
    fn walk(&mut self, tuple: &mut Vec<usize>, fixed_len: usize, value: ExactComplex, max_free: usize) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::Capacity { what: "oracle tuple budget", requested: self.visited, limit: self.budget });
        }
        let free = tuple.len() - fixed_len;
        self.by_len[free] = self.by_len[free].clone() + value.clone();
        if free == max_free {
            return Ok(());
        }
        for p in 0..self.sys.len() {
            let mut next = value.clone() * self.sys.weights[p].clone();
            for &q in tuple.iter() {
                next = next * self.sys.factor(q, p);
            }
            if next.is_zero() {
                continue;
            }
            tuple.push(p);
            self.walk(tuple, fixed_len, next, max_free)?;
            tuple.pop();
        }
        Ok(())
    }
}

/// Σ_{k <= max_free} (1/k!) Σ_{B_1..B_k} Π w(B) Π_{pairs of (fixed, B)} (1 + ζ).
fn constrained_sum(sys: &ExactSystem, fixed: &[usize], max_free: usize, budget: u64) -> Result<ExactComplex> {
    if let Some(&i) = fixed.iter().find(|&&i| i >= sys.len()) {
        return Err(invalid(format!("polymer index {i} out of range")));
    }
    let mut start = cone();
    for (k, &i) in fixed.iter().enumerate() {
        for &j in &fixed[..k] {
            start = start * sys.factor(j, i);
        }
    }
    let mut acc = TupleSum { sys, budget, visited: 0, by_len: vec![czero(); max_free + 1] };
    if !start.is_zero() {
        let mut tuple = fixed.to_vec();
        acc.walk(&mut tuple, fixed.len(), start, max_free)?;
    }
    let mut total = czero();
    let mut fact = 1u64;
    for (k, s) in acc.by_len.into_iter().enumerate() {
        if k > 0 {
            fact = fact.checked_mul(k as u64).ok_or_else(|| invalid("tuple length too large"))?;
        }
        total = total + div_int(s, fact);
    }
    Ok(total)
}

/// `Σ_{n=0}^{N} (1/n!) Σ_{A_1..A_n} Π w(A_i) Π_{i<j} (1 + ζ(A_i, A_j))`;
/// for a hard-core system in which every polymer overlaps itself this is
/// exact once `N >= len`.
pub fn partition_bruteforce(sys: &ExactSystem, n_max: usize, budget: u64) -> Result<ExactNumber> {
    Ok(ExactNumber::from_complex(constrained_sum(sys, &[], n_max, budget)?))
}

/// `Z(A_1, .., A_m) / Z` from the defining sums, with up to `max_free`
/// integrated polymers in both numerator and denominator.
pub fn correlation_bruteforce(fixed: &[usize], sys: &ExactSystem, max_free: usize, budget: u64) -> Result<ExactNumber> {
    let num = constrained_sum(sys, fixed, max_free, budget)?;
    let den = constrained_sum(sys, &[], max_free, budget)?;
    if den.is_zero() {
        return Err(Error::Numerical("partition function vanishes".into()));
    }
    Ok(ExactNumber::from_complex(num / den))
}

/// Hard-core systems where every polymer overlaps itself: finite sums.
pub fn is_self_excluding_hard_core(sys: &ExactSystem) -> bool {
    let n = sys.len();
    (0..n).all(|i| sys.factor(i, i).is_zero())
        && sys.zeta.iter().all(|z| z.is_zero() || *z == -cone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{correlation_ratio, log_partition_series};
    use crate::ursell::ursell;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cq(n: i64, d: i64) -> ExactComplex {
        Complex::new(q(n, d), BigRational::zero())
    }

    #[test]
    fn ursell_oracle_examples() {
        let w = EdgeWeightMatrix::constant(3, cq(-1, 1));
        assert_eq!(ursell_bruteforce(&w).unwrap(), ExactNumber::ratio(1, 3));
        let w = EdgeWeightMatrix::constant(2, cq(3, 7));
        assert_eq!(ursell_bruteforce(&w).unwrap(), ExactNumber::ratio(3, 14));
        assert!(matches!(
            ursell_bruteforce(&EdgeWeightMatrix::constant(7, cq(1, 1))),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn ursell_oracle_matches_engine_on_rational_weights() {
        let mut state = 5u64;
        for n in 1..=URSELL_ORACLE_MAX {
            for _ in 0..4 {
                let w = EdgeWeightMatrix::from_fn(n, |_, _| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let num = (state >> 40) as i64 % 11 - 5;
                    let den = (state >> 20) as i64 % 7 + 1;
                    Complex::new(q(num, den), q((state >> 50) as i64 % 3 - 1, 4))
                });
                let oracle = ursell_bruteforce(&w).unwrap();
                assert_eq!(ExactNumber::from_complex(ursell(&w).unwrap()), oracle, "n = {n}");
            }
        }
    }

    #[test]
    fn partition_oracle_examples() {
        let one = ExactSystem::hard_core(vec![q(1, 2)], |_, _| true);
        assert_eq!(partition_bruteforce(&one, 1, DEFAULT_TUPLE_BUDGET).unwrap(), ExactNumber::ratio(3, 2));
        // (1 + 1/3)(1 + 1/5)
        let two = ExactSystem::hard_core(vec![q(1, 3), q(1, 5)], |i, j| i == j);
        assert_eq!(partition_bruteforce(&two, 2, DEFAULT_TUPLE_BUDGET).unwrap(), ExactNumber::ratio(8, 5));
        let empty = ExactSystem::hard_core(vec![], |_, _| true);
        assert_eq!(partition_bruteforce(&empty, 4, DEFAULT_TUPLE_BUDGET).unwrap(), ExactNumber::ratio(1, 1));
        let free = ExactSystem::hard_core(vec![q(1, 1)], |_, _| false);
        assert!(partition_bruteforce(&free, 30, 1000).is_err());
    }

    #[test]
    fn correlation_oracle_examples() {
        let one = ExactSystem::hard_core(vec![q(1, 2)], |_, _| true);
        assert_eq!(correlation_bruteforce(&[0], &one, 1, DEFAULT_TUPLE_BUDGET).unwrap(), ExactNumber::ratio(2, 3));
        assert_eq!(correlation_bruteforce(&[0, 0], &one, 1, DEFAULT_TUPLE_BUDGET).unwrap(), ExactNumber::ratio(0, 1));
    }

    #[test]
    fn correlation_oracle_matches_correlation_ratio() {
        let weights = [0.03125, -0.0625, 0.046875];
        let space = DiscretePolymerSpace::from_real_weights("three", &weights).unwrap();
        let kernel = DiscreteKernel::hard_core(3, |i, j| i == j || (i, j) == (0, 1) || (i, j) == (1, 0));
        let sys = ExactSystem::from_discrete(&space, &kernel).unwrap();
        for fixed in [[0usize, 1], [0, 2], [1, 2], [2, 2]] {
            let exact = correlation_bruteforce(&fixed, &sys, 3, DEFAULT_TUPLE_BUDGET).unwrap().to_f64();
            let err = |order| (correlation_ratio(&fixed, &space, &kernel, order).unwrap().ratio.re() - exact).abs();
            assert!(err(8) <= 1e-7 * exact.abs().max(1.0), "{fixed:?}: {}", err(8));
            assert!(err(9) <= err(7));
        }
        let z = partition_bruteforce(&sys, 3, DEFAULT_TUPLE_BUDGET).unwrap().to_f64();
        let logz = log_partition_series(&space, &kernel, 8, None).unwrap().sum().re;
        assert!((logz.exp() - z).abs() <= 1e-9 * z);
    }

    #[test]
    fn float_conversion_is_exact() {
        assert_eq!(exact_from_f64(0.375).unwrap(), q(3, 8));
        assert!(exact_from_f64(f64::NAN).is_err());
        assert_eq!(ExactNumber::ratio(1, 3).to_f64(), 1.0 / 3.0);
    }
}
