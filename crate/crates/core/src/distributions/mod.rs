//! Discrete probability laws on the non-negative integers.
//!
//! Conventions: `Geometric(q)` counts failures before the first success,
//! `pmf(k) = (1-q)^k q`; `NegativeBinomial(r, q)` has
//! `pmf(k) = Γ(k+r) / (k! Γ(r)) q^r (1-q)^k`, mean `r(1-q)/q` and
//! variance `r(1-q)/q²`, with real shape `r > 0`.

mod divide;
mod finite;
mod sampling;
mod sum;
mod support;

pub use divide::{DivisibilityOutcome, DivisibilityVerdict};
pub use finite::FiniteLaw;
pub use sum::SumOptions;
pub(crate) use sum::sum_dense;
pub use support::SupportSet;

use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use statrs::function::factorial::{ln_binomial, ln_factorial};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Default tail mass below which infinite supports are cut.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("{family}: parameter {name} = {value} is out of range ({expected})")]
    InvalidParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("finite support is invalid: {0}")]
    InvalidSupport(String),
    #[error("moment is not finite for {0}")]
    NonFiniteMoment(String),
    #[error("truncated support of {len} points exceeds the cap of {cap}")]
    SupportOverflow { len: usize, cap: usize },
}

/// A law on the non-negative integers.
///
/// Build values through the checked constructors (`Distribution::poisson`
/// and friends); the variants are public for pattern matching.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    PointMass(u64),
    Bernoulli { p: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { mu: f64 },
    Geometric { q: f64 },
    NegativeBinomial { r: f64, q: f64 },
    /// Zero with probability `pi0`, otherwise `Poisson(lambda)`.
    ZeroInflatedPoisson { pi0: f64, lambda: f64 },
    /// `Y * G` with `Y ~ Bernoulli(1 - p)` and `G ~ Geometric(q)` independent.
    ZeroInflatedGeometric { p: f64, q: f64 },
    /// `s` with probability `p`, otherwise 0.
    ScaledBernoulli { s: u64, p: f64 },
    FiniteSupport(FiniteLaw),
}

/// Mean, variance and third absolute central moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub rho3: f64,
    /// Probability mass left out of the `rho3` sum.
    pub omitted_mass: f64,
    pub truncated: bool,
}

fn check_prob(family: &'static str, name: &'static str, p: f64) -> Result<(), DistributionError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter { family, name, value: p, expected: "[0, 1]" })
    }
}

fn check_open_prob(family: &'static str, name: &'static str, p: f64) -> Result<(), DistributionError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter { family, name, value: p, expected: "(0, 1)" })
    }
}

fn check_positive(family: &'static str, name: &'static str, x: f64) -> Result<(), DistributionError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter { family, name, value: x, expected: "> 0" })
    }
}

fn ln_poisson(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mu.ln() - mu - ln_factorial(k)
}

fn ln_geometric(q: f64, k: u64) -> f64 {
    q.ln() + k as f64 * (-q).ln_1p()
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

impl Distribution {
    pub fn point(c: u64) -> Self {
        Distribution::PointMass(c)
    }

    pub fn bernoulli(p: f64) -> Result<Self, DistributionError> {
        check_prob("bernoulli", "p", p)?;
        Ok(Distribution::Bernoulli { p })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self, DistributionError> {
        check_prob("binomial", "p", p)?;
        if n == 0 {
            return Err(DistributionError::InvalidParameter {
                family: "binomial",
                name: "n",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(Distribution::Binomial { n, p })
    }

    pub fn poisson(mu: f64) -> Result<Self, DistributionError> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(DistributionError::InvalidParameter {
                family: "poisson",
                name: "mu",
                value: mu,
                expected: ">= 0",
            });
        }
        Ok(Distribution::Poisson { mu })
    }

    pub fn geometric(q: f64) -> Result<Self, DistributionError> {
        check_open_prob("geometric", "q", q)?;
        Ok(Distribution::Geometric { q })
    }

    pub fn negative_binomial(r: f64, q: f64) -> Result<Self, DistributionError> {
        check_positive("nb", "r", r)?;
        check_open_prob("nb", "q", q)?;
        Ok(Distribution::NegativeBinomial { r, q })
    }

    pub fn zero_inflated_poisson(pi0: f64, lambda: f64) -> Result<Self, DistributionError> {
        check_prob("zip", "pi0", pi0)?;
        check_positive("zip", "lambda", lambda)?;
        Ok(Distribution::ZeroInflatedPoisson { pi0, lambda })
    }

    pub fn zero_inflated_geometric(p: f64, q: f64) -> Result<Self, DistributionError> {
        check_prob("zig", "p", p)?;
        check_open_prob("zig", "q", q)?;
        Ok(Distribution::ZeroInflatedGeometric { p, q })
    }

    pub fn scaled_bernoulli(s: u64, p: f64) -> Result<Self, DistributionError> {
        check_prob("scaled_bernoulli", "p", p)?;
        if s == 0 {
            return Err(DistributionError::InvalidParameter {
                family: "scaled_bernoulli",
                name: "s",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(Distribution::ScaledBernoulli { s, p })
    }

    /// Explicit finite law; values strictly increasing, probabilities summing to 1.
    pub fn finite(atoms: Vec<(u64, f64)>) -> Result<Self, DistributionError> {
        Ok(Distribution::FiniteSupport(FiniteLaw::new(atoms)?))
    }

    /// Re-checks every parameter range.
    pub fn validate(&self) -> Result<(), DistributionError> {
        match *self {
            Distribution::PointMass(_) => Ok(()),
            Distribution::Bernoulli { p } => Self::bernoulli(p).map(drop),
            Distribution::Binomial { n, p } => Self::binomial(n, p).map(drop),
            Distribution::Poisson { mu } => Self::poisson(mu).map(drop),
            Distribution::Geometric { q } => Self::geometric(q).map(drop),
            Distribution::NegativeBinomial { r, q } => Self::negative_binomial(r, q).map(drop),
            Distribution::ZeroInflatedPoisson { pi0, lambda } => {
                Self::zero_inflated_poisson(pi0, lambda).map(drop)
            }
            Distribution::ZeroInflatedGeometric { p, q } => Self::zero_inflated_geometric(p, q).map(drop),
            Distribution::ScaledBernoulli { s, p } => Self::scaled_bernoulli(s, p).map(drop),
            Distribution::FiniteSupport(ref law) => law.validate(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Distribution::PointMass(_) => "point",
            Distribution::Bernoulli { .. } => "bernoulli",
            Distribution::Binomial { .. } => "binomial",
            Distribution::Poisson { .. } => "poisson",
            Distribution::Geometric { .. } => "geometric",
            Distribution::NegativeBinomial { .. } => "nb",
            Distribution::ZeroInflatedPoisson { .. } => "zip",
            Distribution::ZeroInflatedGeometric { .. } => "zig",
            Distribution::ScaledBernoulli { .. } => "scaled_bernoulli",
            Distribution::FiniteSupport(_) => "finite",
        }
    }

    /// Natural log of `P(X = k)`; `-inf` off the support.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        match *self {
            Distribution::PointMass(c) => {
                if k == c {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Bernoulli { p } => match k {
                0 => (-p).ln_1p(),
                1 => p.ln(),
                _ => f64::NEG_INFINITY,
            },
            Distribution::Binomial { n, p } => {
                if k > n {
                    f64::NEG_INFINITY
                } else if p == 0.0 {
                    if k == 0 { 0.0 } else { f64::NEG_INFINITY }
                } else if p == 1.0 {
                    if k == n { 0.0 } else { f64::NEG_INFINITY }
                } else {
                    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
                }
            }
            Distribution::Poisson { mu } => ln_poisson(mu, k),
            Distribution::Geometric { q } => ln_geometric(q, k),
            Distribution::NegativeBinomial { r, q } => {
                let kf = k as f64;
                ln_gamma(kf + r) - ln_gamma(r) - ln_factorial(k) + r * q.ln() + kf * (-q).ln_1p()
            }
            Distribution::ZeroInflatedPoisson { pi0, lambda } => {
                if k == 0 {
                    ln_add_exp(pi0.ln(), (-pi0).ln_1p() - lambda)
                } else {
                    (-pi0).ln_1p() + ln_poisson(lambda, k)
                }
            }
            Distribution::ZeroInflatedGeometric { p, q } => {
                if k == 0 {
                    ln_add_exp(p.ln(), (-p).ln_1p() + q.ln())
                } else {
                    (-p).ln_1p() + ln_geometric(q, k)
                }
            }
            Distribution::ScaledBernoulli { s, p } => {
                if k == 0 {
                    (-p).ln_1p()
                } else if k == s {
                    p.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::FiniteSupport(ref law) => law.pmf(k).ln(),
        }
    }

    /// `P(X = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => match k {
                0 => 1.0 - p,
                1 => p,
                _ => 0.0,
            },
            Distribution::ZeroInflatedPoisson { pi0, lambda } if k == 0 => {
                pi0 + (1.0 - pi0) * (-lambda).exp()
            }
            Distribution::ZeroInflatedGeometric { p, q } if k == 0 => p + (1.0 - p) * q,
            Distribution::ScaledBernoulli { s, p } => {
                if k == 0 {
                    1.0 - p
                } else if k == s {
                    p
                } else {
                    0.0
                }
            }
            Distribution::FiniteSupport(ref law) => law.pmf(k),
            _ => self.ln_pmf(k).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::PointMass(c) => c as f64,
            Distribution::Bernoulli { p } => p,
            Distribution::Binomial { n, p } => n as f64 * p,
            Distribution::Poisson { mu } => mu,
            Distribution::Geometric { q } => (1.0 - q) / q,
            Distribution::NegativeBinomial { r, q } => r * (1.0 - q) / q,
            Distribution::ZeroInflatedPoisson { pi0, lambda } => (1.0 - pi0) * lambda,
            Distribution::ZeroInflatedGeometric { p, q } => (1.0 - p) * (1.0 - q) / q,
            Distribution::ScaledBernoulli { s, p } => s as f64 * p,
            Distribution::FiniteSupport(ref law) => law.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::PointMass(_) => 0.0,
            Distribution::Bernoulli { p } => p * (1.0 - p),
            Distribution::Binomial { n, p } => n as f64 * p * (1.0 - p),
            Distribution::Poisson { mu } => mu,
            Distribution::Geometric { q } => (1.0 - q) / (q * q),
            Distribution::NegativeBinomial { r, q } => r * (1.0 - q) / (q * q),
            Distribution::ZeroInflatedPoisson { pi0, lambda } => (1.0 - pi0) * lambda * (1.0 + pi0 * lambda),
            Distribution::ZeroInflatedGeometric { p, q } => {
                let m = (1.0 - q) / q;
                let second = (1.0 - q) / (q * q) + m * m;
                (1.0 - p) * second - (1.0 - p) * (1.0 - p) * m * m
            }
            Distribution::ScaledBernoulli { s, p } => (s as f64).powi(2) * p * (1.0 - p),
            Distribution::FiniteSupport(ref law) => law.variance(),
        }
    }

    /// Mean, variance and `E|X - mean|^3`, the last summed over the support
    /// until the omitted tail mass drops below `tail_tol`.
    pub fn moments(&self, tail_tol: f64) -> Result<Moments, DistributionError> {
        let mean = self.mean();
        let variance = self.variance();
        if !mean.is_finite() || !variance.is_finite() {
            return Err(DistributionError::NonFiniteMoment(format!("{self:?}")));
        }
        let truncated = matches!(self, Distribution::FiniteSupport(l) if l.omitted_mass() > 0.0)
            || (!matches!(self, Distribution::FiniteSupport(_)) && self.support_max().is_none());
        let (rho3, omitted_mass) = match self {
            Distribution::FiniteSupport(law) => {
                let rho3 = law.atoms().iter().map(|&(k, p)| (k as f64 - mean).abs().powi(3) * p).sum();
                (rho3, law.omitted_mass())
            }
            _ => {
                let hi = self.upper_point(tail_tol);
                let mut rho3 = 0.0;
                let mut mass = 0.0;
                for k in self.support_min()..=hi {
                    let p = self.pmf(k);
                    mass += p;
                    rho3 += (k as f64 - mean).abs().powi(3) * p;
                }
                let omitted = if truncated { (1.0 - mass).max(0.0) } else { 0.0 };
                (rho3, omitted)
            }
        };
        if !rho3.is_finite() {
            return Err(DistributionError::NonFiniteMoment(format!("{self:?}")));
        }
        Ok(Moments { mean, variance, rho3, omitted_mass, truncated })
    }

    /// Mean and variance in exact arithmetic on the binary values of the parameters.
    pub fn exact_moments(&self) -> Option<(Rational, Rational)> {
        let f = |x: f64| rational::from_f64(x);
        let one = Rational::one();
        Some(match *self {
            Distribution::PointMass(c) => (rational::from_u64(c), Rational::zero()),
            Distribution::Bernoulli { p } => {
                let p = f(p)?;
                (p.clone(), &p * (&one - &p))
            }
            Distribution::Binomial { n, p } => {
                let p = f(p)?;
                let n = rational::from_u64(n);
                (&n * &p, &n * &p * (&one - &p))
            }
            Distribution::Poisson { mu } => {
                let mu = f(mu)?;
                (mu.clone(), mu)
            }
            Distribution::Geometric { q } => {
                let q = f(q)?;
                ((&one - &q) / &q, (&one - &q) / (&q * &q))
            }
            Distribution::NegativeBinomial { r, q } => {
                let (r, q) = (f(r)?, f(q)?);
                (&r * (&one - &q) / &q, &r * (&one - &q) / (&q * &q))
            }
            Distribution::ZeroInflatedPoisson { pi0, lambda } => {
                let (pi0, l) = (f(pi0)?, f(lambda)?);
                let keep = &one - &pi0;
                (&keep * &l, &keep * &l * (&one + &pi0 * &l))
            }
            Distribution::ZeroInflatedGeometric { p, q } => {
                let (p, q) = (f(p)?, f(q)?);
                let keep = &one - &p;
                let m = (&one - &q) / &q;
                let second = (&one - &q) / (&q * &q) + &m * &m;
                (&keep * &m, &keep * second - &keep * &keep * &m * &m)
            }
            Distribution::ScaledBernoulli { s, p } => {
                let (s, p) = (rational::from_u64(s), f(p)?);
                (&s * &p, &s * &s * &p * (&one - &p))
            }
            Distribution::FiniteSupport(ref law) => {
                let mut mean = Rational::zero();
                let mut second = Rational::zero();
                for &(k, p) in law.atoms() {
                    let p = f(p)?;
                    let k = rational::from_u64(k);
                    mean += &k * &p;
                    second += &k * &k * &p;
                }
                let var = second - &mean * &mean;
                (mean, var)
            }
        })
    }

    /// `Some(c)` when the law puts all its mass on `c`.
    pub fn point_value(&self) -> Option<u64> {
        match *self {
            Distribution::PointMass(c) => Some(c),
            Distribution::Bernoulli { p } if p == 0.0 => Some(0),
            Distribution::Bernoulli { p } if p == 1.0 => Some(1),
            Distribution::Binomial { p, .. } if p == 0.0 => Some(0),
            Distribution::Binomial { n, p } if p == 1.0 => Some(n),
            Distribution::Poisson { mu } if mu == 0.0 => Some(0),
            Distribution::ZeroInflatedPoisson { pi0, .. } if pi0 == 1.0 => Some(0),
            Distribution::ZeroInflatedGeometric { p, .. } if p == 1.0 => Some(0),
            Distribution::ScaledBernoulli { p, .. } if p == 0.0 => Some(0),
            Distribution::ScaledBernoulli { s, p } if p == 1.0 => Some(s),
            Distribution::FiniteSupport(ref law) if law.atoms().len() == 1 => Some(law.atoms()[0].0),
            _ => None,
        }
    }

    pub fn support_min(&self) -> u64 {
        if let Some(c) = self.point_value() {
            return c;
        }
        match self {
            Distribution::FiniteSupport(law) => law.atoms().first().map_or(0, |a| a.0),
            _ => 0,
        }
    }

    /// Largest support point, `None` when unbounded.
    pub fn support_max(&self) -> Option<u64> {
        if let Some(c) = self.point_value() {
            return Some(c);
        }
        match *self {
            Distribution::Bernoulli { .. } => Some(1),
            Distribution::Binomial { n, .. } => Some(n),
            Distribution::ScaledBernoulli { s, .. } => Some(s),
            Distribution::FiniteSupport(ref law) => law.atoms().last().map(|a| a.0),
            _ => None,
        }
    }

    /// Analytic support membership (no numerical underflow involved).
    pub fn in_support(&self, k: u64) -> bool {
        if let Some(c) = self.point_value() {
            return k == c;
        }
        match *self {
            Distribution::Bernoulli { .. } => k <= 1,
            Distribution::Binomial { n, .. } => k <= n,
            Distribution::ScaledBernoulli { s, .. } => k == 0 || k == s,
            Distribution::FiniteSupport(ref law) => law.pmf(k) > 0.0,
            _ => true,
        }
    }

    /// Smallest `n` with `P(X > n) < tail_tol` (the support maximum when bounded).
    pub fn upper_point(&self, tail_tol: f64) -> u64 {
        if let Some(c) = self.point_value() {
            return c;
        }
        match self {
            Distribution::FiniteSupport(law) => law.upper_point(tail_tol),
            _ => {
                let cap = self.support_max();
                let total = 1.0;
                let mut cdf = 0.0;
                let mut k = 0u64;
                loop {
                    cdf += self.pmf(k);
                    if cap == Some(k) || total - cdf < tail_tol {
                        return k;
                    }
                    // past the mean the pmf is decreasing; stop once it underflows
                    if cap.is_none() && k as f64 > self.mean() && self.pmf(k) == 0.0 {
                        return k;
                    }
                    k += 1;
                }
            }
        }
    }

    /// `max_{n >= 1} min(P(X = n), P(X = n - 1))`.
    pub fn consecutive_overlap(&self, tail_tol: f64) -> f64 {
        let lo = self.support_min().max(1);
        let hi = self.upper_point(tail_tol).saturating_add(1);
        let mut best = 0.0f64;
        let mut prev = self.pmf(lo - 1);
        for n in lo..=hi {
            let cur = self.pmf(n);
            best = best.max(cur.min(prev));
            prev = cur;
        }
        best
    }

    /// Finite truncation keeping every point up to `upper_point(tail_tol)`.
    pub fn to_finite(&self, tail_tol: f64) -> FiniteLaw {
        match self {
            Distribution::FiniteSupport(law) => law.clone(),
            _ => {
                let lo = self.support_min();
                let hi = self.upper_point(tail_tol);
                let probs: Vec<f64> = (lo..=hi).map(|k| self.pmf(k)).collect();
                FiniteLaw::from_dense(lo, probs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_rel;

    mod approx_eq {
        macro_rules! assert_rel {
            ($a:expr, $b:expr, $tol:expr) => {{
                let (a, b): (f64, f64) = ($a, $b);
                let scale = a.abs().max(b.abs()).max(1e-300);
                assert!((a - b).abs() / scale <= $tol, "{a} vs {b} (rel tol {})", $tol);
            }};
        }
        pub(crate) use assert_rel;
    }

    fn catalog() -> Vec<Distribution> {
        vec![
            Distribution::point(4),
            Distribution::bernoulli(0.3).unwrap(),
            Distribution::binomial(7, 0.35).unwrap(),
            Distribution::poisson(3.0).unwrap(),
            Distribution::geometric(0.4).unwrap(),
            Distribution::negative_binomial(1.5, 0.25).unwrap(),
            Distribution::zero_inflated_poisson(2.0 / 3.0, 3.0).unwrap(),
            Distribution::zero_inflated_geometric(0.3, 0.5).unwrap(),
            Distribution::scaled_bernoulli(3, 0.2).unwrap(),
            Distribution::finite(vec![(0, 0.25), (2, 0.75)]).unwrap(),
        ]
    }

    #[test]
    fn pmf_examples() {
        assert_rel!(Distribution::poisson(2.0).unwrap().pmf(0), (-2.0f64).exp(), 1e-15);
        assert_rel!(Distribution::zero_inflated_geometric(0.3, 0.5).unwrap().pmf(0), 0.65, 1e-15);
        assert_eq!(Distribution::finite(vec![(0, 0.25), (2, 0.75)]).unwrap().pmf(1), 0.0);
        let zig = Distribution::zero_inflated_geometric(0.3, 0.5).unwrap();
        assert_rel!(zig.pmf(3), 0.7 * 0.5f64.powi(3) * 0.5, 1e-14);
    }

    #[test]
    fn moments_examples() {
        let m = Distribution::poisson(3.0).unwrap().moments(1e-12).unwrap();
        assert_eq!((m.mean, m.variance), (3.0, 3.0));
        let zip = Distribution::zero_inflated_poisson(1.0 - 1.0 / 3.0, 3.0).unwrap();
        assert_rel!(zip.mean(), 1.0, 1e-15);
        assert_rel!(zip.variance(), 3.0, 1e-15);
    }

    #[test]
    fn analytic_moments_match_truncated_sums() {
        for d in catalog() {
            let hi = d.upper_point(1e-14);
            let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for k in 0..=hi {
                let p = d.pmf(k);
                m0 += p;
                m1 += k as f64 * p;
                m2 += (k as f64).powi(2) * p;
            }
            assert!((m0 - 1.0).abs() < 1e-10, "{d:?} mass {m0}");
            assert_rel!(m1, d.mean(), 1e-9);
            let var = m2 - m1 * m1;
            if d.variance() > 0.0 {
                assert_rel!(var, d.variance(), 1e-9);
            }
        }
    }

    #[test]
    fn exact_moments_agree_with_float_moments() {
        for d in catalog() {
            let (m, v) = d.exact_moments().unwrap();
            assert_rel!(rational::to_f64(&m), d.mean(), 1e-12);
            if d.variance() > 0.0 {
                assert_rel!(rational::to_f64(&v), d.variance(), 1e-12);
            }
        }
    }

    #[test]
    fn ln_pmf_matches_pmf() {
        for d in catalog() {
            for k in 0..12 {
                let p = d.pmf(k);
                if p > 0.0 {
                    assert_rel!(d.ln_pmf(k).exp(), p, 1e-12);
                } else {
                    assert_eq!(d.ln_pmf(k), f64::NEG_INFINITY, "{d:?} at {k}");
                }
            }
        }
    }

    #[test]
    fn constructors_reject_out_of_range_parameters() {
        assert!(Distribution::bernoulli(1.5).is_err());
        assert!(Distribution::binomial(0, 0.5).is_err());
        assert!(Distribution::poisson(-1.0).is_err());
        assert!(Distribution::geometric(0.0).is_err());
        assert!(Distribution::geometric(1.0).is_err());
        assert!(Distribution::negative_binomial(0.0, 0.5).is_err());
        assert!(Distribution::zero_inflated_poisson(0.5, 0.0).is_err());
        assert!(Distribution::scaled_bernoulli(0, 0.5).is_err());
        assert!(Distribution::finite(vec![(2, 0.5), (1, 0.5)]).is_err());
        assert!(Distribution::finite(vec![(1, 0.5), (1, 0.5)]).is_err());
        assert!(Distribution::finite(vec![(1, 0.5), (2, 0.4)]).is_err());
        assert!(Distribution::finite(vec![(1, -0.1), (2, 1.1)]).is_err());
    }

    #[test]
    fn consecutive_overlap_examples() {
        assert_eq!(Distribution::bernoulli(0.5).unwrap().consecutive_overlap(1e-12), 0.5);
        assert_eq!(Distribution::point(7).consecutive_overlap(1e-12), 0.0);
        assert_eq!(Distribution::point(0).consecutive_overlap(1e-12), 0.0);
        let oracle = (1..=50u64)
            .map(|n| {
                let f = |k: u64| (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>();
                f(n).min(f(n - 1))
            })
            .fold(0.0f64, f64::max);
        assert_rel!(Distribution::poisson(1.0).unwrap().consecutive_overlap(1e-12), oracle, 1e-12);
        assert_rel!(oracle, (-1.0f64).exp(), 1e-15);
    }

    #[test]
    fn rho3_is_reported_with_truncation() {
        let m = Distribution::poisson(2.0).unwrap().moments(1e-12).unwrap();
        assert!(m.truncated && m.omitted_mass < 1e-12);
        let b = Distribution::bernoulli(0.5).unwrap().moments(1e-12).unwrap();
        assert_rel!(b.rho3, 0.125, 1e-15);
    }
}
