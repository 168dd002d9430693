use crate::distributions::{Distribution, DistributionError};
use crate::rational::{self, Rational};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Deterministic map `z -> phi(z)` on the non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlMap {
    Identity,
    /// `max(floor(a z + b), 0)`.
    AffineFloor { a: Rational, b: Rational },
    /// `max(z - c, 0)`.
    MaxShift { c: u64 },
    /// `(z + m)` for `z > 0`, else 0.
    ShiftGated { m: u64 },
    /// `z` for odd `z`, `z / 2` for even `z`.
    ParityHalf,
    /// Listed values, `default` elsewhere.
    Table { entries: BTreeMap<u64, u64>, default: Box<ControlMap> },
}

impl ControlMap {
    pub fn eval(&self, z: u64) -> u64 {
        match self {
            ControlMap::Identity => z,
            ControlMap::AffineFloor { a, b } => {
                let v = a * rational::from_u64(z) + b;
                if v <= Rational::zero() {
                    0
                } else {
                    rational::floor_u64(&v).unwrap_or(u64::MAX)
                }
            }
            ControlMap::MaxShift { c } => z.saturating_sub(*c),
            ControlMap::ShiftGated { m } => {
                if z > 0 {
                    z + m
                } else {
                    0
                }
            }
            ControlMap::ParityHalf => {
                if z % 2 == 1 {
                    z
                } else {
                    z / 2
                }
            }
            ControlMap::Table { entries, default } => {
                entries.get(&z).copied().unwrap_or_else(|| default.eval(z))
            }
        }
    }

    /// `inf_{x >= 1} phi(x) / x`, with `exact = false` when it was only
    /// scanned over `1..=scan_to`.
    pub fn infimum_ratio(&self, scan_to: u64) -> (Rational, bool) {
        let one = Rational::one();
        match self {
            ControlMap::Identity => (one, true),
            ControlMap::ShiftGated { .. } => (one, true),
            ControlMap::ParityHalf => (rational::ratio(1, 2), true),
            ControlMap::MaxShift { c } if *c >= 1 => (Rational::zero(), true),
            ControlMap::MaxShift { .. } => (one, true),
            ControlMap::AffineFloor { a, b } if rational::is_integer(a) && rational::is_integer(b) => {
                if *b >= Rational::zero() {
                    (a.clone(), true)
                } else {
                    // (a x + b) / x increases in x when b < 0; the minimum sits at x = 1
                    let v = (a + b).max(Rational::zero());
                    (v, true)
                }
            }
            _ => {
                let best = (1..=scan_to.max(1))
                    .map(|x| rational::ratio(self.eval(x) as i64, x as i64))
                    .min()
                    .unwrap_or_else(Rational::zero);
                (best, false)
            }
        }
    }
}

/// z-dependent probability from a closed catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate {
    Const(f64),
    /// `K / (K + z)`.
    BevertonHolt { k: f64 },
    /// `2 K² / (lambda (K + M)(z + K))`.
    Logistic { lambda: f64, m: u64, k: f64 },
    /// `exp(-z / scale)`.
    ExpGate { scale: f64 },
    Table { entries: BTreeMap<u64, f64>, default: Box<Rate> },
}

impl Rate {
    pub fn eval(&self, z: u64) -> f64 {
        match self {
            Rate::Const(p) => *p,
            Rate::ExpGate { scale } => (-(z as f64) / scale).exp(),
            Rate::Table { entries, default } => entries.get(&z).copied().unwrap_or_else(|| default.eval(z)),
            _ => rational::to_f64(&self.eval_exact(z).expect("rational catalog rate")),
        }
    }

    /// Exact value when the rate is rational in its parameters.
    pub fn eval_exact(&self, z: u64) -> Option<Rational> {
        let zr = rational::from_u64(z);
        match self {
            Rate::Const(p) => rational::from_f64(*p),
            Rate::BevertonHolt { k } => {
                let k = rational::from_f64(*k)?;
                Some(&k / (&k + zr))
            }
            Rate::Logistic { lambda, m, k } => {
                let (l, k) = (rational::from_f64(*lambda)?, rational::from_f64(*k)?);
                let m = rational::from_u64(*m);
                let two = rational::int(2);
                Some(two * &k * &k / (l * (&k + m) * (zr + &k)))
            }
            Rate::ExpGate { .. } => None,
            Rate::Table { entries, default } => match entries.get(&z) {
                Some(p) => rational::from_f64(*p),
                None => default.eval_exact(z),
            },
        }
    }
}

/// Control law `z -> phi~(z)` of a controlled process.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSpec {
    Deterministic(ControlMap),
    /// `Poisson(psi(z))`.
    Poisson { psi: ControlMap },
    /// `Binomial(psi(z), rate(z))`.
    Binomial { psi: ControlMap, rate: Rate },
    /// `NegativeBinomial(psi(z), q)`; `psi(z) = 0` gives the point law at 0.
    NegBin { psi: ControlMap, q: f64 },
    /// `scale(z)` with probability `rate(z)`, otherwise 0.
    ScaledBernoulli { scale: ControlMap, rate: Rate },
}

impl ControlSpec {
    pub fn law(&self, z: u64) -> Result<Distribution, DistributionError> {
        match self {
            ControlSpec::Deterministic(map) => Ok(Distribution::point(map.eval(z))),
            ControlSpec::Poisson { psi } => Distribution::poisson(psi.eval(z) as f64),
            ControlSpec::Binomial { psi, rate } => match psi.eval(z) {
                0 => Ok(Distribution::point(0)),
                n => Distribution::binomial(n, rate.eval(z)),
            },
            ControlSpec::NegBin { psi, q } => match psi.eval(z) {
                0 => Ok(Distribution::point(0)),
                n => Distribution::negative_binomial(n as f64, *q),
            },
            ControlSpec::ScaledBernoulli { scale, rate } => match scale.eval(z) {
                0 => Ok(Distribution::point(0)),
                s => Distribution::scaled_bernoulli(s, rate.eval(z)),
            },
        }
    }

    /// Exact mean and variance of the control law at `z`.
    pub fn exact_moments(&self, z: u64) -> Option<(Rational, Rational)> {
        let one = Rational::one();
        match self {
            ControlSpec::Deterministic(map) => Some((rational::from_u64(map.eval(z)), Rational::zero())),
            ControlSpec::Poisson { psi } => {
                let v = rational::from_u64(psi.eval(z));
                Some((v.clone(), v))
            }
            ControlSpec::Binomial { psi, rate } => {
                let n = rational::from_u64(psi.eval(z));
                let p = rate.eval_exact(z)?;
                Some((&n * &p, &n * &p * (&one - &p)))
            }
            ControlSpec::NegBin { psi, q } => {
                let r = rational::from_u64(psi.eval(z));
                let q = rational::from_f64(*q)?;
                Some((&r * (&one - &q) / &q, &r * (&one - &q) / (&q * &q)))
            }
            ControlSpec::ScaledBernoulli { scale, rate } => {
                let s = rational::from_u64(scale.eval(z));
                let p = rate.eval_exact(z)?;
                Some((&s * &p, &s * &s * &p * (&one - &p)))
            }
        }
    }

    pub fn deterministic_map(&self) -> Option<&ControlMap> {
        match self {
            ControlSpec::Deterministic(map) => Some(map),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_evaluate() {
        assert_eq!(ControlMap::MaxShift { c: 1 }.eval(0), 0);
        assert_eq!(ControlMap::MaxShift { c: 1 }.eval(5), 4);
        assert_eq!(ControlMap::ShiftGated { m: 2 }.eval(0), 0);
        assert_eq!(ControlMap::ShiftGated { m: 2 }.eval(3), 5);
        assert_eq!(ControlMap::ParityHalf.eval(6), 3);
        assert_eq!(ControlMap::ParityHalf.eval(7), 7);
        let half = ControlMap::AffineFloor { a: rational::ratio(1, 2), b: rational::int(-1) };
        assert_eq!(half.eval(1), 0);
        assert_eq!(half.eval(7), 2);
        let t = ControlMap::Table { entries: BTreeMap::from([(0, 4)]), default: Box::new(ControlMap::Identity) };
        assert_eq!((t.eval(0), t.eval(9)), (4, 9));
    }

    #[test]
    fn infimum_ratios() {
        assert_eq!(ControlMap::ShiftGated { m: 2 }.infimum_ratio(10), (rational::int(1), true));
        assert_eq!(ControlMap::MaxShift { c: 1 }.infimum_ratio(10), (rational::int(0), true));
        let t = ControlMap::Table { entries: BTreeMap::from([(3, 1)]), default: Box::new(ControlMap::Identity) };
        assert_eq!(t.infimum_ratio(10), (rational::ratio(1, 3), false));
    }

    #[test]
    fn logistic_rate_is_exact() {
        let r = Rate::Logistic { lambda: 3.0, m: 2, k: 100.0 };
        assert_eq!(r.eval_exact(100).unwrap(), rational::ratio(20000, 3 * 102 * 200));
        assert_eq!(Rate::BevertonHolt { k: 100.0 }.eval(100), 0.5);
    }
}
