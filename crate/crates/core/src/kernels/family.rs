use super::control::{ControlMap, ControlSpec};
use super::KernelError;
use crate::distributions::{Distribution, SumOptions};
use crate::matching;
use crate::rational::{self, Rational};
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Per-state offspring law of a PSDBP.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringLaw {
    Simple(Distribution),
    /// Sum of `count` iid copies of `summand`.
    Compound { count: Distribution, summand: Distribution },
}

impl OffspringLaw {
    pub fn moments(&self) -> (f64, f64) {
        match self {
            OffspringLaw::Simple(d) => (d.mean(), d.variance()),
            OffspringLaw::Compound { count, summand } => compound_moments(
                (count.mean(), count.variance()),
                (summand.mean(), summand.variance()),
            ),
        }
    }
}

pub(crate) fn compound_moments(count: (f64, f64), summand: (f64, f64)) -> (f64, f64) {
    (count.0 * summand.0, count.0 * summand.1 + count.1 * summand.0 * summand.0)
}

pub(crate) fn compound_moments_exact(
    count: (Rational, Rational),
    summand: (Rational, Rational),
) -> (Rational, Rational) {
    let mean = &count.0 * &summand.0;
    let var = &count.0 * &summand.1 + &count.1 * &summand.0 * &summand.0;
    (mean, var)
}

/// Named families `z -> xi(z)` for PSDBP offspring.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringFamily {
    /// `Binomial(2, K / (K + z))`: conditional mean `2Kz / (K + z)`.
    BinomialBevertonHolt { k: f64 },
    /// `Poisson((z - 1) lambda / z)` for `z >= 1`.
    PoissonScaled { lambda: f64 },
    /// `Poisson(r^(1 - z/K))`: conditional mean `z r^(1 - z/K)`.
    PoissonRicker { r: f64, k: f64 },
    /// Negative binomial whose moments match the logistic binomial-control CBP
    /// with `Poisson(lambda)` offspring and carrying capacity `K`.
    NbLogistic { lambda: f64, m: u64, k: f64 },
    /// `NegativeBinomial((z + M) / (z (lambda - 1)), 1 / lambda)`, matching the
    /// CBP with `Binomial((z + M) 1{z > 0}, 1 / lambda)` control and
    /// `Poisson(lambda)` offspring.
    NbShiftGated { lambda: f64, m: u64 },
    /// Point law at 0 for `z <= 1`; for `z >= 2` the law on `{0, 1, 2}` with
    /// probabilities `(z²+z+2)/(4z²)`, `(z²+z-2)/(2z²)`, `(z²-3z+2)/(4z²)`.
    ThreePoint,
    Constant(Distribution),
    Tabulated { entries: BTreeMap<u64, Distribution>, default: Distribution },
    /// DCBP rearranged into a PSDBP: with `g = gcd(phi(z), z)` and
    /// `y = z / g`, `xi(z)` is the sum of `phi(z) / g` copies of the
    /// `y`-th root of `offspring`.
    DividedDcbp { map: ControlMap, offspring: Distribution },
    /// CBP with a divisible control rearranged into a PSDBP: `xi(z)` is a
    /// compound of the `z`-th root of the control law with `offspring`.
    DividedControl { control: ControlSpec, offspring: Distribution },
    /// Minimum-support law with mean `mean * phi(z) / z` and variance
    /// `variance * phi(z) / z`, matching the DCBP `(map, mean, variance)`.
    MinVariance { map: ControlMap, mean: Rational, variance: Rational },
}

impl OffspringFamily {
    /// `(r, q)` with `r` the shape at `z` and `z r` the shape of the one-step law.
    fn nb_params(&self, z: u64) -> Option<(Rational, Rational, Rational)> {
        let zr = rational::from_u64(z);
        let one = Rational::one();
        match *self {
            OffspringFamily::NbLogistic { lambda, m, k } => {
                let (l, k) = (rational::from_f64(lambda)?, rational::from_f64(k)?);
                let m = rational::from_u64(m);
                let two = rational::int(2);
                let km = &k + &m;
                let denom = &l * &km * &zr + &l * &k * &m + (&l - &two) * &k * &k;
                let total = &two * &k * &k * (&zr + &m) / &denom;
                let q = (&zr + &k) * &km / ((&one + &l) * &km * (&k + &zr) - &two * &k * &k);
                Some((&total / &zr, total, q))
            }
            OffspringFamily::NbShiftGated { lambda, m } => {
                let l = rational::from_f64(lambda)?;
                let total = (&zr + rational::from_u64(m)) / (&l - &one);
                Some((&total / &zr, total, &one / &l))
            }
            _ => None,
        }
    }

    fn three_point(z: u64) -> Vec<(u64, Rational)> {
        let z = z as i64;
        let d = 4 * z * z;
        vec![
            (0, rational::ratio(z * z + z + 2, d)),
            (1, rational::ratio(2 * (z * z + z - 2), d)),
            (2, rational::ratio(z * z - 3 * z + 2, d)),
        ]
    }

    fn exact_finite(atoms: &[(u64, Rational)]) -> Result<Distribution, KernelError> {
        let atoms: Vec<(u64, f64)> = atoms
            .iter()
            .filter(|a| !a.1.is_zero())
            .map(|(k, p)| (*k, rational::to_f64(p)))
            .collect();
        if atoms.len() == 1 {
            return Ok(Distribution::point(atoms[0].0));
        }
        Ok(Distribution::finite(atoms)?)
    }

    /// Offspring law at population size `z`.
    pub fn offspring(&self, z: u64) -> Result<OffspringLaw, KernelError> {
        use OffspringLaw::Simple;
        let zf = z as f64;
        Ok(match self {
            OffspringFamily::BinomialBevertonHolt { k } => Simple(Distribution::binomial(2, k / (k + zf))?),
            OffspringFamily::PoissonScaled { lambda } => {
                if z == 0 {
                    Simple(Distribution::point(0))
                } else {
                    Simple(Distribution::poisson((zf - 1.0) * lambda / zf)?)
                }
            }
            OffspringFamily::PoissonRicker { r, k } => Simple(Distribution::poisson(r.powf(1.0 - zf / k))?),
            OffspringFamily::NbLogistic { .. } | OffspringFamily::NbShiftGated { .. } => {
                if z == 0 {
                    return Ok(Simple(Distribution::point(0)));
                }
                let (r, _, q) = self
                    .nb_params(z)
                    .ok_or_else(|| KernelError::InvalidSpec("non-finite parameter".into()))?;
                Simple(Distribution::negative_binomial(rational::to_f64(&r), rational::to_f64(&q))?)
            }
            OffspringFamily::ThreePoint => {
                if z <= 1 {
                    Simple(Distribution::point(0))
                } else {
                    Simple(Self::exact_finite(&Self::three_point(z))?)
                }
            }
            OffspringFamily::Constant(d) => Simple(d.clone()),
            OffspringFamily::Tabulated { entries, default } => {
                Simple(entries.get(&z).unwrap_or(default).clone())
            }
            OffspringFamily::DividedDcbp { map, offspring } => {
                let phi = map.eval(z);
                if phi == 0 || z == 0 {
                    return Ok(Simple(Distribution::point(0)));
                }
                let g = phi.gcd(&z);
                let verdict = offspring.divide(z / g);
                let component = verdict.component().ok_or(KernelError::ConstructionUnavailable)?;
                Simple(component.iid_sum(phi / g, SumOptions::default())?)
            }
            OffspringFamily::DividedControl { control, offspring } => {
                if z == 0 {
                    return Ok(Simple(Distribution::point(0)));
                }
                let law = control.law(z)?;
                let verdict = law.divide(z);
                let count = verdict.component().ok_or(KernelError::ConstructionUnavailable)?.clone();
                match count.point_value() {
                    Some(c) => Simple(offspring.iid_sum(c, SumOptions::default())?),
                    None => OffspringLaw::Compound { count, summand: offspring.clone() },
                }
            }
            OffspringFamily::MinVariance { .. } => {
                if z == 0 {
                    return Ok(Simple(Distribution::point(0)));
                }
                let atoms = self.min_variance_atoms(z)?;
                Simple(Self::exact_finite(&atoms)?)
            }
        })
    }

    fn min_variance_atoms(&self, z: u64) -> Result<Vec<(u64, Rational)>, KernelError> {
        let OffspringFamily::MinVariance { map, mean, variance } = self else {
            unreachable!()
        };
        let scale = rational::ratio(map.eval(z) as i64, z as i64);
        matching::construct_offspring_exact(&(mean * &scale), &(variance * &scale))
            .map_err(|e| KernelError::InvalidSpec(e.to_string()))
    }

    /// Exact `(m(z), sigma²(z))` when the family is rational in its parameters.
    pub fn exact_moments(&self, z: u64) -> Option<(Rational, Rational)> {
        let one = Rational::one();
        let zero = (Rational::zero(), Rational::zero());
        match self {
            OffspringFamily::BinomialBevertonHolt { k } => {
                let k = rational::from_f64(*k)?;
                let p = &k / (&k + rational::from_u64(z));
                let two = rational::int(2);
                Some((&two * &p, &two * &p * (&one - &p)))
            }
            OffspringFamily::PoissonScaled { lambda } => {
                if z == 0 {
                    return Some(zero);
                }
                let mu = rational::from_f64(*lambda)? * rational::ratio(z as i64 - 1, z as i64);
                Some((mu.clone(), mu))
            }
            OffspringFamily::PoissonRicker { .. } => None,
            OffspringFamily::NbLogistic { .. } | OffspringFamily::NbShiftGated { .. } => {
                if z == 0 {
                    return Some(zero);
                }
                let (r, _, q) = self.nb_params(z)?;
                Some((&r * (&one - &q) / &q, &r * (&one - &q) / (&q * &q)))
            }
            OffspringFamily::ThreePoint => {
                if z <= 1 {
                    return Some(zero);
                }
                Some(finite_moments(&Self::three_point(z)))
            }
            OffspringFamily::Constant(d) => d.exact_moments(),
            OffspringFamily::Tabulated { entries, default } => entries.get(&z).unwrap_or(default).exact_moments(),
            OffspringFamily::DividedDcbp { map, offspring } => {
                if z == 0 {
                    return Some(zero);
                }
                let (m, v) = offspring.exact_moments()?;
                let scale = rational::ratio(map.eval(z) as i64, z as i64);
                Some((m * &scale, v * &scale))
            }
            OffspringFamily::DividedControl { control, offspring } => {
                if z == 0 {
                    return Some(zero);
                }
                let (cm, cv) = control.exact_moments(z)?;
                let zr = rational::from_u64(z);
                Some(compound_moments_exact((cm / &zr, cv / &zr), offspring.exact_moments()?))
            }
            OffspringFamily::MinVariance { .. } => {
                if z == 0 {
                    return Some(zero);
                }
                Some(finite_moments(&self.min_variance_atoms(z).ok()?))
            }
        }
    }

    /// The one-step law from `z` in closed form, with parameters computed
    /// exactly and rounded once. `None` when the family has no closed form.
    pub fn one_step_closed(&self, z: u64) -> Option<Distribution> {
        if z == 0 {
            return Some(Distribution::point(0));
        }
        let zf = z as f64;
        match *self {
            OffspringFamily::BinomialBevertonHolt { k } => Some(Distribution::Binomial { n: 2 * z, p: k / (k + zf) }),
            OffspringFamily::PoissonScaled { lambda } => Some(Distribution::Poisson { mu: (zf - 1.0) * lambda }),
            OffspringFamily::NbLogistic { .. } | OffspringFamily::NbShiftGated { .. } => {
                let (_, total, q) = self.nb_params(z)?;
                Some(Distribution::NegativeBinomial { r: rational::to_f64(&total), q: rational::to_f64(&q) })
            }
            _ => None,
        }
    }
}

pub(crate) fn finite_moments(atoms: &[(u64, Rational)]) -> (Rational, Rational) {
    let mut mean = Rational::zero();
    let mut second = Rational::zero();
    for (k, p) in atoms {
        let k = rational::from_u64(*k);
        mean += &k * p;
        second += &k * &k * p;
    }
    let var = second - &mean * &mean;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_fixture_moments() {
        for z in 2..=1000u64 {
            let (m, v) = OffspringFamily::ThreePoint.exact_moments(z).unwrap();
            assert_eq!(m, rational::ratio(z as i64 - 1, z as i64));
            assert_eq!(v, rational::ratio(z as i64 - 1, 2 * z as i64));
        }
    }

    #[test]
    fn nb_logistic_closed_step_matches_offspring() {
        let fam = OffspringFamily::NbLogistic { lambda: 3.0, m: 2, k: 100.0 };
        let Some(Distribution::NegativeBinomial { r: total, q }) = fam.one_step_closed(37) else {
            panic!("expected a negative binomial");
        };
        let OffspringLaw::Simple(Distribution::NegativeBinomial { r, q: q1 }) = fam.offspring(37).unwrap() else {
            panic!("expected a negative binomial");
        };
        assert_eq!(q, q1);
        assert!((total / 37.0 - r).abs() < 1e-15);
    }

    #[test]
    fn nb_logistic_has_carrying_capacity_at_k() {
        let fam = OffspringFamily::NbLogistic { lambda: 3.0, m: 2, k: 100.0 };
        let (m, _) = fam.exact_moments(100).unwrap();
        assert_eq!(m * rational::int(100), rational::int(100));
    }

    #[test]
    fn divided_dcbp_parity_example() {
        let fam = OffspringFamily::DividedDcbp {
            map: ControlMap::ParityHalf,
            offspring: Distribution::binomial(2, 0.5).unwrap(),
        };
        assert_eq!(fam.offspring(3).unwrap(), OffspringLaw::Simple(Distribution::Binomial { n: 2, p: 0.5 }));
        assert_eq!(fam.offspring(4).unwrap(), OffspringLaw::Simple(Distribution::Bernoulli { p: 0.5 }));
    }
}
