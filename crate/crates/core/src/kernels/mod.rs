//! Process specifications and their one-step transition laws.
//!
//! A PSDBP moves from `z` to a sum of `z` iid copies of `xi(z)`; a CBP moves
//! to a sum of `phi~(z)` iid copies of a fixed `xi~`, where the control
//! `phi~(z)` may be random. State 0 of a PSDBP is absorbing.

mod control;
mod family;
mod simulate;
mod transition;

pub use control::{ControlMap, ControlSpec, Rate};
pub use family::{OffspringFamily, OffspringLaw};
pub use simulate::{
    attainable_set, carrying_capacity_audit, simulate, write_trajectories_csv, AttainableSet, CapacityAudit,
    DriftViolation,
};
pub use transition::{KernelOptions, Row, StepLaw, TransitionKernel};

pub(crate) use family::{compound_moments, compound_moments_exact};
#[cfg(test)]
pub(crate) use family::finite_moments;

use crate::distributions::{Distribution, DistributionError};
use crate::rational::{self, Rational};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("invalid process specification: {0}")]
    InvalidSpec(String),
    #[error("divisibility is known but no closed-form component is available")]
    ConstructionUnavailable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    Psdbp(OffspringFamily),
    Cbp { control: ControlSpec, offspring: Distribution },
}

impl ProcessSpec {
    pub fn psdbp(family: OffspringFamily) -> Self {
        ProcessSpec::Psdbp(family)
    }

    pub fn cbp(control: ControlSpec, offspring: Distribution) -> Self {
        ProcessSpec::Cbp { control, offspring }
    }

    pub fn dcbp(map: ControlMap, offspring: Distribution) -> Self {
        ProcessSpec::Cbp { control: ControlSpec::Deterministic(map), offspring }
    }

    /// Moment-matched pair with carrying capacity `k`: the `NbLogistic`
    /// PSDBP and the CBP with `Binomial((z + m) 1{z > 0}, logistic rate)`
    /// control and `Poisson(lambda)` offspring.
    pub fn logistic_pair(lambda: f64, m: u64, k: f64) -> Result<(ProcessSpec, ProcessSpec), DistributionError> {
        let psdbp = ProcessSpec::psdbp(OffspringFamily::NbLogistic { lambda, m, k });
        let cbp = ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m }, rate: Rate::Logistic { lambda, m, k } },
            Distribution::poisson(lambda)?,
        );
        Ok((psdbp, cbp))
    }

    /// `(map, offspring)` when the process is a CBP with deterministic control.
    pub fn as_dcbp(&self) -> Option<(&ControlMap, &Distribution)> {
        match self {
            ProcessSpec::Cbp { control: ControlSpec::Deterministic(map), offspring } => Some((map, offspring)),
            _ => None,
        }
    }

    pub fn is_psdbp(&self) -> bool {
        matches!(self, ProcessSpec::Psdbp(_))
    }

    /// The one-step law from `z` as a random sum.
    pub fn step_law(&self, z: u64) -> Result<StepLaw, KernelError> {
        match self {
            ProcessSpec::Psdbp(family) => {
                if let Some(d) = family.one_step_closed(z) {
                    return Ok(StepLaw::Closed(d));
                }
                Ok(match family.offspring(z)? {
                    OffspringLaw::Simple(d) => StepLaw::Iid { summand: d, count: z },
                    OffspringLaw::Compound { count, summand } => StepLaw::Mixture {
                        count: count.iid_sum(z, Default::default())?,
                        summand,
                    },
                })
            }
            ProcessSpec::Cbp { control, offspring } => {
                let law = control.law(z)?;
                Ok(match law.point_value() {
                    Some(c) => StepLaw::Iid { summand: offspring.clone(), count: c },
                    None => StepLaw::Mixture { count: law, summand: offspring.clone() },
                })
            }
        }
    }

    /// Conditional mean and variance of the next state given `z`.
    pub fn conditional_moments(&self, z: u64) -> Result<(f64, f64), KernelError> {
        let zf = z as f64;
        match self {
            ProcessSpec::Psdbp(family) => {
                let (m, v) = family.offspring(z)?.moments();
                Ok((zf * m, zf * v))
            }
            ProcessSpec::Cbp { control, offspring } => {
                let law = control.law(z)?;
                Ok(compound_moments((law.mean(), law.variance()), (offspring.mean(), offspring.variance())))
            }
        }
    }

    /// Exact conditional mean and variance, when all parameters are rational.
    pub fn exact_conditional_moments(&self, z: u64) -> Option<(Rational, Rational)> {
        match self {
            ProcessSpec::Psdbp(family) => {
                let (m, v) = family.exact_moments(z)?;
                let zr = rational::from_u64(z);
                Some((&zr * m, &zr * v))
            }
            ProcessSpec::Cbp { control, offspring } => {
                Some(compound_moments_exact(control.exact_moments(z)?, offspring.exact_moments()?))
            }
        }
    }

    /// Checks that the laws at states `0..=z_max` are valid.
    pub fn validate(&self, z_max: u64) -> Result<(), KernelError> {
        if let ProcessSpec::Cbp { offspring, .. } = self {
            offspring.validate()?;
        }
        for z in 0..=z_max {
            match self {
                ProcessSpec::Psdbp(family) => match family.offspring(z) {
                    Ok(_) | Err(KernelError::ConstructionUnavailable) => {}
                    Err(e) => return Err(e),
                },
                ProcessSpec::Cbp { control, .. } => {
                    control.law(z)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_cbp(lambda: f64, m: u64, k: f64) -> ProcessSpec {
        ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m }, rate: Rate::Logistic { lambda, m, k } },
            Distribution::poisson(lambda).unwrap(),
        )
    }

    #[test]
    fn beverton_holt_mean_at_capacity() {
        let spec = ProcessSpec::psdbp(OffspringFamily::BinomialBevertonHolt { k: 100.0 });
        let (m, _) = spec.conditional_moments(100).unwrap();
        assert_eq!(m, 100.0);
        let (m, _) = spec.exact_conditional_moments(37).unwrap();
        assert_eq!(m, rational::ratio(2 * 100 * 37, 137));
    }

    #[test]
    fn dcbp_moments() {
        let spec = ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::binomial(2, 0.5).unwrap());
        assert_eq!(spec.conditional_moments(5).unwrap(), (4.0, 2.0));
    }

    #[test]
    fn logistic_cbp_has_mean_k_at_k() {
        let (m, _) = logistic_cbp(3.0, 2, 100.0).exact_conditional_moments(100).unwrap();
        assert_eq!(m, rational::int(100));
    }

    #[test]
    fn nb_logistic_matches_logistic_cbp_exactly() {
        for k in [10.0, 100.0] {
            let cbp = logistic_cbp(3.0, 2, k);
            let psdbp = ProcessSpec::psdbp(OffspringFamily::NbLogistic { lambda: 3.0, m: 2, k });
            for z in 1..=500 {
                assert_eq!(cbp.exact_conditional_moments(z), psdbp.exact_conditional_moments(z), "z={z}");
            }
        }
    }

    #[test]
    fn nb_shift_gated_matches_binomial_control() {
        let cbp = ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Const(0.25) },
            Distribution::poisson(4.0).unwrap(),
        );
        let psdbp = ProcessSpec::psdbp(OffspringFamily::NbShiftGated { lambda: 4.0, m: 2 });
        for z in 1..=100 {
            assert_eq!(cbp.exact_conditional_moments(z), psdbp.exact_conditional_moments(z));
        }
        // the undivided shape (z + M) / z overshoots the mean by a factor lambda - 1
        let z = 10u64;
        let (cbp_mean, _) = cbp.conditional_moments(z).unwrap();
        let naive = Distribution::negative_binomial((z + 2) as f64 / z as f64, 0.25).unwrap();
        assert!((z as f64 * naive.mean() - 3.0 * cbp_mean).abs() < 1e-9);
    }
}
