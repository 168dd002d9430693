//! Deciding whether a CBP has an equivalent PSDBP, and building it.
//!
//! Two processes are equivalent when their one-step transition laws agree
//! on every attainable state. Rules are tried in a fixed order and the
//! first that applies decides:
//!
//! | rule id | condition | verdict |
//! |---|---|---|
//! | `immigration-at-zero` | 0 attainable and `P(phi~(0) = 0) < 1` | No |
//! | `divisible-control` | `phi~(z)` is `z`-divisible on attainable `z >= 1` | Yes |
//! | `dcbp-y-divisibility` | deterministic control; offspring `y`-divisible for every `y` in the y-set | Yes / No |
//! | `binomial-control-poisson-offspring` | binomial control, Poisson offspring, `psi >= 1` on attainable `z >= 1` | No |
//! | `binomial-control-geometric-offspring` | binomial control, geometric offspring, `psi(0) = 0` | Yes, no closed form |
//! | `unclassified` | none of the above | Unknown |
//!
//! All verdicts are computed on the attainable set truncated at `cap`; when
//! the truncation bites, a Yes holds on the audited range only and the
//! verdict carries `attainable_truncated`.

use crate::distributions::{Distribution, DivisibilityOutcome};
use crate::kernels::{
    attainable_set, AttainableSet, ControlMap, ControlSpec, KernelError, KernelOptions, OffspringFamily, ProcessSpec,
    TransitionKernel,
};
use num_integer::Integer;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquivalenceError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no equivalent PSDBP ({rule}): {reason}")]
    NotEquivalent { rule: &'static str, reason: String },
    #[error("an equivalent PSDBP exists ({rule}) but has no closed-form construction")]
    ConstructionUnavailable { rule: &'static str },
    #[error("constructed kernel differs from the original at state {state} by {diff:e}")]
    AuditFailed { state: u64, diff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceOutcome {
    /// `construction` is `None` when existence is known without a closed form.
    Yes { construction: Option<ProcessSpec> },
    No { reason: String },
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceVerdict {
    pub outcome: EquivalenceOutcome,
    pub rule: &'static str,
    pub witness: Option<u64>,
    pub attainable_truncated: bool,
}

impl EquivalenceVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self.outcome, EquivalenceOutcome::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self.outcome, EquivalenceOutcome::No { .. })
    }

    pub fn construction(&self) -> Option<&ProcessSpec> {
        match &self.outcome {
            EquivalenceOutcome::Yes { construction } => construction.as_ref(),
            _ => None,
        }
    }

    fn label(&self) -> &'static str {
        match self.outcome {
            EquivalenceOutcome::Yes { .. } => "yes",
            EquivalenceOutcome::No { .. } => "no",
            EquivalenceOutcome::Unknown { .. } => "unknown",
        }
    }
}

impl Serialize for EquivalenceVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EquivalenceVerdict", 6)?;
        st.serialize_field("outcome", self.label())?;
        st.serialize_field("rule", self.rule)?;
        st.serialize_field("witness", &self.witness)?;
        let (construction, reason) = match &self.outcome {
            EquivalenceOutcome::Yes { construction: Some(c) } => (Some(c.to_string()), None),
            EquivalenceOutcome::Yes { construction: None } => (None, Some("construction unavailable".to_string())),
            EquivalenceOutcome::No { reason } | EquivalenceOutcome::Unknown { reason } => (None, Some(reason.clone())),
        };
        st.serialize_field("construction", &construction)?;
        st.serialize_field("reason", &reason)?;
        st.serialize_field("attainable_truncated", &self.attainable_truncated)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlDivisibility {
    Divisible,
    NotDivisible,
    Unknown,
}

/// Whether `phi~(z)` is `z`-divisible on every attainable `z >= 1`, with
/// `phi~(0) = 0` almost surely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlDivisibilityReport {
    pub outcome: ControlDivisibility,
    /// First failing state (`NotDivisible`) or first undecided state (`Unknown`).
    pub witness: Option<u64>,
    pub attainable_truncated: bool,
}

fn cbp_parts(spec: &ProcessSpec) -> Result<(&ControlSpec, &Distribution), KernelError> {
    match spec {
        ProcessSpec::Cbp { control, offspring } => Ok((control, offspring)),
        ProcessSpec::Psdbp(_) => Err(KernelError::InvalidSpec("expected a CBP".into())),
    }
}

fn attainable(spec: &ProcessSpec, z0: u64, cap: u64) -> Result<AttainableSet, KernelError> {
    attainable_set(&TransitionKernel::new(spec.clone(), KernelOptions::default()), z0, cap)
}

fn control_divisibility_on(control: &ControlSpec, set: &AttainableSet) -> Result<ControlDivisibilityReport, KernelError> {
    let mut report =
        ControlDivisibilityReport { outcome: ControlDivisibility::Divisible, witness: None, attainable_truncated: set.truncated };
    let mut unknown = None;
    for &z in set.states.iter().filter(|&&z| z >= 1) {
        match control.law(z)?.divide(z).outcome {
            DivisibilityOutcome::Divisible { .. } => {}
            DivisibilityOutcome::NotDivisible => {
                report.outcome = ControlDivisibility::NotDivisible;
                report.witness = Some(z);
                return Ok(report);
            }
            DivisibilityOutcome::Unknown => {
                unknown.get_or_insert(z);
            }
        }
    }
    // checked after the positive states so a failure there is reported first
    if control.law(0)?.point_value() != Some(0) {
        report.outcome = ControlDivisibility::NotDivisible;
        report.witness = Some(0);
        return Ok(report);
    }
    if let Some(z) = unknown {
        report.outcome = ControlDivisibility::Unknown;
        report.witness = Some(z);
    }
    Ok(report)
}

pub fn control_divisibility(cbp: &ProcessSpec, z0: u64, cap: u64) -> Result<ControlDivisibilityReport, KernelError> {
    let (control, _) = cbp_parts(cbp)?;
    control_divisibility_on(control, &attainable(cbp, z0, cap)?)
}

/// `{ z / gcd(phi(z), z) }` over attainable `z >= 1`, with the state that
/// first produced each value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YSet {
    pub values: BTreeMap<u64, u64>,
    pub attainable_truncated: bool,
}

impl YSet {
    pub fn set(&self) -> BTreeSet<u64> {
        self.values.keys().copied().collect()
    }
}

fn y_set_on(map: &ControlMap, set: &AttainableSet) -> YSet {
    let mut values = BTreeMap::new();
    for &z in set.states.iter().filter(|&&z| z >= 1) {
        // gcd(0, z) = z
        let y = z / map.eval(z).gcd(&z);
        values.entry(y).or_insert(z);
    }
    YSet { values, attainable_truncated: set.truncated }
}

pub fn y_set(dcbp: &ProcessSpec, z0: u64, cap: u64) -> Result<YSet, KernelError> {
    let (map, _) = dcbp.as_dcbp().ok_or_else(|| KernelError::InvalidSpec("expected a DCBP".into()))?;
    Ok(y_set_on(map, &attainable(dcbp, z0, cap)?))
}

/// Replaces a constructed family by an equal catalog family when one exists.
fn canonical(family: OffspringFamily) -> OffspringFamily {
    match &family {
        OffspringFamily::DividedDcbp { map: ControlMap::MaxShift { c: 1 }, offspring: Distribution::Poisson { mu } } => {
            OffspringFamily::PoissonScaled { lambda: *mu }
        }
        _ => family,
    }
}

/// Applies the rule chain to `spec` on the states attainable from `z0`, up to `cap`.
pub fn decide_equivalence(spec: &ProcessSpec, z0: u64, cap: u64) -> Result<EquivalenceVerdict, KernelError> {
    let set = attainable(spec, z0, cap)?;
    let truncated = set.truncated;
    let verdict = |outcome, rule, witness| EquivalenceVerdict { outcome, rule, witness, attainable_truncated: truncated };
    let (control, offspring) = match spec {
        ProcessSpec::Psdbp(_) => {
            return Ok(verdict(EquivalenceOutcome::Yes { construction: Some(spec.clone()) }, "already-psdbp", None));
        }
        ProcessSpec::Cbp { control, offspring } => (control, offspring),
    };

    if set.contains(0) && control.law(0)?.point_value() != Some(0) {
        let reason = "state 0 is attainable and not absorbing".to_string();
        return Ok(verdict(EquivalenceOutcome::No { reason }, "immigration-at-zero", Some(0)));
    }

    let divisibility = control_divisibility_on(control, &set)?;
    if divisibility.outcome == ControlDivisibility::Divisible {
        let family = OffspringFamily::DividedControl { control: control.clone(), offspring: offspring.clone() };
        let family = match control.deterministic_map() {
            Some(map) => canonical(OffspringFamily::DividedDcbp { map: map.clone(), offspring: offspring.clone() }),
            None => family,
        };
        return Ok(verdict(
            EquivalenceOutcome::Yes { construction: Some(ProcessSpec::psdbp(family)) },
            "divisible-control",
            None,
        ));
    }

    if let Some(map) = control.deterministic_map() {
        let ys = y_set_on(map, &set);
        let mut unavailable = false;
        let mut unknown = None;
        for (&y, &z) in &ys.values {
            match offspring.divide(y).outcome {
                DivisibilityOutcome::Divisible { component: Some(_) } => {}
                DivisibilityOutcome::Divisible { component: None } => unavailable = true,
                DivisibilityOutcome::NotDivisible => {
                    let reason = format!("offspring is not {y}-divisible (y from state {z})");
                    return Ok(verdict(EquivalenceOutcome::No { reason }, "dcbp-y-divisibility", Some(z)));
                }
                DivisibilityOutcome::Unknown => {
                    unknown.get_or_insert((y, z));
                }
            }
        }
        if let Some((y, z)) = unknown {
            let reason = format!("{y}-divisibility of the offspring is undecided (y from state {z})");
            return Ok(verdict(EquivalenceOutcome::Unknown { reason }, "dcbp-y-divisibility", Some(z)));
        }
        let construction = (!unavailable).then(|| {
            ProcessSpec::psdbp(canonical(OffspringFamily::DividedDcbp { map: map.clone(), offspring: offspring.clone() }))
        });
        return Ok(verdict(EquivalenceOutcome::Yes { construction }, "dcbp-y-divisibility", None));
    }

    if let ControlSpec::Binomial { psi, .. } = control {
        let psi_positive = set.states.iter().filter(|&&z| z >= 1).all(|&z| psi.eval(z) >= 1);
        if matches!(offspring, Distribution::Poisson { .. }) && psi_positive && divisibility.outcome == ControlDivisibility::NotDivisible {
            let reason = "binomial control is not divisible and offspring is Poisson".to_string();
            return Ok(verdict(EquivalenceOutcome::No { reason }, "binomial-control-poisson-offspring", divisibility.witness));
        }
        if matches!(offspring, Distribution::Geometric { .. }) && psi.eval(0) == 0 {
            return Ok(verdict(EquivalenceOutcome::Yes { construction: None }, "binomial-control-geometric-offspring", None));
        }
    }

    let reason = "no rule in the catalog applies".to_string();
    Ok(verdict(EquivalenceOutcome::Unknown { reason }, "unclassified", divisibility.witness))
}

/// Pointwise comparison of two kernels on a set of source states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelAudit {
    pub states: Vec<u64>,
    pub max_abs_diff: f64,
    pub worst_state: Option<u64>,
    /// Smallest probability mass covered by a compared row.
    pub min_covered_mass: f64,
}

/// Tolerance for pointwise kernel equality.
pub const KERNEL_AUDIT_TOL: f64 = 1e-12;

pub fn audit_kernels(a: &TransitionKernel, b: &TransitionKernel, states: &[u64]) -> Result<KernelAudit, KernelError> {
    let mut audit = KernelAudit { states: states.to_vec(), max_abs_diff: 0.0, worst_state: None, min_covered_mass: 1.0 };
    for &z in states {
        let ra = a.row(z)?;
        let rb = b.row(z)?;
        let lo = ra.offset.min(rb.offset);
        let hi = (ra.offset + ra.probs.len() as u64).max(rb.offset + rb.probs.len() as u64);
        let mut covered = 0.0;
        for k in lo..hi {
            let (pa, pb) = (ra.pmf(k), rb.pmf(k));
            covered += pa;
            let d = (pa - pb).abs();
            if d > audit.max_abs_diff {
                audit.max_abs_diff = d;
                audit.worst_state = Some(z);
            }
        }
        audit.min_covered_mass = audit.min_covered_mass.min(covered);
    }
    Ok(audit)
}

/// The equivalent PSDBP, audited against the CBP kernel on the first
/// `min(cap, 50)` attainable states.
pub fn construct_equivalent_psdbp(
    cbp: &ProcessSpec,
    z0: u64,
    cap: u64,
) -> Result<(ProcessSpec, KernelAudit), EquivalenceError> {
    let verdict = decide_equivalence(cbp, z0, cap)?;
    let construction = match verdict.outcome {
        EquivalenceOutcome::Yes { construction: Some(c) } => c,
        EquivalenceOutcome::Yes { construction: None } => {
            return Err(EquivalenceError::ConstructionUnavailable { rule: verdict.rule })
        }
        EquivalenceOutcome::No { reason } | EquivalenceOutcome::Unknown { reason } => {
            return Err(EquivalenceError::NotEquivalent { rule: verdict.rule, reason })
        }
    };
    let original = TransitionKernel::new(cbp.clone(), KernelOptions::default());
    let built = TransitionKernel::new(construction.clone(), KernelOptions::default());
    let states: Vec<u64> = attainable_set(&original, z0, cap)?.states.into_iter().take(cap.min(50) as usize).collect();
    let audit = audit_kernels(&original, &built, &states)?;
    if audit.max_abs_diff > KERNEL_AUDIT_TOL {
        return Err(EquivalenceError::AuditFailed { state: audit.worst_state.unwrap_or(0), diff: audit.max_abs_diff });
    }
    Ok((construction, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Rate;
    use crate::rational;

    fn fig2() -> ProcessSpec {
        ProcessSpec::cbp(
            ControlSpec::ScaledBernoulli {
                scale: ControlMap::AffineFloor { a: rational::int(1), b: rational::int(1) },
                rate: Rate::ExpGate { scale: 1000.0 },
            },
            Distribution::binomial(5, 0.2).unwrap(),
        )
    }

    #[test]
    fn immigration_rules_out_equivalence() {
        let v = decide_equivalence(&fig2(), 1, 60).unwrap();
        assert!(v.is_no());
        assert_eq!(v.rule, "immigration-at-zero");
    }

    #[test]
    fn control_divisibility_examples() {
        let poisson = ProcessSpec::cbp(ControlSpec::Poisson { psi: ControlMap::Identity }, Distribution::point(1));
        assert_eq!(control_divisibility(&poisson, 3, 40).unwrap().outcome, ControlDivisibility::Divisible);
        let triple = ProcessSpec::cbp(
            ControlSpec::Binomial {
                psi: ControlMap::AffineFloor { a: rational::int(3), b: rational::int(0) },
                rate: Rate::Const(0.25),
            },
            Distribution::bernoulli(0.5).unwrap(),
        );
        assert_eq!(control_divisibility(&triple, 3, 40).unwrap().outcome, ControlDivisibility::Divisible);
        let shifted = ProcessSpec::cbp(
            ControlSpec::Binomial {
                psi: ControlMap::AffineFloor { a: rational::int(1), b: rational::int(1) },
                rate: Rate::Const(0.5),
            },
            Distribution::bernoulli(0.5).unwrap(),
        );
        let r = control_divisibility(&shifted, 2, 40).unwrap();
        assert_eq!(r.outcome, ControlDivisibility::NotDivisible);
        assert_eq!(r.witness, Some(2));
    }

    #[test]
    fn y_sets() {
        let parity = ProcessSpec::dcbp(ControlMap::ParityHalf, Distribution::binomial(2, 0.5).unwrap());
        assert_eq!(y_set(&parity, 1, 100).unwrap().set(), BTreeSet::from([1, 2]));
        let shift = ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::poisson(2.0).unwrap());
        assert_eq!(y_set(&shift, 5, 30).unwrap().set(), (1..=30).collect());
        let id = ProcessSpec::dcbp(ControlMap::Identity, Distribution::poisson(2.0).unwrap());
        assert_eq!(y_set(&id, 5, 30).unwrap().set(), BTreeSet::from([1]));
    }

    #[test]
    fn shifted_poisson_dcbp_is_scaled_poisson() {
        let spec = ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::poisson(3.0).unwrap());
        let v = decide_equivalence(&spec, 5, 60).unwrap();
        assert_eq!(v.construction(), Some(&ProcessSpec::psdbp(OffspringFamily::PoissonScaled { lambda: 3.0 })));
        let (_, audit) = construct_equivalent_psdbp(&spec, 5, 60).unwrap();
        assert!(audit.max_abs_diff <= KERNEL_AUDIT_TOL);
    }

    #[test]
    fn doubling_bernoulli_is_binomial() {
        let spec = ProcessSpec::dcbp(
            ControlMap::AffineFloor { a: rational::int(2), b: rational::int(0) },
            Distribution::bernoulli(0.5).unwrap(),
        );
        let (built, _) = construct_equivalent_psdbp(&spec, 1, 60).unwrap();
        let ProcessSpec::Psdbp(family) = built else { panic!() };
        for z in 1..20 {
            assert_eq!(family.offspring(z).unwrap(), crate::kernels::OffspringLaw::Simple(Distribution::binomial(2, 0.5).unwrap()));
        }
    }

    #[test]
    fn parity_example() {
        let spec = ProcessSpec::dcbp(ControlMap::ParityHalf, Distribution::binomial(2, 0.5).unwrap());
        let (built, _) = construct_equivalent_psdbp(&spec, 7, 60).unwrap();
        let ProcessSpec::Psdbp(family) = built else { panic!() };
        use crate::kernels::OffspringLaw::Simple;
        assert_eq!(family.offspring(7).unwrap(), Simple(Distribution::binomial(2, 0.5).unwrap()));
        assert_eq!(family.offspring(8).unwrap(), Simple(Distribution::bernoulli(0.5).unwrap()));
    }

    #[test]
    fn binomial_control_rules() {
        let logistic = ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Const(1.0 / 3.0) },
            Distribution::poisson(3.0).unwrap(),
        );
        let v = decide_equivalence(&logistic, 10, 40).unwrap();
        assert!(v.is_no());
        assert_eq!(v.rule, "binomial-control-poisson-offspring");

        let geometric = ProcessSpec::cbp(
            ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Const(0.5) },
            Distribution::geometric(0.5).unwrap(),
        );
        let v = decide_equivalence(&geometric, 10, 40).unwrap();
        assert_eq!(v.outcome, EquivalenceOutcome::Yes { construction: None });
        assert_eq!(v.rule, "binomial-control-geometric-offspring");
        assert!(matches!(
            construct_equivalent_psdbp(&geometric, 10, 40),
            Err(EquivalenceError::ConstructionUnavailable { .. })
        ));
    }

    #[test]
    fn divisible_random_controls() {
        for control in [
            ControlSpec::Poisson { psi: ControlMap::AffineFloor { a: rational::int(2), b: rational::int(0) } },
            ControlSpec::NegBin { psi: ControlMap::Identity, q: 0.5 },
        ] {
            let spec = ProcessSpec::cbp(control, Distribution::bernoulli(0.5).unwrap());
            let v = decide_equivalence(&spec, 3, 30).unwrap();
            assert!(v.is_yes(), "{v:?}");
            assert_eq!(v.rule, "divisible-control");
            let (_, audit) = construct_equivalent_psdbp(&spec, 3, 30).unwrap();
            assert!(audit.max_abs_diff <= KERNEL_AUDIT_TOL, "{audit:?}");
        }
    }
}
