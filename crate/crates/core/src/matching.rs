//! Moment matching between PSDBPs and DCBPs.
//!
//! A PSDBP and a DCBP match when `z m(z) = m~ phi(z)` and
//! `z sigma²(z) = sigma~² phi(z)` at every attainable `z`. A law on the
//! non-negative integers with mean `alpha` exists for variance `beta` iff
//! `beta >= d (1 - d)` with `d = alpha - floor(alpha)`.

use crate::distributions::Distribution;
use crate::kernels::{attainable_set, ControlMap, KernelError, KernelOptions, OffspringFamily, ProcessSpec, TransitionKernel};
use crate::rational::{self, Rational};
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("variance {beta} is below the minimum {min} for mean {alpha}")]
    InfeasibleVariance { alpha: String, beta: String, min: String },
    #[error("mean {0} is negative or not finite")]
    InvalidMean(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `d (1 - d)` with `d = frac(alpha)`: the least variance of a law on the
/// non-negative integers with mean `alpha`.
pub fn min_variance(alpha: f64) -> f64 {
    let d = alpha - alpha.floor();
    d * (1.0 - d)
}

pub fn min_variance_exact(alpha: &Rational) -> Rational {
    let d = rational::frac(alpha);
    &d * (Rational::one() - &d)
}

/// Two-point law on `{u, v}` with mean `alpha`, as `(value, probability)` pairs.
fn two_point(u: u64, v: u64, alpha: &Rational) -> [(u64, Rational); 2] {
    let pv = (alpha - rational::from_u64(u)) / rational::from_u64(v - u);
    [(u, Rational::one() - &pv), (v, pv)]
}

fn infeasible(alpha: &Rational, beta: &Rational) -> MatchingError {
    MatchingError::InfeasibleVariance {
        alpha: rational::format(alpha),
        beta: rational::format(beta),
        min: rational::format(&min_variance_exact(alpha)),
    }
}

/// Law with mean `alpha` and variance `beta` in exact arithmetic.
///
/// At the minimum variance this is the two-point law on
/// `{floor(alpha), floor(alpha) + 1}`; above it, a mixture of that law with a
/// wider two-point law `Y*` whose variance is at least `beta`. Atoms are
/// ascending with positive probabilities.
pub fn construct_offspring_exact(alpha: &Rational, beta: &Rational) -> Result<Vec<(u64, Rational)>, MatchingError> {
    if alpha.is_negative() {
        return Err(MatchingError::InvalidMean(rational::format(alpha)));
    }
    let min = min_variance_exact(alpha);
    if beta < &min {
        return Err(infeasible(alpha, beta));
    }
    if alpha.is_zero() {
        // the only law with mean 0 is the point mass at 0
        return if beta.is_zero() { Ok(vec![(0, Rational::one())]) } else { Err(infeasible(alpha, beta)) };
    }
    let lo = rational::floor_u64(alpha).ok_or_else(|| MatchingError::InvalidMean(rational::format(alpha)))?;
    let d = rational::frac(alpha);
    let base: Vec<(u64, Rational)> = if d.is_zero() {
        vec![(lo, Rational::one())]
    } else {
        two_point(lo, lo + 1, alpha).to_vec()
    };
    let mut atoms: BTreeMap<u64, Rational> = BTreeMap::new();
    if beta == &min {
        atoms.extend(base);
    } else {
        let (u, v) = if d.is_zero() {
            (lo - 1, rational::ceil_u64(&(alpha + beta)).expect("finite"))
        } else {
            let y = (beta + alpha * alpha - alpha * rational::from_u64(lo)) / &d;
            (lo, rational::ceil_u64(&y).expect("finite"))
        };
        let star = two_point(u, v, alpha);
        let var_star = (alpha - rational::from_u64(u)) * (rational::from_u64(v) - alpha);
        let q = (beta - &min) / (var_star - &min);
        for (k, p) in base {
            *atoms.entry(k).or_insert_with(Rational::zero) += (Rational::one() - &q) * p;
        }
        for (k, p) in star {
            *atoms.entry(k).or_insert_with(Rational::zero) += &q * p;
        }
    }
    Ok(atoms.into_iter().filter(|(_, p)| !p.is_zero()).collect())
}

/// Floating-point front end of [`construct_offspring_exact`]; the inputs are
/// taken as the exact binary values they hold.
pub fn construct_offspring(alpha: f64, beta: f64) -> Result<Distribution, MatchingError> {
    let a = rational::from_f64(alpha).ok_or_else(|| MatchingError::InvalidMean(alpha.to_string()))?;
    let b = rational::from_f64(beta).ok_or_else(|| MatchingError::InvalidMean(beta.to_string()))?;
    atoms_to_distribution(&construct_offspring_exact(&a, &b)?)
}

pub(crate) fn atoms_to_distribution(atoms: &[(u64, Rational)]) -> Result<Distribution, MatchingError> {
    if atoms.len() == 1 {
        return Ok(Distribution::point(atoms[0].0));
    }
    let atoms = atoms.iter().map(|(k, p)| (*k, rational::to_f64(p))).collect();
    Ok(Distribution::finite(atoms).map_err(KernelError::from)?)
}

/// Per-state comparison of conditional moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateResidual {
    pub z: u64,
    /// `|mean_a - mean_b| / max(|mean_a|, |mean_b|)`, 0 when both vanish.
    pub mean: f64,
    pub variance: f64,
    /// Both sides agree in exact arithmetic.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchCheck {
    pub matched: bool,
    pub max_relative_residual: f64,
    pub first_mismatch: Option<u64>,
    pub residuals: Vec<StateResidual>,
}

/// Relative tolerance for matches that are not exact in rational arithmetic.
pub const MATCH_REL_TOL: f64 = 1e-10;

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn rel_exact(a: &Rational, b: &Rational) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    rational::to_f64(&((a - b).abs() / scale))
}

/// Checks that two processes have equal conditional mean and variance at every `z` in range.
pub fn check_match(a: &ProcessSpec, b: &ProcessSpec, z_range: std::ops::RangeInclusive<u64>) -> Result<MatchCheck, KernelError> {
    let mut residuals = Vec::new();
    for z in z_range {
        let r = match (a.exact_conditional_moments(z), b.exact_conditional_moments(z)) {
            (Some((ma, va)), Some((mb, vb))) => StateResidual {
                z,
                mean: rel_exact(&ma, &mb),
                variance: rel_exact(&va, &vb),
                exact: ma == mb && va == vb,
            },
            _ => {
                let (ma, va) = a.conditional_moments(z)?;
                let (mb, vb) = b.conditional_moments(z)?;
                StateResidual { z, mean: rel(ma, mb), variance: rel(va, vb), exact: false }
            }
        };
        residuals.push(r);
    }
    let ok = |r: &StateResidual| r.exact || (r.mean <= MATCH_REL_TOL && r.variance <= MATCH_REL_TOL);
    let first_mismatch = residuals.iter().find(|r| !ok(r)).map(|r| r.z);
    let max_relative_residual = residuals.iter().map(|r| r.mean.max(r.variance)).fold(0.0, f64::max);
    Ok(MatchCheck { matched: first_mismatch.is_none(), max_relative_residual, first_mismatch, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible,
    /// No candidate passed within the search budget.
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub feasibility: Feasibility,
    /// Identifier of the failed condition when infeasible.
    pub failed_condition: Option<&'static str>,
    pub witness: Option<u64>,
    pub construction: Option<ProcessSpec>,
    /// `d(z)` on attainable states (PSDBP side) or `frac(h)` for the chosen `h` (DCBP side).
    pub d_values: Vec<(u64, Rational)>,
    pub h: Option<Rational>,
    pub k: Option<Rational>,
    pub attainable_truncated: bool,
}

impl MatchReport {
    pub fn is_feasible(&self) -> bool {
        self.feasibility == Feasibility::Feasible
    }
}

impl Serialize for MatchReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MatchReport", 8)?;
        st.serialize_field("feasibility", &self.feasibility)?;
        st.serialize_field("failed_condition", &self.failed_condition)?;
        st.serialize_field("witness", &self.witness)?;
        st.serialize_field("construction", &self.construction.as_ref().map(|c| c.to_string()))?;
        let d: Vec<(u64, String)> = self.d_values.iter().map(|(z, d)| (*z, rational::format(d))).collect();
        st.serialize_field("d_values", &d)?;
        st.serialize_field("h", &self.h.as_ref().map(rational::format))?;
        st.serialize_field("k", &self.k.as_ref().map(rational::format))?;
        st.serialize_field("attainable_truncated", &self.attainable_truncated)?;
        st.end()
    }
}

fn exact_or_float(d: &Distribution) -> Option<(Rational, Rational)> {
    d.exact_moments().or_else(|| Some((rational::from_f64(d.mean())?, rational::from_f64(d.variance())?)))
}

/// Decides whether some PSDBP matches the moments of the DCBP `dcbp` on the
/// states attainable from `z0` (up to `cap`), and builds one when it does.
pub fn match_psdbp_to_dcbp(dcbp: &ProcessSpec, z0: u64, cap: u64) -> Result<MatchReport, MatchingError> {
    let (map, offspring) = dcbp
        .as_dcbp()
        .ok_or_else(|| KernelError::InvalidSpec("expected a DCBP (deterministic control)".into()))?;
    let (m, v) = exact_or_float(offspring)
        .ok_or_else(|| KernelError::InvalidSpec("offspring moments are not finite".into()))?;
    let kernel = TransitionKernel::new(dcbp.clone(), KernelOptions::default());
    let attainable = attainable_set(&kernel, z0, cap)?;
    let mut d_values = Vec::new();
    let mut witness = None;
    for &z in attainable.states.iter().filter(|&&z| z >= 1) {
        let scale = rational::ratio(map.eval(z) as i64, z as i64);
        let alpha = &m * &scale;
        let beta = &v * &scale;
        let d = rational::frac(&alpha);
        if witness.is_none() && beta < min_variance_exact(&alpha) {
            witness = Some(z);
        }
        d_values.push((z, d));
    }
    let (feasibility, construction) = match witness {
        Some(_) => (Feasibility::Infeasible, None),
        None => (
            Feasibility::Feasible,
            Some(ProcessSpec::psdbp(OffspringFamily::MinVariance { map: map.clone(), mean: m, variance: v })),
        ),
    };
    Ok(MatchReport {
        feasibility,
        failed_condition: witness.map(|_| "variance-below-minimum"),
        witness,
        construction,
        d_values,
        h: None,
        k: None,
        attainable_truncated: attainable.truncated,
    })
}

/// `phi(z) = z n(z)` on the audited states; a linear map when `n` is constant.
fn control_from_multipliers(n: &BTreeMap<u64, u64>) -> ControlMap {
    let values: Vec<u64> = n.values().copied().collect();
    if let Some(&first) = values.first() {
        if values.iter().all(|&x| x == first) {
            return ControlMap::AffineFloor { a: rational::from_u64(first), b: Rational::zero() };
        }
    }
    let entries = n.iter().map(|(&z, &k)| (z, z * k)).collect();
    ControlMap::Table { entries, default: Box::new(ControlMap::Identity) }
}

/// Decides whether some DCBP matches the moments of `psdbp` on the states
/// attainable from `z0` (up to `cap`). Candidate offspring means are
/// `h_max / x` for `x = 1..=x_cap`.
pub fn match_dcbp_to_psdbp(psdbp: &ProcessSpec, z0: u64, cap: u64, x_cap: u64) -> Result<MatchReport, MatchingError> {
    let ProcessSpec::Psdbp(family) = psdbp else {
        return Err(KernelError::InvalidSpec("expected a PSDBP".into()).into());
    };
    let kernel = TransitionKernel::new(psdbp.clone(), KernelOptions::default());
    let attainable = attainable_set(&kernel, z0, cap)?;
    let mut moments = Vec::new();
    for &z in attainable.states.iter().filter(|&&z| z >= 1) {
        let mv = match family.exact_moments(z) {
            Some(mv) => mv,
            None => {
                let (m, v) = family.offspring(z)?.moments();
                let bad = || KernelError::InvalidSpec(format!("offspring moments at {z} are not finite"));
                (rational::from_f64(m).ok_or_else(bad)?, rational::from_f64(v).ok_or_else(bad)?)
            }
        };
        moments.push((z, mv));
    }
    let mut report = MatchReport {
        feasibility: Feasibility::Infeasible,
        failed_condition: None,
        witness: None,
        construction: None,
        d_values: Vec::new(),
        h: None,
        k: None,
        attainable_truncated: attainable.truncated,
    };

    if moments.iter().all(|(_, (_, v))| v.is_zero()) {
        // deterministic offspring: m~ = 1 and phi(z) = z m(z)
        let mut n = BTreeMap::new();
        for (z, (m, _)) in &moments {
            match rational::is_integer(m).then(|| rational::floor_u64(m)).flatten() {
                Some(k) => {
                    n.insert(*z, k);
                }
                None => {
                    report.failed_condition = Some("non-integer-deterministic-mean");
                    report.witness = Some(*z);
                    return Ok(report);
                }
            }
        }
        report.feasibility = Feasibility::Feasible;
        report.h = Some(Rational::one());
        report.construction = Some(ProcessSpec::dcbp(control_from_multipliers(&n), Distribution::point(1)));
        return Ok(report);
    }

    // condition (i): m(z) = k sigma²(z) with one k across states with m(z) != 0
    let mut k: Option<Rational> = None;
    for (z, (m, v)) in &moments {
        if m.is_zero() {
            continue;
        }
        let ok = if v.is_zero() {
            false
        } else {
            let kz = m / v;
            match &k {
                None => {
                    k = Some(kz);
                    true
                }
                Some(k0) => *k0 == kz || rel_exact(k0, &kz) <= MATCH_REL_TOL,
            }
        };
        if !ok {
            report.failed_condition = Some("constant-mean-variance-ratio");
            report.witness = Some(*z);
            return Ok(report);
        }
    }
    let Some(k) = k else {
        // every attainable mean is zero: phi = 0 with any offspring
        report.feasibility = Feasibility::Feasible;
        report.construction = Some(ProcessSpec::dcbp(
            ControlMap::AffineFloor { a: Rational::zero(), b: Rational::zero() },
            Distribution::point(0),
        ));
        return Ok(report);
    };
    report.k = Some(k.clone());

    // condition (ii): the lattice generated by the attainable means
    let Some(h_max) = rational::lattice_generator(moments.iter().map(|(_, (m, _))| m)) else {
        report.failed_condition = Some("mean-lattice-empty");
        return Ok(report);
    };

    // condition (iii), checked constructively over h_max / x
    for x in 1..=x_cap.max(1) {
        let h = &h_max / rational::from_u64(x);
        let beta = &h / &k;
        if beta < min_variance_exact(&h) {
            continue;
        }
        let mut n = BTreeMap::new();
        for (z, (m, _)) in &moments {
            n.insert(*z, rational::floor_u64(&(m / &h)).expect("h divides every mean"));
        }
        let atoms = construct_offspring_exact(&h, &beta)?;
        report.feasibility = Feasibility::Feasible;
        report.d_values = vec![(x, rational::frac(&h))];
        report.h = Some(h);
        report.construction = Some(ProcessSpec::dcbp(control_from_multipliers(&n), atoms_to_distribution(&atoms)?));
        return Ok(report);
    }
    report.feasibility = Feasibility::Unknown;
    report.failed_condition = Some("no-candidate-within-search");
    Ok(report)
}
