//! Regularity certificates and analytic total-variation bounds between a
//! PSDBP and a DCBP with matching moments.
//!
//! A certificate holds three constants over an audited range of states:
//! `h <= phi(x) / x`, `R >= rho~ ∨ rho(x)` (third absolute central moments)
//! and `2 eta <= gamma(xi(x)) ∧ gamma(xi~)`, where `gamma` is the largest
//! overlap of two consecutive atoms.

use crate::distributions::{Distribution, DistributionError, SumOptions};
use crate::kernels::{KernelError, OffspringLaw, ProcessSpec};
use crate::rational;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("alpha m~ h = 1: the closed form is undefined")]
    DegenerateRatio,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub h: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub eta: f64,
    pub m_tilde: f64,
    pub sigma2_tilde: f64,
    pub audited_range: (u64, u64),
    /// `h` is an analytic infimum and no moment needed truncation.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityViolation {
    /// `"C1"`, `"C2"` or `"C3"`.
    pub condition: &'static str,
    pub witness: Option<u64>,
    pub detail: String,
}

/// Offspring law of a PSDBP at `x` as a single distribution.
fn offspring_distribution(law: OffspringLaw, tail_tol: f64) -> Result<Distribution, KernelError> {
    match law {
        OffspringLaw::Simple(d) => Ok(d),
        OffspringLaw::Compound { count, summand } => {
            let opts = SumOptions { tail_tol, ..Default::default() };
            let hi = count.upper_point(tail_tol);
            let mut probs: Vec<f64> = Vec::new();
            for j in 0..=hi {
                let w = count.pmf(j);
                if w == 0.0 {
                    continue;
                }
                let part = summand.iid_sum(j, opts)?;
                let top = part.upper_point(tail_tol) as usize;
                if top >= opts.support_cap {
                    return Err(DistributionError::SupportOverflow { len: top + 1, cap: opts.support_cap }.into());
                }
                if probs.len() <= top {
                    probs.resize(top + 1, 0.0);
                }
                for (b, p) in probs.iter_mut().enumerate().take(top + 1) {
                    *p += w * part.pmf(b as u64);
                }
            }
            Ok(Distribution::FiniteSupport(crate::distributions::FiniteLaw::from_dense(0, probs)))
        }
    }
}

/// Computes `(h, R, eta)` for the pair over `z_range`, or lists the failed conditions.
pub fn certify_regularity(
    psdbp: &ProcessSpec,
    dcbp: &ProcessSpec,
    z_range: std::ops::RangeInclusive<u64>,
    tail_tol: f64,
) -> Result<Result<RegularityCertificate, Vec<RegularityViolation>>, BoundsError> {
    let ProcessSpec::Psdbp(family) = psdbp else {
        return Err(BoundsError::InvalidArgument("first process must be a PSDBP".into()));
    };
    let (map, offspring) = dcbp
        .as_dcbp()
        .ok_or_else(|| BoundsError::InvalidArgument("second process must be a DCBP".into()))?;
    let lo = (*z_range.start()).max(1);
    let hi = *z_range.end();
    if hi < lo {
        return Err(BoundsError::InvalidArgument("empty state range".into()));
    }
    let mut violations = Vec::new();

    let (h_exact, h_analytic) = map.infimum_ratio(hi);
    let h = rational::to_f64(&h_exact);
    if h <= 0.0 {
        let witness = (lo..=hi).find(|&x| map.eval(x) == 0);
        violations.push(RegularityViolation {
            condition: "C1",
            witness,
            detail: "phi(x) / x has infimum 0".into(),
        });
    }

    let tilde = offspring.moments(tail_tol).map_err(KernelError::from)?;
    let mut exact = h_analytic && !tilde.truncated;
    let mut r = tilde.rho3;
    let gamma_tilde = offspring.consecutive_overlap(tail_tol);
    let mut gamma = gamma_tilde;
    let mut gamma_witness = if gamma_tilde == 0.0 { Some(0) } else { None };
    for x in lo..=hi {
        let d = offspring_distribution(family.offspring(x)?, tail_tol)?;
        let m = d.moments(tail_tol).map_err(KernelError::from)?;
        exact &= !m.truncated;
        if !m.rho3.is_finite() {
            violations.push(RegularityViolation { condition: "C2", witness: Some(x), detail: "rho(x) is not finite".into() });
        }
        r = r.max(m.rho3);
        let g = d.consecutive_overlap(tail_tol);
        if g < gamma {
            gamma = g;
            if g == 0.0 && gamma_witness.is_none() {
                gamma_witness = Some(x);
            }
        }
    }
    if gamma <= 0.0 {
        violations.push(RegularityViolation {
            condition: "C3",
            witness: gamma_witness,
            detail: "some offspring law has no two consecutive atoms with positive mass".into(),
        });
    }
    if !violations.is_empty() {
        return Ok(Err(violations));
    }
    Ok(Ok(RegularityCertificate {
        h,
        r,
        eta: 0.5 * gamma,
        m_tilde: offspring.mean(),
        sigma2_tilde: offspring.variance(),
        audited_range: (lo, hi),
        exact,
    }))
}

/// One-step bound `J(z)`; decreases like `z^(-1/2)`.
pub fn one_step_bound(z: f64, cert: &RegularityCertificate) -> f64 {
    let RegularityCertificate { h, r, eta, sigma2_tilde: s2, .. } = *cert;
    let first = 2f64.sqrt() * (3.0 * r + 2.0 * (1.0 + h) * s2) / (s2 * h.min(1.0) * (PI * eta * z).sqrt());
    let second = ((5.0 * (2.0 * PI).sqrt() + 1.5 * PI) * (1.0 + h) * r + h * s2) / (s2.powf(1.5) * (2.0 * PI * h.powi(3) * z).sqrt());
    first + second
}

fn check_alpha(alpha: f64) -> Result<(), BoundsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidArgument(format!("alpha = {alpha} is not in (0, 1)")))
    }
}

/// `sum_{i<k} J(r^i z) + sigma~² / ((1-alpha)² m~² h z) sum_{i<=k-2} r^(-i)` with `r = alpha m~ h`.
pub fn k_step_bound(z: f64, k: u32, alpha: f64, cert: &RegularityCertificate) -> Result<f64, BoundsError> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(BoundsError::InvalidArgument("k must be at least 1".into()));
    }
    let ratio = alpha * cert.m_tilde * cert.h;
    let jumps: f64 = (0..k).map(|i| one_step_bound(ratio.powi(i as i32) * z, cert)).sum();
    if k == 1 {
        return Ok(jumps);
    }
    if ratio == 0.0 {
        return Err(BoundsError::InvalidArgument("alpha m~ h must be nonzero for k >= 2".into()));
    }
    let drift: f64 = (0..=k - 2).map(|i| ratio.powi(-(i as i32))).sum();
    let scale = cert.sigma2_tilde / ((1.0 - alpha).powi(2) * cert.m_tilde.powi(2) * cert.h * z);
    Ok(jumps + scale * drift)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub value: f64,
    /// `c1 / sqrt(z) + c2 / z`, the `k -> infinity` limit when `alpha m~ h > 1`.
    pub limit: Option<f64>,
}

/// Closed form of [`k_step_bound`] via geometric sums, with `b = J(1)`.
pub fn closed_form_bound(z: f64, k: u32, alpha: f64, cert: &RegularityCertificate) -> Result<ClosedForm, BoundsError> {
    check_alpha(alpha)?;
    let ratio = alpha * cert.m_tilde * cert.h;
    if ratio == 1.0 {
        return Err(BoundsError::DegenerateRatio);
    }
    let b = one_step_bound(1.0, cert);
    let sr = ratio.sqrt();
    let c1 = (b * sr / (sr - 1.0)).abs();
    let c2 = (alpha * cert.sigma2_tilde / ((1.0 - alpha).powi(2) * (ratio - 1.0) * cert.m_tilde)).abs();
    let kf = k as f64;
    let value = c1 * (1.0 - ratio.powf(-kf / 2.0)).abs() / z.sqrt() + c2 * (1.0 - ratio.powf(1.0 - kf)).abs() / z;
    let limit = (ratio > 1.0).then(|| c1 / z.sqrt() + c2 / z);
    Ok(ClosedForm { b, c1, c2, value, limit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub z: f64,
    pub k: u32,
    pub alpha: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub eta: f64,
    pub j_bound: f64,
    pub k_step_bound: f64,
    pub closed_form: Option<f64>,
    /// `min(1, k_step_bound)`.
    pub effective_bound: f64,
}

pub fn bound_sweep(cert: &RegularityCertificate, zs: &[f64], ks: &[u32], alphas: &[f64]) -> Result<Vec<BoundRow>, BoundsError> {
    let mut rows = Vec::new();
    for &z in zs {
        for &k in ks {
            for &alpha in alphas {
                let k_step = k_step_bound(z, k, alpha, cert)?;
                let closed = match closed_form_bound(z, k, alpha, cert) {
                    Ok(c) => Some(c.value),
                    Err(BoundsError::DegenerateRatio) => None,
                    Err(e) => return Err(e),
                };
                rows.push(BoundRow {
                    z,
                    k,
                    alpha,
                    h: cert.h,
                    r: cert.r,
                    eta: cert.eta,
                    j_bound: one_step_bound(z, cert),
                    k_step_bound: k_step,
                    closed_form: closed,
                    effective_bound: k_step.min(1.0),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_bound_csv<W: Write>(mut out: W, rows: &[BoundRow]) -> io::Result<()> {
    writeln!(out, "z,k,alpha,h,R,eta,j_bound,k_step_bound,closed_form,effective_bound")?;
    for r in rows {
        let closed = r.closed_form.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.z, r.k, r.alpha, r.h, r.r, r.eta, r.j_bound, r.k_step_bound, closed, r.effective_bound
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ControlMap, OffspringFamily};

    fn cert(h: f64, r: f64, eta: f64, m: f64, s2: f64) -> RegularityCertificate {
        RegularityCertificate { h, r, eta, m_tilde: m, sigma2_tilde: s2, audited_range: (1, 1), exact: true }
    }

    fn shift_gated_pair(lambda: f64, m: u64) -> (ProcessSpec, ProcessSpec) {
        (
            ProcessSpec::psdbp(OffspringFamily::NbShiftGated { lambda, m }),
            ProcessSpec::dcbp(
                ControlMap::ShiftGated { m },
                Distribution::zero_inflated_poisson(1.0 - 1.0 / lambda, lambda).unwrap(),
            ),
        )
    }

    #[test]
    fn double_entry_value() {
        // written out independently of one_step_bound
        let (h, r, eta, s2, z) = (1.0f64, 2.0f64, 0.1f64, 3.0f64, 100.0f64);
        let t1 = (2.0f64).sqrt() * (3.0 * r + 4.0 * s2) / (s2 * (std::f64::consts::PI * eta * z).sqrt());
        let t2 = ((5.0 * (2.0 * std::f64::consts::PI).sqrt() + 3.0 * std::f64::consts::PI / 2.0) * 2.0 * r + s2)
            / (s2 * s2.sqrt() * (2.0 * std::f64::consts::PI * z).sqrt());
        let got = one_step_bound(z, &cert(h, r, eta, 1.0, s2));
        assert!(((got - (t1 + t2)) / got).abs() < 1e-14);
    }

    #[test]
    fn quarter_scaling_and_monotone() {
        let c = cert(0.7, 5.0, 0.05, 1.3, 2.0);
        for z in [1.0, 3.0, 17.5] {
            assert!((one_step_bound(4.0 * z, &c) / one_step_bound(z, &c) - 0.5).abs() < 1e-14);
        }
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let v = one_step_bound((1u64 << i) as f64, &c);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn k_step_double_entry() {
        let c = cert(1.0, 4.0, 0.1, 1.0, 3.0);
        let (z, alpha) = (1e4, 0.5);
        let r = alpha;
        let want = one_step_bound(z, &c) + one_step_bound(r * z, &c) + one_step_bound(r * r * z, &c)
            + 3.0 / (0.25 * z) * (1.0 + 1.0 / r);
        let got = k_step_bound(z, 3, alpha, &c).unwrap();
        assert!(((got - want) / want).abs() < 1e-12);
        assert_eq!(k_step_bound(z, 1, alpha, &c).unwrap(), one_step_bound(z, &c));
    }

    #[test]
    fn closed_form_matches_sum() {
        for (m, alpha) in [(1.0, 0.5), (4.0, 0.5)] {
            let c = cert(1.0, 3.0, 0.2, m, 2.0);
            for k in [1u32, 2, 5, 10] {
                let z = 250.0;
                let sum = k_step_bound(z, k, alpha, &c).unwrap();
                let closed = closed_form_bound(z, k, alpha, &c).unwrap();
                assert!(((closed.value - sum) / sum).abs() < 1e-10, "k={k}: {} vs {sum}", closed.value);
            }
        }
        let c = cert(1.0, 3.0, 0.2, 2.0, 2.0);
        assert_eq!(closed_form_bound(10.0, 3, 0.5, &c), Err(BoundsError::DegenerateRatio));
        let c = cert(1.0, 3.0, 0.2, 4.0, 2.0);
        let cf = closed_form_bound(10.0, 50, 0.5, &c).unwrap();
        assert!(cf.value <= cf.limit.unwrap() && cf.limit.unwrap().is_finite());
    }

    #[test]
    fn shift_gated_pair_certificate() {
        let (p, d) = shift_gated_pair(3.0, 2);
        let c = certify_regularity(&p, &d, 1..=200, 1e-12).unwrap().unwrap();
        assert_eq!(c.h, 1.0);
        assert!(c.eta > 0.0 && c.eta <= 0.25);
        assert!((c.m_tilde - 1.0).abs() < 1e-12 && (c.sigma2_tilde - 3.0).abs() < 1e-12);
    }

    #[test]
    fn violations_are_reported() {
        let p = ProcessSpec::psdbp(OffspringFamily::ThreePoint);
        let d = ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::binomial(2, 0.5).unwrap());
        let v = certify_regularity(&p, &d, 1..=50, 1e-12).unwrap().unwrap_err();
        assert!(v.iter().any(|v| v.condition == "C1" && v.witness == Some(1)));
        assert!(v.iter().any(|v| v.condition == "C3"));
    }
}
