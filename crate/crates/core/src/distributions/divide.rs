use super::sum::Dense;
use super::{Distribution, FiniteLaw};
use serde::Serialize;

/// Result of asking whether a law is the `n`-fold sum of iid copies of some law.
#[derive(Debug, Clone, PartialEq)]
pub enum DivisibilityOutcome {
    /// `component` is `None` when divisibility is known but no closed form is available.
    Divisible { component: Option<Distribution> },
    NotDivisible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisibilityVerdict {
    pub outcome: DivisibilityOutcome,
    /// Identifier of the rule that decided the outcome.
    pub rule: &'static str,
}

#[derive(Serialize)]
struct VerdictView<'a> {
    outcome: &'static str,
    component: Option<String>,
    rule: &'a str,
}

impl Serialize for DivisibilityVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (outcome, component) = match &self.outcome {
            DivisibilityOutcome::Divisible { component: Some(c) } => ("divisible", Some(c.to_string())),
            DivisibilityOutcome::Divisible { component: None } => ("divisible", None),
            DivisibilityOutcome::NotDivisible => ("not_divisible", None),
            DivisibilityOutcome::Unknown => ("unknown", None),
        };
        VerdictView { outcome, component, rule: self.rule }.serialize(s)
    }
}

impl DivisibilityVerdict {
    fn divisible(component: Distribution, rule: &'static str) -> Self {
        Self { outcome: DivisibilityOutcome::Divisible { component: Some(component) }, rule }
    }

    fn no(rule: &'static str) -> Self {
        Self { outcome: DivisibilityOutcome::NotDivisible, rule }
    }

    pub fn is_divisible(&self) -> bool {
        matches!(self.outcome, DivisibilityOutcome::Divisible { .. })
    }

    pub fn is_not_divisible(&self) -> bool {
        self.outcome == DivisibilityOutcome::NotDivisible
    }

    pub fn component(&self) -> Option<&Distribution> {
        match &self.outcome {
            DivisibilityOutcome::Divisible { component } => component.as_ref(),
            _ => None,
        }
    }
}

/// Tolerance on coefficients of a candidate root polynomial and on the
/// reconstructed law.
const ROOT_TOL: f64 = 1e-10;

/// Largest support span examined by the finite-law root test.
const ROOT_SPAN_CAP: u64 = 4096;

impl Distribution {
    /// Decides `n`-divisibility through the registered family rules.
    pub fn divide(&self, n: u64) -> DivisibilityVerdict {
        assert!(n >= 1, "divisor must be positive");
        if n == 1 {
            return DivisibilityVerdict::divisible(self.clone(), "trivial");
        }
        if let Some(c) = self.point_value() {
            return if c % n == 0 {
                DivisibilityVerdict::divisible(Distribution::PointMass(c / n), "point-mass")
            } else {
                DivisibilityVerdict::no("point-mass")
            };
        }
        let nf = n as f64;
        match *self {
            Distribution::Poisson { mu } => {
                DivisibilityVerdict::divisible(Distribution::Poisson { mu: mu / nf }, "poisson-scaling")
            }
            Distribution::NegativeBinomial { r, q } => DivisibilityVerdict::divisible(
                Distribution::NegativeBinomial { r: r / nf, q },
                "negative-binomial-shape",
            ),
            Distribution::Geometric { q } => DivisibilityVerdict::divisible(
                Distribution::NegativeBinomial { r: 1.0 / nf, q },
                "negative-binomial-shape",
            ),
            Distribution::Binomial { n: trials, p } => {
                if trials % n != 0 {
                    DivisibilityVerdict::no("binomial-trials")
                } else if trials / n == 1 {
                    DivisibilityVerdict::divisible(Distribution::Bernoulli { p }, "binomial-trials")
                } else {
                    DivisibilityVerdict::divisible(Distribution::Binomial { n: trials / n, p }, "binomial-trials")
                }
            }
            Distribution::Bernoulli { .. } | Distribution::ScaledBernoulli { .. } => {
                DivisibilityVerdict::no("two-point-support")
            }
            Distribution::ZeroInflatedGeometric { .. } => DivisibilityVerdict {
                outcome: DivisibilityOutcome::Divisible { component: None },
                rule: "zero-inflated-geometric",
            },
            Distribution::ZeroInflatedPoisson { .. } => {
                DivisibilityVerdict { outcome: DivisibilityOutcome::Unknown, rule: "unclassified" }
            }
            Distribution::FiniteSupport(ref law) => finite_root(law, n),
            Distribution::PointMass(_) => unreachable!("handled as a point law"),
        }
    }
}

/// A law on `{a, ..., b}` is a sum of `n` iid copies iff its generating
/// polynomial, shifted to start at degree 0, has an `n`-th root with
/// non-negative coefficients. Such a root is unique given a positive constant
/// term, so it is computed by the power-series recurrence and then checked.
fn finite_root(law: &FiniteLaw, n: u64) -> DivisibilityVerdict {
    const RULE: &str = "finite-support-root";
    if law.omitted_mass() > 0.0 {
        return DivisibilityVerdict { outcome: DivisibilityOutcome::Unknown, rule: "truncated-law" };
    }
    if law.atoms().len() == 2 {
        return DivisibilityVerdict::no("two-point-support");
    }
    let lo = law.atoms()[0].0;
    let hi = law.atoms()[law.atoms().len() - 1].0;
    let span = hi - lo;
    if !lo.is_multiple_of(n) || !span.is_multiple_of(n) {
        return DivisibilityVerdict::no(RULE);
    }
    if span > ROOT_SPAN_CAP {
        return DivisibilityVerdict { outcome: DivisibilityOutcome::Unknown, rule: RULE };
    }
    let (_, a) = law.to_dense();
    let d = span as usize;
    let deg = d / n as usize;
    let alpha = 1.0 / n as f64;
    let mut q = vec![0.0; deg + 1];
    q[0] = a[0].powf(alpha);
    for k in 1..=deg {
        let mut s = 0.0;
        for j in 1..=k.min(d) {
            s += ((alpha + 1.0) * j as f64 - k as f64) * a[j] * q[k - j];
        }
        q[k] = s / (k as f64 * a[0]);
    }
    if q.iter().any(|&c| c < -ROOT_TOL) {
        return DivisibilityVerdict::no(RULE);
    }
    for c in q.iter_mut() {
        *c = c.max(0.0);
    }
    let root = Dense { offset: 0, probs: q.clone() };
    let Ok(back) = root.power(n, 0.0, usize::MAX) else {
        return DivisibilityVerdict { outcome: DivisibilityOutcome::Unknown, rule: RULE };
    };
    let matches = back.probs.len() == a.len()
        && back.probs.iter().zip(&a).all(|(x, y)| (x - y).abs() <= ROOT_TOL);
    if !matches {
        return DivisibilityVerdict::no(RULE);
    }
    let total: f64 = q.iter().sum();
    let probs: Vec<f64> = q.iter().map(|p| p / total).collect();
    let root = FiniteLaw::from_dense_normalized(lo / n, probs);
    let component = match root.atoms() {
        [(c, _)] => Distribution::PointMass(*c),
        _ => Distribution::FiniteSupport(root),
    };
    DivisibilityVerdict::divisible(component, RULE)
}
