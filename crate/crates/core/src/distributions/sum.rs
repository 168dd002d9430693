use super::{Distribution, DistributionError, FiniteLaw, DEFAULT_TAIL_TOL};

/// Truncation controls for numerical convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOptions {
    /// Total upper-tail mass that may be discarded.
    pub tail_tol: f64,
    /// Largest number of support points a truncated result may span.
    pub support_cap: usize,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self { tail_tol: DEFAULT_TAIL_TOL, support_cap: 1 << 22 }
    }
}

/// Dense probability vector over `offset..offset + probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub offset: u64,
    pub probs: Vec<f64>,
}

impl Dense {
    pub fn point(c: u64) -> Self {
        Self { offset: c, probs: vec![1.0] }
    }

    pub fn from_law(law: &FiniteLaw) -> Self {
        let (offset, probs) = law.to_dense();
        Self { offset, probs }
    }

    /// Discards the largest upper tail whose mass stays below `eps`.
    pub fn trim_upper(&mut self, eps: f64) {
        let mut tail = 0.0;
        while self.probs.len() > 1 {
            let last = *self.probs.last().unwrap();
            if tail + last >= eps && last != 0.0 {
                break;
            }
            tail += last;
            self.probs.pop();
        }
    }

    pub fn convolve(&self, other: &Dense, cap: usize) -> Result<Dense, DistributionError> {
        let len = self.probs.len() + other.probs.len() - 1;
        if len > cap {
            return Err(DistributionError::SupportOverflow { len, cap });
        }
        let mut out = vec![0.0; len];
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&other.probs) {
                *o += a * b;
            }
        }
        Ok(Dense { offset: self.offset + other.offset, probs: out })
    }

    /// `m`-fold self-convolution by repeated squaring; every product is
    /// trimmed by `eps` in its upper tail.
    pub fn power(&self, m: u64, eps: f64, cap: usize) -> Result<Dense, DistributionError> {
        let mut result = Dense::point(0);
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.convolve(&base, cap)?;
                result.trim_upper(eps);
            }
            e >>= 1;
            if e > 0 {
                base = base.convolve(&base, cap)?;
                base.trim_upper(eps);
            }
        }
        Ok(result)
    }

    pub fn into_law(self) -> FiniteLaw {
        FiniteLaw::from_dense(self.offset, self.probs)
    }
}

/// Convolution of two finite laws, trimmed by `eps` in the upper tail.
pub(crate) fn sum_dense(a: &FiniteLaw, b: &FiniteLaw, eps: f64, cap: usize) -> Result<FiniteLaw, DistributionError> {
    let mut out = Dense::from_law(a).convolve(&Dense::from_law(b), cap)?;
    out.trim_upper(eps);
    Ok(out.into_law())
}

impl Distribution {
    /// Law of the sum of `m` independent copies.
    ///
    /// Closed-form families stay in their family; everything else is
    /// convolved numerically and returned as a finite law whose discarded
    /// upper-tail mass is at most `opts.tail_tol`.
    pub fn iid_sum(&self, m: u64, opts: SumOptions) -> Result<Distribution, DistributionError> {
        if m == 0 {
            return Ok(Distribution::PointMass(0));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        if let Some(c) = self.point_value() {
            return Ok(Distribution::PointMass(c * m));
        }
        let mf = m as f64;
        Ok(match *self {
            Distribution::Bernoulli { p } => Distribution::Binomial { n: m, p },
            Distribution::Binomial { n, p } => Distribution::Binomial { n: n * m, p },
            Distribution::Poisson { mu } => Distribution::Poisson { mu: mu * mf },
            Distribution::Geometric { q } => Distribution::NegativeBinomial { r: mf, q },
            Distribution::NegativeBinomial { r, q } => Distribution::NegativeBinomial { r: r * mf, q },
            _ => {
                // 64 trims at most for any u64 exponent
                let eps = opts.tail_tol / 128.0;
                let base = Dense::from_law(&self.to_finite(eps));
                let out = base.power(m, eps, opts.support_cap)?;
                Distribution::FiniteSupport(out.into_law())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_sum(d: &Distribution, m: u64, hi: u64) -> Vec<f64> {
        // direct m-fold convolution on a truncated grid
        let base: Vec<f64> = (0..=hi).map(|k| d.pmf(k)).collect();
        let mut acc = vec![0.0; (hi + 1) as usize];
        acc[0] = 1.0;
        for _ in 0..m {
            let mut next = vec![0.0; acc.len()];
            for (i, &a) in acc.iter().enumerate() {
                for (j, &b) in base.iter().enumerate() {
                    if i + j < next.len() {
                        next[i + j] += a * b;
                    }
                }
            }
            acc = next;
        }
        acc
    }

    #[test]
    fn closed_forms() {
        let o = SumOptions::default();
        assert_eq!(
            Distribution::poisson(1.5).unwrap().iid_sum(4, o).unwrap(),
            Distribution::Poisson { mu: 6.0 }
        );
        assert_eq!(
            Distribution::geometric(0.25).unwrap().iid_sum(3, o).unwrap(),
            Distribution::NegativeBinomial { r: 3.0, q: 0.25 }
        );
        assert_eq!(
            Distribution::bernoulli(0.2).unwrap().iid_sum(7, o).unwrap(),
            Distribution::Binomial { n: 7, p: 0.2 }
        );
        assert_eq!(Distribution::point(3).iid_sum(5, o).unwrap(), Distribution::PointMass(15));
        assert_eq!(Distribution::point(3).iid_sum(0, o).unwrap(), Distribution::PointMass(0));
    }

    #[test]
    fn numeric_sums_match_naive_convolution() {
        let cases = [
            Distribution::finite(vec![(0, 0.25), (2, 0.75)]).unwrap(),
            Distribution::zero_inflated_poisson(0.4, 2.0).unwrap(),
            Distribution::zero_inflated_geometric(0.3, 0.5).unwrap(),
            Distribution::scaled_bernoulli(3, 0.2).unwrap(),
        ];
        for d in cases {
            for m in [2u64, 3, 5, 8] {
                let got = d.iid_sum(m, SumOptions::default()).unwrap();
                let want = naive_sum(&d, m, 80);
                for (k, &w) in want.iter().enumerate().take(40) {
                    let g = got.pmf(k as u64);
                    assert!((g - w).abs() < 1e-12, "{d:?} m={m} k={k}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let d = Distribution::finite(vec![(0, 0.5), (1000, 0.5)]).unwrap();
        let err = d.iid_sum(64, SumOptions { tail_tol: 1e-12, support_cap: 10_000 }).unwrap_err();
        assert!(matches!(err, DistributionError::SupportOverflow { .. }));
    }

    #[test]
    fn discarded_mass_stays_within_tolerance() {
        let d = Distribution::zero_inflated_poisson(0.2, 5.0).unwrap();
        let s = d.iid_sum(37, SumOptions::default()).unwrap();
        if let Distribution::FiniteSupport(law) = s {
            assert!(law.omitted_mass() <= 1e-12, "{}", law.omitted_mass());
        } else {
            panic!("expected a finite law");
        }
    }
}
