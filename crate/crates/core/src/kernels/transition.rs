use super::{KernelError, ProcessSpec};
use crate::distributions::{sum_dense, Distribution, FiniteLaw, SumOptions, SupportSet, DEFAULT_TAIL_TOL};
use dashmap::DashMap;
use rand::Rng;
use std::sync::{Arc, OnceLock};

/// One-step law from a fixed state, as a random sum.
#[derive(Debug, Clone, PartialEq)]
pub enum StepLaw {
    /// Closed-form law of the next state.
    Closed(Distribution),
    /// Sum of `count` iid copies of `summand`.
    Iid { summand: Distribution, count: u64 },
    /// Sum of a random number, drawn from `count`, of iid copies of `summand`.
    Mixture { count: Distribution, summand: Distribution },
}

impl StepLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            StepLaw::Closed(d) => d.sample(rng),
            StepLaw::Iid { summand, count } => summand.sample_iid_sum(*count, rng),
            StepLaw::Mixture { count, summand } => {
                let j = count.sample(rng);
                summand.sample_iid_sum(j, rng)
            }
        }
    }

    /// Support of the next state restricted to `[0, cap]`.
    pub fn support(&self, cap: u64) -> SupportSet {
        match self {
            StepLaw::Closed(d) => d.support_set(cap),
            StepLaw::Iid { summand, count } => summand.support_set(cap).iid_sum(*count),
            StepLaw::Mixture { count, summand } => {
                let base = summand.support_set(cap);
                let top = count.support_max();
                if let Some(t) = top {
                    // few count values: one iid-sum support per value
                    let points: Vec<u64> = match count {
                        _ if count.point_value().is_some() => vec![t],
                        Distribution::ScaledBernoulli { s, .. } => vec![0, *s],
                        Distribution::FiniteSupport(law) => law.atoms().iter().map(|a| a.0).take(65).collect(),
                        _ => (0..=t).filter(|&j| count.in_support(j)).take(65).collect(),
                    };
                    if points.len() <= 64 {
                        let mut out = SupportSet::empty(cap);
                        for j in points {
                            out.union_with(&base.iid_sum(j));
                        }
                        return out;
                    }
                }
                let mut out = SupportSet::empty(cap);
                let mut acc = SupportSet::singleton(0, cap);
                let mut j = 0u64;
                loop {
                    if count.in_support(j) {
                        out.union_with(&acc);
                    }
                    if top == Some(j) {
                        break;
                    }
                    let next = acc.sumset(&base);
                    j += 1;
                    // partial sums only grow when 0 is a summand value; once stable they stay put
                    if next == acc {
                        out.union_with(&acc);
                        break;
                    }
                    acc = next;
                    if acc.min().is_none() {
                        // every further partial sum lies above cap
                        out.union_with(&acc);
                        break;
                    }
                }
                out
            }
        }
    }
}

/// Numerical settings for transition kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Tail mass that truncation may discard, per law.
    pub tail_tol: f64,
    /// Largest support a convolution may produce.
    pub support_cap: usize,
    /// Maximum number of cached source states; 0 disables the cache.
    pub cache_capacity: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { tail_tol: DEFAULT_TAIL_TOL, support_cap: 1 << 22, cache_capacity: 1 << 14 }
    }
}

impl KernelOptions {
    fn sum_options(&self) -> SumOptions {
        SumOptions { tail_tol: self.tail_tol, support_cap: self.support_cap }
    }
}

/// Dense probabilities of the next state over `offset..offset + probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub offset: u64,
    pub probs: Vec<f64>,
    pub omitted_mass: f64,
}

impl Row {
    pub fn pmf(&self, b: u64) -> f64 {
        b.checked_sub(self.offset)
            .and_then(|i| self.probs.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Mixture of `summand^{*j}` over `j`, kept as its terms plus a log-pmf row.
#[derive(Debug)]
struct MixtureTable {
    terms: Vec<(f64, Distribution)>,
    ln_row: Vec<f64>,
}

impl MixtureTable {
    fn ln_pmf_direct(terms: &[(f64, Distribution)], b: u64) -> f64 {
        let vals: Vec<f64> = terms.iter().map(|(lw, d)| lw + d.ln_pmf(b)).collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + vals.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
    }

    fn ln_pmf(&self, b: u64) -> f64 {
        match self.ln_row.get(b as usize) {
            Some(&v) => v,
            None => Self::ln_pmf_direct(&self.terms, b),
        }
    }
}

#[derive(Debug)]
enum Materialized {
    Direct(Distribution),
    Mixture(MixtureTable),
}

impl Materialized {
    fn ln_pmf(&self, b: u64) -> f64 {
        match self {
            Materialized::Direct(d) => d.ln_pmf(b),
            Materialized::Mixture(t) => t.ln_pmf(b),
        }
    }
}

#[derive(Debug)]
struct StateEntry {
    law: StepLaw,
    table: OnceLock<Result<Arc<Materialized>, KernelError>>,
}

/// Exact one-step transition law of a process, with an advisory per-state cache.
///
/// Cached and uncached evaluation give identical results; the cache only
/// saves recomputation and is safe to share across threads.
#[derive(Debug)]
pub struct TransitionKernel {
    spec: ProcessSpec,
    opts: KernelOptions,
    cache: DashMap<u64, Arc<StateEntry>>,
}

impl TransitionKernel {
    pub fn new(spec: ProcessSpec, opts: KernelOptions) -> Self {
        Self { spec, opts, cache: DashMap::new() }
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn options(&self) -> &KernelOptions {
        &self.opts
    }

    fn entry(&self, a: u64) -> Result<Arc<StateEntry>, KernelError> {
        if let Some(e) = self.cache.get(&a) {
            return Ok(Arc::clone(&e));
        }
        let entry = Arc::new(StateEntry { law: self.spec.step_law(a)?, table: OnceLock::new() });
        if self.cache.len() < self.opts.cache_capacity {
            self.cache.insert(a, Arc::clone(&entry));
        }
        Ok(entry)
    }

    fn materialized(&self, a: u64) -> Result<Arc<Materialized>, KernelError> {
        let entry = self.entry(a)?;
        entry.table.get_or_init(|| self.materialize(&entry.law).map(Arc::new)).clone()
    }

    fn materialize(&self, law: &StepLaw) -> Result<Materialized, KernelError> {
        let sum_opts = self.opts.sum_options();
        Ok(match law {
            StepLaw::Closed(d) => Materialized::Direct(d.clone()),
            StepLaw::Iid { summand, count } => Materialized::Direct(summand.iid_sum(*count, sum_opts)?),
            StepLaw::Mixture { count, summand } => {
                let terms = mixture_terms(count, summand, sum_opts)?;
                let hi = terms
                    .iter()
                    .map(|(_, d)| d.upper_point(self.opts.tail_tol))
                    .max()
                    .unwrap_or(0);
                if hi as usize >= self.opts.support_cap {
                    return Err(crate::distributions::DistributionError::SupportOverflow {
                        len: hi as usize + 1,
                        cap: self.opts.support_cap,
                    }
                    .into());
                }
                let ln_row = (0..=hi).map(|b| MixtureTable::ln_pmf_direct(&terms, b)).collect();
                Materialized::Mixture(MixtureTable { terms, ln_row })
            }
        })
    }

    /// The one-step law from `a` as a random sum.
    pub fn step_law(&self, a: u64) -> Result<StepLaw, KernelError> {
        Ok(self.entry(a)?.law.clone())
    }

    /// `ln P(next = b | current = a)`.
    pub fn ln_pmf(&self, a: u64, b: u64) -> Result<f64, KernelError> {
        Ok(self.materialized(a)?.ln_pmf(b))
    }

    /// `P(next = b | current = a)`.
    pub fn pmf(&self, a: u64, b: u64) -> Result<f64, KernelError> {
        Ok(self.ln_pmf(a, b)?.exp())
    }

    /// Dense transition row from `a`, truncated where the upper tail drops
    /// below the kernel's tail tolerance.
    pub fn row(&self, a: u64) -> Result<Row, KernelError> {
        let tol = self.opts.tail_tol;
        Ok(match &*self.materialized(a)? {
            Materialized::Direct(Distribution::FiniteSupport(law)) => {
                let (offset, probs) = law.to_dense();
                Row { offset, probs, omitted_mass: law.omitted_mass() }
            }
            Materialized::Direct(d) => {
                let lo = d.support_min();
                let hi = d.upper_point(tol);
                let probs: Vec<f64> = (lo..=hi).map(|b| d.pmf(b)).collect();
                let omitted = if d.support_max() == Some(hi) { 0.0 } else { (1.0 - probs.iter().sum::<f64>()).max(0.0) };
                Row { offset: lo, probs, omitted_mass: omitted }
            }
            Materialized::Mixture(t) => {
                let probs: Vec<f64> = t.ln_row.iter().map(|v| v.exp()).collect();
                let omitted = (1.0 - probs.iter().sum::<f64>()).max(0.0);
                Row { offset: 0, probs, omitted_mass: omitted }
            }
        })
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, a: u64, rng: &mut R) -> Result<u64, KernelError> {
        Ok(self.entry(a)?.law.sample(rng))
    }

    /// Number of cached source states.
    pub fn cached_states(&self) -> usize {
        self.cache.len()
    }
}

/// `(ln P(count = j), law of summand^{*j})` over the count support, truncated
/// where the count's upper tail drops below the tolerance.
fn mixture_terms(
    count: &Distribution,
    summand: &Distribution,
    opts: SumOptions,
) -> Result<Vec<(f64, Distribution)>, KernelError> {
    let hi = count.upper_point(opts.tail_tol);
    let closed = !matches!(summand.iid_sum(2, opts)?, Distribution::FiniteSupport(_));
    let eps = opts.tail_tol / 128.0;
    let base = summand.to_finite(eps);
    let mut running: Option<FiniteLaw> = None;
    let mut terms = Vec::new();
    for j in 0..=hi {
        let law = if closed {
            summand.iid_sum(j, opts)?
        } else {
            // one convolution per step keeps the cost linear in the support size
            let next = match running.take() {
                None => FiniteLaw::from_dense(0, vec![1.0]),
                Some(prev) => sum_dense(&prev, &base, eps, opts.support_cap)?,
            };
            running = Some(next.clone());
            Distribution::FiniteSupport(next)
        };
        let lw = count.ln_pmf(j);
        if lw > f64::NEG_INFINITY {
            terms.push((lw, law));
        }
    }
    Ok(terms)
}
