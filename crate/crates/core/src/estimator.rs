//! Total-variation distances between processes: exact for one-step laws,
//! importance-sampled for k-step paths.
//!
//! The path estimator samples `N` paths `x_i` from one process and averages
//! `½ |1 - L_other(x_i) / L_self(x_i)|`, an unbiased estimate of the k-step
//! path TVD. Likelihoods are kept in log space.
//!
//! Randomness: path `i` of a run with seed `s` draws from stream `(s, i)`.
//! Paths are grouped into fixed chunks of [`CHUNK`] and the chunk summaries
//! are merged in index order, so results do not depend on the worker count.

use crate::distributions::Distribution;
use crate::kernels::{KernelError, ProcessSpec, TransitionKernel};
use crate::{pool, rng};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};
use thiserror::Error;

/// Paths per reduction chunk.
pub const CHUNK: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("path {path}: transition {from} -> {to} has zero probability under the sampled process")]
    LikelihoodUnderflow { path: u64, from: u64, to: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `½ Σ |P_a(n) - P_b(n)|` over the union of truncated supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTvd {
    pub value: f64,
    /// Upper bound on the mass left out by truncation.
    pub truncation_error: f64,
}

pub fn exact_tvd(a: &Distribution, b: &Distribution, tail_tol: f64) -> ExactTvd {
    let lo = a.support_min().min(b.support_min());
    let hi = a.upper_point(tail_tol).max(b.upper_point(tail_tol));
    let (mut sum, mut ma, mut mb) = (0.0, 0.0, 0.0);
    for n in lo..=hi {
        let (pa, pb) = (a.pmf(n), b.pmf(n));
        sum += (pa - pb).abs();
        ma += pa;
        mb += pb;
    }
    let truncation_error = ((1.0 - ma).max(0.0) + (1.0 - mb).max(0.0)) / 2.0;
    ExactTvd { value: sum / 2.0, truncation_error }
}

/// TVD between the two transition rows at `z`.
pub fn exact_one_step_tvd(a: &TransitionKernel, b: &TransitionKernel, z: u64) -> Result<ExactTvd, KernelError> {
    let ra = a.row(z)?;
    let rb = b.row(z)?;
    let lo = ra.offset.min(rb.offset);
    let hi = (ra.offset + ra.probs.len() as u64).max(rb.offset + rb.probs.len() as u64);
    let sum: f64 = (lo..hi).map(|n| (ra.pmf(n) - rb.pmf(n)).abs()).sum();
    Ok(ExactTvd { value: sum / 2.0, truncation_error: (ra.omitted_mass + rb.omitted_mass) / 2.0 })
}

/// Which process of a pair the paths are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Psdbp,
    Cbp,
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "psdbp" => Ok(Side::Psdbp),
            "cbp" | "dcbp" => Ok(Side::Cbp),
            other => Err(format!("unknown side `{other}` (expected psdbp or cbp)")),
        }
    }
}

/// A PSDBP and a CBP compared state by state.
pub struct ProcessPair {
    pub psdbp: TransitionKernel,
    pub cbp: TransitionKernel,
}

impl ProcessPair {
    pub fn new(psdbp: TransitionKernel, cbp: TransitionKernel) -> Self {
        Self { psdbp, cbp }
    }

    fn sides(&self, side: Side) -> (&TransitionKernel, &TransitionKernel) {
        match side {
            Side::Psdbp => (&self.psdbp, &self.cbp),
            Side::Cbp => (&self.cbp, &self.psdbp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvdEstimate {
    /// Mean of the per-path terms; may exceed 1 through noise.
    pub value: f64,
    /// Sample standard deviation of the terms over `sqrt(replicates)`.
    pub stderr: f64,
    pub replicates: u64,
    pub seed: u64,
    pub side: Side,
    pub z0: u64,
    pub k: u32,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Summary {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Summary {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Summary) -> Summary {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        Summary { n, mean, m2 }
    }
}

/// `½ |1 - L_other / L_self|` for one sampled path.
fn path_term(own: &TransitionKernel, other: &TransitionKernel, z0: u64, k: u32, seed: u64, path: u64) -> Result<f64, EstimatorError> {
    let mut r = rng::stream(seed, path);
    let (mut ln_own, mut ln_other) = (0.0, 0.0);
    let mut z = z0;
    for _ in 0..k {
        let next = own.sample_step(z, &mut r)?;
        let lo = own.ln_pmf(z, next)?;
        if lo == f64::NEG_INFINITY {
            return Err(EstimatorError::LikelihoodUnderflow { path, from: z, to: next });
        }
        ln_own += lo;
        ln_other += other.ln_pmf(z, next)?;
        z = next;
    }
    let delta = ln_other - ln_own;
    Ok(if delta == 0.0 { 0.0 } else { 0.5 * (1.0 - delta.exp()).abs() })
}

/// Importance-sampling estimate of the TVD between the `k`-step path laws
/// from `z0`, using `n` paths sampled from `side`.
///
/// Unbiased when every path the other process can take is also possible
/// for `side`; mass on paths `side` cannot reach is missed.
pub fn estimate_path_tvd(
    pair: &ProcessPair,
    z0: u64,
    k: u32,
    n: u64,
    seed: u64,
    side: Side,
    workers: usize,
) -> Result<TvdEstimate, EstimatorError> {
    if n == 0 || k == 0 {
        return Err(EstimatorError::InvalidArgument("N and k must be at least 1".into()));
    }
    let (own, other) = pair.sides(side);
    let chunks = n.div_ceil(CHUNK);
    let summaries: Vec<Summary> = pool::install(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut s = Summary::default();
                for path in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    s.push(path_term(own, other, z0, k, seed, path)?);
                }
                Ok(s)
            })
            .collect::<Result<_, EstimatorError>>()
    })?;
    let total = summaries.into_iter().fold(Summary::default(), Summary::merge);
    let stderr = if total.n > 1 { (total.m2 / (total.n - 1) as f64).sqrt() / (total.n as f64).sqrt() } else { 0.0 };
    Ok(TvdEstimate { value: total.mean, stderr, replicates: n, seed, side, z0, k })
}

/// Starting state of each sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    One,
    CarryingCapacity,
}

impl StartRule {
    fn code(self) -> u64 {
        match self {
            StartRule::One => 0,
            StartRule::CarryingCapacity => 1,
        }
    }

    pub fn start(self, k_cap: f64) -> u64 {
        match self {
            StartRule::One => 1,
            StartRule::CarryingCapacity => k_cap.round() as u64,
        }
    }
}

impl std::str::FromStr for StartRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "one" | "1" => Ok(StartRule::One),
            "k" | "carrying_capacity" | "capacity" => Ok(StartRule::CarryingCapacity),
            other => Err(format!("unknown start rule `{other}` (expected one or carrying_capacity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub capacities: Vec<f64>,
    pub path_lengths: Vec<u32>,
    pub start_rules: Vec<StartRule>,
    pub n: u64,
    pub seed: u64,
    pub side: Side,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub capacity: f64,
    pub k: u32,
    pub z0: u64,
    pub start_rule: StartRule,
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub tvd_estimate: f64,
    pub stderr: f64,
}

/// Seed of the sweep cell `(K, k, rule)`; `K` enters through its bit pattern.
pub fn cell_seed(master: u64, capacity: f64, k: u32, rule: StartRule) -> u64 {
    rng::derive_seed(master, &[capacity.to_bits(), k as u64, rule.code()])
}

/// One estimate per `(K, k, start rule)`, rows sorted by `(K, k)`.
///
/// `pair_for` builds the `(PSDBP, CBP)` specs for a carrying capacity.
pub fn sweep<F>(config: &SweepConfig, pair_for: F, kernel_opts: crate::kernels::KernelOptions) -> Result<Vec<SweepRow>, EstimatorError>
where
    F: Fn(f64) -> (ProcessSpec, ProcessSpec),
{
    if config.capacities.is_empty() || config.path_lengths.is_empty() || config.start_rules.is_empty() {
        return Err(EstimatorError::InvalidArgument("sweep grids must be non-empty".into()));
    }
    let mut capacities = config.capacities.clone();
    capacities.sort_by(f64::total_cmp);
    let mut lengths = config.path_lengths.clone();
    lengths.sort_unstable();
    let mut rows = Vec::new();
    for &cap in &capacities {
        let (a, b) = pair_for(cap);
        let pair = ProcessPair::new(TransitionKernel::new(a, kernel_opts), TransitionKernel::new(b, kernel_opts));
        for &k in &lengths {
            for &rule in &config.start_rules {
                let seed = cell_seed(config.seed, cap, k, rule);
                let z0 = rule.start(cap);
                let est = estimate_path_tvd(&pair, z0, k, config.n, seed, config.side, config.workers)?;
                rows.push(SweepRow {
                    capacity: cap,
                    k,
                    z0,
                    start_rule: rule,
                    n: config.n,
                    seed,
                    tvd_estimate: est.value,
                    stderr: est.stderr,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "K,k,z0,N,seed,tvd_estimate,stderr")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{},{}", r.capacity, r.k, r.z0, r.n, r.seed, r.tvd_estimate, r.stderr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ControlMap, ControlSpec, KernelOptions, OffspringFamily, Rate};

    fn kernel(spec: ProcessSpec) -> TransitionKernel {
        TransitionKernel::new(spec, KernelOptions::default())
    }

    #[test]
    fn exact_examples() {
        let d = Distribution::poisson(4.0).unwrap();
        assert_eq!(exact_tvd(&d, &d, 1e-12).value, 0.0);
        assert_eq!(exact_tvd(&Distribution::point(0), &Distribution::point(1), 1e-12).value, 1.0);
        let v = exact_tvd(&Distribution::bernoulli(0.5).unwrap(), &Distribution::bernoulli(0.25).unwrap(), 1e-12).value;
        assert!((v - 0.25).abs() < 1e-15);
    }

    fn scaled_poisson_pair() -> ProcessPair {
        ProcessPair::new(
            kernel(ProcessSpec::psdbp(OffspringFamily::PoissonScaled { lambda: 3.0 })),
            kernel(ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::poisson(3.0).unwrap())),
        )
    }

    #[test]
    fn equivalent_pair_is_exactly_zero() {
        let pair = scaled_poisson_pair();
        for z in [1, 5, 40] {
            assert_eq!(exact_one_step_tvd(&pair.psdbp, &pair.cbp, z).unwrap().value, 0.0);
        }
        for side in [Side::Psdbp, Side::Cbp] {
            let e = estimate_path_tvd(&pair, 10, 4, 3000, 5, side, 2).unwrap();
            assert_eq!((e.value, e.stderr), (0.0, 0.0));
        }
    }

    fn shift_gated_pair() -> ProcessPair {
        ProcessPair::new(
            kernel(ProcessSpec::psdbp(OffspringFamily::NbShiftGated { lambda: 3.0, m: 2 })),
            kernel(ProcessSpec::cbp(
                ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Const(1.0 / 3.0) },
                Distribution::poisson(3.0).unwrap(),
            )),
        )
    }

    #[test]
    fn one_step_tvd_decays() {
        let pair = shift_gated_pair();
        let small = exact_one_step_tvd(&pair.psdbp, &pair.cbp, 1).unwrap().value;
        let large = exact_one_step_tvd(&pair.psdbp, &pair.cbp, 100).unwrap().value;
        assert!(large < small, "{large} vs {small}");
    }

    #[test]
    fn estimate_agrees_with_enumeration() {
        let pair = shift_gated_pair();
        let exact = exact_one_step_tvd(&pair.psdbp, &pair.cbp, 20).unwrap().value;
        let est = estimate_path_tvd(&pair, 20, 1, 20_000, 11, Side::Psdbp, 4).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn deterministic_across_workers() {
        let pair = shift_gated_pair();
        let a = estimate_path_tvd(&pair, 10, 3, 5000, 9, Side::Cbp, 1).unwrap();
        let b = estimate_path_tvd(&pair, 10, 3, 5000, 9, Side::Cbp, 4).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn summary_merge_matches_sequential() {
        let xs: Vec<f64> = (0..3000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut seq = Summary::default();
        xs.iter().for_each(|&x| seq.push(x));
        let merged = xs
            .chunks(1024)
            .map(|c| {
                let mut s = Summary::default();
                c.iter().for_each(|&x| s.push(x));
                s
            })
            .fold(Summary::default(), Summary::merge);
        assert_eq!(merged.n, seq.n);
        assert!((merged.mean - seq.mean).abs() < 1e-12);
        assert!((merged.m2 - seq.m2).abs() / seq.m2 < 1e-12);
    }

    #[test]
    fn single_cell_sweep_uses_derived_seed() {
        let config = SweepConfig {
            capacities: vec![10.0],
            path_lengths: vec![2],
            start_rules: vec![StartRule::CarryingCapacity],
            n: 2000,
            seed: 42,
            side: Side::Psdbp,
            workers: 2,
        };
        let family = |k: f64| {
            (
                ProcessSpec::psdbp(OffspringFamily::NbLogistic { lambda: 3.0, m: 2, k }),
                ProcessSpec::cbp(
                    ControlSpec::Binomial { psi: ControlMap::ShiftGated { m: 2 }, rate: Rate::Logistic { lambda: 3.0, m: 2, k } },
                    Distribution::poisson(3.0).unwrap(),
                ),
            )
        };
        let rows = sweep(&config, family, KernelOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let (a, b) = family(10.0);
        let pair = ProcessPair::new(kernel(a), kernel(b));
        let seed = cell_seed(42, 10.0, 2, StartRule::CarryingCapacity);
        let direct = estimate_path_tvd(&pair, 10, 2, 2000, seed, Side::Psdbp, 1).unwrap();
        assert_eq!(rows[0].tvd_estimate.to_bits(), direct.value.to_bits());
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &rows).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("K,k,z0,N,seed,tvd_estimate,stderr\n10,2,10,2000,"));
    }
}
