//! Branching-process kernels and the machinery for comparing
//! population-size-dependent branching processes (PSDBPs) with controlled
//! branching processes (CBPs).
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: discrete laws on the non-negative integers, iid sums,
//!   n-divisibility.
//! * [`kernels`]: process specifications, exact one-step transition laws,
//!   simulation, attainable sets and carrying-capacity audits.
//! * [`equivalence`]: deciding whether a CBP has an equivalent PSDBP.
//! * [`matching`]: first/second moment matching between PSDBPs and
//!   deterministically controlled CBPs (DCBPs).
//! * [`bounds`]: regularity certificates and analytic total-variation bounds.
//! * [`estimator`]: exact and importance-sampling total-variation distances.
//! * [`grammar`]: the structured-text form shared by configs and reports.

pub mod bounds;
pub mod distributions;
pub mod equivalence;
pub mod estimator;
pub mod grammar;
pub mod kernels;
pub mod matching;
mod pool;
pub mod rational;
pub mod rng;

pub use distributions::{
    DistributionError, Distribution, DivisibilityOutcome, DivisibilityVerdict, FiniteLaw, Moments,
    SumOptions,
};
pub use kernels::{
    ControlMap, ControlSpec, KernelError, KernelOptions, OffspringFamily, ProcessSpec, Rate,
    TransitionKernel,
};
pub use rational::Rational;
