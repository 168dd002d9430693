use super::{KernelError, ProcessSpec, TransitionKernel};
use crate::{pool, rng};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::io::{self, Write};

/// Simulates `paths` independent trajectories of `generations` steps from `z0`.
///
/// Path `i` draws from stream `(seed, i)`, so the output does not depend on
/// `workers`. Each trajectory holds `generations + 1` sizes, starting at `z0`.
pub fn simulate(
    kernel: &TransitionKernel,
    z0: u64,
    generations: u64,
    paths: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<Vec<u64>>, KernelError> {
    pool::install(workers, || {
        (0..paths)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, i);
                let mut path = Vec::with_capacity(generations as usize + 1);
                let mut z = z0;
                path.push(z);
                for _ in 0..generations {
                    z = kernel.sample_step(z, &mut r)?;
                    path.push(z);
                }
                Ok(path)
            })
            .collect()
    })
}

/// Writes trajectories as `path,generation,size` rows in path-then-generation order.
pub fn write_trajectories_csv<W: Write>(mut out: W, trajectories: &[Vec<u64>]) -> io::Result<()> {
    writeln!(out, "path,generation,size")?;
    for (p, path) in trajectories.iter().enumerate() {
        for (g, z) in path.iter().enumerate() {
            writeln!(out, "{p},{g},{z}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttainableSet {
    /// Attainable states in `[0, cap]`, ascending.
    pub states: Vec<u64>,
    /// Some one-step support reaches beyond `cap`.
    pub truncated: bool,
    pub cap: u64,
}

impl AttainableSet {
    pub fn contains(&self, z: u64) -> bool {
        self.states.binary_search(&z).is_ok()
    }
}

/// Breadth-first closure of one-step supports from `z0`, restricted to `[0, cap]`.
pub fn attainable_set(kernel: &TransitionKernel, z0: u64, cap: u64) -> Result<AttainableSet, KernelError> {
    let cap = cap.max(z0);
    let mut seen = vec![false; cap as usize + 1];
    let mut queue = VecDeque::from([z0]);
    seen[z0 as usize] = true;
    let mut truncated = false;
    while let Some(z) = queue.pop_front() {
        let support = kernel.step_law(z)?.support(cap);
        truncated |= support.beyond();
        for next in support.iter() {
            if !seen[next as usize] {
                seen[next as usize] = true;
                queue.push_back(next);
            }
        }
    }
    let states = (0..=cap).filter(|&z| seen[z as usize]).collect();
    Ok(AttainableSet { states, truncated, cap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftViolation {
    pub z: u64,
    pub mean: f64,
}

/// Result of checking upward drift below `k` and downward drift above it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityAudit {
    pub k: f64,
    pub checked: u64,
    pub violations: Vec<DriftViolation>,
}

impl CapacityAudit {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `E(next | z) > z` for `z < k` and `E(next | z) < z` for `z > k`.
pub fn carrying_capacity_audit(
    spec: &ProcessSpec,
    k: f64,
    z_range: std::ops::RangeInclusive<u64>,
) -> Result<CapacityAudit, KernelError> {
    let mut violations = Vec::new();
    let mut checked = 0;
    for z in z_range {
        checked += 1;
        let zf = z as f64;
        let (mean, _) = spec.conditional_moments(z)?;
        let ok = if zf < k {
            mean > zf
        } else if zf > k {
            mean < zf
        } else {
            true
        };
        if !ok {
            violations.push(DriftViolation { z, mean });
        }
    }
    Ok(CapacityAudit { k, checked, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::kernels::{ControlMap, ControlSpec, KernelOptions, OffspringFamily, Rate};

    fn kernel(spec: ProcessSpec) -> TransitionKernel {
        TransitionKernel::new(spec, KernelOptions::default())
    }

    #[test]
    fn doubling_dcbp() {
        let k = kernel(ProcessSpec::dcbp(ControlMap::Identity, Distribution::point(2)));
        let a = attainable_set(&k, 1, 20).unwrap();
        assert_eq!(a.states, vec![1, 2, 4, 8, 16]);
        assert!(a.truncated);
    }

    #[test]
    fn parity_example_stays_small() {
        // BFS oracle: from 1, phi is 1 at z in {1, 2}, so the next state is in {0, 1, 2}
        let k = kernel(ProcessSpec::dcbp(ControlMap::ParityHalf, Distribution::binomial(2, 0.5).unwrap()));
        let a = attainable_set(&k, 1, 50).unwrap();
        assert_eq!(a.states, vec![0, 1, 2]);
        assert!(!a.truncated);
        // from 3 the odd state 5 leads to 10, and the chain escapes upward
        let a = attainable_set(&k, 3, 50).unwrap();
        assert_eq!(a.states, (0..=50).collect::<Vec<_>>());
        assert!(a.truncated);
    }

    #[test]
    fn constant_trajectory() {
        let k = kernel(ProcessSpec::psdbp(OffspringFamily::Constant(Distribution::point(1))));
        let t = simulate(&k, 7, 20, 3, 1, 2).unwrap();
        assert!(t.iter().all(|p| p.iter().all(|&z| z == 7)));
    }

    #[test]
    fn simulation_independent_of_workers() {
        let k = kernel(ProcessSpec::psdbp(OffspringFamily::BinomialBevertonHolt { k: 100.0 }));
        let a = simulate(&k, 10, 50, 8, 42, 1).unwrap();
        let b = simulate(&k, 10, 50, 8, 42, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beverton_holt_audit() {
        let spec = ProcessSpec::psdbp(OffspringFamily::BinomialBevertonHolt { k: 100.0 });
        assert!(carrying_capacity_audit(&spec, 100.0, 1..=500).unwrap().holds());
        let critical = ProcessSpec::psdbp(OffspringFamily::Constant(Distribution::poisson(1.0).unwrap()));
        let audit = carrying_capacity_audit(&critical, 100.0, 1..=500).unwrap();
        assert_eq!(audit.violations.len(), 499);
    }

    #[test]
    fn immigration_path_leaves_zero() {
        let spec = ProcessSpec::cbp(
            ControlSpec::ScaledBernoulli {
                scale: ControlMap::AffineFloor { a: crate::rational::int(1), b: crate::rational::int(1) },
                rate: Rate::ExpGate { scale: 1000.0 },
            },
            Distribution::binomial(5, 0.2).unwrap(),
        );
        let k = kernel(spec);
        let paths = simulate(&k, 1, 300, 20, 3, 2).unwrap();
        let revived = paths.iter().any(|p| p.windows(2).any(|w| w[0] == 0 && w[1] > 0));
        assert!(revived);
    }
}
