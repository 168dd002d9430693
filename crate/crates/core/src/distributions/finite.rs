use super::DistributionError;

const MASS_TOL: f64 = 1e-12;

/// Explicit finite law: strictly increasing support points with positive
/// probabilities.
///
/// `omitted_mass` records probability cut away by truncation; a law built
/// through [`FiniteLaw::new`] has none.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    atoms: Vec<(u64, f64)>,
    cumulative: Vec<f64>,
    omitted: f64,
}

impl FiniteLaw {
    pub fn new(atoms: Vec<(u64, f64)>) -> Result<Self, DistributionError> {
        if atoms.is_empty() {
            return Err(DistributionError::InvalidSupport("no atoms".into()));
        }
        for w in atoms.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(DistributionError::InvalidSupport(format!(
                    "values must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(k, p)) = atoms.iter().find(|a| !(a.1 >= 0.0 && a.1.is_finite())) {
            return Err(DistributionError::InvalidSupport(format!("probability {p} at {k}")));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(DistributionError::InvalidSupport(format!("probabilities sum to {total}")));
        }
        Ok(Self::assemble(atoms.into_iter().filter(|a| a.1 > 0.0).collect(), 0.0))
    }

    /// Law from a dense vector starting at `offset`; zero entries are dropped
    /// and missing mass above rounding level is recorded as omitted.
    pub fn from_dense(offset: u64, probs: Vec<f64>) -> Self {
        let atoms: Vec<(u64, f64)> = probs
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(i, p)| (offset + i as u64, p))
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let missing = 1.0 - total;
        let rounding = 4.0 * f64::EPSILON * atoms.len().max(1) as f64;
        Self::assemble(atoms, if missing > rounding { missing } else { 0.0 })
    }

    /// Like [`FiniteLaw::from_dense`] for vectors that sum to 1 up to rounding.
    pub(crate) fn from_dense_normalized(offset: u64, probs: Vec<f64>) -> Self {
        let mut law = Self::from_dense(offset, probs);
        law.omitted = 0.0;
        law
    }

    fn assemble(atoms: Vec<(u64, f64)>, omitted: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Self { atoms, cumulative, omitted }
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        if self.omitted > 0.0 {
            return Ok(());
        }
        Self::new(self.atoms.clone()).map(drop)
    }

    pub fn atoms(&self) -> &[(u64, f64)] {
        &self.atoms
    }

    pub fn omitted_mass(&self) -> f64 {
        self.omitted
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self.atoms.binary_search_by_key(&k, |a| a.0) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(k, p)| k as f64 * p).sum::<f64>() / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(k, p)| (k as f64 - m).powi(2) * p).sum::<f64>() / self.total_mass()
    }

    /// Smallest support point with at most `tail_tol` mass strictly above it.
    pub fn upper_point(&self, tail_tol: f64) -> u64 {
        let total = self.total_mass();
        for (i, &(k, _)) in self.atoms.iter().enumerate() {
            if total - self.cumulative[i] < tail_tol {
                return k;
            }
        }
        self.atoms.last().map_or(0, |a| a.0)
    }

    /// Inverse-CDF lookup for `u` in `[0, total_mass)`.
    pub fn quantile(&self, u: f64) -> u64 {
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)].0
    }

    /// Dense probabilities starting at the smallest support point.
    pub fn to_dense(&self) -> (u64, Vec<f64>) {
        let lo = self.atoms.first().map_or(0, |a| a.0);
        let hi = self.atoms.last().map_or(0, |a| a.0);
        let mut v = vec![0.0; (hi - lo + 1) as usize];
        for &(k, p) in &self.atoms {
            v[(k - lo) as usize] = p;
        }
        (lo, v)
    }
}
