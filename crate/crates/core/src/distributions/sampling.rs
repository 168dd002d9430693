use super::Distribution;
use rand::Rng;
use rand_distr::{Binomial, Distribution as Sampler, Gamma, Geometric, Poisson};

fn poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    Poisson::new(mu).expect("finite positive mean").sample(rng) as u64
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n, p).expect("probability in [0, 1]").sample(rng)
}

/// Gamma-Poisson mixture.
fn negative_binomial<R: Rng + ?Sized>(r: f64, q: f64, rng: &mut R) -> u64 {
    if r <= 0.0 {
        return 0;
    }
    let rate = Gamma::new(r, (1.0 - q) / q).expect("positive shape").sample(rng);
    poisson(rate, rng)
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Distribution::PointMass(c) => c,
            Distribution::Bernoulli { p } => u64::from(rng.random::<f64>() < p),
            Distribution::Binomial { n, p } => binomial(n, p, rng),
            Distribution::Poisson { mu } => poisson(mu, rng),
            Distribution::Geometric { q } => Geometric::new(q).expect("q in (0, 1)").sample(rng),
            Distribution::NegativeBinomial { r, q } => negative_binomial(r, q, rng),
            Distribution::ZeroInflatedPoisson { pi0, lambda } => {
                if rng.random::<f64>() < pi0 {
                    0
                } else {
                    poisson(lambda, rng)
                }
            }
            Distribution::ZeroInflatedGeometric { p, q } => {
                if rng.random::<f64>() < p {
                    0
                } else {
                    Geometric::new(q).expect("q in (0, 1)").sample(rng)
                }
            }
            Distribution::ScaledBernoulli { s, p } => {
                if rng.random::<f64>() < p {
                    s
                } else {
                    0
                }
            }
            Distribution::FiniteSupport(ref law) => law.quantile(rng.random::<f64>() * law.total_mass()),
        }
    }

    /// Draws the sum of `m` independent copies, using a closed form where one exists.
    pub fn sample_iid_sum<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u64 {
        if m == 0 {
            return 0;
        }
        match *self {
            Distribution::PointMass(c) => c * m,
            Distribution::Bernoulli { p } => binomial(m, p, rng),
            Distribution::Binomial { n, p } => binomial(n * m, p, rng),
            Distribution::Poisson { mu } => poisson(mu * m as f64, rng),
            Distribution::Geometric { q } => negative_binomial(m as f64, q, rng),
            Distribution::NegativeBinomial { r, q } => negative_binomial(r * m as f64, q, rng),
            Distribution::ZeroInflatedPoisson { pi0, lambda } => {
                let active = binomial(m, 1.0 - pi0, rng);
                poisson(lambda * active as f64, rng)
            }
            Distribution::ZeroInflatedGeometric { p, q } => {
                let active = binomial(m, 1.0 - p, rng);
                negative_binomial(active as f64, q, rng)
            }
            Distribution::ScaledBernoulli { s, p } => s * binomial(m, p, rng),
            Distribution::FiniteSupport(_) => (0..m).map(|_| self.sample(rng)).sum(),
        }
    }
}
