//! Built-in configs that regenerate the data behind the four reference figures.

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;

/// Beverton-Holt PSDBP with Bin(2, p(z)) offspring settling around K = 100.
const FIG1: &str = "\
[process.a]
kind=psdbp family=binomial_bh K=100
[run]
command=simulate z0=10 generations=1000 paths=1 seed=1
";

/// Scaled-Bernoulli control that dies out to 0 and restarts from immigrants.
const FIG2: &str = "\
[process.a]
kind=cbp control=scaled_bernoulli psi=affine(a=1,b=1) q=exp_gate(scale=1000) offspring=binomial(n=5,p=0.2)
[run]
command=simulate z0=1 generations=300 paths=1 seed=2
";

/// Ten paths each of the three-point PSDBP and its matched DCBP from 1000.
const FIG3: &str = "\
[process.a]
kind=psdbp family=three_point
[process.b]
kind=dcbp phi=max_shift(c=1) offspring=binomial(n=2,p=0.5)
[run]
command=simulate z0=1000 generations=50 paths=10 seed=3
";

/// k-step TVD between the logistic PSDBP and its binomially controlled CBP.
const FIG4: &str = "\
[process.a]
kind=psdbp family=nb_logistic
[process.b]
kind=cbp control=binomial psi=shift_gated(M=2) q=rate_catalog:logistic offspring=poisson(mu=3)
[run]
command=tvd K=3..200 lambda=3 M=2 k=1,2,5,10 z0_rule=one,carrying_capacity N=1000000 seed=4
";

pub const NAMES: &[&str] = &["fig1", "fig2", "fig3", "fig4"];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => FIG1,
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig4" => FIG4,
        _ => return None,
    })
}

/// The figure config with its replicate count `N` multiplied by `scale` (at least 1).
pub fn config(name: &str, scale: f64) -> Result<RunConfig, CliError> {
    let text = text(name).ok_or_else(|| CliError::Failure(format!("unknown figure `{name}` (expected {})", NAMES.join(", "))))?;
    let mut cfg = parse_config(text)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Validation { line: 0, key: "scale".into(), message: "must be positive".into() });
    }
    if let Some(n) = cfg.run.n {
        cfg.run.n = Some(((n as f64 * scale).round() as u64).max(1));
    }
    Ok(cfg)
}
