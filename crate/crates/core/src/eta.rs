//! Bounded test functions on particle systems used by the drift audits.

use crate::error::{usage, Result};
use crate::jump::TestFunction;
use crate::particles::ParticleSystem;

/// `g(x) = x^β / (1 + x^β)`.
pub fn saturating(x: f64, beta: f64) -> f64 {
    let p = x.powf(beta);
    p / (1.0 + p)
}

/// `g'(x) = β x^{β−1} / (1 + x^β)²`.
pub fn saturating_slope(x: f64, beta: f64) -> f64 {
    let p = x.powf(beta);
    beta * x.powf(beta - 1.0) / ((1.0 + p) * (1.0 + p))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(usage(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `(1/n) Σ φ(x_i)`; `bound` must dominate `|η|` on every state it is evaluated at.
pub fn integral<S, F>(name: impl Into<String>, phi: F, bound: f64) -> Result<TestFunction<S>>
where
    S: AsRef<ParticleSystem> + 'static,
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    TestFunction::new(name, bound, move |s: &S| {
        let xi = s.as_ref();
        xi.sizes.iter().map(|&x| phi(x)).sum::<f64>() / xi.n as f64
    })
}

/// `−(1/n) Σ x_i^{−β}`, the power-tail function for coagulation traps.
pub fn power_tail<S: AsRef<ParticleSystem> + 'static>(beta: f64, bound: f64) -> Result<TestFunction<S>> {
    positive("beta", beta)?;
    integral(format!("power_tail({beta})"), move |x| -x.powf(-beta), bound)
}

/// `−(1/n) Σ x_i^α`, the moment function for fragmentation traps.
pub fn moment<S: AsRef<ParticleSystem> + 'static>(alpha: f64, bound: f64) -> Result<TestFunction<S>> {
    positive("alpha", alpha)?;
    integral(format!("moment({alpha})"), move |x| -x.powf(alpha), bound)
}

/// `g(N/n)` with the saturating `g`; bounded by 1.
pub fn saturating_count<S: AsRef<ParticleSystem> + 'static>(beta: f64) -> Result<TestFunction<S>> {
    positive("beta", beta)?;
    if beta > 1.0 {
        return Err(usage("saturating count needs beta <= 1"));
    }
    TestFunction::new(format!("saturating_count({beta})"), 1.0, move |s: &S| {
        let xi = s.as_ref();
        saturating(xi.len() as f64 / xi.n as f64, beta)
    })
}
