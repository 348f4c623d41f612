//! Named end-to-end checks: simulate, compare with an oracle, report.

use serde::{Deserialize, Serialize};

use crate::ensemble::run_replicates;
use crate::error::{usage, Result};
use crate::experiments::{
    affine_fragmentation_with_source, constant_kernel_direct, default_stop_massflow, empirical_density,
    halving_fragmentation, mf1, product_power_massflow, run_verdict, shifted_half_fragmentation, state_at,
    stays_above_half, total_variation,
};
use crate::jump::{simulate_chain_observed, Recording, StopRule};
use crate::oracles::{
    constant_kernel_density, shifted_half_survival_prob_exact, halving_expected_tau, mf1_expected_explosion_time,
    monodisperse_unit, smoluchowski_ode,
};
use crate::kernels::constant_kernel;
use crate::rng::Seed;
use crate::stats::{mean_estimate, proportion};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    /// Allowed `|measured − expected|`, or the one-sided limit for bounds.
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

/// Run-size knobs shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub base_seed: u64,
    /// Overrides the check's default replicate count.
    pub replicates: Option<usize>,
    pub workers: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            base_seed: 20_240_601,
            replicates: None,
            workers: 0,
        }
    }
}

pub const CHECKS: &[(&str, &str)] = &[
    ("mf1_mean_tau", "mean explosion time of the doubling chain with K = xy against 2"),
    ("shifted_half_fraction", "fraction of shifted-half chains from x0 = 1 staying above 1/2 against 1/2"),
    ("halving_tau1000", "mean time of the 1000th halving against Σ 2/(k ln 2 + 1)"),
    ("const_kernel_tv", "total variation between direct simulation at t = 1 and the K = 2 closed form"),
    ("product_power_explosion", "explosion fraction of mass flow with K = (xy)^(3/4), n = 2"),
    ("affine_fragmentation_regular", "no explosion for fragmentation 1 + x with a point source, n = 10"),
];

pub fn run(name: &str, opts: &CheckOptions) -> Result<CheckReport> {
    let reps = |default: usize| opts.replicates.unwrap_or(default);
    match name {
        "mf1_mean_tau" => {
            let (law, init) = mf1(2.0)?;
            let stop = default_stop_massflow(&law)?;
            let taus = run_replicates(opts.base_seed, reps(10_000), opts.workers, |s| {
                let v = run_verdict(&law, &init, s, &stop)?;
                Ok(v.verdict)
            })?;
            let taus: Vec<f64> = taus
                .iter()
                .map(|v| match v {
                    crate::jump::Verdict::Exploded { tau_lower, .. } => *tau_lower,
                    _ => f64::NAN,
                })
                .collect();
            let est = mean_estimate(&taus);
            let expected = mf1_expected_explosion_time(2.0)?;
            Ok(report(name, est.mean, expected, 3.0 * est.std_error, format!("{} replicates, 3 standard errors", taus.len())))
        }
        "shifted_half_fraction" => {
            let (law, init) = shifted_half_fragmentation(1.0)?;
            let flags = run_replicates(opts.base_seed, reps(10_000), opts.workers, |s| {
                stays_above_half(&law, &init, 50, s)
            })?;
            let p = proportion(flags.iter().filter(|&&b| b).count(), flags.len());
            let expected = shifted_half_survival_prob_exact(1.0)?;
            Ok(report(name, p.fraction, expected, 3.0 * p.std_error, "50-jump survival, 3 standard errors".into()))
        }
        "halving_tau1000" => {
            let (law, init) = halving_fragmentation()?;
            let stop = StopRule::new(1000, f64::INFINITY, f64::INFINITY)?;
            let taus = run_replicates(opts.base_seed, reps(1000), opts.workers, |s| {
                let traj = simulate_chain_observed(&law, &init, s, &stop, Recording::Endpoints, |_| {})?;
                traj.time_at(1000).ok_or_else(|| usage("run stopped before 1000 jumps"))
            })?;
            let est = mean_estimate(&taus);
            let expected = halving_expected_tau(1000);
            Ok(report(name, est.mean, expected, 3.0 * est.std_error, format!("{} replicates, 3 standard errors", taus.len())))
        }
        "const_kernel_tv" => {
            let n = 10_000;
            let (law, init) = constant_kernel_direct(2.0, n)?;
            let xi = state_at(&law, &init, Seed::new(opts.base_seed, 0), 1.0)?;
            let xmax = 200;
            let ode = smoluchowski_ode(&constant_kernel(2.0), &monodisperse_unit(xmax), xmax, 1.0, 1e-3)?;
            let emp = empirical_density(xi.system(), xmax);
            let tv = total_variation(&emp, &ode.c);
            let closed: Vec<f64> = (1..=xmax).map(|k| constant_kernel_density(1.0, k)).collect();
            Ok(CheckReport {
                name: name.into(),
                measured: tv,
                expected: 0.0,
                tolerance: 0.02,
                passed: tv <= 0.02,
                detail: format!("n = {n}, ODE vs closed form TV {:.2e}", total_variation(&ode.c, &closed)),
            })
        }
        "product_power_explosion" => {
            let (law, init) = product_power_massflow(0.75, 2)?;
            let stop = law.stop_rule(10_000_000, f64::INFINITY, 1e12)?;
            let flags = run_replicates(opts.base_seed, reps(1000), opts.workers, |s| {
                Ok(run_verdict(&law, &init, s, &stop)?.verdict.is_exploded())
            })?;
            let p = proportion(flags.iter().filter(|&&b| b).count(), flags.len());
            Ok(CheckReport {
                name: name.into(),
                measured: p.fraction,
                expected: 1.0,
                tolerance: 0.01,
                passed: p.fraction >= 0.99,
                detail: format!("{} of {} exploded", p.successes, p.trials),
            })
        }
        "affine_fragmentation_regular" => {
            let (law, init) = affine_fragmentation_with_source(10)?;
            let stop = law.stop_rule(10_000_000, 10.0, 1e12)?;
            let flags = run_replicates(opts.base_seed, reps(1000), opts.workers, |s| {
                Ok(run_verdict(&law, &init, s, &stop)?.verdict.is_exploded())
            })?;
            let exploded = flags.iter().filter(|&&b| b).count();
            Ok(CheckReport {
                name: name.into(),
                measured: exploded as f64,
                expected: 0.0,
                tolerance: 0.0,
                passed: exploded == 0,
                detail: format!("{exploded} of {} exploded before t = 10", flags.len()),
            })
        }
        _ => Err(usage(format!(
            "unknown validation '{name}'; known: {}",
            CHECKS.iter().map(|c| c.0).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn report(name: &str, measured: f64, expected: f64, tolerance: f64, detail: String) -> CheckReport {
    CheckReport {
        name: name.into(),
        measured,
        expected,
        tolerance,
        passed: (measured - expected).abs() <= tolerance,
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name() {
        assert!(matches!(run("nope", &CheckOptions::default()), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn small_runs() {
        let opts = CheckOptions {
            replicates: Some(400),
            ..CheckOptions::default()
        };
        for name in ["mf1_mean_tau", "shifted_half_fraction", "halving_tau1000"] {
            let r = run(name, &opts).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
