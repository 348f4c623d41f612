//! Seeded replicate ensembles and their summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::jump::{ExplosionVerdict, Verdict};
use crate::rng::Seed;
use crate::stats::{proportion, quantile, Accumulator, MeanEstimate, Proportion};

/// Runs `job(Seed::new(base_seed, r))` for `r = 0..replicates`.
///
/// `workers = 0` uses the global pool. Results come back in replicate order,
/// so the output does not depend on the number of workers.
pub fn run_replicates<T, F>(base_seed: u64, replicates: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Seed) -> Result<T> + Sync + Send,
{
    if replicates == 0 {
        return Err(usage("replicates must be at least 1"));
    }
    let run = || {
        (0..replicates as u64)
            .into_par_iter()
            .map(|r| job(Seed::new(base_seed, r)))
            .collect::<Result<Vec<T>>>()
    };
    if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| usage(format!("cannot start worker pool: {e}")))?
            .install(run)
    }
}

/// One line of the per-replicate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: u64,
    pub verdict: String,
    pub tau_lower: Option<f64>,
    pub tau_estimate: Option<f64>,
    pub jumps: usize,
    pub t_final: Option<f64>,
}

impl ReplicateRow {
    pub fn new(replicate: u64, v: &ExplosionVerdict) -> Self {
        let (tau_lower, tau_estimate, t_final) = match v.verdict {
            Verdict::Exploded { tau_lower, tau_estimate } => (Some(tau_lower), Some(tau_estimate), None),
            Verdict::Survived { t_final } | Verdict::Absorbed { t_final } => (None, None, Some(t_final)),
            Verdict::Inconclusive { tau_lower } => (Some(tau_lower), None, None),
        };
        ReplicateRow {
            replicate,
            verdict: v.verdict.label().to_string(),
            tau_lower,
            tau_estimate,
            jumps: v.jumps,
            t_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauQuantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub exploded: usize,
    pub survived: usize,
    pub absorbed: usize,
    pub inconclusive: usize,
}

/// Ensemble statistics: explosion fraction with a 95% interval and the
/// distribution of estimated explosion times over exploded replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replicates: usize,
    pub counts: VerdictCounts,
    pub explosion_fraction: Proportion,
    pub tau: Option<MeanEstimate>,
    pub tau_quantiles: Option<TauQuantiles>,
}

pub fn aggregate(verdicts: &[ExplosionVerdict]) -> Aggregate {
    let mut counts = VerdictCounts {
        exploded: 0,
        survived: 0,
        absorbed: 0,
        inconclusive: 0,
    };
    let mut taus = Vec::new();
    for v in verdicts {
        match v.verdict {
            Verdict::Exploded { tau_estimate, .. } => {
                counts.exploded += 1;
                taus.push(tau_estimate);
            }
            Verdict::Survived { .. } => counts.survived += 1,
            Verdict::Absorbed { .. } => counts.absorbed += 1,
            Verdict::Inconclusive { .. } => counts.inconclusive += 1,
        }
    }
    let (tau, tau_quantiles) = if taus.is_empty() {
        (None, None)
    } else {
        let est = taus.iter().copied().collect::<Accumulator>().estimate();
        let q = |p| quantile(&taus, p);
        (
            Some(est),
            Some(TauQuantiles {
                q05: q(0.05),
                q25: q(0.25),
                q50: q(0.5),
                q75: q(0.75),
                q95: q(0.95),
            }),
        )
    };
    Aggregate {
        replicates: verdicts.len(),
        explosion_fraction: proportion(counts.exploded, verdicts.len()),
        counts,
        tau,
        tau_quantiles,
    }
}
