//! Ready-made models for the worked examples and theorems, and the runners
//! that turn single trajectories into the quantities the checks compare.

use crate::direct::{self, DirectConfig, DirectLaw, DirectState};
use crate::error::Result;
use std::sync::Arc;

use crate::jump::{
    classify, BoundaryEvent, StopReason, simulate_chain_observed, ExplosionVerdict, ProcessLaw, Recording, StopRule, Trajectory,
    DEFAULT_MAX_JUMPS, DEFAULT_RATE_CEILING, DEFAULT_TAIL_TOL, DEFAULT_TAIL_WINDOW,
};
use crate::kernels::{
    constant_kernel, deterministic_binary, massflow_from_frag, multiplicative_kernel, point_source,
    product_power_kernel, uniform_binary, Kappa, ScalarFn,
};
use crate::massflow::{self, MassFlowConfig, MassFlowEvent, MassFlowLaw, MassFlowState, MassTrace};
use crate::particles::{BoundaryGuards, ParticleSystem};
use crate::rng::Seed;

/// `(xy)^{α/2}` mass flow coagulation started from one unit particle, `n = 1`.
pub fn mf1(alpha: f64) -> Result<(MassFlowLaw, MassFlowState)> {
    let law = massflow::build_law(&MassFlowConfig::new(1).with_coag(product_power_kernel(alpha / 2.0)))?;
    let init = law.state(ParticleSystem::monodisperse(1, 1.0, 1)?)?;
    Ok((law, init))
}

/// `xy` mass flow coagulation from two unit particles, `n = 2`.
pub fn mf2() -> Result<(MassFlowLaw, MassFlowState)> {
    let law = massflow::build_law(&MassFlowConfig::new(2).with_coag(multiplicative_kernel()))?;
    let init = law.state(ParticleSystem::monodisperse(2, 1.0, 2)?)?;
    Ok((law, init))
}

/// Mass flow fragmentation with `F̄(x) = 1/x` and the shifted-half split point.
pub fn shifted_half_fragmentation(x0: f64) -> Result<(MassFlowLaw, MassFlowState)> {
    let frag = deterministic_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 }, Kappa::ShiftedHalf);
    let law = massflow::build_law(&MassFlowConfig::new(1).with_frag(massflow_from_frag(frag)))?;
    let init = law.state(ParticleSystem::monodisperse(1, x0, 1)?)?;
    Ok((law, init))
}

/// Whether a single-particle mass flow chain stays above `1/2` for `jumps` jumps.
pub fn stays_above_half(law: &MassFlowLaw, init: &MassFlowState, jumps: u64, seed: Seed) -> Result<bool> {
    let stop = StopRule::new(jumps, f64::INFINITY, f64::INFINITY)?;
    let mut low = false;
    let traj = simulate_chain_observed(law, init, seed, &stop, Recording::Endpoints, |v| {
        low |= v.state.system().sizes.iter().any(|&x| x <= 0.5);
    })?;
    Ok(!low && traj.jumps() as u64 == jumps)
}

/// Mass flow halving with `F̄(x) = 1 − ln x`, from one unit particle.
///
/// The dust guard sits at `1e-305` so that `2^{-1000}` is still a regular state.
pub fn halving_fragmentation() -> Result<(MassFlowLaw, MassFlowState)> {
    let frag = deterministic_binary(ScalarFn::NegLog { a: 1.0, b: 1.0 }, Kappa::Half);
    let guards = BoundaryGuards {
        x_min: 1e-305,
        ..BoundaryGuards::default()
    };
    let cfg = MassFlowConfig::new(1).with_frag(massflow_from_frag(frag)).with_guards(guards);
    let law = massflow::build_law(&cfg)?;
    let init = law.state(ParticleSystem::monodisperse(1, 1.0, 1)?)?;
    Ok((law, init))
}

/// Direct simulation with uniform binary fragmentation `F̄(x) = 1/x`, one unit particle, `n = 1`.
pub fn singular_fragmentation() -> Result<(DirectLaw, DirectState)> {
    let frag = uniform_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 });
    let law = direct::build_law(&DirectConfig::new(1).with_frag(frag))?;
    let init = law.state(ParticleSystem::monodisperse(1, 1.0, 1)?)?;
    Ok((law, init))
}

/// Direct simulation with uniform binary fragmentation `F̄(x) = 1 + x` and a
/// unit point source at `x = 1`; `n` unit particles with weight `1/n`.
pub fn affine_fragmentation_with_source(n: u64) -> Result<(DirectLaw, DirectState)> {
    let frag = uniform_binary(ScalarFn::Affine { a: 1.0, b: 1.0 });
    let cfg = DirectConfig::new(n).with_frag(frag).with_source(point_source(1.0, 1.0));
    let law = direct::build_law(&cfg)?;
    let init = law.state(ParticleSystem::monodisperse(n, 1.0, n as usize)?)?;
    Ok((law, init))
}

/// Mass flow coagulation with `K = (xy)^β` from `n` unit particles.
pub fn product_power_massflow(beta: f64, n: u64) -> Result<(MassFlowLaw, MassFlowState)> {
    let law = massflow::build_law(&MassFlowConfig::new(n).with_coag(product_power_kernel(beta)))?;
    let init = law.state(ParticleSystem::monodisperse(n, 1.0, n as usize)?)?;
    Ok((law, init))
}

/// Direct simulation with constant kernel `K = c` from `n` unit particles.
pub fn constant_kernel_direct(c: f64, n: u64) -> Result<(DirectLaw, DirectState)> {
    let law = direct::build_law(&DirectConfig::new(n).with_coag(constant_kernel(c)))?;
    let init = law.state(ParticleSystem::monodisperse(n, 1.0, n as usize)?)?;
    Ok((law, init))
}

/// Mass flow with constant kernel `K = c` from `n` unit particles.
pub fn constant_kernel_massflow(c: f64, n: u64) -> Result<(MassFlowLaw, MassFlowState)> {
    let law = massflow::build_law(&MassFlowConfig::new(n).with_coag(constant_kernel(c)))?;
    let init = law.state(ParticleSystem::monodisperse(n, 1.0, n as usize)?)?;
    Ok((law, init))
}

/// Simulates under `stop` and classifies with the default tail settings.
pub fn run_verdict<L: ProcessLaw>(law: &L, init: &L::State, seed: Seed, stop: &StopRule<L::State>) -> Result<ExplosionVerdict> {
    let traj = simulate_chain_observed(law, init, seed, stop, Recording::Endpoints, |_| {})?;
    Ok(classify(&traj, stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL))
}

/// Like [`run_verdict`], returning the rates and jump times as well.
pub fn run_recorded_rates<L: ProcessLaw>(
    law: &L,
    init: &L::State,
    seed: Seed,
    stop: &StopRule<L::State>,
) -> Result<(ExplosionVerdict, Trajectory<L::State, L::Event>)> {
    let traj = simulate_chain_observed(law, init, seed, stop, Recording::Endpoints, |_| {})?;
    let verdict = classify(&traj, stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL);
    Ok((verdict, traj))
}

/// The state at time `t`.
pub fn state_at<L>(law: &L, init: &L::State, seed: Seed, t: f64) -> Result<L::State>
where
    L: ProcessLaw,
{
    let stop = StopRule::new(u64::MAX, t, f64::INFINITY)?;
    let traj = simulate_chain_observed(law, init, seed, &stop, Recording::Endpoints, |_| {})?;
    Ok(traj.final_state().clone())
}

/// Default stop rule with the model's boundary guard.
pub fn default_stop_direct(law: &DirectLaw) -> Result<StopRule<DirectState>> {
    law.stop_rule(DEFAULT_MAX_JUMPS, f64::INFINITY, DEFAULT_RATE_CEILING)
}

pub fn default_stop_massflow(law: &MassFlowLaw) -> Result<StopRule<MassFlowState>> {
    law.stop_rule(DEFAULT_MAX_JUMPS, f64::INFINITY, DEFAULT_RATE_CEILING)
}

/// `ĉ(k) = #{i : x_i = k} / n` for integer sizes `1..=xmax`; larger sizes are dropped.
pub fn empirical_density(xi: &ParticleSystem, xmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; xmax];
    for &x in &xi.sizes {
        let k = x.round() as usize;
        if (1..=xmax).contains(&k) {
            c[k - 1] += 1.0;
        }
    }
    let n = xi.n as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// `½ Σ |a_k − b_k|`, padding the shorter side with zeros.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|k| (at(a, k) - at(b, k)).abs()).sum::<f64>()
}

/// Mass flow `K = xy` from `n` unit particles in truncation mode: particles
/// beyond `x_max` are removed and the run continues.
pub fn truncated_gel(n: u64, x_max: f64) -> Result<(MassFlowLaw, MassFlowState)> {
    let guards = BoundaryGuards {
        x_max,
        ..BoundaryGuards::default()
    };
    let cfg = MassFlowConfig::new(n)
        .with_coag(multiplicative_kernel())
        .with_guards(guards)
        .truncating();
    let law = massflow::build_law(&cfg)?;
    let init = law.state(ParticleSystem::monodisperse(n, 1.0, n as usize)?)?;
    Ok((law, init))
}

/// `(t, N/n)` up to `horizon`, recorded without storing the trajectory.
pub fn mass_trace_until(law: &MassFlowLaw, init: &MassFlowState, seed: Seed, horizon: f64) -> Result<Vec<(f64, f64)>> {
    let stop = StopRule::new(u64::MAX, horizon, f64::INFINITY)?;
    let mut rec = MassTrace::default();
    simulate_chain_observed::<_, _>(law, init, seed, &stop, Recording::Endpoints, |v| rec.observe::<MassFlowEvent>(&v))?;
    Ok(rec.finish())
}

/// Time of the first particle removal in a truncating run, if it happens before `horizon`.
pub fn first_removal_time(law: &MassFlowLaw, init: &MassFlowState, seed: Seed, horizon: f64) -> Result<Option<f64>> {
    let count = init.system().len();
    let stop = StopRule::new(u64::MAX, horizon, f64::INFINITY)?
        .with_guard(Arc::new(move |s: &MassFlowState| (s.system().len() < count).then_some(BoundaryEvent::Gel)));
    let traj = simulate_chain_observed(law, init, seed, &stop, Recording::Endpoints, |_| {})?;
    Ok(matches!(traj.stop, StopReason::Boundary(_)).then(|| traj.final_time()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_and_distance() {
        let xi = ParticleSystem::new(4, vec![1.0, 1.0, 2.0, 9.0]).unwrap();
        assert_eq!(empirical_density(&xi, 3), vec![0.5, 0.25, 0.0]);
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0]), 0.5);
        assert_eq!(total_variation(&[0.2, 0.3], &[0.2, 0.3]), 0.0);
    }

    #[test]
    fn mf1_doubles() {
        let (law, init) = mf1(2.0).unwrap();
        let xi = state_at(&law, &init, Seed::new(1, 0), 1.0).unwrap();
        let x = xi.system().sizes[0];
        assert_eq!(x.log2().fract(), 0.0);
    }

    #[test]
    fn survival_matches_first_step_for_small_counts() {
        let (law, init) = shifted_half_fragmentation(1.0).unwrap();
        // One jump from 1 keeps 3/4 with probability 3/4.
        let kept = (0..4000)
            .filter(|&r| stays_above_half(&law, &init, 1, Seed::new(3, r)).unwrap())
            .count();
        let p = kept as f64 / 4000.0;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 4000.0).sqrt(), "{p}");
    }

    #[test]
    fn truncated_trace_drops() {
        let (law, init) = truncated_gel(50, 1e3).unwrap();
        let trace = mass_trace_until(&law, &init, Seed::new(2, 0), 3.0).unwrap();
        assert_eq!(trace[0], (0.0, 1.0));
        let first = massflow::first_drop_time(&trace);
        assert!(first.is_some());
        assert_eq!(first_removal_time(&law, &init, Seed::new(2, 0), 3.0).unwrap(), first);
    }
}
