//! Minimal jump processes on an arbitrary state space.
//!
//! A [`ProcessLaw`] supplies the waiting time parameter `λ(ξ)` and a sampler
//! for the embedded chain. [`simulate_chain`] builds the embedded chain
//! `ζ_0, ζ_1, ...` together with the holding times `T_k / λ(ζ_k)`, and
//! [`classify`] turns a finite run into an [`ExplosionVerdict`]. The drift
//! functional `∫ [η(ξ₁) − η(ξ)] q(ξ, dξ₁)` is evaluated by [`drift`], exactly
//! when the law can enumerate its successor states and by Monte Carlo
//! otherwise.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{model, usage, Result};
use crate::rng::{uniform, Seed};
use crate::stats::{ls_slope, Accumulator};

/// One successor atom of the jump kernel at a fixed state.
pub enum Atom<'a, S> {
    /// A single successor state reached with the given rate.
    Exact { weight: f64, next: S },
    /// A group of successors with known total rate and a sampler for the
    /// normalized successor law.
    Sampled {
        weight: f64,
        sampler: Box<dyn Fn(&mut dyn RngCore) -> S + 'a>,
    },
}

impl<S> Atom<'_, S> {
    pub fn weight(&self) -> f64 {
        match self {
            Atom::Exact { weight, .. } | Atom::Sampled { weight, .. } => *weight,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Atom::Exact { .. })
    }
}

impl<S> fmt::Debug for Atom<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Exact { weight, .. } => write!(f, "Exact({weight})"),
            Atom::Sampled { weight, .. } => write!(f, "Sampled({weight})"),
        }
    }
}

/// The jump mechanism of a minimal jump process.
///
/// `rate(ξ) = 0` marks an absorbing state; the engine never calls `jump` there.
pub trait ProcessLaw {
    type State: Clone;
    type Event: Clone + fmt::Display;

    /// The waiting time parameter `λ(ξ)`.
    fn rate(&self, state: &Self::State) -> Result<f64>;

    /// Moves `state` to a successor distributed as `q(ξ, ·) / λ(ξ)` and returns
    /// a label describing the transition.
    fn jump(&self, state: &mut Self::State, rng: &mut dyn RngCore) -> Result<Self::Event>;

    fn sample_next(&self, state: &Self::State, rng: &mut dyn RngCore) -> Result<Self::State> {
        let mut next = state.clone();
        self.jump(&mut next, rng)?;
        Ok(next)
    }

    /// Decomposition of `q(ξ, ·)` into atoms whose weights sum to `λ(ξ)`,
    /// when the law can provide one.
    fn atoms<'a>(&'a self, _state: &'a Self::State) -> Option<Vec<Atom<'a, Self::State>>> {
        None
    }
}

/// The state left the interior of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryEvent {
    /// Some particle fell below the dust threshold.
    Dust,
    /// Some particle exceeded the gel threshold.
    Gel,
    /// The particle count exceeded its ceiling.
    Blowup,
}

impl fmt::Display for BoundaryEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryEvent::Dust => "dust",
            BoundaryEvent::Gel => "gel",
            BoundaryEvent::Blowup => "blowup",
        })
    }
}

pub type StateGuard<S> = Arc<dyn Fn(&S) -> Option<BoundaryEvent> + Send + Sync>;

/// Finite truncation of an infinite run.
pub struct StopRule<S> {
    pub max_jumps: u64,
    pub time_horizon: f64,
    pub rate_ceiling: f64,
    pub state_guard: Option<StateGuard<S>>,
}

pub const DEFAULT_MAX_JUMPS: u64 = 1_000_000;
pub const DEFAULT_RATE_CEILING: f64 = 1e12;
pub const DEFAULT_TAIL_WINDOW: usize = 64;
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

impl<S> StopRule<S> {
    pub fn new(max_jumps: u64, time_horizon: f64, rate_ceiling: f64) -> Result<Self> {
        let rule = StopRule {
            max_jumps,
            time_horizon,
            rate_ceiling,
            state_guard: None,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_guard(mut self, guard: StateGuard<S>) -> Self {
        self.state_guard = Some(guard);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_jumps < 1 {
            return Err(usage("max_jumps must be at least 1"));
        }
        if !(self.time_horizon > 0.0) {
            return Err(usage("time_horizon must be positive"));
        }
        if !(self.rate_ceiling > 0.0) {
            return Err(usage("rate_ceiling must be positive"));
        }
        Ok(())
    }
}

impl<S> Default for StopRule<S> {
    fn default() -> Self {
        StopRule {
            max_jumps: DEFAULT_MAX_JUMPS,
            time_horizon: f64::INFINITY,
            rate_ceiling: DEFAULT_RATE_CEILING,
            state_guard: None,
        }
    }
}

impl<S> Clone for StopRule<S> {
    fn clone(&self) -> Self {
        StopRule {
            max_jumps: self.max_jumps,
            time_horizon: self.time_horizon,
            rate_ceiling: self.rate_ceiling,
            state_guard: self.state_guard.clone(),
        }
    }
}

impl<S> fmt::Debug for StopRule<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StopRule")
            .field("max_jumps", &self.max_jumps)
            .field("time_horizon", &self.time_horizon)
            .field("rate_ceiling", &self.rate_ceiling)
            .field("state_guard", &self.state_guard.is_some())
            .finish()
    }
}

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "boundary")]
pub enum StopReason {
    Absorbed,
    MaxJumps,
    Horizon,
    RateCeiling,
    Boundary(BoundaryEvent),
}

/// Which states a trajectory keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Every state and event of the embedded chain.
    #[default]
    All,
    /// Only the initial and the final state.
    Endpoints,
}

/// A finite piece of the embedded chain with its holding times.
///
/// `rates`, `jump_times` and `inv_rate_partial_sums` have one entry per
/// visited state; `waits` has one entry per performed jump. With
/// [`Recording::All`] `states` holds every visited state and `events[k]` is the
/// transition from `states[k]` to `states[k + 1]`; with
/// [`Recording::Endpoints`] it holds the first and the last state only.
#[derive(Debug, Clone)]
pub struct Trajectory<S, E> {
    pub states: Vec<S>,
    pub events: Vec<E>,
    pub rates: Vec<f64>,
    pub waits: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub inv_rate_partial_sums: Vec<f64>,
    pub seed: Seed,
    pub stop: StopReason,
    pub recording: Recording,
}

impl<S, E> Trajectory<S, E> {
    pub fn jumps(&self) -> usize {
        self.waits.len()
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory holds at least one state")
    }

    pub fn terminal_rate(&self) -> f64 {
        *self.rates.last().expect("trajectory holds at least one rate")
    }

    pub fn final_time(&self) -> f64 {
        *self.jump_times.last().expect("trajectory holds at least one time")
    }

    /// `τ_l`, if the run got that far.
    pub fn time_at(&self, jumps: usize) -> Option<f64> {
        self.jump_times.get(jumps).copied()
    }
}

/// What the observer of [`simulate_chain_observed`] sees for every visited state.
pub struct Visit<'a, S, E> {
    pub index: usize,
    pub time: f64,
    pub rate: f64,
    /// The transition that led here; `None` for the initial state.
    pub event: Option<&'a E>,
    pub state: &'a S,
}

/// Simulates the embedded chain and holding times, recording every state.
pub fn simulate_chain<L: ProcessLaw>(
    law: &L,
    init: &L::State,
    seed: impl Into<Seed>,
    stop: &StopRule<L::State>,
) -> Result<Trajectory<L::State, L::Event>> {
    simulate_chain_observed(law, init, seed, stop, Recording::All, |_| {})
}

/// Simulates the chain, handing every visited state to `observer`.
///
/// The run halts at the first of: absorption (`λ = 0`), the state guard
/// firing, `λ > rate_ceiling`, `max_jumps` jumps performed, or the next jump
/// time exceeding `time_horizon`. The `k`-th holding time uses draw `k` of the
/// holding stream, so the result is a pure function of `(law, init, seed, stop)`.
pub fn simulate_chain_observed<L, F>(
    law: &L,
    init: &L::State,
    seed: impl Into<Seed>,
    stop: &StopRule<L::State>,
    recording: Recording,
    mut observer: F,
) -> Result<Trajectory<L::State, L::Event>>
where
    L: ProcessLaw,
    F: FnMut(Visit<'_, L::State, L::Event>),
{
    stop.validate()?;
    let seed = seed.into();
    let streams = seed.streams();
    let mut holding = streams.holding();
    let mut transition = streams.transition();

    let mut state = init.clone();
    let mut traj = Trajectory {
        states: Vec::new(),
        events: Vec::new(),
        rates: Vec::new(),
        waits: Vec::new(),
        jump_times: Vec::new(),
        inv_rate_partial_sums: Vec::new(),
        seed,
        stop: StopReason::MaxJumps,
        recording,
    };
    if recording == Recording::Endpoints {
        traj.states.push(state.clone());
    }

    let mut time = 0.0;
    let mut inv_sum = 0.0;
    let mut last_event: Option<L::Event> = None;
    let reason = loop {
        let index = traj.rates.len();
        let lambda = law.rate(&state)?;
        if !lambda.is_finite() {
            return Err(model(format!("non-finite rate {lambda} at jump {index}")));
        }
        if lambda < 0.0 {
            return Err(model(format!("negative rate {lambda} at jump {index}")));
        }
        traj.rates.push(lambda);
        traj.jump_times.push(time);
        traj.inv_rate_partial_sums.push(inv_sum);
        observer(Visit {
            index,
            time,
            rate: lambda,
            event: last_event.as_ref(),
            state: &state,
        });
        if recording == Recording::All {
            traj.states.push(state.clone());
        }

        if lambda == 0.0 {
            break StopReason::Absorbed;
        }
        if let Some(event) = stop.state_guard.as_ref().and_then(|g| g(&state)) {
            break StopReason::Boundary(event);
        }
        if lambda > stop.rate_ceiling {
            break StopReason::RateCeiling;
        }
        if index as u64 >= stop.max_jumps {
            break StopReason::MaxJumps;
        }
        let wait = holding.exponential() / lambda;
        if time + wait > stop.time_horizon {
            break StopReason::Horizon;
        }
        traj.waits.push(wait);
        time += wait;
        inv_sum += 1.0 / lambda;
        let event = law.jump(&mut state, &mut transition)?;
        if recording == Recording::All {
            traj.events.push(event.clone());
        }
        last_event = Some(event);
    };
    traj.stop = reason;
    if recording == Recording::Endpoints && traj.rates.len() > 1 {
        traj.states.push(state);
    }
    Ok(traj)
}

/// Verdict on a finite run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Exploded { tau_lower: f64, tau_estimate: f64 },
    Survived { t_final: f64 },
    Absorbed { t_final: f64 },
    Inconclusive { tau_lower: f64 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Exploded { .. } => "exploded",
            Verdict::Survived { .. } => "survived",
            Verdict::Absorbed { .. } => "absorbed",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_exploded(&self) -> bool {
        matches!(self, Verdict::Exploded { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplosionVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub terminal_rate: f64,
    pub jumps: usize,
    /// Least-squares slope of `ln λ` over the tail window, when it was fitted.
    pub tail_slope: Option<f64>,
    pub stop: StopReason,
}

/// Expected remaining time `Σ_{m≥0} 1/(λ e^{g m})` of a geometric rate tail.
fn geometric_tail(rate: f64, slope: f64) -> f64 {
    if slope > 0.0 {
        1.0 / (rate * -(-slope).exp_m1())
    } else {
        f64::INFINITY
    }
}

/// Classifies a finite run.
///
/// Ceiling and guard stops count as explosions; the geometric fit of `ln λ`
/// over the last `tail_window` rates only extrapolates the remaining time.
/// A horizon stop is `Survived` when the full window is available and the
/// extrapolated tail exceeds `tail_tol`; everything else is `Inconclusive`.
pub fn classify<S, E>(
    traj: &Trajectory<S, E>,
    stop: &StopRule<S>,
    tail_window: usize,
    tail_tol: f64,
) -> ExplosionVerdict {
    let terminal_rate = traj.terminal_rate();
    let tau = traj.final_time();
    let jumps = traj.jumps();
    let window = |w: usize| -> Vec<f64> {
        let start = traj.rates.len().saturating_sub(w);
        traj.rates[start..].iter().map(|r| r.ln()).collect()
    };
    let mut tail_slope = None;
    let verdict = match traj.stop {
        StopReason::Absorbed => Verdict::Absorbed { t_final: tau },
        StopReason::RateCeiling | StopReason::Boundary(_) => {
            let logs = window(tail_window.max(2));
            let extra = if logs.len() >= 2 && terminal_rate > 0.0 {
                let g = ls_slope(&logs);
                tail_slope = Some(g);
                if g > 0.0 {
                    geometric_tail(terminal_rate, g)
                } else {
                    1.0 / terminal_rate
                }
            } else if terminal_rate > 0.0 {
                1.0 / terminal_rate
            } else {
                0.0
            };
            Verdict::Exploded {
                tau_lower: tau,
                tau_estimate: tau + extra,
            }
        }
        StopReason::Horizon if tail_window >= 2 && traj.rates.len() >= tail_window => {
            let g = ls_slope(&window(tail_window));
            tail_slope = Some(g);
            if geometric_tail(terminal_rate, g) > tail_tol {
                Verdict::Survived {
                    t_final: stop.time_horizon,
                }
            } else {
                Verdict::Inconclusive { tau_lower: tau }
            }
        }
        StopReason::Horizon | StopReason::MaxJumps => Verdict::Inconclusive { tau_lower: tau },
    };
    ExplosionVerdict {
        verdict,
        terminal_rate,
        jumps,
        tail_slope,
        stop: traj.stop,
    }
}

/// A bounded test function `η` on the state space.
pub struct TestFunction<S> {
    name: String,
    bound: f64,
    eval: Arc<dyn Fn(&S) -> f64 + Send + Sync>,
}

impl<S> Clone for TestFunction<S> {
    fn clone(&self) -> Self {
        TestFunction {
            name: self.name.clone(),
            bound: self.bound,
            eval: self.eval.clone(),
        }
    }
}

impl<S> fmt::Debug for TestFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({}, |η| ≤ {})", self.name, self.bound)
    }
}

impl<S> TestFunction<S> {
    pub fn new(
        name: impl Into<String>,
        bound: f64,
        eval: impl Fn(&S) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(usage("test function bound must be positive and finite"));
        }
        Ok(TestFunction {
            name: name.into(),
            bound,
            eval: Arc::new(eval),
        })
    }

    pub fn constant(c: f64) -> Self {
        TestFunction {
            name: format!("constant({c})"),
            bound: c.abs().max(f64::MIN_POSITIVE),
            eval: Arc::new(move |_| c),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Evaluates `η`, rejecting values that break the declared bound.
    pub fn eval(&self, state: &S) -> Result<f64> {
        let v = (self.eval)(state);
        if !v.is_finite() || v.abs() > self.bound * (1.0 + 1e-12) {
            return Err(model(format!(
                "test function {} = {v} violates its bound {}",
                self.name, self.bound
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonMembership {
    pub epsilon: f64,
    pub member: bool,
}

/// Value of `∫ [η(ξ₁) − η(ξ)] q(ξ, dξ₁)` at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub estimate: f64,
    pub std_error: f64,
    pub exact: bool,
    pub epsilon_member: Vec<EpsilonMembership>,
}

impl DriftReport {
    fn with_epsilons(mut self, epsilons: &[f64]) -> Self {
        self.epsilon_member = epsilons
            .iter()
            .map(|&epsilon| EpsilonMembership {
                epsilon,
                member: in_trap_set(self.estimate, self.std_error, epsilon),
            })
            .collect();
        self
    }
}

/// `estimate − 2·se ≥ ε`, allowing for rounding in exact sums.
fn in_trap_set(estimate: f64, std_error: f64, epsilon: f64) -> bool {
    let slack = 1e-12 * estimate.abs().max(epsilon.abs());
    estimate - 2.0 * std_error >= epsilon - slack
}

/// Checks that atom weights sum to `λ(ξ)`; the relative tolerance is `rel_tol`.
pub fn check_atom_weights<S>(atoms: &[Atom<'_, S>], rate: f64, rel_tol: f64) -> Result<()> {
    let total: f64 = atoms.iter().map(Atom::weight).sum();
    if (total - rate).abs() > rel_tol * rate.abs().max(f64::MIN_POSITIVE) {
        return Err(model(format!(
            "atom weights sum to {total}, rate is {rate}"
        )));
    }
    Ok(())
}

/// The drift of `η` at `state`.
///
/// Exact atoms are summed exactly; every sampled atom contributes
/// `weight · mean[η(next) − η(ξ)]` over `mc_samples` draws from the dedicated
/// drift stream. Laws without atoms fall back to `λ(ξ) · mean[η(next) − η(ξ)]`.
pub fn drift<L: ProcessLaw>(
    law: &L,
    state: &L::State,
    eta: &TestFunction<L::State>,
    mc_samples: usize,
    seed: impl Into<Seed>,
    epsilons: &[f64],
) -> Result<DriftReport> {
    let lambda = checked_rate(law, state)?;
    if lambda == 0.0 {
        return Ok(DriftReport {
            estimate: 0.0,
            std_error: 0.0,
            exact: true,
            epsilon_member: Vec::new(),
        }
        .with_epsilons(epsilons));
    }
    let here = eta.eval(state)?;
    let Some(atoms) = law.atoms(state) else {
        return drift_monte_carlo(law, state, eta, mc_samples, seed, epsilons);
    };
    check_atom_weights(&atoms, lambda, 1e-9)?;
    let exact = atoms.iter().all(Atom::is_exact);
    if !exact && mc_samples == 0 {
        return Err(usage("mc_samples must be at least 1 for sampled atoms"));
    }
    let mut rng = seed.into().streams().drift();
    let mut estimate = 0.0;
    let mut variance = 0.0;
    for atom in &atoms {
        match atom {
            Atom::Exact { weight, next } => {
                if *weight > 0.0 {
                    estimate += weight * (eta.eval(next)? - here);
                }
            }
            Atom::Sampled { weight, sampler } => {
                if *weight == 0.0 {
                    continue;
                }
                let mut acc = Accumulator::default();
                for _ in 0..mc_samples {
                    acc.push(eta.eval(&sampler(&mut rng))? - here);
                }
                let est = acc.estimate();
                estimate += weight * est.mean;
                variance += (weight * est.std_error).powi(2);
            }
        }
    }
    Ok(DriftReport {
        estimate,
        std_error: variance.sqrt(),
        exact,
        epsilon_member: Vec::new(),
    }
    .with_epsilons(epsilons))
}

/// Plain Monte Carlo drift `λ(ξ) · mean[η(next) − η(ξ)]`, ignoring atoms.
pub fn drift_monte_carlo<L: ProcessLaw>(
    law: &L,
    state: &L::State,
    eta: &TestFunction<L::State>,
    mc_samples: usize,
    seed: impl Into<Seed>,
    epsilons: &[f64],
) -> Result<DriftReport> {
    let lambda = checked_rate(law, state)?;
    if lambda == 0.0 {
        return Ok(DriftReport {
            estimate: 0.0,
            std_error: 0.0,
            exact: true,
            epsilon_member: Vec::new(),
        }
        .with_epsilons(epsilons));
    }
    if mc_samples == 0 {
        return Err(usage("mc_samples must be at least 1"));
    }
    let here = eta.eval(state)?;
    let mut rng = seed.into().streams().drift();
    let mut acc = Accumulator::default();
    for _ in 0..mc_samples {
        let next = law.sample_next(state, &mut rng)?;
        acc.push(eta.eval(&next)? - here);
    }
    let est = acc.estimate();
    Ok(DriftReport {
        estimate: lambda * est.mean,
        std_error: lambda * est.std_error,
        exact: false,
        epsilon_member: Vec::new(),
    }
    .with_epsilons(epsilons))
}

fn checked_rate<L: ProcessLaw>(law: &L, state: &L::State) -> Result<f64> {
    let lambda = law.rate(state)?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(model(format!("invalid rate {lambda}")));
    }
    Ok(lambda)
}

/// For each probed state, whether it lies in the trap set `E_ε(η)`.
///
/// This audits finitely many states; it certifies nothing about infinite
/// trajectory tails.
pub fn check_region_criterion<L: ProcessLaw>(
    law: &L,
    states: &[L::State],
    eta: &TestFunction<L::State>,
    epsilon: f64,
    mc_samples: usize,
    seed: impl Into<Seed>,
) -> Result<Vec<bool>> {
    if !(epsilon > 0.0) {
        return Err(usage("epsilon must be positive"));
    }
    let seed = seed.into();
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sub = Seed::new(seed.base, seed.replicate.wrapping_add(i as u64));
            let report = drift(law, s, eta, mc_samples, sub, &[epsilon])?;
            Ok(report.epsilon_member[0].member)
        })
        .collect()
}

/// `W_n = Σ_{k<n} [E(η(ζ_{k+1}) | ζ_k) − η(ζ_k)] − η(ζ_n)` along a recorded run.
///
/// The conditional expectations are `η(ζ_k) + drift(ζ_k) / λ(ζ_k)`.
pub fn martingale_statistic<L: ProcessLaw>(
    traj: &Trajectory<L::State, L::Event>,
    law: &L,
    eta: &TestFunction<L::State>,
    mc_samples: usize,
    seed: impl Into<Seed>,
) -> Result<Vec<f64>> {
    if traj.recording != Recording::All {
        return Err(usage("martingale statistic needs a fully recorded trajectory"));
    }
    let Some(first) = traj.states.first() else {
        return Err(usage("empty trajectory"));
    };
    let seed = seed.into();
    let mut w = -eta.eval(first)?;
    let mut out = Vec::with_capacity(traj.states.len());
    out.push(w);
    for k in 0..traj.jumps() {
        let state = &traj.states[k];
        let lambda = traj.rates[k];
        let sub = Seed::new(seed.base, seed.replicate.wrapping_add(k as u64));
        let d = drift(law, state, eta, mc_samples, sub, &[])?;
        let conditional = eta.eval(state)? + d.estimate / lambda;
        w += conditional - eta.eval(&traj.states[k + 1])?;
        out.push(w);
    }
    Ok(out)
}

/// Pure birth process on `{1, 2, ...}`: `q(ξ, ·) = λ(ξ) δ_{ξ+1}`.
pub struct PureBirth {
    rate_fn: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

pub fn pure_birth_law(rate_fn: impl Fn(u64) -> f64 + Send + Sync + 'static) -> PureBirth {
    PureBirth {
        rate_fn: Arc::new(rate_fn),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Birth;

impl fmt::Display for Birth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("birth")
    }
}

impl ProcessLaw for PureBirth {
    type State = u64;
    type Event = Birth;

    fn rate(&self, state: &u64) -> Result<f64> {
        if *state == 0 {
            return Err(model("pure birth states start at 1"));
        }
        let r = (self.rate_fn)(*state);
        if !(r > 0.0 && r.is_finite()) {
            return Err(model(format!("pure birth rate λ({state}) = {r} is not positive")));
        }
        Ok(r)
    }

    fn jump(&self, state: &mut u64, _rng: &mut dyn RngCore) -> Result<Birth> {
        *state += 1;
        Ok(Birth)
    }

    fn atoms<'a>(&'a self, state: &'a u64) -> Option<Vec<Atom<'a, u64>>> {
        let weight = self.rate(state).ok()?;
        Some(vec![Atom::Exact {
            weight,
            next: state + 1,
        }])
    }
}

/// Successor rule of a one-dimensional law on `[1, ∞)`.
pub enum OneDimStep {
    Deterministic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Random(Arc<dyn Fn(f64, &mut dyn RngCore) -> f64 + Send + Sync>),
}

/// Arbitrary jump dynamics on `E = [1, ∞)`.
pub struct OneDim {
    rate_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    step: OneDimStep,
}

pub fn one_dim_law(rate_fn: impl Fn(f64) -> f64 + Send + Sync + 'static, step: OneDimStep) -> OneDim {
    OneDim {
        rate_fn: Arc::new(rate_fn),
        step,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step(pub f64);

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step({})", self.0)
    }
}

impl OneDim {
    fn check(&self, x: f64) -> Result<()> {
        if !(x >= 1.0) || !x.is_finite() {
            return Err(model(format!("state {x} outside [1, ∞)")));
        }
        Ok(())
    }

    fn next(&self, x: f64, rng: &mut dyn RngCore) -> f64 {
        match &self.step {
            OneDimStep::Deterministic(f) => f(x),
            OneDimStep::Random(f) => f(x, rng),
        }
    }
}

impl ProcessLaw for OneDim {
    type State = f64;
    type Event = Step;

    fn rate(&self, state: &f64) -> Result<f64> {
        self.check(*state)?;
        Ok((self.rate_fn)(*state))
    }

    fn jump(&self, state: &mut f64, rng: &mut dyn RngCore) -> Result<Step> {
        let next = self.next(*state, rng);
        self.check(next)?;
        *state = next;
        Ok(Step(next))
    }

    fn atoms<'a>(&'a self, state: &'a f64) -> Option<Vec<Atom<'a, f64>>> {
        let weight = self.rate(state).ok()?;
        let x = *state;
        Some(vec![match &self.step {
            OneDimStep::Deterministic(f) => Atom::Exact { weight, next: f(x) },
            OneDimStep::Random(f) => Atom::Sampled {
                weight,
                sampler: Box::new(move |rng| f(x, rng)),
            },
        }])
    }
}

/// `η(ξ) = −ξ^{−α}` on `[1, ∞)`.
pub fn inverse_power_eta(alpha: f64) -> TestFunction<f64> {
    TestFunction {
        name: format!("-x^-{alpha}"),
        bound: 1.0,
        eval: Arc::new(move |x: &f64| -x.powf(-alpha)),
    }
}

/// A uniform draw on `[lo, hi)`, convenient for one-dimensional samplers.
pub fn uniform_between(rng: &mut dyn RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}
