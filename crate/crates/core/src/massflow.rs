//! The mass flow process: mass-weighted source, efflux, size-replacing
//! fragmentation and one-sided coagulation with rate `K_sym(x_i, x_j)/x_j`.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::direct::pick_category;
use crate::error::{usage, Result};
use crate::jump::{Atom, BoundaryEvent, ProcessLaw, StopRule, Trajectory, Visit};
use crate::kernels::{sym_coag, CoagKernel, EffluxFn, MassFlowFragLaw, SourceTerm};
use crate::particles::{BoundaryGuards, ParticleSystem};
use crate::rng::{uniform, Seed};
use crate::stats::{Accumulator, MeanEstimate};
use crate::tracked::{pick_index, Mechanisms, PairMode, TrackedSystem};

/// Mechanisms of a mass flow model.
#[derive(Debug, Clone)]
pub struct MassFlowConfig {
    pub n: u64,
    pub coag: Option<CoagKernel>,
    pub mf_frag: Option<MassFlowFragLaw>,
    pub source: Option<SourceTerm>,
    pub efflux: Option<EffluxFn>,
    pub guards: BoundaryGuards,
    /// Remove particles that cross a guard instead of stopping.
    pub truncate: bool,
}

impl MassFlowConfig {
    pub fn new(n: u64) -> Self {
        MassFlowConfig {
            n,
            coag: None,
            mf_frag: None,
            source: None,
            efflux: None,
            guards: BoundaryGuards::default(),
            truncate: false,
        }
    }

    pub fn with_coag(mut self, k: CoagKernel) -> Self {
        self.coag = Some(k);
        self
    }

    pub fn with_frag(mut self, f: MassFlowFragLaw) -> Self {
        self.mf_frag = Some(f);
        self
    }

    pub fn with_source(mut self, s: SourceTerm) -> Self {
        self.source = Some(s);
        self
    }

    pub fn with_efflux(mut self, e: EffluxFn) -> Self {
        self.efflux = Some(e);
        self
    }

    pub fn with_guards(mut self, g: BoundaryGuards) -> Self {
        self.guards = g;
        self
    }

    pub fn truncating(mut self) -> Self {
        self.truncate = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(usage("n must be positive"));
        }
        if self.coag.is_none() && self.mf_frag.is_none() && self.source.is_none() && self.efflux.is_none() {
            return Err(usage("model needs at least one mechanism"));
        }
        if let Some(k) = &self.coag {
            k.validate()?;
        }
        if let Some(s) = &self.source {
            s.validate()?;
            if !s.first_moment().is_finite() {
                return Err(usage("mass flow source needs a finite first moment"));
            }
        }
        self.guards.validate()
    }
}

/// One transition of the mass flow chain; indices refer to the state before the jump.
#[derive(Debug, Clone, PartialEq)]
pub enum MassFlowEvent {
    Source(f64),
    Efflux(usize),
    Frag(usize, f64),
    Coag(usize, usize),
    /// An event after which a particle crossing a guard was removed.
    Truncated(Box<MassFlowEvent>, BoundaryEvent),
}

impl fmt::Display for MassFlowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassFlowEvent::Source(x) => write!(f, "source({x})"),
            MassFlowEvent::Efflux(i) => write!(f, "efflux({i})"),
            MassFlowEvent::Frag(i, y) => write!(f, "frag({i};{y})"),
            MassFlowEvent::Coag(i, j) => write!(f, "coag({i},{j})"),
            MassFlowEvent::Truncated(e, b) => write!(f, "{e}+{b}"),
        }
    }
}

/// A particle system together with the rate caches of a [`MassFlowLaw`].
#[derive(Debug, Clone, PartialEq)]
pub struct MassFlowState(TrackedSystem);

impl MassFlowState {
    pub fn system(&self) -> &ParticleSystem {
        self.0.system()
    }

    pub fn tracked(&self) -> &TrackedSystem {
        &self.0
    }
}

impl AsRef<ParticleSystem> for MassFlowState {
    fn as_ref(&self) -> &ParticleSystem {
        self.system()
    }
}

/// The mass flow jump kernel.
#[derive(Debug, Clone)]
pub struct MassFlowLaw {
    n: u64,
    mech: Mechanisms,
    mf_frag: Option<MassFlowFragLaw>,
    source: Option<SourceTerm>,
    guards: BoundaryGuards,
    truncate: bool,
}

pub fn build_law(cfg: &MassFlowConfig) -> Result<MassFlowLaw> {
    cfg.validate()?;
    Ok(MassFlowLaw {
        n: cfg.n,
        mech: Mechanisms {
            coag: cfg.coag.as_ref().map(sym_coag),
            efflux: cfg.efflux.clone(),
            frag: cfg.mf_frag.as_ref().map(|m| m.base().clone()),
            mode: PairMode::MassFlow,
        },
        mf_frag: cfg.mf_frag.clone(),
        source: cfg.source.clone(),
        guards: cfg.guards,
        truncate: cfg.truncate,
    })
}

/// `λ̃(ξ)` computed from scratch.
pub fn total_rate(xi: &ParticleSystem, cfg: &MassFlowConfig) -> Result<f64> {
    let law = build_law(cfg)?;
    law.rate(&law.state(xi.clone())?)
}

/// Draws one event at `xi`.
pub fn sample_event(xi: &ParticleSystem, cfg: &MassFlowConfig, rng: &mut dyn RngCore) -> Result<MassFlowEvent> {
    let law = build_law(cfg)?;
    let mut state = law.state(xi.clone())?;
    law.sample_event(&mut state, rng)
}

impl MassFlowLaw {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mechanisms(&self) -> &Mechanisms {
        &self.mech
    }

    pub fn state(&self, xi: ParticleSystem) -> Result<MassFlowState> {
        if xi.n != self.n {
            return Err(usage(format!("state has n = {}, model has n = {}", xi.n, self.n)));
        }
        Ok(MassFlowState(TrackedSystem::new(xi, &self.mech, self.guards)))
    }

    /// A stop rule whose state guard reports dust, gel and blowup.
    pub fn stop_rule(&self, max_jumps: u64, time_horizon: f64, rate_ceiling: f64) -> Result<StopRule<MassFlowState>> {
        Ok(StopRule::new(max_jumps, time_horizon, rate_ceiling)?
            .with_guard(Arc::new(|s: &MassFlowState| s.0.boundary())))
    }

    fn weights(&self, t: &TrackedSystem) -> [f64; 4] {
        let n = self.n as f64;
        [
            self.source.as_ref().map_or(0.0, |s| n * s.first_moment()),
            t.sum_efflux(),
            t.sum_frag(),
            t.sum_rows() / n,
        ]
    }

    pub fn sample_event(&self, state: &mut MassFlowState, rng: &mut dyn RngCore) -> Result<MassFlowEvent> {
        let w = self.weights(&state.0);
        let total: f64 = w.iter().sum();
        let (category, rest) = pick_category(&w, uniform(rng) * total);
        let t = &mut state.0;
        Ok(match category {
            0 => MassFlowEvent::Source(self.source.as_ref().expect("source").sample_mass_biased(rng)?),
            1 => MassFlowEvent::Efflux(pick_index(t.efflux_rates(), rest)),
            2 => {
                let i = pick_index(t.frag_rates(), rest);
                let mf = self.mf_frag.as_ref().expect("fragmentation law");
                MassFlowEvent::Frag(i, mf.sample_next(t.sizes()[i], rng)?)
            }
            _ => {
                let i = pick_index(t.row_sums(), rest * self.n as f64);
                MassFlowEvent::Coag(i, t.pick_partner(&self.mech, i, uniform(rng)))
            }
        })
    }

    /// Applies `event`; in truncation mode removes any particle that crossed a
    /// size guard and reports it.
    pub fn apply_event(&self, state: &mut MassFlowState, event: &MassFlowEvent) -> Option<BoundaryEvent> {
        let t = &mut state.0;
        match event {
            MassFlowEvent::Source(x) => t.push(&self.mech, *x),
            MassFlowEvent::Efflux(i) => {
                t.remove(&self.mech, *i);
            }
            MassFlowEvent::Frag(i, y) => t.replace(&self.mech, *i, *y),
            MassFlowEvent::Coag(i, j) => {
                let grown = t.sizes()[*i] + t.sizes()[*j];
                t.replace(&self.mech, *i, grown);
            }
            MassFlowEvent::Truncated(inner, _) => return self.apply_event(state, inner),
        }
        if !self.truncate {
            return None;
        }
        let mut removed = None;
        while let Some(kind @ (BoundaryEvent::Dust | BoundaryEvent::Gel)) = t.boundary() {
            let guards = *t.guards();
            let k = t
                .sizes()
                .iter()
                .position(|&x| guards.size_event(x).is_some())
                .expect("a particle outside the guards");
            t.remove(&self.mech, k);
            removed = Some(kind);
        }
        removed
    }

    fn after(&self, state: &MassFlowState, event: MassFlowEvent) -> MassFlowState {
        let mut next = state.clone();
        self.apply_event(&mut next, &event);
        next
    }

    /// The finite-`n` generator applied to `η(ξ) = (1/n) Σ ψ(x_i)`, term by term.
    pub fn generator_apply(
        &self,
        xi: &ParticleSystem,
        psi: impl Fn(f64) -> f64,
        samples: usize,
        seed: impl Into<Seed>,
    ) -> Result<MeanEstimate> {
        let n = self.n as f64;
        let sizes = &xi.sizes;
        let mut rng = seed.into().streams().drift();
        let mut mean = 0.0;
        let mut var = 0.0;
        if let Some(s) = &self.source {
            if let SourceTerm::Point { x, total } = s {
                mean += total * x * psi(*x);
            } else {
                let mut acc = Accumulator::default();
                for _ in 0..samples.max(1) {
                    acc.push(psi(s.sample_mass_biased(&mut rng)?));
                }
                let est = acc.estimate();
                mean += s.first_moment() * est.mean;
                var += (s.first_moment() * est.std_error).powi(2);
            }
        }
        if let Some(e) = &self.mech.efflux {
            mean -= sizes.iter().map(|&x| e.eval(x) * psi(x)).sum::<f64>() / n;
        }
        if let Some(mf) = &self.mf_frag {
            for &x in sizes {
                let rate = mf.total_rate(x);
                if rate == 0.0 {
                    continue;
                }
                if let Some(atoms) = mf.next_size_atoms(x)? {
                    let e: f64 = atoms.iter().map(|&(y, p)| p * psi(y)).sum();
                    mean += rate * (e - psi(x)) / n;
                    continue;
                }
                let mut acc = Accumulator::default();
                for _ in 0..samples.max(1) {
                    acc.push(psi(mf.sample_next(x, &mut rng)?) - psi(x));
                }
                let est = acc.estimate();
                mean += rate * est.mean / n;
                var += (rate * est.std_error / n).powi(2);
            }
        }
        if let Some(k) = &self.mech.coag {
            let mut sum = 0.0;
            for &x in sizes {
                for &y in sizes {
                    sum += k.eval(x, y) / y * (psi(x + y) - psi(x));
                }
            }
            mean += sum / (n * n);
        }
        Ok(MeanEstimate {
            mean,
            std_error: var.sqrt(),
            count: samples,
        })
    }
}

impl ProcessLaw for MassFlowLaw {
    type State = MassFlowState;
    type Event = MassFlowEvent;

    fn rate(&self, state: &MassFlowState) -> Result<f64> {
        Ok(self.weights(&state.0).iter().sum())
    }

    fn jump(&self, state: &mut MassFlowState, rng: &mut dyn RngCore) -> Result<MassFlowEvent> {
        let event = self.sample_event(state, rng)?;
        Ok(match self.apply_event(state, &event) {
            Some(kind) => MassFlowEvent::Truncated(Box::new(event), kind),
            None => event,
        })
    }

    fn atoms<'a>(&'a self, state: &'a MassFlowState) -> Option<Vec<Atom<'a, MassFlowState>>> {
        let t = &state.0;
        let sizes = t.sizes();
        let n = self.n as f64;
        let mut atoms = Vec::new();
        if let Some(s) = &self.source {
            let weight = n * s.first_moment();
            if let SourceTerm::Point { x, .. } = s {
                atoms.push(Atom::Exact {
                    weight,
                    next: self.after(state, MassFlowEvent::Source(*x)),
                });
            } else {
                atoms.push(Atom::Sampled {
                    weight,
                    sampler: Box::new(move |rng| {
                        let x = s.sample_mass_biased(rng).expect("mass-biased source draw");
                        self.after(state, MassFlowEvent::Source(x))
                    }),
                });
            }
        }
        for (i, &weight) in t.efflux_rates().iter().enumerate() {
            atoms.push(Atom::Exact {
                weight,
                next: self.after(state, MassFlowEvent::Efflux(i)),
            });
        }
        if let Some(mf) = &self.mf_frag {
            for (i, &weight) in t.frag_rates().iter().enumerate() {
                let x = sizes[i];
                match mf.next_size_atoms(x) {
                    Ok(Some(next)) => {
                        for (y, p) in next {
                            atoms.push(Atom::Exact {
                                weight: weight * p,
                                next: self.after(state, MassFlowEvent::Frag(i, y)),
                            });
                        }
                    }
                    Ok(None) => atoms.push(Atom::Sampled {
                        weight,
                        sampler: Box::new(move |rng| {
                            let y = mf.sample_next(x, rng).expect("valid fragmentation law");
                            self.after(state, MassFlowEvent::Frag(i, y))
                        }),
                    }),
                    Err(_) => return None,
                }
            }
        }
        if let Some(k) = &self.mech.coag {
            for (i, &x) in sizes.iter().enumerate() {
                for (j, &y) in sizes.iter().enumerate() {
                    atoms.push(Atom::Exact {
                        weight: k.eval(x, y) / y / n,
                        next: self.after(state, MassFlowEvent::Coag(i, j)),
                    });
                }
            }
        }
        Some(atoms)
    }
}

/// `(t, N/n)` at the start, at every change of `N`, and at the end of a run.
pub fn mass_trace(traj: &Trajectory<MassFlowState, MassFlowEvent>) -> Result<Vec<(f64, f64)>> {
    if traj.states.len() != traj.rates.len() {
        return Err(usage("mass trace needs a fully recorded trajectory"));
    }
    let mut rec = MassTrace::default();
    for (k, s) in traj.states.iter().enumerate() {
        rec.record(traj.jump_times[k], s.system());
    }
    Ok(rec.finish())
}

/// Incremental mass trace, fed from a simulation observer.
#[derive(Debug, Clone, Default)]
pub struct MassTrace {
    points: Vec<(f64, f64)>,
    last: Option<(f64, f64)>,
}

impl MassTrace {
    pub fn record(&mut self, t: f64, xi: &ParticleSystem) {
        let level = xi.len() as f64 / xi.n as f64;
        if self.points.last().map_or(true, |p| p.1 != level) {
            self.points.push((t, level));
            self.last = None;
        } else {
            self.last = Some((t, level));
        }
    }

    pub fn observe<E>(&mut self, visit: &Visit<'_, MassFlowState, E>) {
        self.record(visit.time, visit.state.system());
    }

    pub fn finish(mut self) -> Vec<(f64, f64)> {
        if let Some(p) = self.last {
            self.points.push(p);
        }
        self.points
    }
}

/// First time the normalized count drops below its initial level.
pub fn first_drop_time(trace: &[(f64, f64)]) -> Option<f64> {
    let start = trace.first()?.1;
    trace.iter().find(|p| p.1 < start).map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::{check_atom_weights, simulate_chain, StopReason};
    use crate::kernels::{
        deterministic_binary, massflow_from_frag, multiplicative_kernel, product_power_kernel, uniform_binary,
        Kappa, ScalarFn,
    };
    use approx::assert_relative_eq;

    fn sys(n: u64, sizes: &[f64]) -> ParticleSystem {
        ParticleSystem::new(n, sizes.to_vec()).unwrap()
    }

    #[test]
    fn mf1_rates_are_powers_of_two() {
        let cfg = MassFlowConfig::new(1).with_coag(product_power_kernel(1.0));
        for k in 0..20 {
            let x = 2f64.powi(k);
            assert_eq!(total_rate(&sys(1, &[x]), &cfg).unwrap(), x);
        }
    }

    #[test]
    fn mf2_rate_formula() {
        let cfg = MassFlowConfig::new(2).with_coag(product_power_kernel(0.75));
        let k = |x: f64, y: f64| (x * y).powf(0.75);
        let (x, y) = (1.5, 4.0);
        let expected = 0.5 * (k(x, x) / x + k(y, y) / y + k(x, y) / y + k(x, y) / x);
        assert_relative_eq!(total_rate(&sys(2, &[x, y]), &cfg).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn pure_frag_rate_matches_direct_rate() {
        let law = deterministic_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 }, Kappa::ShiftedHalf);
        let mf = MassFlowConfig::new(1).with_frag(massflow_from_frag(law.clone()));
        let direct = crate::direct::DirectConfig::new(1).with_frag(law);
        for x in [0.3, 1.0, 7.5] {
            let a = total_rate(&sys(1, &[x, 2.0 * x]), &mf).unwrap();
            let b = crate::direct::total_rate(&sys(1, &[x, 2.0 * x]), &direct).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(total_rate(&sys(1, &[2.0]), &mf).unwrap(), 0.25);
    }

    #[test]
    fn single_particle_doubles() {
        let law = build_law(&MassFlowConfig::new(1).with_coag(multiplicative_kernel())).unwrap();
        let init = law.state(sys(1, &[1.0])).unwrap();
        let traj = simulate_chain(&law, &init, 3, &law.stop_rule(10, f64::INFINITY, 1e12).unwrap()).unwrap();
        for (k, s) in traj.states.iter().enumerate() {
            assert_eq!(s.system().sizes, vec![2f64.powi(k as i32)]);
        }
        assert!(traj.events.iter().all(|e| *e == MassFlowEvent::Coag(0, 0)));
    }

    #[test]
    fn halving_chain_is_deterministic() {
        let frag = deterministic_binary(ScalarFn::NegLog { a: 1.0, b: 1.0 }, Kappa::Half);
        let law = build_law(&MassFlowConfig::new(1).with_frag(massflow_from_frag(frag))).unwrap();
        let init = law.state(sys(1, &[1.0])).unwrap();
        let traj = simulate_chain(&law, &init, 1, &law.stop_rule(30, f64::INFINITY, 1e12).unwrap()).unwrap();
        for (k, s) in traj.states.iter().enumerate() {
            assert_eq!(s.system().sizes, vec![2f64.powi(-(k as i32))]);
            assert_relative_eq!(traj.rates[k], (k as f64 * 2f64.ln() + 1.0) / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn shifted_half_next_size() {
        let frag = deterministic_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 }, Kappa::ShiftedHalf);
        let law = build_law(&MassFlowConfig::new(1).with_frag(massflow_from_frag(frag))).unwrap();
        let mut rng = Seed::from(8).streams().transition();
        let trials = 20_000;
        let big = (0..trials)
            .filter(|_| {
                let mut s = law.state(sys(1, &[1.0])).unwrap();
                law.jump(&mut s, &mut rng).unwrap();
                s.system().sizes[0] == 0.75
            })
            .count() as f64
            / trials as f64;
        assert!((big - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / trials as f64).sqrt() + 1e-3);
    }

    #[test]
    fn mf2_pairs_are_uniform_for_equal_sizes() {
        let law = build_law(&MassFlowConfig::new(2).with_coag(multiplicative_kernel())).unwrap();
        let mut rng = Seed::from(2).streams().transition();
        let mut counts = [0usize; 4];
        let trials = 10_000;
        for _ in 0..trials {
            let mut s = law.state(sys(2, &[1.0, 1.0])).unwrap();
            match law.sample_event(&mut s, &mut rng).unwrap() {
                MassFlowEvent::Coag(i, j) => counts[2 * i + j] += 1,
                e => panic!("{e:?}"),
            }
        }
        let se = (0.25f64 * 0.75 / trials as f64).sqrt();
        for c in counts {
            assert!((c as f64 / trials as f64 - 0.25).abs() < 3.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn fibonacci_path_is_reachable() {
        let law = build_law(&MassFlowConfig::new(2).with_coag(multiplicative_kernel())).unwrap();
        let s0 = law.state(sys(2, &[1.0, 1.0])).unwrap();
        let s1 = law.atoms(&s0).unwrap().into_iter().filter_map(|a| match a {
            Atom::Exact { next, .. } => Some(next),
            _ => None,
        });
        let reached = s1
            .flat_map(|s| {
                let states: Vec<_> = law
                    .atoms(&s)
                    .unwrap()
                    .into_iter()
                    .filter_map(|a| match a {
                        Atom::Exact { next, .. } => Some(next.system().sizes.clone()),
                        _ => None,
                    })
                    .collect();
                states
            })
            .any(|sizes| sizes == vec![3.0, 2.0]);
        assert!(reached);
    }

    #[test]
    fn atoms_sum_to_rate() {
        let cfg = MassFlowConfig::new(3)
            .with_coag(CoagKernel::Monomial { c: 2.0, a: 1.5, b: 0.25 })
            .with_frag(massflow_from_frag(uniform_binary(ScalarFn::Affine { a: 1.0, b: 2.0 })))
            .with_source(crate::kernels::point_source(2.0, 0.5))
            .with_efflux(ScalarFn::Constant(0.1));
        let law = build_law(&cfg).unwrap();
        let s = law.state(sys(3, &[0.5, 1.5, 4.0])).unwrap();
        let atoms = law.atoms(&s).unwrap();
        assert_eq!(atoms.len(), 1 + 3 + 3 + 9);
        check_atom_weights(&atoms, law.rate(&s).unwrap(), 1e-12).unwrap();
    }

    #[test]
    fn particle_count_is_invariant_without_source_or_efflux() {
        let cfg = MassFlowConfig::new(4)
            .with_coag(multiplicative_kernel())
            .with_frag(massflow_from_frag(uniform_binary(ScalarFn::Constant(3.0))));
        let law = build_law(&cfg).unwrap();
        let init = law.state(sys(4, &[1.0, 2.0, 3.0])).unwrap();
        let traj = simulate_chain(&law, &init, 6, &law.stop_rule(500, f64::INFINITY, 1e12).unwrap()).unwrap();
        assert!(traj.states.iter().all(|s| s.system().len() == 3));
        let trace = mass_trace(&traj).unwrap();
        assert!(trace.iter().all(|p| p.1 == 0.75));
    }

    #[test]
    fn efflux_steps_the_trace_down() {
        let law = build_law(&MassFlowConfig::new(4).with_efflux(ScalarFn::Constant(1.0))).unwrap();
        let init = law.state(sys(4, &[1.0; 4])).unwrap();
        let traj = simulate_chain(&law, &init, 1, &law.stop_rule(100, f64::INFINITY, 1e12).unwrap()).unwrap();
        assert_eq!(traj.stop, StopReason::Absorbed);
        let levels: Vec<f64> = mass_trace(&traj).unwrap().iter().map(|p| p.1).collect();
        assert_eq!(levels, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn truncation_removes_gel_particles() {
        let cfg = MassFlowConfig::new(2)
            .with_coag(multiplicative_kernel())
            .with_guards(BoundaryGuards::new(1e-3, 10.0, 100).unwrap())
            .truncating();
        let law = build_law(&cfg).unwrap();
        let init = law.state(sys(2, &[1.0, 1.0])).unwrap();
        let traj = simulate_chain(&law, &init, 5, &law.stop_rule(1000, f64::INFINITY, 1e12).unwrap()).unwrap();
        assert_eq!(traj.stop, StopReason::Absorbed);
        assert!(traj.events.iter().any(|e| matches!(e, MassFlowEvent::Truncated(_, BoundaryEvent::Gel))));
        let trace = mass_trace(&traj).unwrap();
        assert_eq!(trace.last().unwrap().1, 0.0);
        assert!(first_drop_time(&trace).is_some());
    }

    #[test]
    fn generator_identities() {
        let cfg = MassFlowConfig::new(2).with_coag(multiplicative_kernel());
        let law = build_law(&cfg).unwrap();
        let xi = sys(2, &[1.0, 3.0]);
        assert_eq!(law.generator_apply(&xi, |_| 1.0, 1, 0).unwrap().mean, 0.0);
    }
}
