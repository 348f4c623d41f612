//! The direct simulation process: source, efflux, multiple fragmentation and
//! pairwise coagulation acting on a [`ParticleSystem`].

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{model, usage, Result};
use crate::jump::{Atom, ProcessLaw, StopRule};
use crate::kernels::{CoagKernel, EffluxFn, FragLaw, SourceTerm};
use crate::particles::{BoundaryGuards, ParticleSystem};
use crate::rng::{uniform, Seed};
use crate::stats::{Accumulator, MeanEstimate};
use crate::tracked::{pick_index, Mechanisms, PairMode, TrackedSystem};

/// Mechanisms of a direct simulation model.
#[derive(Debug, Clone)]
pub struct DirectConfig {
    pub n: u64,
    pub coag: Option<CoagKernel>,
    pub frag: Option<FragLaw>,
    pub source: Option<SourceTerm>,
    pub efflux: Option<EffluxFn>,
    pub guards: BoundaryGuards,
}

impl DirectConfig {
    pub fn new(n: u64) -> Self {
        DirectConfig {
            n,
            coag: None,
            frag: None,
            source: None,
            efflux: None,
            guards: BoundaryGuards::default(),
        }
    }

    pub fn with_coag(mut self, k: CoagKernel) -> Self {
        self.coag = Some(k);
        self
    }

    pub fn with_frag(mut self, f: FragLaw) -> Self {
        self.frag = Some(f);
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

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(usage("n must be positive"));
        }
        if self.coag.is_none() && self.frag.is_none() && self.source.is_none() && self.efflux.is_none() {
            return Err(usage("model needs at least one mechanism"));
        }
        if let Some(k) = &self.coag {
            k.validate()?;
        }
        if let Some(s) = &self.source {
            s.validate()?;
        }
        self.guards.validate()
    }
}

/// One transition of the direct simulation chain; indices refer to the
/// state before the jump.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectEvent {
    Source(f64),
    Efflux(usize),
    Frag(usize, Vec<f64>),
    Coag(usize, usize),
}

impl fmt::Display for DirectEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectEvent::Source(x) => write!(f, "source({x})"),
            DirectEvent::Efflux(i) => write!(f, "efflux({i})"),
            DirectEvent::Frag(i, z) => {
                write!(f, "frag({i};")?;
                for (k, v) in z.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            DirectEvent::Coag(i, j) => write!(f, "coag({i},{j})"),
        }
    }
}

/// A particle system together with the rate caches of a [`DirectLaw`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectState(TrackedSystem);

impl DirectState {
    pub fn system(&self) -> &ParticleSystem {
        self.0.system()
    }

    pub fn tracked(&self) -> &TrackedSystem {
        &self.0
    }
}

impl AsRef<ParticleSystem> for DirectState {
    fn as_ref(&self) -> &ParticleSystem {
        self.system()
    }
}

/// The direct simulation jump kernel.
#[derive(Debug, Clone)]
pub struct DirectLaw {
    n: u64,
    mech: Mechanisms,
    source: Option<SourceTerm>,
    guards: BoundaryGuards,
}

pub fn build_law(cfg: &DirectConfig) -> Result<DirectLaw> {
    cfg.validate()?;
    Ok(DirectLaw {
        n: cfg.n,
        mech: Mechanisms {
            coag: cfg.coag.clone(),
            efflux: cfg.efflux.clone(),
            frag: cfg.frag.clone(),
            mode: PairMode::Direct,
        },
        source: cfg.source.clone(),
        guards: cfg.guards,
    })
}

/// `λ(ξ)` computed from scratch.
pub fn total_rate(xi: &ParticleSystem, cfg: &DirectConfig) -> Result<f64> {
    let law = build_law(cfg)?;
    law.rate(&law.state(xi.clone())?)
}

/// Draws one event at `xi`.
pub fn sample_event(xi: &ParticleSystem, cfg: &DirectConfig, rng: &mut dyn RngCore) -> Result<DirectEvent> {
    let law = build_law(cfg)?;
    let mut state = law.state(xi.clone())?;
    law.sample_event(&mut state, rng)
}

/// Picks a category by cumulative weight; returns it with the residual.
pub(crate) fn pick_category(weights: &[f64; 4], target: f64) -> (usize, f64) {
    let mut rest = target;
    for (k, &w) in weights.iter().enumerate() {
        if rest < w {
            return (k, rest);
        }
        rest -= w;
    }
    let k = weights.iter().rposition(|&w| w > 0.0).unwrap_or(3);
    (k, weights[k] * (1.0 - f64::EPSILON))
}

impl DirectLaw {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mechanisms(&self) -> &Mechanisms {
        &self.mech
    }

    pub fn guards(&self) -> &BoundaryGuards {
        &self.guards
    }

    pub fn state(&self, xi: ParticleSystem) -> Result<DirectState> {
        if xi.n != self.n {
            return Err(usage(format!("state has n = {}, model has n = {}", xi.n, self.n)));
        }
        Ok(DirectState(TrackedSystem::new(xi, &self.mech, self.guards)))
    }

    /// A stop rule whose state guard reports dust, gel and blowup.
    pub fn stop_rule(&self, max_jumps: u64, time_horizon: f64, rate_ceiling: f64) -> Result<StopRule<DirectState>> {
        Ok(StopRule::new(max_jumps, time_horizon, rate_ceiling)?
            .with_guard(Arc::new(|s: &DirectState| s.0.boundary())))
    }

    fn weights(&self, t: &TrackedSystem) -> [f64; 4] {
        let n = self.n as f64;
        [
            self.source.as_ref().map_or(0.0, |s| n * s.total()),
            t.sum_efflux(),
            t.sum_frag(),
            t.sum_rows() / (2.0 * n),
        ]
    }

    pub fn sample_event(&self, state: &mut DirectState, rng: &mut dyn RngCore) -> Result<DirectEvent> {
        let w = self.weights(&state.0);
        let total: f64 = w.iter().sum();
        let (category, rest) = pick_category(&w, uniform(rng) * total);
        let t = &mut state.0;
        Ok(match category {
            0 => DirectEvent::Source(self.source.as_ref().expect("source").sample(rng)),
            1 => DirectEvent::Efflux(pick_index(t.efflux_rates(), rest)),
            2 => {
                let i = pick_index(t.frag_rates(), rest);
                let frag = self.mech.frag.as_ref().expect("fragmentation law");
                DirectEvent::Frag(i, frag.sample_fragments(t.sizes()[i], rng)?)
            }
            _ => {
                let i = pick_index(t.row_sums(), rest * 2.0 * self.n as f64);
                let j = t.pick_partner(&self.mech, i, uniform(rng));
                if i == j {
                    return Err(model("coagulation partner coincides with initiator"));
                }
                DirectEvent::Coag(i, j)
            }
        })
    }

    pub fn apply_event(&self, state: &mut DirectState, event: &DirectEvent) {
        let t = &mut state.0;
        match event {
            DirectEvent::Source(x) => t.push(&self.mech, *x),
            DirectEvent::Efflux(i) => {
                t.remove(&self.mech, *i);
            }
            DirectEvent::Frag(i, z) => {
                t.replace(&self.mech, *i, z[0]);
                for &y in &z[1..] {
                    t.push(&self.mech, y);
                }
            }
            DirectEvent::Coag(i, j) => {
                let merged = t.sizes()[*i] + t.sizes()[*j];
                t.replace(&self.mech, *i, merged);
                t.remove(&self.mech, *j);
            }
        }
    }

    fn after(&self, state: &DirectState, event: DirectEvent) -> DirectState {
        let mut next = state.clone();
        self.apply_event(&mut next, &event);
        next
    }

    /// The finite-`n` generator applied to `η(ξ) = (1/n) Σ φ(x_i)`, term by term.
    ///
    /// Source and fragmentation terms are Monte Carlo averages over `samples`
    /// draws unless their law is a point mass.
    pub fn generator_apply(
        &self,
        xi: &ParticleSystem,
        phi: impl Fn(f64) -> f64,
        samples: usize,
        seed: impl Into<Seed>,
    ) -> Result<MeanEstimate> {
        let n = self.n as f64;
        let sizes = &xi.sizes;
        let mut rng = seed.into().streams().drift();
        let mut mean = 0.0;
        let mut var = 0.0;
        if let Some(s) = &self.source {
            if let crate::kernels::SourceTerm::Point { x, total } = s {
                mean += total * phi(*x);
            } else {
                let acc: Accumulator = (0..samples.max(1)).map(|_| phi(s.sample(&mut rng))).collect();
                let est = acc.estimate();
                mean += s.total() * est.mean;
                var += (s.total() * est.std_error).powi(2);
            }
        }
        if let Some(e) = &self.mech.efflux {
            mean -= sizes.iter().map(|&x| e.eval(x) * phi(x)).sum::<f64>() / n;
        }
        if let Some(f) = &self.mech.frag {
            for &x in sizes {
                let rate = f.total_rate(x);
                if rate == 0.0 {
                    continue;
                }
                if let Some(k) = f.kappa(x)? {
                    mean += rate * (phi(k) + phi(x - k) - phi(x)) / n;
                    continue;
                }
                let mut acc = Accumulator::default();
                for _ in 0..samples.max(1) {
                    let z = f.sample_fragments(x, &mut rng)?;
                    acc.push(z.iter().map(|&y| phi(y)).sum::<f64>() - phi(x));
                }
                let est = acc.estimate();
                mean += rate * est.mean / n;
                var += (rate * est.std_error / n).powi(2);
            }
        }
        if let Some(k) = &self.mech.coag {
            let mut sum = 0.0;
            for (i, &x) in sizes.iter().enumerate() {
                for (j, &y) in sizes.iter().enumerate() {
                    if i != j {
                        sum += k.eval(x, y) * (phi(x + y) - phi(x) - phi(y));
                    }
                }
            }
            mean += sum / (2.0 * n * n);
        }
        Ok(MeanEstimate {
            mean,
            std_error: var.sqrt(),
            count: samples,
        })
    }
}

impl ProcessLaw for DirectLaw {
    type State = DirectState;
    type Event = DirectEvent;

    fn rate(&self, state: &DirectState) -> Result<f64> {
        Ok(self.weights(&state.0).iter().sum())
    }

    fn jump(&self, state: &mut DirectState, rng: &mut dyn RngCore) -> Result<DirectEvent> {
        let event = self.sample_event(state, rng)?;
        self.apply_event(state, &event);
        Ok(event)
    }

    fn atoms<'a>(&'a self, state: &'a DirectState) -> Option<Vec<Atom<'a, DirectState>>> {
        let t = &state.0;
        let sizes = t.sizes();
        let n = self.n as f64;
        let mut atoms = Vec::new();
        if let Some(s) = &self.source {
            let weight = n * s.total();
            if let SourceTerm::Point { x, .. } = s {
                atoms.push(Atom::Exact {
                    weight,
                    next: self.after(state, DirectEvent::Source(*x)),
                });
            } else {
                atoms.push(Atom::Sampled {
                    weight,
                    sampler: Box::new(move |rng| self.after(state, DirectEvent::Source(s.sample(rng)))),
                });
            }
        }
        for (i, &weight) in t.efflux_rates().iter().enumerate() {
            atoms.push(Atom::Exact {
                weight,
                next: self.after(state, DirectEvent::Efflux(i)),
            });
        }
        if let Some(f) = &self.mech.frag {
            for (i, &weight) in t.frag_rates().iter().enumerate() {
                let x = sizes[i];
                match f.kappa(x) {
                    Ok(Some(k)) => atoms.push(Atom::Exact {
                        weight,
                        next: self.after(state, DirectEvent::Frag(i, vec![k, x - k])),
                    }),
                    Ok(None) => atoms.push(Atom::Sampled {
                        weight,
                        sampler: Box::new(move |rng| {
                            let z = f.sample_fragments(x, rng).expect("valid fragmentation law");
                            self.after(state, DirectEvent::Frag(i, z))
                        }),
                    }),
                    Err(_) => return None,
                }
            }
        }
        if let Some(k) = &self.mech.coag {
            for (i, &x) in sizes.iter().enumerate() {
                for (j, &y) in sizes.iter().enumerate() {
                    if i != j {
                        atoms.push(Atom::Exact {
                            weight: k.eval(x, y) / (2.0 * n),
                            next: self.after(state, DirectEvent::Coag(i, j)),
                        });
                    }
                }
            }
        }
        Some(atoms)
    }
}
