//! Particle systems with cached per-particle rates.
//!
//! Every edit updates the efflux and fragmentation rates of the touched
//! particle and the coagulation row sums `R_i = Σ_j w(x_i, x_j)` of all
//! particles, in `O(N)`. Row sums are rebuilt from scratch every
//! [`REFRESH_EVERY`] edits and whenever an update cancels most of a sum.

use crate::jump::BoundaryEvent;
use crate::kernels::{CoagKernel, EffluxFn, FragLaw};
use crate::particles::{BoundaryGuards, ParticleSystem};

pub const REFRESH_EVERY: u64 = 1 << 16;

const CANCELLATION: f64 = 1e-9;

/// How the coagulation pair weight is formed from the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// `w(x, y) = K(x, y)` over pairs `i ≠ j`.
    Direct,
    /// `w(x, y) = K(x, y) / y` over all pairs, the diagonal included.
    MassFlow,
}

/// The rate-bearing ingredients a tracked system needs.
#[derive(Debug, Clone)]
pub struct Mechanisms {
    pub coag: Option<CoagKernel>,
    pub efflux: Option<EffluxFn>,
    pub frag: Option<FragLaw>,
    pub mode: PairMode,
}

impl Mechanisms {
    #[inline]
    pub fn pair(&self, x: f64, y: f64) -> f64 {
        let k = self.coag.as_ref().map_or(0.0, |k| k.eval(x, y));
        match self.mode {
            PairMode::Direct => k,
            PairMode::MassFlow => k / y,
        }
    }

    #[inline]
    fn efflux_rate(&self, x: f64) -> f64 {
        self.efflux.as_ref().map_or(0.0, |e| e.eval(x))
    }

    #[inline]
    fn frag_rate(&self, x: f64) -> f64 {
        self.frag.as_ref().map_or(0.0, |f| f.total_rate(x))
    }

    fn includes_diagonal(&self) -> bool {
        self.mode == PairMode::MassFlow
    }
}

#[derive(Debug)]
pub struct TrackedSystem {
    system: ParticleSystem,
    efflux: Vec<f64>,
    frag: Vec<f64>,
    rows: Vec<f64>,
    sum_efflux: f64,
    sum_frag: f64,
    sum_rows: f64,
    guards: BoundaryGuards,
    dust: usize,
    gel: usize,
    edits: u64,
    scratch: Vec<f64>,
}

impl Clone for TrackedSystem {
    fn clone(&self) -> Self {
        TrackedSystem {
            system: self.system.clone(),
            efflux: self.efflux.clone(),
            frag: self.frag.clone(),
            rows: self.rows.clone(),
            sum_efflux: self.sum_efflux,
            sum_frag: self.sum_frag,
            sum_rows: self.sum_rows,
            guards: self.guards,
            dust: self.dust,
            gel: self.gel,
            edits: self.edits,
            scratch: Vec::new(),
        }
    }
}

impl PartialEq for TrackedSystem {
    fn eq(&self, other: &Self) -> bool {
        self.system == other.system
    }
}

/// Index `k` with `Σ_{m<k} w_m ≤ target < Σ_{m≤k} w_m`; falls back to the last
/// positive weight when rounding pushes `target` past the end.
pub fn pick_index(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

impl TrackedSystem {
    pub fn new(system: ParticleSystem, mech: &Mechanisms, guards: BoundaryGuards) -> Self {
        let mut t = TrackedSystem {
            system,
            efflux: Vec::new(),
            frag: Vec::new(),
            rows: Vec::new(),
            sum_efflux: 0.0,
            sum_frag: 0.0,
            sum_rows: 0.0,
            guards,
            dust: 0,
            gel: 0,
            edits: 0,
            scratch: Vec::new(),
        };
        t.refresh(mech);
        t
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn into_system(self) -> ParticleSystem {
        self.system
    }

    pub fn sizes(&self) -> &[f64] {
        &self.system.sizes
    }

    pub fn len(&self) -> usize {
        self.system.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.sizes.is_empty()
    }

    pub fn n(&self) -> u64 {
        self.system.n
    }

    pub fn guards(&self) -> &BoundaryGuards {
        &self.guards
    }

    pub fn efflux_rates(&self) -> &[f64] {
        &self.efflux
    }

    pub fn frag_rates(&self) -> &[f64] {
        &self.frag
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.rows
    }

    pub fn sum_efflux(&self) -> f64 {
        self.sum_efflux
    }

    pub fn sum_frag(&self) -> f64 {
        self.sum_frag
    }

    /// `Σ_i R_i`.
    pub fn sum_rows(&self) -> f64 {
        self.sum_rows
    }

    /// Dust, gel or blowup in the current state.
    pub fn boundary(&self) -> Option<BoundaryEvent> {
        if self.len() > self.guards.n_max {
            Some(BoundaryEvent::Blowup)
        } else if self.dust > 0 {
            Some(BoundaryEvent::Dust)
        } else if self.gel > 0 {
            Some(BoundaryEvent::Gel)
        } else {
            None
        }
    }

    fn count_boundary(&mut self, x: f64, delta: isize) {
        match self.guards.size_event(x) {
            Some(BoundaryEvent::Dust) => self.dust = self.dust.wrapping_add_signed(delta),
            Some(BoundaryEvent::Gel) => self.gel = self.gel.wrapping_add_signed(delta),
            _ => {}
        }
    }

    fn row(&self, mech: &Mechanisms, i: usize) -> f64 {
        let x = self.system.sizes[i];
        let mut r = 0.0;
        for (j, &y) in self.system.sizes.iter().enumerate() {
            if j != i || mech.includes_diagonal() {
                r += mech.pair(x, y);
            }
        }
        r
    }

    /// Rebuilds every cached rate from the sizes.
    pub fn refresh(&mut self, mech: &Mechanisms) {
        let sizes = &self.system.sizes;
        self.efflux = sizes.iter().map(|&x| mech.efflux_rate(x)).collect();
        self.frag = sizes.iter().map(|&x| mech.frag_rate(x)).collect();
        self.sum_efflux = self.efflux.iter().sum();
        self.sum_frag = self.frag.iter().sum();
        if mech.coag.is_some() {
            self.rows = (0..sizes.len()).map(|i| self.row(mech, i)).collect();
            self.sum_rows = self.rows.iter().sum();
        } else {
            self.rows = vec![0.0; sizes.len()];
            self.sum_rows = 0.0;
        }
        self.dust = 0;
        self.gel = 0;
        for k in 0..self.system.sizes.len() {
            self.count_boundary(self.system.sizes[k], 1);
        }
    }

    fn after_edit(&mut self, mech: &Mechanisms) {
        self.edits += 1;
        if self.edits % REFRESH_EVERY == 0 {
            self.refresh(mech);
            return;
        }
        if mech.coag.is_some() {
            self.sum_rows = self.rows.iter().sum();
        }
    }

    /// `sum − old + new`, recomputed from `values` (already updated) when the
    /// subtraction cancels most of the sum.
    fn update_sum(sum: &mut f64, old: f64, new: f64, values: &[f64]) {
        let before = *sum;
        let after = before - old;
        *sum = if after < CANCELLATION * before {
            values.iter().sum()
        } else {
            after + new
        };
    }

    /// Adds `delta(k)` to every row `k ≠ skip`, recomputing rows that lose
    /// almost all of their value.
    fn shift_rows(&mut self, mech: &Mechanisms, skip: Option<usize>, old: Option<f64>, new: Option<f64>) {
        let mut redo = Vec::new();
        for k in 0..self.rows.len() {
            if Some(k) == skip {
                continue;
            }
            let xk = self.system.sizes[k];
            let minus = old.map_or(0.0, |x| mech.pair(xk, x));
            let plus = new.map_or(0.0, |x| mech.pair(xk, x));
            let before = self.rows[k];
            let after = before - minus + plus;
            if after < CANCELLATION * before.max(minus) {
                redo.push(k);
            }
            self.rows[k] = after.max(0.0);
        }
        for k in redo {
            self.rows[k] = self.row(mech, k);
        }
    }

    /// Appends a particle of size `x`.
    pub fn push(&mut self, mech: &Mechanisms, x: f64) {
        let e = mech.efflux_rate(x);
        let f = mech.frag_rate(x);
        self.efflux.push(e);
        self.frag.push(f);
        self.sum_efflux += e;
        self.sum_frag += f;
        if mech.coag.is_some() {
            self.shift_rows(mech, None, None, Some(x));
        }
        self.system.sizes.push(x);
        self.rows.push(0.0);
        if mech.coag.is_some() {
            let last = self.len() - 1;
            self.rows[last] = self.row(mech, last);
        }
        self.count_boundary(x, 1);
        self.after_edit(mech);
    }

    /// Removes particle `i`; the last particle takes its index.
    pub fn remove(&mut self, mech: &Mechanisms, i: usize) -> f64 {
        let x = self.system.sizes[i];
        let e = self.efflux.swap_remove(i);
        let f = self.frag.swap_remove(i);
        Self::update_sum(&mut self.sum_efflux, e, 0.0, &self.efflux);
        Self::update_sum(&mut self.sum_frag, f, 0.0, &self.frag);
        self.system.sizes.swap_remove(i);
        self.rows.swap_remove(i);
        if mech.coag.is_some() {
            self.shift_rows(mech, None, Some(x), None);
        }
        self.count_boundary(x, -1);
        self.after_edit(mech);
        x
    }

    /// Sets the size of particle `i` to `y`.
    pub fn replace(&mut self, mech: &Mechanisms, i: usize, y: f64) {
        let x = self.system.sizes[i];
        let e = mech.efflux_rate(y);
        let f = mech.frag_rate(y);
        let old_e = std::mem::replace(&mut self.efflux[i], e);
        Self::update_sum(&mut self.sum_efflux, old_e, e, &self.efflux);
        let old_f = std::mem::replace(&mut self.frag[i], f);
        Self::update_sum(&mut self.sum_frag, old_f, f, &self.frag);
        self.system.sizes[i] = y;
        if mech.coag.is_some() {
            self.shift_rows(mech, Some(i), Some(x), Some(y));
            self.rows[i] = self.row(mech, i);
        }
        self.count_boundary(x, -1);
        self.count_boundary(y, 1);
        self.after_edit(mech);
    }

    /// Partner `j` for a coagulation initiated by particle `i`, drawn
    /// proportionally to `w(x_i, x_j)` with a fresh sum.
    pub fn pick_partner(&mut self, mech: &Mechanisms, i: usize, u: f64) -> usize {
        let x = self.system.sizes[i];
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        let mut total = 0.0;
        for (j, &y) in self.system.sizes.iter().enumerate() {
            let w = if j == i && !mech.includes_diagonal() {
                0.0
            } else {
                mech.pair(x, y)
            };
            total += w;
            scratch.push(w);
        }
        let j = pick_index(&scratch, u * total);
        self.scratch = scratch;
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{multiplicative_kernel, uniform_binary, ScalarFn};
    use crate::rng::{uniform, Seed};
    use approx::assert_relative_eq;

    fn mech(mode: PairMode) -> Mechanisms {
        Mechanisms {
            coag: Some(multiplicative_kernel()),
            efflux: Some(ScalarFn::Constant(0.5)),
            frag: Some(uniform_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 })),
            mode,
        }
    }

    fn assert_consistent(t: &TrackedSystem, m: &Mechanisms) {
        let fresh = TrackedSystem::new(t.system().clone(), m, *t.guards());
        for (a, b) in t.row_sums().iter().zip(fresh.row_sums()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }
        assert_relative_eq!(t.sum_rows(), fresh.sum_rows(), max_relative = 1e-10);
        assert_relative_eq!(t.sum_frag(), fresh.sum_frag(), max_relative = 1e-10);
        assert_relative_eq!(t.sum_efflux(), fresh.sum_efflux(), max_relative = 1e-10, epsilon = 1e-12);
        assert_eq!(t.boundary(), fresh.boundary());
    }

    #[test]
    fn incremental_edits_match_rebuild() {
        for mode in [PairMode::Direct, PairMode::MassFlow] {
            let m = mech(mode);
            let sys = ParticleSystem::new(3, vec![1.0, 2.0, 0.5]).unwrap();
            let mut t = TrackedSystem::new(sys, &m, BoundaryGuards::default());
            let mut rng = Seed::from(4).streams().auxiliary();
            for step in 0..500 {
                let u = uniform(&mut rng);
                let x = 0.1 + 5.0 * uniform(&mut rng);
                match step % 3 {
                    0 => t.push(&m, x),
                    1 if t.len() > 1 => {
                        let i = (u * t.len() as f64) as usize;
                        t.remove(&m, i);
                    }
                    _ if !t.is_empty() => {
                        let i = (u * t.len() as f64) as usize;
                        t.replace(&m, i, x);
                    }
                    _ => {}
                }
                assert_consistent(&t, &m);
            }
        }
    }

    #[test]
    fn diagonal_convention() {
        let sys = ParticleSystem::new(1, vec![2.0]).unwrap();
        let direct = TrackedSystem::new(sys.clone(), &mech(PairMode::Direct), BoundaryGuards::default());
        assert_eq!(direct.sum_rows(), 0.0);
        let mf = TrackedSystem::new(sys, &mech(PairMode::MassFlow), BoundaryGuards::default());
        assert_eq!(mf.sum_rows(), 2.0);
    }

    #[test]
    fn boundary_counts_follow_edits() {
        let m = mech(PairMode::MassFlow);
        let guards = BoundaryGuards::new(0.1, 10.0, 3).unwrap();
        let sys = ParticleSystem::new(1, vec![1.0]).unwrap();
        let mut t = TrackedSystem::new(sys, &m, guards);
        t.replace(&m, 0, 20.0);
        assert_eq!(t.boundary(), Some(BoundaryEvent::Gel));
        t.replace(&m, 0, 2.0);
        assert_eq!(t.boundary(), None);
        t.push(&m, 0.01);
        assert_eq!(t.boundary(), Some(BoundaryEvent::Dust));
        t.remove(&m, 1);
        assert_eq!(t.boundary(), None);
        for _ in 0..3 {
            t.push(&m, 1.0);
        }
        assert_eq!(t.boundary(), Some(BoundaryEvent::Blowup));
    }

    #[test]
    fn pick_index_scans_cumulative_weights() {
        let w = [1.0, 0.0, 2.0];
        assert_eq!(pick_index(&w, 0.5), 0);
        assert_eq!(pick_index(&w, 1.0), 2);
        assert_eq!(pick_index(&w, 2.999), 2);
        assert_eq!(pick_index(&w, 3.5), 2);
    }

    #[test]
    fn large_cancellations_are_repaired() {
        let m = Mechanisms {
            coag: Some(multiplicative_kernel()),
            efflux: None,
            frag: None,
            mode: PairMode::Direct,
        };
        let sys = ParticleSystem::new(1, vec![1e-3, 2e-3, 1e12]).unwrap();
        let mut t = TrackedSystem::new(sys, &m, BoundaryGuards::default());
        t.remove(&m, 2);
        assert_consistent(&t, &m);
        assert_relative_eq!(t.sum_rows(), 2.0 * 2e-6, max_relative = 1e-12);
    }
}
