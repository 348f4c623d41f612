//! Reference computations used to validate the simulators: truncated
//! coagulation ODEs and closed forms for the worked examples.

use crate::error::{usage, Error, Result};
use crate::kernels::{CoagKernel, Kappa};

/// Densities on sizes `1..=xmax` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDensities {
    pub xmax: usize,
    /// `c[x - 1]` is the density of size `x`.
    pub c: Vec<f64>,
    pub t: f64,
    /// Mass (for number densities) or total density (for mass densities)
    /// lost to products larger than `xmax`.
    pub truncation_flux: f64,
}

impl TruncatedDensities {
    pub fn density(&self, x: usize) -> f64 {
        if x == 0 || x > self.xmax {
            0.0
        } else {
            self.c[x - 1]
        }
    }

    /// `Σ φ(x) c(x)`.
    pub fn pair_with(&self, phi: impl Fn(usize) -> f64) -> f64 {
        self.c.iter().enumerate().map(|(k, c)| phi(k + 1) * c).sum()
    }
}

/// Coagulation equation right-hand sides on a finite size range.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Form {
    Number,
    Mass,
}

struct Rhs {
    form: Form,
    /// `table[(x-1)*xmax + (y-1)]`, the gain/loss weight of pair `(x, y)`.
    table: Vec<f64>,
    xmax: usize,
}

impl Rhs {
    fn new(k: &CoagKernel, xmax: usize, form: Form) -> Result<Self> {
        let mut table = vec![0.0; xmax * xmax];
        for x in 1..=xmax {
            for y in 1..=xmax {
                let v = k.eval(x as f64, y as f64);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(usage(format!("kernel value K({x}, {y}) = {v} is not admissible")));
                }
                table[(x - 1) * xmax + (y - 1)] = match form {
                    Form::Number => v,
                    Form::Mass => v / y as f64,
                };
            }
        }
        Ok(Rhs { form, table, xmax })
    }

    #[inline]
    fn w(&self, x: usize, y: usize) -> f64 {
        self.table[(x - 1) * self.xmax + (y - 1)]
    }

    fn eval(&self, c: &[f64], out: &mut [f64]) {
        let m = self.xmax;
        let gain_factor = match self.form {
            Form::Number => 0.5,
            Form::Mass => 1.0,
        };
        for x in 1..=m {
            let mut gain = 0.0;
            for y in 1..x {
                gain += self.w(x - y, y) * c[x - y - 1] * c[y - 1];
            }
            let mut loss = 0.0;
            for y in 1..=m {
                loss += self.w(x, y) * c[y - 1];
            }
            out[x - 1] = gain_factor * gain - loss * c[x - 1];
        }
    }
}

fn weight(form: Form, x: usize) -> f64 {
    match form {
        Form::Number => x as f64,
        Form::Mass => 1.0,
    }
}

fn integrate(k: &CoagKernel, c0: &[f64], xmax: usize, t: f64, dt: f64, form: Form) -> Result<TruncatedDensities> {
    if xmax == 0 {
        return Err(usage("xmax must be positive"));
    }
    if c0.len() != xmax {
        return Err(usage(format!("initial densities have length {}, xmax is {xmax}", c0.len())));
    }
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(usage("need dt > 0 and t >= 0"));
    }
    if c0.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(usage("initial densities must be nonnegative"));
    }
    let rhs = Rhs::new(k, xmax, form)?;
    let conserved = |c: &[f64]| -> f64 { c.iter().enumerate().map(|(i, v)| weight(form, i + 1) * v).sum() };
    let start = conserved(c0);
    let mut c = c0.to_vec();
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut k1 = vec![0.0; xmax];
    let mut k2 = vec![0.0; xmax];
    let mut k3 = vec![0.0; xmax];
    let mut k4 = vec![0.0; xmax];
    let mut tmp = vec![0.0; xmax];
    for step in 0..steps {
        rhs.eval(&c, &mut k1);
        for i in 0..xmax {
            tmp[i] = c[i] + 0.5 * h * k1[i];
        }
        rhs.eval(&tmp, &mut k2);
        for i in 0..xmax {
            tmp[i] = c[i] + 0.5 * h * k2[i];
        }
        rhs.eval(&tmp, &mut k3);
        for i in 0..xmax {
            tmp[i] = c[i] + h * k3[i];
        }
        rhs.eval(&tmp, &mut k4);
        for i in 0..xmax {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if c[i] < -1e-9 || !c[i].is_finite() {
                return Err(Error::StepSize(format!(
                    "density of size {} became {} at t = {}",
                    i + 1,
                    c[i],
                    (step + 1) as f64 * h
                )));
            }
        }
    }
    let flux = start - conserved(&c);
    Ok(TruncatedDensities {
        xmax,
        c,
        t,
        truncation_flux: flux,
    })
}

/// Fixed-step RK4 integration of the truncated Smoluchowski equation for the
/// number density `c(t, x)`; products beyond `xmax` are dropped.
pub fn smoluchowski_ode(k: &CoagKernel, c0: &[f64], xmax: usize, t: f64, dt: f64) -> Result<TruncatedDensities> {
    integrate(k, c0, xmax, t, dt, Form::Number)
}

/// Fixed-step RK4 integration of the truncated mass flow equation for the
/// mass density `c̃(t, x) = x c(t, x)`.
pub fn massflow_ode(k: &CoagKernel, c0: &[f64], xmax: usize, t: f64, dt: f64) -> Result<TruncatedDensities> {
    integrate(k, c0, xmax, t, dt, Form::Mass)
}

/// `δ_1` on sizes `1..=xmax`.
pub fn monodisperse_unit(xmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; xmax];
    if xmax > 0 {
        c[0] = 1.0;
    }
    c
}

/// Number density for `K = 2` from `δ_1`: `t^{k−1} / (1 + t)^{k+1}`.
pub fn constant_kernel_density(t: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    t.powi(k as i32 - 1) / (1.0 + t).powi(k as i32 + 1)
}

/// Blow-up time `1/m₂(0)` of the second moment for `K = xy`.
pub fn gel_time_multiplicative(m2_0: f64) -> Result<f64> {
    if !(m2_0 > 0.0 && m2_0.is_finite()) {
        return Err(Error::Domain(format!("second moment {m2_0} must be positive")));
    }
    Ok(1.0 / m2_0)
}

/// `E τ_∞ = Σ_k 2^{−k(α−1)}` for the doubling chain with homogeneous kernel.
pub fn mf1_expected_explosion_time(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::Divergent(format!("Σ 2^(-k(α-1)) diverges for α = {alpha}")));
    }
    Ok(1.0 / (1.0 - 2f64.powf(1.0 - alpha)))
}

fn check_shifted_half_start(x0: f64) -> Result<()> {
    if !(x0 > 0.5 && x0.is_finite()) {
        return Err(Error::Domain(format!("starting size {x0} must exceed 1/2")));
    }
    Ok(())
}

/// `1/(2 x₀)`: probability of never reaching `(0, 1/2]` along the
/// slowest-decrease path of the shifted-half split.
pub fn shifted_half_nonexplosion_prob(x0: f64) -> Result<f64> {
    check_shifted_half_start(x0)?;
    Ok(1.0 / (2.0 * x0))
}

/// `η_k = (2 x₀ + 2^k − 1) / 2^{k+1}`, the sizes along the slowest-decrease path.
pub fn shifted_half_slowest_path(x0: f64, k: u32) -> Result<f64> {
    check_shifted_half_start(x0)?;
    let p = 2f64.powi(k as i32);
    Ok((2.0 * x0 + p - 1.0) / (2.0 * p))
}

/// Exact probability that the size chain never enters `(0, 1/2]`.
///
/// From `x ≤ 3/2` only the larger fragment stays above `1/2`, so the chain
/// survives with probability `1/(2x)`; above `3/2` both branches can survive
/// and the recursion `p(x) = (κ/x) p(κ) + ((x−κ)/x) p(x−κ)` is unfolded.
pub fn shifted_half_survival_prob_exact(x0: f64) -> Result<f64> {
    check_shifted_half_start(x0)?;
    fn p(x: f64) -> f64 {
        if x <= 0.5 {
            0.0
        } else if x <= 1.5 {
            1.0 / (2.0 * x)
        } else {
            let k = Kappa::ShiftedHalf.eval(x);
            k / x * p(k) + (x - k) / x * p(x - k)
        }
    }
    Ok(p(x0))
}

/// `(k ln 2 + 1) / 2`, the waiting time parameter after `k` halvings.
pub fn halving_rate(k: u64) -> f64 {
    (k as f64 * std::f64::consts::LN_2 + 1.0) / 2.0
}

/// `Σ_{k<J} 1/λ_k`, the expected time of the `J`-th jump.
pub fn halving_expected_tau(jumps: u64) -> f64 {
    (0..jumps).map(|k| 1.0 / halving_rate(k)).sum()
}

/// The `k`-th pair of `(1,1) → (1,2) → (3,2) → (3,5) → (8,5) → ...`.
pub fn fibonacci_path(k: u32) -> (u64, u64) {
    let (mut x, mut y) = (1u64, 1u64);
    for step in 0..k {
        if step % 2 == 0 {
            y += x;
        } else {
            x += y;
        }
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{constant_kernel, multiplicative_kernel};
    use approx::assert_relative_eq;

    #[test]
    fn constant_kernel_closed_form_matches_integrator() {
        let xmax = 200;
        let sol = smoluchowski_ode(&constant_kernel(2.0), &monodisperse_unit(xmax), xmax, 1.0, 1e-3).unwrap();
        assert_relative_eq!(constant_kernel_density(1.0, 1), 0.25);
        for k in 1..=60 {
            assert!((sol.density(k) - constant_kernel_density(1.0, k)).abs() < 1e-9, "k = {k}");
            assert_relative_eq!(constant_kernel_density(1.0, k), 2f64.powi(-(k as i32 + 1)), max_relative = 1e-14);
        }
        let mass: f64 = sol.pair_with(|x| x as f64);
        assert!((mass - 1.0).abs() < 1e-6);
        assert!(sol.truncation_flux.abs() < 1e-6);
    }

    #[test]
    fn zero_time_returns_initial_data() {
        let c0 = vec![0.5, 0.25, 0.0];
        let k = constant_kernel(2.0);
        assert_eq!(smoluchowski_ode(&k, &c0, 3, 0.0, 1e-3).unwrap().c, c0);
        assert_eq!(massflow_ode(&k, &c0, 3, 0.0, 1e-3).unwrap().c, c0);
    }

    #[test]
    fn massflow_density_is_mass_weighted_number_density() {
        let xmax = 200;
        let k = constant_kernel(2.0);
        let c = smoluchowski_ode(&k, &monodisperse_unit(xmax), xmax, 1.0, 1e-3).unwrap();
        let m = massflow_ode(&k, &monodisperse_unit(xmax), xmax, 1.0, 1e-3).unwrap();
        for x in 1..=xmax {
            assert!((m.density(x) - x as f64 * c.density(x)).abs() <= 1e-6);
        }
        let total: f64 = m.c.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn halving_the_step_changes_little() {
        let xmax = 60;
        let k = multiplicative_kernel();
        let c0 = monodisperse_unit(xmax);
        let a = smoluchowski_ode(&k, &c0, xmax, 0.5, 1e-2).unwrap();
        let b = smoluchowski_ode(&k, &c0, xmax, 0.5, 5e-3).unwrap();
        for x in 1..=xmax {
            assert!((a.density(x) - b.density(x)).abs() <= 1e-8);
        }
        let a = massflow_ode(&k, &c0, xmax, 0.5, 1e-2).unwrap();
        let b = massflow_ode(&k, &c0, xmax, 0.5, 5e-3).unwrap();
        for x in 1..=xmax {
            assert!((a.density(x) - b.density(x)).abs() <= 1e-8);
        }
    }

    #[test]
    fn oversized_steps_are_reported() {
        let c0 = vec![100.0, 0.0, 0.0];
        let err = smoluchowski_ode(&constant_kernel(2.0), &c0, 3, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::StepSize(_)));
    }

    #[test]
    fn gel_time() {
        assert_eq!(gel_time_multiplicative(1.0).unwrap(), 1.0);
        assert_eq!(gel_time_multiplicative(2.0).unwrap(), 0.5);
        assert!(gel_time_multiplicative(0.0).is_err());
        // Euler steps of m' = m² from m = 1 pass any bound shortly after t = 1.
        let (mut m, mut t) = (1.0f64, 0.0);
        while m < 1e6 {
            m += 1e-5 * m * m;
            t += 1e-5;
        }
        assert!(t > 0.99 && t < 1.05, "{t}");
    }

    #[test]
    fn mf1_explosion_time() {
        assert_eq!(mf1_expected_explosion_time(2.0).unwrap(), 2.0);
        assert_relative_eq!(mf1_expected_explosion_time(3.0).unwrap(), 4.0 / 3.0);
        assert!(matches!(mf1_expected_explosion_time(1.0), Err(Error::Divergent(_))));
        let partial: f64 = (0..200).map(|k| 2f64.powi(-k)).sum();
        assert_relative_eq!(partial, 2.0);
    }

    #[test]
    fn shifted_half_path() {
        assert_eq!(shifted_half_nonexplosion_prob(1.0).unwrap(), 0.5);
        assert_eq!(shifted_half_nonexplosion_prob(2.0).unwrap(), 0.25);
        assert!(shifted_half_nonexplosion_prob(0.5).is_err());
        let eta: Vec<f64> = (0..4).map(|k| shifted_half_slowest_path(1.0, k).unwrap()).collect();
        assert_eq!(eta, vec![1.0, 0.75, 0.625, 0.5625]);
        for k in 0..=20 {
            let a = shifted_half_slowest_path(1.0, k).unwrap();
            let b = shifted_half_slowest_path(1.0, k + 1).unwrap();
            assert_relative_eq!(Kappa::ShiftedHalf.eval(a), b, max_relative = 1e-15);
        }
        // Product of the slowest path's branch probabilities.
        let prod: f64 = (0..40)
            .map(|k| {
                let x = shifted_half_slowest_path(1.3, k).unwrap();
                Kappa::ShiftedHalf.eval(x) / x
            })
            .product();
        assert_relative_eq!(prod, shifted_half_slowest_path(1.3, 40).unwrap() / 1.3, max_relative = 1e-12);
        assert_relative_eq!(prod, 1.0 / 2.6, max_relative = 1e-11);
    }

    #[test]
    fn shifted_half_exact_survival() {
        for x0 in [0.6, 1.0, 1.5] {
            assert_relative_eq!(shifted_half_survival_prob_exact(x0).unwrap(), 1.0 / (2.0 * x0));
        }
        assert_relative_eq!(shifted_half_survival_prob_exact(2.0).unwrap(), 0.5);
    }

    #[test]
    fn halving_rates() {
        assert_eq!(halving_rate(0), 0.5);
        let h = |j: u64| (1..=j).map(|k| 1.0 / k as f64).sum::<f64>();
        let diff = |j: u64| halving_expected_tau(j) - 2.0 / std::f64::consts::LN_2 * h(j);
        // The difference to the harmonic growth settles to a constant.
        assert!((diff(4000) - diff(2000)).abs() < 1e-2);
        assert!(halving_expected_tau(10_000) > halving_expected_tau(1000) + 5.0);
    }

    #[test]
    fn fibonacci_pairs() {
        let path: Vec<_> = (0..6).map(fibonacci_path).collect();
        assert_eq!(path, vec![(1, 1), (1, 2), (3, 2), (3, 5), (8, 5), (8, 13)]);
        for k in 2..=40 {
            let (x, y) = fibonacci_path(k);
            let (px, py) = fibonacci_path(k - 1);
            assert_eq!(x + y, px + py + px.max(py));
        }
    }
}
