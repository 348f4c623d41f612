//! Coagulation kernels, fragmentation laws, sources and efflux.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{model, usage, Error, Result};
use crate::rng::{open_uniform, uniform, Seed};
use crate::stats::{Accumulator, MeanEstimate};

type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type SizeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coagulation kernel `K(x, y)`.
#[derive(Clone)]
pub enum CoagKernel {
    Constant(f64),
    /// `x + y`
    Additive,
    /// `x y`
    Multiplicative,
    /// `(x y)^β`
    ProductPower { beta: f64 },
    /// `c x^a y^b`
    Monomial { c: f64, a: f64, b: f64 },
    /// `½[K(x, y) + K(y, x)]`
    Symmetrized(Box<CoagKernel>),
    Custom {
        name: String,
        eval: PairFn,
        homogeneity: Option<f64>,
    },
}

impl fmt::Debug for CoagKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoagKernel::Constant(c) => write!(f, "Constant({c})"),
            CoagKernel::Additive => f.write_str("Additive"),
            CoagKernel::Multiplicative => f.write_str("Multiplicative"),
            CoagKernel::ProductPower { beta } => write!(f, "ProductPower({beta})"),
            CoagKernel::Monomial { c, a, b } => write!(f, "Monomial({c}, {a}, {b})"),
            CoagKernel::Symmetrized(k) => write!(f, "Symmetrized({k:?})"),
            CoagKernel::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl CoagKernel {
    pub fn custom(
        name: impl Into<String>,
        homogeneity: Option<f64>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoagKernel::Custom {
            name: name.into(),
            eval: Arc::new(eval),
            homogeneity,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            CoagKernel::Constant(c) => *c,
            CoagKernel::Additive => x + y,
            CoagKernel::Multiplicative => x * y,
            CoagKernel::ProductPower { beta } => (x * y).powf(*beta),
            CoagKernel::Monomial { c, a, b } => c * x.powf(*a) * y.powf(*b),
            CoagKernel::Symmetrized(k) => 0.5 * (k.eval(x, y) + k.eval(y, x)),
            CoagKernel::Custom { eval, .. } => eval(x, y),
        }
    }

    /// The declared degree of homogeneity, if any.
    pub fn homogeneity(&self) -> Option<f64> {
        match self {
            CoagKernel::Constant(_) => Some(0.0),
            CoagKernel::Additive => Some(1.0),
            CoagKernel::Multiplicative => Some(2.0),
            CoagKernel::ProductPower { beta } => Some(2.0 * beta),
            CoagKernel::Monomial { a, b, .. } => Some(a + b),
            CoagKernel::Symmetrized(k) => k.homogeneity(),
            CoagKernel::Custom { homogeneity, .. } => *homogeneity,
        }
    }

    /// Whether the kernel is symmetric by construction.
    pub fn is_symmetric(&self) -> bool {
        match self {
            CoagKernel::Monomial { a, b, .. } => a == b,
            CoagKernel::Custom { .. } => false,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            CoagKernel::Constant(c) => c.is_finite() && *c >= 0.0,
            CoagKernel::ProductPower { beta } => beta.is_finite(),
            CoagKernel::Monomial { c, a, b } => {
                c.is_finite() && *c >= 0.0 && a.is_finite() && b.is_finite()
            }
            CoagKernel::Symmetrized(k) => return k.validate(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(usage(format!("invalid kernel parameters {self:?}")))
        }
    }
}

pub fn constant_kernel(c: f64) -> CoagKernel {
    CoagKernel::Constant(c)
}

pub fn additive_kernel() -> CoagKernel {
    CoagKernel::Additive
}

pub fn multiplicative_kernel() -> CoagKernel {
    CoagKernel::Multiplicative
}

pub fn product_power_kernel(beta: f64) -> CoagKernel {
    CoagKernel::ProductPower { beta }
}

/// The symmetrized kernel; symmetric kernels are returned unchanged.
pub fn sym_coag(k: &CoagKernel) -> CoagKernel {
    if k.is_symmetric() {
        k.clone()
    } else {
        CoagKernel::Symmetrized(Box::new(k.clone()))
    }
}

/// Checks `K(cx, cy) = c^α K(x, y)` to relative accuracy 1e-9 at every probe `(c, x, y)`.
pub fn homogeneity_check(k: &CoagKernel, alpha: f64, probes: &[(f64, f64, f64)]) -> bool {
    probes.iter().all(|&(c, x, y)| {
        let scaled = c.powf(alpha) * k.eval(x, y);
        (k.eval(c * x, c * y) - scaled).abs() <= 1e-9 * scaled.abs()
    })
}

/// A nonnegative function of one size, used for fragmentation rates and efflux.
#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    /// `c x^{−α}`
    Power { c: f64, alpha: f64 },
    /// `a + b x`
    Affine { a: f64, b: f64 },
    /// `a − b ln x`
    NegLog { a: f64, b: f64 },
    Custom { name: String, eval: SizeFn },
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Power { c, alpha } => write!(f, "Power({c}, {alpha})"),
            ScalarFn::Affine { a, b } => write!(f, "Affine({a}, {b})"),
            ScalarFn::NegLog { a, b } => write!(f, "NegLog({a}, {b})"),
            ScalarFn::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ScalarFn {
    pub fn custom(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn::Custom {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Power { c, alpha } => {
                if *alpha == 1.0 {
                    c / x
                } else {
                    c * x.powf(-alpha)
                }
            }
            ScalarFn::Affine { a, b } => a + b * x,
            ScalarFn::NegLog { a, b } => a - b * x.ln(),
            ScalarFn::Custom { eval, .. } => eval(x),
        }
    }
}

/// Efflux intensity `e(x)`.
pub type EffluxFn = ScalarFn;

/// `c x^{−α}` as an efflux intensity.
pub fn power_efflux(c: f64, alpha: f64) -> EffluxFn {
    ScalarFn::Power { c, alpha }
}

/// Split point `κ(x)` of deterministic binary fragmentation.
#[derive(Clone)]
pub enum Kappa {
    /// `x/2`
    Half,
    /// `x/2 + 1/4` for `x > 1/2`, `x/2` otherwise.
    ShiftedHalf,
    /// `θ x`
    Fraction(f64),
    Custom { name: String, eval: SizeFn },
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Half => f.write_str("Half"),
            Kappa::ShiftedHalf => f.write_str("ShiftedHalf"),
            Kappa::Fraction(t) => write!(f, "Fraction({t})"),
            Kappa::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Kappa {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Kappa::Half => 0.5 * x,
            Kappa::ShiftedHalf => {
                if x > 0.5 {
                    0.5 * x + 0.25
                } else {
                    0.5 * x
                }
            }
            Kappa::Fraction(t) => t * x,
            Kappa::Custom { eval, .. } => eval(x),
        }
    }
}

type FragSampler = Arc<dyn Fn(f64, &mut dyn RngCore) -> Vec<f64> + Send + Sync>;

/// A fragmentation kernel: total rate `F(x, Z)` and a fragment-list sampler.
#[derive(Clone)]
pub enum FragLaw {
    /// Binary splitting at a uniform point; `F^{(1)}(x, dy) = F̄(x)/x dy`.
    UniformBinary { rate: ScalarFn },
    /// Binary splitting into `κ(x)` and `x − κ(x)`.
    DeterministicBinary { rate: ScalarFn, kappa: Kappa },
    Custom {
        name: String,
        total_rate: SizeFn,
        sampler: FragSampler,
    },
}

impl fmt::Debug for FragLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragLaw::UniformBinary { rate } => write!(f, "UniformBinary({rate:?})"),
            FragLaw::DeterministicBinary { rate, kappa } => {
                write!(f, "DeterministicBinary({rate:?}, {kappa:?})")
            }
            FragLaw::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

pub fn uniform_binary(rate: ScalarFn) -> FragLaw {
    FragLaw::UniformBinary { rate }
}

pub fn deterministic_binary(rate: ScalarFn, kappa: Kappa) -> FragLaw {
    FragLaw::DeterministicBinary { rate, kappa }
}

fn check_fragments(x: f64, fragments: &[f64]) -> Result<()> {
    if fragments.len() < 2 {
        return Err(model(format!("{} fragments from size {x}", fragments.len())));
    }
    let mut total = 0.0;
    for &z in fragments {
        if !(z > 0.0 && z < x) {
            return Err(model(format!("fragment {z} outside (0, {x})")));
        }
        total += z;
    }
    if (total - x).abs() > 1e-12 * x {
        return Err(model(format!("fragments of {x} sum to {total}")));
    }
    Ok(())
}

impl FragLaw {
    pub fn custom(
        name: impl Into<String>,
        total_rate: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(f64, &mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FragLaw::Custom {
            name: name.into(),
            total_rate: Arc::new(total_rate),
            sampler: Arc::new(sampler),
        }
    }

    /// `F(x, Z)`; binary laws use `F̄(x)/2`.
    #[inline]
    pub fn total_rate(&self, x: f64) -> f64 {
        match self {
            FragLaw::UniformBinary { rate } | FragLaw::DeterministicBinary { rate, .. } => {
                0.5 * rate.eval(x)
            }
            FragLaw::Custom { total_rate, .. } => total_rate(x),
        }
    }

    /// `κ(x)`, checked to lie in `(0, x)`.
    pub fn kappa(&self, x: f64) -> Result<Option<f64>> {
        match self {
            FragLaw::DeterministicBinary { kappa, .. } => {
                let k = kappa.eval(x);
                if !(k > 0.0 && k < x) {
                    return Err(model(format!("split point κ({x}) = {k} outside (0, {x})")));
                }
                Ok(Some(k))
            }
            _ => Ok(None),
        }
    }

    /// Draws a mass-conserving fragment list for a particle of size `x`.
    pub fn sample_fragments(&self, x: f64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        match self {
            FragLaw::UniformBinary { .. } => {
                let y = x * open_uniform(rng);
                let rest = x - y;
                if !(y > 0.0 && rest > 0.0) {
                    return Err(model(format!("size {x} too small to split")));
                }
                Ok(vec![y, rest])
            }
            FragLaw::DeterministicBinary { .. } => {
                let k = self.kappa(x)?.expect("binary split point");
                Ok(vec![k, x - k])
            }
            FragLaw::Custom { sampler, .. } => {
                let fragments = sampler(x, rng);
                check_fragments(x, &fragments)?;
                Ok(fragments)
            }
        }
    }
}

/// Closed form of the symmetrized one-particle marginal `F_sym^{(1)}(x, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SymMarginal {
    /// Constant density on `(0, upper)`.
    Density { density: f64, upper: f64 },
    /// Point masses `(position, weight)`.
    Atoms(Vec<(f64, f64)>),
}

impl SymMarginal {
    pub fn total(&self) -> f64 {
        match self {
            SymMarginal::Density { density, upper } => density * upper,
            SymMarginal::Atoms(atoms) => atoms.iter().map(|a| a.1).sum(),
        }
    }

    /// `∫ φ(y) F_sym^{(1)}(x, dy)`, by Gauss–Legendre quadrature for densities.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        match self {
            SymMarginal::Density { density, upper } => {
                const PANELS: usize = 256;
                let nodes = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
                let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
                let h = upper / PANELS as f64;
                let mut total = 0.0;
                for p in 0..PANELS {
                    let mid = (p as f64 + 0.5) * h;
                    for (t, w) in nodes.iter().zip(weights) {
                        total += w * phi(mid + 0.5 * h * t);
                    }
                }
                density * total * 0.5 * h
            }
            SymMarginal::Atoms(atoms) => atoms.iter().map(|&(y, w)| w * phi(y)).sum(),
        }
    }
}

/// The closed-form marginal of a binary law at size `x`.
pub fn binary_sym_marginal(law: &FragLaw, x: f64) -> Result<SymMarginal> {
    match law {
        FragLaw::UniformBinary { rate } => Ok(SymMarginal::Density {
            density: rate.eval(x) / x,
            upper: x,
        }),
        FragLaw::DeterministicBinary { rate, .. } => {
            let k = law.kappa(x)?.expect("binary split point");
            let fbar = rate.eval(x);
            let other = x - k;
            Ok(SymMarginal::Atoms(if k == other {
                vec![(k, fbar)]
            } else {
                vec![(k, 0.5 * fbar), (other, 0.5 * fbar)]
            }))
        }
        FragLaw::Custom { name, .. } => Err(Error::Capability(format!(
            "no closed-form marginal for fragmentation law {name}"
        ))),
    }
}

/// Estimates `∫ φ(y) F_sym^{(1)}(x, dy)` as `F(x, Z) · mean Σ_i φ(z_i)`.
pub fn marginal_intensity_mc(
    law: &FragLaw,
    x: f64,
    phi: impl Fn(f64) -> f64,
    samples: usize,
    seed: impl Into<Seed>,
) -> Result<MeanEstimate> {
    if samples == 0 {
        return Err(usage("samples must be at least 1"));
    }
    let rate = law.total_rate(x);
    let mut rng = seed.into().streams().auxiliary();
    let mut acc = Accumulator::default();
    for _ in 0..samples {
        let fragments = law.sample_fragments(x, &mut rng)?;
        acc.push(fragments.iter().map(|&z| phi(z)).sum());
    }
    let est = acc.estimate();
    Ok(MeanEstimate {
        mean: rate * est.mean,
        std_error: rate * est.std_error,
        count: est.count,
    })
}

/// Checks `F(x, Z) = (1/x) ∫ y F_sym^{(1)}(x, dy)`: exactly for closed-form
/// marginals, within four standard errors otherwise.
pub fn mass_identity_check(
    law: &FragLaw,
    x: f64,
    samples: usize,
    seed: impl Into<Seed>,
) -> Result<bool> {
    let rate = law.total_rate(x);
    match binary_sym_marginal(law, x) {
        Ok(SymMarginal::Atoms(atoms)) => {
            let lhs: f64 = atoms.iter().map(|&(y, w)| y * w).sum::<f64>() / x;
            Ok((lhs - rate).abs() <= 1e-12 * rate.abs().max(f64::MIN_POSITIVE))
        }
        Ok(SymMarginal::Density { density, upper }) => {
            // ∫_0^x y dy = x²/2
            let lhs = density * upper * upper / 2.0 / x;
            Ok((lhs - rate).abs() <= 1e-12 * rate.abs().max(f64::MIN_POSITIVE))
        }
        Err(Error::Capability(_)) => {
            let est = marginal_intensity_mc(law, x, |y| y / x, samples, seed)?;
            Ok(est.within(rate, 4.0))
        }
        Err(e) => Err(e),
    }
}

/// The mass flow fragment law `F̃(x, dy) = (y/x) F_sym^{(1)}(x, dy)`.
#[derive(Debug, Clone)]
pub struct MassFlowFragLaw {
    base: FragLaw,
}

pub fn massflow_from_frag(law: FragLaw) -> MassFlowFragLaw {
    MassFlowFragLaw { base: law }
}

impl MassFlowFragLaw {
    pub fn base(&self) -> &FragLaw {
        &self.base
    }

    /// `F̃(x, X)`, equal to `F(x, Z)`.
    #[inline]
    pub fn total_rate(&self, x: f64) -> f64 {
        self.base.total_rate(x)
    }

    /// Draws fragments and keeps fragment `z_i` with probability `z_i / x`.
    pub fn sample_next(&self, x: f64, rng: &mut dyn RngCore) -> Result<f64> {
        if let FragLaw::DeterministicBinary { .. } = self.base {
            let k = self.base.kappa(x)?.expect("binary split point");
            return Ok(if uniform(rng) * x < k { k } else { x - k });
        }
        let fragments = self.base.sample_fragments(x, rng)?;
        let target = uniform(rng) * x;
        let mut acc = 0.0;
        for &z in &fragments {
            acc += z;
            if target < acc {
                return Ok(z);
            }
        }
        Ok(*fragments.last().expect("at least two fragments"))
    }

    /// Exact next-size law `(y, probability)` when it is finite.
    pub fn next_size_atoms(&self, x: f64) -> Result<Option<Vec<(f64, f64)>>> {
        match self.base.kappa(x)? {
            Some(k) if k == x - k => Ok(Some(vec![(k, 1.0)])),
            Some(k) => Ok(Some(vec![(k, k / x), (x - k, (x - k) / x)])),
            None => Ok(None),
        }
    }
}

/// Monte Carlo mean of `(Y/x)^α` under the normalized next-size law.
pub fn massflow_moment_ratio(
    mf: &MassFlowFragLaw,
    x: f64,
    alpha: f64,
    samples: usize,
    seed: impl Into<Seed>,
) -> Result<MeanEstimate> {
    if !(alpha > 0.0) {
        return Err(usage("alpha must be positive"));
    }
    if samples == 0 {
        return Err(usage("samples must be at least 1"));
    }
    let mut rng = seed.into().streams().auxiliary();
    let mut acc = Accumulator::default();
    for _ in 0..samples {
        acc.push((mf.sample_next(x, &mut rng)? / x).powf(alpha));
    }
    Ok(acc.estimate())
}

/// Closed form of the moment ratio for the built-in binary laws.
pub fn massflow_moment_ratio_exact(mf: &MassFlowFragLaw, x: f64, alpha: f64) -> Result<Option<f64>> {
    Ok(match mf.base() {
        FragLaw::UniformBinary { .. } => Some(2.0 / (alpha + 2.0)),
        FragLaw::DeterministicBinary { .. } => {
            let k = mf.base().kappa(x)?.expect("binary split point");
            Some((k / x).powf(alpha + 1.0) + ((x - k) / x).powf(alpha + 1.0))
        }
        FragLaw::Custom { .. } => None,
    })
}

type SourceSampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A source measure `S` of finite total mass.
#[derive(Clone)]
pub enum SourceTerm {
    /// `total · δ_x`
    Point { x: f64, total: f64 },
    /// `Σ w_k δ_{x_k}`
    Discrete(Vec<(f64, f64)>),
    /// `total` spread uniformly on `[lo, hi]`.
    Uniform { lo: f64, hi: f64, total: f64 },
    /// Arbitrary sampler with sizes bounded by `upper`.
    Custom {
        name: String,
        total: f64,
        first_moment: f64,
        upper: f64,
        sampler: SourceSampler,
    },
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Point { x, total } => write!(f, "Point({x}, {total})"),
            SourceTerm::Discrete(atoms) => write!(f, "Discrete({atoms:?})"),
            SourceTerm::Uniform { lo, hi, total } => write!(f, "Uniform({lo}, {hi}, {total})"),
            SourceTerm::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

pub fn point_source(x: f64, total: f64) -> SourceTerm {
    SourceTerm::Point { x, total }
}

pub fn discrete_source(atoms: Vec<(f64, f64)>) -> SourceTerm {
    SourceTerm::Discrete(atoms)
}

fn pick_weighted(atoms: &[(f64, f64)], weight: impl Fn(&(f64, f64)) -> f64, u: f64) -> f64 {
    let total: f64 = atoms.iter().map(&weight).sum();
    let target = u * total;
    let mut acc = 0.0;
    for a in atoms {
        acc += weight(a);
        if target < acc {
            return a.0;
        }
    }
    atoms.iter().rev().find(|a| weight(a) > 0.0).map_or(atoms[0].0, |a| a.0)
}

impl SourceTerm {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SourceTerm::Point { x, total } => *x > 0.0 && x.is_finite() && *total >= 0.0 && total.is_finite(),
            SourceTerm::Discrete(atoms) => {
                !atoms.is_empty()
                    && atoms
                        .iter()
                        .all(|&(x, w)| x > 0.0 && x.is_finite() && w >= 0.0 && w.is_finite())
            }
            SourceTerm::Uniform { lo, hi, total } => {
                *lo > 0.0 && lo < hi && hi.is_finite() && *total >= 0.0 && total.is_finite()
            }
            SourceTerm::Custom {
                total,
                first_moment,
                upper,
                ..
            } => {
                *total >= 0.0 && total.is_finite() && first_moment.is_finite() && *upper > 0.0 && upper.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(usage(format!("invalid source {self:?}")))
        }
    }

    /// `S(X)`.
    pub fn total(&self) -> f64 {
        match self {
            SourceTerm::Point { total, .. } | SourceTerm::Uniform { total, .. } => *total,
            SourceTerm::Discrete(atoms) => atoms.iter().map(|a| a.1).sum(),
            SourceTerm::Custom { total, .. } => *total,
        }
    }

    /// `∫ x S(dx)`.
    pub fn first_moment(&self) -> f64 {
        match self {
            SourceTerm::Point { x, total } => x * total,
            SourceTerm::Discrete(atoms) => atoms.iter().map(|a| a.0 * a.1).sum(),
            SourceTerm::Uniform { lo, hi, total } => total * 0.5 * (lo + hi),
            SourceTerm::Custom { first_moment, .. } => *first_moment,
        }
    }

    /// Largest size the source can emit.
    pub fn upper_bound(&self) -> f64 {
        match self {
            SourceTerm::Point { x, .. } => *x,
            SourceTerm::Discrete(atoms) => atoms.iter().map(|a| a.0).fold(0.0, f64::max),
            SourceTerm::Uniform { hi, .. } => *hi,
            SourceTerm::Custom { upper, .. } => *upper,
        }
    }

    /// A size drawn from `S / S(X)`.
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            SourceTerm::Point { x, .. } => *x,
            SourceTerm::Discrete(atoms) => pick_weighted(atoms, |a| a.1, uniform(rng)),
            SourceTerm::Uniform { lo, hi, .. } => lo + (hi - lo) * uniform(rng),
            SourceTerm::Custom { sampler, .. } => sampler(rng),
        }
    }

    /// A size drawn from `x S(dx) / ∫ x S`.
    pub fn sample_mass_biased(&self, rng: &mut dyn RngCore) -> Result<f64> {
        match self {
            SourceTerm::Point { x, .. } => Ok(*x),
            SourceTerm::Discrete(atoms) => Ok(pick_weighted(atoms, |a| a.0 * a.1, uniform(rng))),
            SourceTerm::Uniform { lo, hi, .. } => {
                Ok((lo * lo + uniform(rng) * (hi * hi - lo * lo)).sqrt())
            }
            SourceTerm::Custom { upper, sampler, name, .. } => {
                for _ in 0..1_000_000 {
                    let x = sampler(rng);
                    if x > *upper {
                        return Err(model(format!("source {name} emitted {x} above its bound {upper}")));
                    }
                    if uniform(rng) * upper < x {
                        return Ok(x);
                    }
                }
                Err(model(format!("mass-biased rejection for source {name} did not accept")))
            }
        }
    }
}
