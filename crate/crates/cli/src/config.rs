//! Run configuration: a versioned JSON document naming registry entries.

use std::path::Path;

use coagfrag::direct::{self, DirectConfig, DirectLaw, DirectState};
use coagfrag::eta;
use coagfrag::jump::{pure_birth_law, PureBirth, StopRule, TestFunction, DEFAULT_MAX_JUMPS, DEFAULT_RATE_CEILING};
use coagfrag::kernels::{self, CoagKernel, FragLaw, Kappa, ScalarFn, SourceTerm};
use coagfrag::massflow::{self, MassFlowConfig, MassFlowLaw, MassFlowState};
use coagfrag::{BoundaryGuards, ParticleSystem};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub model: ModelKind,
    #[serde(default = "one")]
    pub n: u64,
    #[serde(default)]
    pub coagulation: Option<KernelSpec>,
    #[serde(default)]
    pub fragmentation: Option<FragSpec>,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub efflux: Option<RateSpec>,
    /// `λ(k) = c k^p` for the pure birth model.
    #[serde(default)]
    pub birth_rate: Option<BirthRate>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub guards: Option<GuardSpec>,
    /// Mass flow only: remove particles crossing a size guard instead of stopping.
    #[serde(default)]
    pub truncate: bool,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub classify: ClassifySpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub drift: Option<DriftSpec>,
    #[serde(default)]
    pub validation: Option<String>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Direct,
    Massflow,
    PureBirth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Constant { c: f64 },
    Additive,
    Multiplicative,
    ProductPower { beta: f64 },
    Monomial { c: f64, a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Constant { c: f64 },
    /// `c x^{−α}`
    Power { c: f64, alpha: f64 },
    /// `a + b x`
    Affine { a: f64, b: f64 },
    /// `a − b ln x`
    NegLog { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaSpec {
    Half,
    ShiftedHalf,
    Fraction { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FragSpec {
    UniformBinary { rate: RateSpec },
    DeterministicBinary { rate: RateSpec, kappa: KappaSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Point { x: f64, total: f64 },
    /// `(size, weight)` pairs.
    Discrete { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64, total: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthRate {
    pub c: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Monodisperse { x0: f64, count: usize },
    Sizes { sizes: Vec<f64> },
    Empty,
    /// Starting point of the pure birth chain.
    Birth { state: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_max: usize,
}

/// `null` horizon or ceiling means no limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub max_jumps: u64,
    pub time_horizon: Option<f64>,
    pub rate_ceiling: Option<f64>,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            max_jumps: DEFAULT_MAX_JUMPS,
            time_horizon: None,
            rate_ceiling: Some(DEFAULT_RATE_CEILING),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    pub tail_window: usize,
    pub tail_tol: f64,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        ClassifySpec {
            tail_window: coagfrag::jump::DEFAULT_TAIL_WINDOW,
            tail_tol: coagfrag::jump::DEFAULT_TAIL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub replicates: usize,
    pub base_seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            replicates: 100,
            base_seed: 1,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    /// `−(1/n) Σ x^{−β}`
    PowerTail { beta: f64, bound: f64 },
    /// `−(1/n) Σ x^α`
    Moment { alpha: f64, bound: f64 },
    /// `g(N/n)` with `g(x) = x^β / (1 + x^β)`
    SaturatingCount { beta: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub eta: EtaSpec,
    /// Particle sizes of each audited state.
    pub states: Vec<Vec<f64>>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
}

fn default_mc() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub verbosity: u8,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            verbosity: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Usage(format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        if self.ensemble.replicates == 0 {
            return Err(CliError::Usage("ensemble.replicates must be at least 1".into()));
        }
        if self.output.verbosity > 2 {
            return Err(CliError::Usage("output.verbosity must be 0, 1 or 2".into()));
        }
        let particles = matches!(self.model, ModelKind::Direct | ModelKind::Massflow);
        if particles == matches!(self.initial, InitialSpec::Birth { .. }) {
            return Err(CliError::Usage("initial.kind 'birth' is for the pure_birth model only".into()));
        }
        if self.model == ModelKind::PureBirth && self.birth_rate.is_none() {
            return Err(CliError::Usage("pure_birth needs birth_rate".into()));
        }
        Ok(())
    }

    pub fn stop_rule<S>(&self) -> Result<StopRule<S>, CliError> {
        Ok(StopRule::new(
            self.stop.max_jumps,
            self.stop.time_horizon.unwrap_or(f64::INFINITY),
            self.stop.rate_ceiling.unwrap_or(f64::INFINITY),
        )?)
    }

    fn guards(&self) -> Result<BoundaryGuards, CliError> {
        Ok(match self.guards {
            Some(g) => BoundaryGuards::new(g.x_min, g.x_max, g.n_max)?,
            None => BoundaryGuards::default(),
        })
    }

    fn system(&self) -> Result<ParticleSystem, CliError> {
        Ok(match &self.initial {
            InitialSpec::Monodisperse { x0, count } => ParticleSystem::monodisperse(self.n, *x0, *count)?,
            InitialSpec::Sizes { sizes } => ParticleSystem::new(self.n, sizes.clone())?,
            InitialSpec::Empty => ParticleSystem::empty(self.n)?,
            InitialSpec::Birth { .. } => unreachable!("checked at parse time"),
        })
    }

    pub fn direct(&self) -> Result<(DirectLaw, DirectState), CliError> {
        if self.truncate {
            return Err(CliError::Usage("truncate is only available for the massflow model".into()));
        }
        let mut cfg = DirectConfig::new(self.n).with_guards(self.guards()?);
        if let Some(k) = &self.coagulation {
            cfg = cfg.with_coag(k.build());
        }
        if let Some(f) = &self.fragmentation {
            cfg = cfg.with_frag(f.build());
        }
        if let Some(s) = &self.source {
            cfg = cfg.with_source(s.build());
        }
        if let Some(e) = &self.efflux {
            cfg = cfg.with_efflux(e.build());
        }
        let law = direct::build_law(&cfg)?;
        let init = law.state(self.system()?)?;
        Ok((law, init))
    }

    pub fn massflow(&self) -> Result<(MassFlowLaw, MassFlowState), CliError> {
        let mut cfg = MassFlowConfig::new(self.n).with_guards(self.guards()?);
        if let Some(k) = &self.coagulation {
            cfg = cfg.with_coag(k.build());
        }
        if let Some(f) = &self.fragmentation {
            cfg = cfg.with_frag(kernels::massflow_from_frag(f.build()));
        }
        if let Some(s) = &self.source {
            cfg = cfg.with_source(s.build());
        }
        if let Some(e) = &self.efflux {
            cfg = cfg.with_efflux(e.build());
        }
        if self.truncate {
            cfg = cfg.truncating();
        }
        let law = massflow::build_law(&cfg)?;
        let init = law.state(self.system()?)?;
        Ok((law, init))
    }

    pub fn pure_birth(&self) -> Result<(PureBirth, u64), CliError> {
        let rate = self.birth_rate.clone().expect("checked at parse time");
        let InitialSpec::Birth { state } = self.initial else {
            unreachable!("checked at parse time")
        };
        if state == 0 {
            return Err(CliError::Usage("pure birth states start at 1".into()));
        }
        if self.coagulation.is_some() || self.fragmentation.is_some() || self.source.is_some() || self.efflux.is_some() {
            return Err(CliError::Usage("pure_birth takes no particle mechanisms".into()));
        }
        Ok((pure_birth_law(move |k| rate.c * (k as f64).powf(rate.power)), state))
    }
}

impl KernelSpec {
    fn build(&self) -> CoagKernel {
        match *self {
            KernelSpec::Constant { c } => kernels::constant_kernel(c),
            KernelSpec::Additive => kernels::additive_kernel(),
            KernelSpec::Multiplicative => kernels::multiplicative_kernel(),
            KernelSpec::ProductPower { beta } => kernels::product_power_kernel(beta),
            KernelSpec::Monomial { c, a, b } => CoagKernel::Monomial { c, a, b },
        }
    }
}

impl RateSpec {
    fn build(&self) -> ScalarFn {
        match *self {
            RateSpec::Constant { c } => ScalarFn::Constant(c),
            RateSpec::Power { c, alpha } => ScalarFn::Power { c, alpha },
            RateSpec::Affine { a, b } => ScalarFn::Affine { a, b },
            RateSpec::NegLog { a, b } => ScalarFn::NegLog { a, b },
        }
    }
}

impl FragSpec {
    fn build(&self) -> FragLaw {
        match self {
            FragSpec::UniformBinary { rate } => kernels::uniform_binary(rate.build()),
            FragSpec::DeterministicBinary { rate, kappa } => {
                let kappa = match *kappa {
                    KappaSpec::Half => Kappa::Half,
                    KappaSpec::ShiftedHalf => Kappa::ShiftedHalf,
                    KappaSpec::Fraction { theta } => Kappa::Fraction(theta),
                };
                kernels::deterministic_binary(rate.build(), kappa)
            }
        }
    }
}

impl SourceSpec {
    fn build(&self) -> SourceTerm {
        match self {
            SourceSpec::Point { x, total } => kernels::point_source(*x, *total),
            SourceSpec::Discrete { atoms } => kernels::discrete_source(atoms.clone()),
            SourceSpec::Uniform { lo, hi, total } => SourceTerm::Uniform {
                lo: *lo,
                hi: *hi,
                total: *total,
            },
        }
    }
}

impl EtaSpec {
    pub fn build<S: AsRef<ParticleSystem> + 'static>(&self) -> Result<TestFunction<S>, CliError> {
        Ok(match *self {
            EtaSpec::PowerTail { beta, bound } => eta::power_tail(beta, bound)?,
            EtaSpec::Moment { alpha, bound } => eta::moment(alpha, bound)?,
            EtaSpec::SaturatingCount { beta } => eta::saturating_count(beta)?,
            EtaSpec::Constant { value } => TestFunction::constant(value),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MF1: &str = r#"{
        "schema": 1,
        "model": "massflow",
        "coagulation": {"kind": "product_power", "beta": 1.0},
        "initial": {"kind": "monodisperse", "x0": 1.0, "count": 1}
    }"#;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = RunConfig::parse(MF1).unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.stop, StopSpec::default());
        assert_eq!(cfg.output.verbosity, 1);
        assert_eq!(RunConfig::parse(&cfg.to_json()).unwrap(), cfg);
        cfg.massflow().unwrap();
    }

    #[test]
    fn rejections() {
        let bad_field = MF1.replace("\"beta\": 1.0", "\"beta\": 1.0, \"gamma\": 2");
        let e = RunConfig::parse(&bad_field).unwrap_err().to_string();
        assert!(e.contains("gamma") && e.contains("line"), "{e}");
        let bad_kind = MF1.replace("product_power", "nonsense");
        assert!(RunConfig::parse(&bad_kind).is_err());
        let bad_schema = MF1.replace("\"schema\": 1", "\"schema\": 2");
        assert!(RunConfig::parse(&bad_schema).is_err());
        let bad_top = MF1.replace("\"schema\": 1,", "\"schema\": 1, \"colour\": 3,");
        assert!(RunConfig::parse(&bad_top).is_err());
    }

    #[test]
    fn pure_birth_needs_birth_state() {
        let text = r#"{"schema": 1, "model": "pure_birth", "birth_rate": {"c": 1.0, "power": 2.0},
                       "initial": {"kind": "birth", "state": 1}}"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.pure_birth().unwrap().1, 1);
        let wrong = text.replace(r#"{"kind": "birth", "state": 1}"#, r#"{"kind": "empty"}"#);
        assert!(RunConfig::parse(&wrong).is_err());
    }
}
