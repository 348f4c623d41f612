use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coagfrag::direct::DirectState;
use coagfrag::ensemble::{aggregate, run_replicates, ReplicateRow};
use coagfrag::jump::{classify, drift, simulate_chain_observed, ExplosionVerdict, ProcessLaw, Recording, StopRule, Visit};
use coagfrag::massflow::{MassFlowState, MassTrace};
use coagfrag::rng::Seed;
use coagfrag::validate::{self, CheckOptions, CHECKS};
use coagfrag::ParticleSystem;
use serde_json::{json, Value};

use crate::config::{ModelKind, RunConfig, SCHEMA};
use crate::CliError;

/// How a state appears in trajectory records.
pub trait StateRecord {
    fn record(&self) -> Value;
}

fn system_record(xi: &ParticleSystem) -> Value {
    json!({ "n": xi.n, "sizes": xi.sizes })
}

impl StateRecord for DirectState {
    fn record(&self) -> Value {
        system_record(self.system())
    }
}

impl StateRecord for MassFlowState {
    fn record(&self) -> Value {
        system_record(self.system())
    }
}

impl StateRecord for u64 {
    fn record(&self) -> Value {
        json!({ "k": self })
    }
}

/// Settings shared by every run of one command.
pub struct Settings {
    pub cfg: RunConfig,
    pub out: Option<PathBuf>,
}

impl Settings {
    fn verbosity(&self) -> u8 {
        self.cfg.output.verbosity
    }

    fn out_dir(&self) -> Result<Option<&Path>, CliError> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }

    fn write_config(&self, dir: &Path) -> Result<(), CliError> {
        write_file(&dir.join("config.json"), &self.cfg.to_json())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

/// One replicate. With a log path, writes the first and last records, or every
/// record when `full` is set.
fn run_one<L>(
    law: &L,
    init: &L::State,
    seed: Seed,
    stop: &StopRule<L::State>,
    settings: &Settings,
    log: Option<(&Path, bool)>,
    mut observe: impl FnMut(&Visit<'_, L::State, L::Event>),
) -> Result<(ExplosionVerdict, Value), CliError>
where
    L: ProcessLaw,
    L::State: StateRecord,
{
    let mut writer = log.map(|(p, _)| create(p)).transpose()?;
    let full = log.is_some_and(|l| l.1);
    let mut failure = None;
    let mut last_event = None;
    let mut emit = |w: &mut BufWriter<File>, k: usize, t: f64, rate: f64, event: String, state: Value| {
        let line = json!({ "k": k, "t": t, "rate": rate, "event": event, "state": state });
        if let Err(e) = writeln!(w, "{line}") {
            failure.get_or_insert(e);
        }
    };
    let traj = simulate_chain_observed(law, init, seed, stop, Recording::Endpoints, |v| {
        observe(&v);
        let Some(w) = writer.as_mut() else { return };
        if full || v.index == 0 {
            let event = v.event.map_or_else(|| "start".to_string(), |e| e.to_string());
            emit(w, v.index, v.time, v.rate, event, v.state.record());
        } else {
            last_event = v.event.cloned();
        }
    })?;
    let final_state = traj.final_state().record();
    if let Some(w) = writer.as_mut() {
        if !full && traj.jumps() > 0 {
            let event = last_event.map_or_else(String::new, |e| e.to_string());
            emit(w, traj.jumps(), traj.final_time(), traj.terminal_rate(), event, final_state.clone());
        }
        if let Err(e) = w.flush() {
            failure.get_or_insert(e);
        }
    }
    if let Some(e) = failure {
        return Err(CliError::Io(format!("cannot write trajectory: {e}")));
    }
    let verdict = classify(&traj, stop, settings.cfg.classify.tail_window, settings.cfg.classify.tail_tol);
    Ok((verdict, final_state))
}

pub fn simulate(settings: &Settings) -> Result<(), CliError> {
    match settings.cfg.model {
        ModelKind::Direct => {
            let (law, init) = settings.cfg.direct()?;
            simulate_with(&law, &init, law.stop_rule_from(settings)?, settings, |_| {})
        }
        ModelKind::Massflow => {
            let (law, init) = settings.cfg.massflow()?;
            let mut trace = MassTrace::default();
            simulate_with(&law, &init, law.stop_rule_from(settings)?, settings, |v| trace.observe(v))?;
            match settings.out_dir()? {
                Some(dir) if settings.cfg.truncate => write_mass_trace(&dir.join("mass_trace.csv"), &trace.finish()),
                _ => Ok(()),
            }
        }
        ModelKind::PureBirth => {
            let (law, init) = settings.cfg.pure_birth()?;
            simulate_with(&law, &init, settings.cfg.stop_rule()?, settings, |_| {})
        }
    }
}

fn write_mass_trace(path: &Path, points: &[(f64, f64)]) -> Result<(), CliError> {
    let fail = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["t", "N_over_n"]).map_err(fail)?;
    for (t, level) in points {
        w.write_record([t.to_string(), level.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// The configured stop rule plus the model's boundary guard.
trait GuardedStop: ProcessLaw + Sized {
    fn stop_rule_from(&self, settings: &Settings) -> Result<StopRule<Self::State>, CliError>;
}

impl GuardedStop for coagfrag::direct::DirectLaw {
    fn stop_rule_from(&self, settings: &Settings) -> Result<StopRule<DirectState>, CliError> {
        let s = settings.cfg.stop;
        Ok(self.stop_rule(s.max_jumps, s.time_horizon.unwrap_or(f64::INFINITY), s.rate_ceiling.unwrap_or(f64::INFINITY))?)
    }
}

impl GuardedStop for coagfrag::massflow::MassFlowLaw {
    fn stop_rule_from(&self, settings: &Settings) -> Result<StopRule<MassFlowState>, CliError> {
        let s = settings.cfg.stop;
        Ok(self.stop_rule(s.max_jumps, s.time_horizon.unwrap_or(f64::INFINITY), s.rate_ceiling.unwrap_or(f64::INFINITY))?)
    }
}

fn simulate_with<L>(
    law: &L,
    init: &L::State,
    stop: StopRule<L::State>,
    settings: &Settings,
    observe: impl FnMut(&Visit<'_, L::State, L::Event>),
) -> Result<(), CliError>
where
    L: ProcessLaw,
    L::State: StateRecord,
{
    let seed = Seed::new(settings.cfg.ensemble.base_seed, 0);
    let dir = settings.out_dir()?;
    let log_path = dir.map(|d| d.join("trajectory.jsonl"));
    let log = log_path.as_deref().filter(|_| settings.verbosity() >= 1).map(|p| (p, settings.verbosity() >= 2));
    let (verdict, final_state) = run_one(law, init, seed, &stop, settings, log, observe)?;
    let report = json!({
        "schema": SCHEMA,
        "seed": { "base": seed.base, "replicate": seed.replicate },
        "result": verdict,
        "final_state": final_state,
    });
    if let Some(dir) = dir {
        write_file(&dir.join("verdict.json"), &pretty(&report))?;
        settings.write_config(dir)?;
    }
    println!("{}", serde_json::to_string(&verdict).expect("serializable verdict"));
    Ok(())
}

pub fn ensemble(settings: &Settings) -> Result<(), CliError> {
    match settings.cfg.model {
        ModelKind::Direct => {
            let (law, init) = settings.cfg.direct()?;
            ensemble_with(&law, &init, law.stop_rule_from(settings)?, settings)
        }
        ModelKind::Massflow => {
            let (law, init) = settings.cfg.massflow()?;
            ensemble_with(&law, &init, law.stop_rule_from(settings)?, settings)
        }
        ModelKind::PureBirth => {
            let (law, init) = settings.cfg.pure_birth()?;
            ensemble_with(&law, &init, settings.cfg.stop_rule()?, settings)
        }
    }
}

fn ensemble_with<L>(law: &L, init: &L::State, stop: StopRule<L::State>, settings: &Settings) -> Result<(), CliError>
where
    L: ProcessLaw + Sync,
    L::State: StateRecord + Send + Sync,
{
    let spec = settings.cfg.ensemble;
    let dir = settings.out_dir()?;
    let logs = match dir {
        Some(d) if settings.verbosity() >= 2 => {
            let logs = d.join("trajectories");
            fs::create_dir_all(&logs).map_err(|e| CliError::Io(format!("cannot create {}: {e}", logs.display())))?;
            Some(logs)
        }
        _ => None,
    };
    let run = |seed: Seed| {
        let path = logs.as_ref().map(|l| l.join(format!("replicate_{:06}.jsonl", seed.replicate)));
        run_one(law, init, seed, &stop, settings, path.as_deref().map(|p| (p, true)), |_| {})
            .map(|r| r.0)
            .map_err(|e| match e {
                CliError::Usage(m) => coagfrag::Error::Usage(m),
                other => coagfrag::Error::Model(other.to_string()),
            })
    };
    let verdicts = run_replicates(spec.base_seed, spec.replicates, spec.workers, run)?;
    let rows: Vec<ReplicateRow> = verdicts.iter().enumerate().map(|(r, v)| ReplicateRow::new(r as u64, v)).collect();
    let agg = aggregate(&verdicts);
    if let Some(dir) = dir {
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        for row in &rows {
            w.serialize(row).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let doc = json!({ "schema": SCHEMA, "base_seed": spec.base_seed, "aggregate": agg });
        write_file(&dir.join("aggregate.json"), &pretty(&doc))?;
        settings.write_config(dir)?;
    }
    if settings.verbosity() >= 1 {
        for row in &rows {
            println!("{}", serde_json::to_string(row).expect("serializable row"));
        }
    }
    let f = agg.explosion_fraction;
    println!(
        "replicates {} exploded {} survived {} absorbed {} inconclusive {} explosion fraction {:.4} [{:.4}, {:.4}]",
        agg.replicates,
        agg.counts.exploded,
        agg.counts.survived,
        agg.counts.absorbed,
        agg.counts.inconclusive,
        f.fraction,
        f.ci_low,
        f.ci_high
    );
    Ok(())
}

pub fn drift_audit(settings: &Settings) -> Result<(), CliError> {
    let spec = settings
        .cfg
        .drift
        .as_ref()
        .ok_or_else(|| CliError::Usage("the drift command needs a 'drift' section".into()))?;
    let reports = match settings.cfg.model {
        ModelKind::Direct => {
            let (law, _) = settings.cfg.direct()?;
            drift_reports(&law, |xi| Ok(law.state(xi)?), settings)?
        }
        ModelKind::Massflow => {
            let (law, _) = settings.cfg.massflow()?;
            drift_reports(&law, |xi| Ok(law.state(xi)?), settings)?
        }
        ModelKind::PureBirth => return Err(CliError::Usage("drift audits need a particle model".into())),
    };
    if let Some(dir) = settings.out_dir()? {
        let doc = json!({ "schema": SCHEMA, "eta": spec.eta, "reports": reports });
        write_file(&dir.join("drift.json"), &pretty(&doc))?;
        settings.write_config(dir)?;
    }
    for r in &reports {
        println!("{r}");
    }
    Ok(())
}

fn drift_reports<L>(
    law: &L,
    state: impl Fn(ParticleSystem) -> Result<L::State, CliError>,
    settings: &Settings,
) -> Result<Vec<Value>, CliError>
where
    L: ProcessLaw,
    L::State: AsRef<ParticleSystem> + 'static,
{
    let spec = settings.cfg.drift.as_ref().expect("drift section");
    let eta = spec.eta.build::<L::State>()?;
    spec.states
        .iter()
        .enumerate()
        .map(|(k, sizes)| {
            let xi = ParticleSystem::new(settings.cfg.n, sizes.clone())?;
            let s = state(xi)?;
            let seed = Seed::new(settings.cfg.ensemble.base_seed, k as u64);
            let report = drift(law, &s, &eta, spec.mc_samples, seed, &spec.epsilon)?;
            Ok(json!({ "state": system_record(s.as_ref()), "drift": report }))
        })
        .collect()
}

/// Runs a named check; `Ok(false)` when it ran and failed.
pub fn validate(name: Option<&str>, list: bool, seed: Option<u64>, replicates: Option<usize>, workers: usize, out: Option<&Path>) -> Result<bool, CliError> {
    if list {
        for (name, what) in CHECKS {
            println!("{name:<30} {what}");
        }
        return Ok(true);
    }
    let name = name.ok_or_else(|| CliError::Usage("validate needs a check name (see --list)".into()))?;
    let defaults = CheckOptions::default();
    let opts = CheckOptions {
        base_seed: seed.unwrap_or(defaults.base_seed),
        replicates,
        workers,
    };
    let report = validate::run(name, &opts)?;
    println!(
        "{} {}: measured {:.6} expected {:.6} tolerance {:.6} ({})",
        if report.passed { "PASS" } else { "FAIL" },
        report.name,
        report.measured,
        report.expected,
        report.tolerance,
        report.detail
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let doc = json!({ "schema": SCHEMA, "report": report });
        write_file(&dir.join("validate.json"), &pretty(&doc))?;
    }
    Ok(report.passed)
}
