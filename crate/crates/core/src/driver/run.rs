//! Drive a configured simulation to `t_end`, writing snapshots and a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::driver::config::{ModelParams, RunConfig};
use crate::driver::snapshot::{write_atomic, Snapshot};
use crate::driver::Simulation;
use crate::error::{MarsError, Result};
use crate::models::heleshaw::HeleShaw;
use crate::models::ks2d::Ks2d;
use crate::models::thinfilm::ThinFilm;
use crate::models::Model;
use crate::rng::RNG_DESCRIPTION;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Construct the model once to surface its field-level validation errors.
pub fn build_check(params: &ModelParams) -> Result<()> {
    match params {
        ModelParams::ThinFilm(p) => ThinFilm::new(p.clone()).map(drop),
        ModelParams::Ks2d(p) => Ks2d::new(p.clone()).map(drop),
        ModelParams::HeleShaw(p) => HeleShaw::new(p.clone()).map(drop),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRecord {
    pub file: String,
    pub step: u64,
    pub time: f64,
    /// SHA-256 of `"blob <len>\0"` followed by the file bytes.
    pub sha256: String,
    /// Written after a failure, from the last accepted state.
    pub diagnostic: bool,
}

/// Machine-readable record of how a run ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Termination {
    /// `completed` or `error`.
    pub status: String,
    pub kind: Option<String>,
    pub message: Option<String>,
    /// Last accepted macro step.
    pub step: u64,
    pub time: f64,
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    model: &'static str,
    config: &'a RunConfig,
    rng: &'static str,
    total_steps: u64,
    snapshots: &'a [SnapshotRecord],
    content_hash: String,
    termination: &'a Termination,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub snapshots: Vec<SnapshotRecord>,
    pub termination: Termination,
    /// The error that stopped the run early, if any.
    pub error: Option<MarsError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.termination.exit_code
    }
}

/// Run `config` to completion. Simulation failures end the run with a
/// diagnostic snapshot and are reported in the outcome; only i/o and
/// configuration problems are returned as errors.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    match &config.params {
        ModelParams::ThinFilm(p) => drive(ThinFilm::new(p.clone())?, config),
        ModelParams::Ks2d(p) => drive(Ks2d::new(p.clone())?, config),
        ModelParams::HeleShaw(p) => drive(HeleShaw::new(p.clone())?, config),
    }
}

fn drive<M: Model>(model: M, config: &RunConfig) -> Result<RunOutcome> {
    let out = config.out_dir.clone();
    fs::create_dir_all(&out).map_err(|e| MarsError::io(&out, e))?;
    let total = config.total_steps();
    let mut records = Vec::new();

    let mut sim = match Simulation::new(model, config.controller.clone(), config.damping) {
        Ok(sim) => sim,
        Err(e) if e.exit_code() == 2 => return Err(e),
        Err(e) => {
            let termination = failed(&e, 0, 0.0);
            finish(config, &out, total, &records, &termination)?;
            return Ok(RunOutcome {
                out_dir: out,
                snapshots: records,
                termination,
                error: Some(e),
            });
        }
    };
    log::info!(
        "{}: {} steps of dt = {:e}, writing to {}",
        sim.model().name(),
        total,
        sim.model().dt(),
        out.display()
    );
    records.push(write_snapshot(&sim, &out, false)?);

    let mut error = None;
    while sim.step_index() < total {
        match sim.step() {
            Ok(report) => {
                if report.step % config.snapshot_every == 0 || report.step == total {
                    records.push(write_snapshot(&sim, &out, false)?);
                    log::info!("step {} t = {:.6e} k_e = {:.4}", report.step, report.time, report.ke);
                }
            }
            Err(e) => {
                log::error!("{e}");
                records.push(write_snapshot(&sim, &out, true)?);
                error = Some(e);
                break;
            }
        }
    }

    let termination = match &error {
        None => Termination {
            status: "completed".into(),
            kind: None,
            message: None,
            step: sim.step_index(),
            time: sim.time(),
            exit_code: 0,
        },
        Some(e) => failed(e, sim.step_index(), sim.time()),
    };
    finish(config, &out, total, &records, &termination)?;
    Ok(RunOutcome {
        out_dir: out,
        snapshots: records,
        termination,
        error,
    })
}

fn failed(e: &MarsError, step: u64, time: f64) -> Termination {
    Termination {
        status: "error".into(),
        kind: Some(e.kind().into()),
        message: Some(e.to_string()),
        step,
        time,
        exit_code: e.exit_code(),
    }
}

fn finish(config: &RunConfig, out: &Path, total: u64, records: &[SnapshotRecord], termination: &Termination) -> Result<()> {
    let mut listing = String::new();
    for r in records {
        listing.push_str(&format!("{}  {}\n", r.sha256, r.file));
    }
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        model: config.kind().as_str(),
        config,
        rng: RNG_DESCRIPTION,
        total_steps: total,
        snapshots: records,
        content_hash: hex(&Sha256::digest(listing.as_bytes())),
        termination,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| MarsError::Config(format!("cannot serialize manifest: {e}")))?;
    write_atomic(&out.join(MANIFEST_FILE), json.as_bytes())
}

/// Git-style object hash of a file's bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_snapshot<M: Model>(sim: &Simulation<M>, out: &Path, diagnostic: bool) -> Result<SnapshotRecord> {
    let snap = snapshot_of(sim, diagnostic);
    let prefix = if diagnostic { "diagnostic" } else { "snapshot" };
    let file = format!("{prefix}_{:08}.csv", sim.step_index());
    let bytes = snap.write_atomic(&out.join(&file))?;
    Ok(SnapshotRecord {
        file,
        step: sim.step_index(),
        time: sim.time(),
        sha256: content_hash(&bytes),
        diagnostic,
    })
}

/// Oracle spectra `e(k)`, `λ_c(k)` and `k_e` at the model's initial state,
/// next to the initial damping.
pub fn oracle_table(params: &ModelParams) -> Result<Snapshot> {
    match params {
        ModelParams::ThinFilm(p) => tabulate_oracle(ThinFilm::new(p.clone())?),
        ModelParams::Ks2d(p) => tabulate_oracle(Ks2d::new(p.clone())?),
        ModelParams::HeleShaw(p) => tabulate_oracle(HeleShaw::new(p.clone())?),
    }
}

fn tabulate_oracle<M: Model>(model: M) -> Result<Snapshot> {
    let state = model.initial_state()?;
    let oracle = model.oracle(&state)?;
    let lambda0 = model.initial_lambda(&state)?;
    let fourier = model.fourier();
    let mut snap = Snapshot::new();
    snap.meta("model", model.name()).meta_f64("dt", model.dt()).meta_f64("ke", oracle.ke);
    for (k, v) in &oracle.scalars {
        snap.meta_f64(k, *v);
    }
    let wave: Vec<[i64; 2]> = (0..fourier.len()).map(|i| fourier.wavenumber(i)).collect();
    if model.dimension() == 2 {
        snap.push_int("kx", wave.iter().map(|w| w[0]).collect());
        snap.push_int("ky", wave.iter().map(|w| w[1]).collect());
    } else {
        snap.push_int("k", wave.iter().map(|w| w[0]).collect());
    }
    snap.push_float("e", oracle.e);
    snap.push_float("lambda_c", oracle.lambda_c);
    snap.push_float("lambda0", lambda0.values().to_vec());
    Ok(snap)
}

/// Tabulate the current state, damping, noise and oracles.
pub fn snapshot_of<M: Model>(sim: &Simulation<M>, diagnostic: bool) -> Snapshot {
    let model = sim.model();
    let fourier = model.fourier();
    let n = fourier.len();
    let oracle = sim.oracle();
    let mut snap = Snapshot::new();
    snap.meta("model", model.name())
        .meta("step", sim.step_index())
        .meta_f64("time", sim.time())
        .meta_f64("dt", model.dt())
        .meta("damping", format!("{:?}", sim.mode()).to_lowercase())
        .meta("diagnostic", diagnostic);
    match &oracle {
        Ok(o) => {
            snap.meta_f64("ke", o.ke);
            for (k, v) in &o.scalars {
                snap.meta_f64(k, *v);
            }
        }
        Err(e) => {
            snap.meta_f64("ke", f64::NAN).meta("oracle_error", e.to_string().replace('\n', " "));
        }
    }

    snap.push_int("j", (0..n as i64).collect());
    for c in model.grid_columns(sim.state()) {
        snap.push_float(c.name, c.values);
    }
    let wave: Vec<[i64; 2]> = (0..n).map(|i| fourier.wavenumber(i)).collect();
    if model.dimension() == 2 {
        snap.push_int("kx", wave.iter().map(|w| w[0]).collect());
        snap.push_int("ky", wave.iter().map(|w| w[1]).collect());
    } else {
        snap.push_int("k", wave.iter().map(|w| w[0]).collect());
    }
    snap.push_float("lambda", sim.lambda().values().to_vec());
    snap.push_float("epsilon", sim.noise().to_vec());
    let (lc, e) = match oracle {
        Ok(o) => (o.lambda_c, o.e),
        Err(_) => (vec![f64::NAN; n], vec![f64::NAN; n]),
    };
    snap.push_float("lambda_c", lc);
    snap.push_float("e", e);
    snap
}
