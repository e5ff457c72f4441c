//! Run configuration: a flat TOML table of scalar keys per model.
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults. An empty file yields the defaults of the chosen model.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::controller::ControllerConfig;
use crate::driver::DampingMode;
use crate::error::{MarsError, Result};
use crate::models::heleshaw::HeleShawParams;
use crate::models::ks2d::KsParams;
use crate::models::thinfilm::ThinFilmParams;

/// Smallest `epsilon_u` that sits above the round-off level of `ε(k)`.
pub const EPSILON_U_FLOOR: f64 = 1e-14;

/// Output directory used when neither the config nor the environment names one.
pub const DEFAULT_OUT_DIR: &str = "mars_out";

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "MARS_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    ThinFilm,
    Ks2d,
    HeleShaw,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::ThinFilm, ModelKind::Ks2d, ModelKind::HeleShaw];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::ThinFilm => "thinfilm",
            ModelKind::Ks2d => "ks2d",
            ModelKind::HeleShaw => "heleshaw",
        }
    }

    /// Threshold `ε_u` used when the config does not set one.
    pub fn default_epsilon_u(self) -> f64 {
        match self {
            ModelKind::ThinFilm => 1e-8,
            ModelKind::Ks2d => 1e-5,
            ModelKind::HeleShaw => 1e-10,
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            ModelKind::ThinFilm => 1.0,
            ModelKind::Ks2d => 100.0,
            ModelKind::HeleShaw => 0.04,
        }
    }

    pub fn default_snapshot_every(self) -> u64 {
        match self {
            ModelKind::ThinFilm => 100,
            ModelKind::Ks2d => 1000,
            ModelKind::HeleShaw => 100,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = MarsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thinfilm" => Ok(ModelKind::ThinFilm),
            "ks2d" => Ok(ModelKind::Ks2d),
            "heleshaw" => Ok(ModelKind::HeleShaw),
            other => Err(MarsError::validation(
                "model",
                format!("unknown model `{other}` (expected thinfilm, ks2d or heleshaw)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    ThinFilm(ThinFilmParams),
    Ks2d(KsParams),
    HeleShaw(HeleShawParams),
}

impl ModelParams {
    pub fn defaults(kind: ModelKind) -> Self {
        match kind {
            ModelKind::ThinFilm => ModelParams::ThinFilm(ThinFilmParams::default()),
            ModelKind::Ks2d => ModelParams::Ks2d(KsParams::default()),
            ModelKind::HeleShaw => ModelParams::HeleShaw(HeleShawParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::ThinFilm(_) => ModelKind::ThinFilm,
            ModelParams::Ks2d(_) => ModelKind::Ks2d,
            ModelParams::HeleShaw(_) => ModelKind::HeleShaw,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            ModelParams::ThinFilm(p) => p.dt,
            ModelParams::Ks2d(p) => p.dt,
            ModelParams::HeleShaw(p) => p.dt,
        }
    }

    /// Seed of the initial noise, if the model has one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelParams::ThinFilm(_) => None,
            ModelParams::Ks2d(p) => Some(p.seed),
            ModelParams::HeleShaw(p) => Some(p.seed),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ModelParams::ThinFilm(_) => {}
            ModelParams::Ks2d(p) => p.seed = seed,
            ModelParams::HeleShaw(p) => p.seed = seed,
        }
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub controller: ControllerConfig,
    pub damping: DampingMode,
    pub t_end: f64,
    /// Macro steps between snapshots.
    pub snapshot_every: u64,
    pub out_dir: PathBuf,
    /// Non-fatal remarks raised while validating.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn defaults(kind: ModelKind) -> Self {
        Self {
            params: ModelParams::defaults(kind),
            controller: ControllerConfig::new(kind.default_epsilon_u()),
            damping: DampingMode::Adaptive,
            t_end: kind.default_t_end(),
            snapshot_every: kind.default_snapshot_every(),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            warnings: Vec::new(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    /// Number of macro steps needed to reach `t_end`.
    pub fn total_steps(&self) -> u64 {
        let ratio = self.t_end / self.params.dt();
        // tolerate t_end values that are a whole number of steps up to rounding
        (ratio * (1.0 - 1e-12)).ceil().max(0.0) as u64
    }

    /// Apply output-directory overrides: command line, then `MARS_OUT`,
    /// then whatever the config file said.
    pub fn resolve_out_dir(&mut self, cli: Option<PathBuf>, env: Option<std::ffi::OsString>) {
        if let Some(dir) = cli {
            self.out_dir = dir;
        } else if let Some(dir) = env.filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
    }

    /// Re-check the cross-field constraints after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        positive("t_end", self.t_end)?;
        if self.snapshot_every == 0 {
            return Err(MarsError::validation("snapshot_every", "must be at least 1"));
        }
        self.controller.validate()
    }
}

/// Parse and validate the text of a config file for `kind`.
pub fn validate_config(kind: ModelKind, raw: &str) -> Result<RunConfig> {
    let table: toml::Table = raw
        .parse()
        .map_err(|e: toml::de::Error| MarsError::Config(format!("malformed config: {}", e.message())))?;
    let mut keys = Keys { table };
    let mut cfg = RunConfig::defaults(kind);

    match &mut cfg.params {
        ModelParams::ThinFilm(p) => {
            if let Some(n) = keys.count(&["N", "n"])? {
                p.n = n;
            }
            keys.float("dt", &mut p.dt)?;
            keys.float("A", &mut p.amplitude)?;
            keys.float("h0", &mut p.h0)?;
            if let Some(v) = keys.take_float("lambda0")? {
                p.lambda0 = Some(v);
            }
            if let Some(v) = keys.count(&["n_half"])? {
                p.n_half = v;
            }
        }
        ModelParams::Ks2d(p) => {
            if let Some(v) = keys.count(&["nx"])? {
                p.nx = v;
            }
            if let Some(v) = keys.count(&["ny"])? {
                p.ny = v;
            }
            keys.float("nu", &mut p.nu)?;
            keys.float("dt", &mut p.dt)?;
            keys.float("amplitude", &mut p.amplitude)?;
            if let Some(v) = keys.count(&["seed"])? {
                p.seed = v as u64;
            }
        }
        ModelParams::HeleShaw(p) => {
            if let Some(n) = keys.count(&["N", "n"])? {
                p.n = n;
            }
            keys.float("dt", &mut p.dt)?;
            keys.float("S", &mut p.s)?;
            keys.float("R", &mut p.r)?;
            keys.float("noise_amplitude", &mut p.noise_amplitude)?;
            if let Some(v) = keys.count(&["seed"])? {
                p.seed = v as u64;
            }
            if let Some(v) = keys.count(&["n_half"])? {
                p.n_half = v;
            }
            keys.boolean("equal_arclength", &mut p.equal_arclength)?;
        }
    }

    let c = &mut cfg.controller;
    keys.float("epsilon_u", &mut c.epsilon_u)?;
    keys.float("up_factor", &mut c.up_factor)?;
    keys.float("down_factor", &mut c.down_factor)?;
    keys.float("lambda_floor", &mut c.lambda_floor)?;
    if let Some(v) = keys.take_float("lambda_seed")? {
        c.lambda_seed = Some(v);
    }
    keys.boolean("reject_noisy_steps", &mut c.reject_noisy_steps)?;

    keys.float("t_end", &mut cfg.t_end)?;
    if let Some(v) = keys.count(&["snapshot_every"])? {
        cfg.snapshot_every = v as u64;
    }
    if let Some(v) = keys.string("damping")? {
        cfg.damping = match v.as_str() {
            "adaptive" => DampingMode::Adaptive,
            "fixed" => DampingMode::Fixed,
            "explicit" => DampingMode::Explicit,
            other => {
                return Err(MarsError::validation(
                    "damping",
                    format!("`{other}` is not one of adaptive, fixed, explicit"),
                ))
            }
        };
    }
    if let Some(v) = keys.string("out_dir")? {
        cfg.out_dir = PathBuf::from(v);
    }

    if let Some(extra) = keys.table.keys().next() {
        return Err(MarsError::validation(extra, format!("unknown key for model {kind}")));
    }

    positive("dt", cfg.params.dt())?;
    cfg.validate()?;
    // model constructors carry the remaining field checks
    crate::driver::run::build_check(&cfg.params)?;

    if cfg.controller.epsilon_u < EPSILON_U_FLOOR {
        let msg = format!(
            "epsilon_u = {:e} is below the round-off floor {EPSILON_U_FLOOR:e}; \
             every mode will read as noisy",
            cfg.controller.epsilon_u
        );
        log::warn!("{msg}");
        cfg.warnings.push(msg);
    }
    Ok(cfg)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MarsError::validation(field, format!("must be positive, got {v}")))
    }
}

struct Keys {
    table: toml::Table,
}

impl Keys {
    /// Remove the first of `names` present; two spellings at once is an error.
    fn take(&mut self, names: &[&str]) -> Result<Option<(String, toml::Value)>> {
        let present: Vec<&str> = names.iter().copied().filter(|n| self.table.contains_key(*n)).collect();
        if present.len() > 1 {
            return Err(MarsError::validation(present[1], format!("duplicates `{}`", present[0])));
        }
        Ok(present
            .first()
            .map(|n| (n.to_string(), self.table.remove(*n).expect("key checked"))))
    }

    fn take_float(&mut self, name: &str) -> Result<Option<f64>> {
        match self.take(&[name])? {
            None => Ok(None),
            Some((_, toml::Value::Float(v))) => Ok(Some(v)),
            Some((_, toml::Value::Integer(v))) => Ok(Some(v as f64)),
            Some((k, v)) => Err(MarsError::validation(&k, format!("expected a number, got {}", v.type_str()))),
        }
    }

    fn float(&mut self, name: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take_float(name)? {
            *slot = v;
        }
        Ok(())
    }

    fn count(&mut self, names: &[&str]) -> Result<Option<usize>> {
        match self.take(names)? {
            None => Ok(None),
            Some((_, toml::Value::Integer(v))) if v >= 0 => Ok(Some(v as usize)),
            Some((k, toml::Value::Integer(v))) => Err(MarsError::validation(&k, format!("must be nonnegative, got {v}"))),
            Some((k, v)) => Err(MarsError::validation(&k, format!("expected an integer, got {}", v.type_str()))),
        }
    }

    fn boolean(&mut self, name: &str, slot: &mut bool) -> Result<()> {
        match self.take(&[name])? {
            None => Ok(()),
            Some((_, toml::Value::Boolean(v))) => {
                *slot = v;
                Ok(())
            }
            Some((k, v)) => Err(MarsError::validation(&k, format!("expected true or false, got {}", v.type_str()))),
        }
    }

    fn string(&mut self, name: &str) -> Result<Option<String>> {
        match self.take(&[name])? {
            None => Ok(None),
            Some((_, toml::Value::String(v))) => Ok(Some(v)),
            Some((k, v)) => Err(MarsError::validation(&k, format!("expected a string, got {}", v.type_str()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_model_defaults() {
        for kind in ModelKind::ALL {
            let cfg = validate_config(kind, "").unwrap();
            assert_eq!(cfg, RunConfig::defaults(kind));
        }
        let tf = validate_config(ModelKind::ThinFilm, "").unwrap();
        assert_eq!(tf.controller.epsilon_u, 1e-8);
        assert_eq!(tf.total_steps(), 10_000);
    }

    #[test]
    fn zero_dt_names_the_field() {
        for kind in ModelKind::ALL {
            match validate_config(kind, "dt = 0.0") {
                Err(MarsError::Validation { field, .. }) => assert_eq!(field, "dt"),
                other => panic!("{kind}: {other:?}"),
            }
        }
    }

    #[test]
    fn tiny_threshold_warns() {
        let cfg = validate_config(ModelKind::ThinFilm, "epsilon_u = 1e-16").unwrap();
        assert_eq!(cfg.warnings.len(), 1);
        assert!(validate_config(ModelKind::ThinFilm, "epsilon_u = 1e-12").unwrap().warnings.is_empty());
    }

    #[test]
    fn keys_are_read_and_checked() {
        let cfg = validate_config(ModelKind::HeleShaw, "N = 256\nS = 0.2\nR = 10\nseed = 7\ndamping = \"fixed\"").unwrap();
        match cfg.params {
            ModelParams::HeleShaw(p) => {
                assert_eq!((p.n, p.s, p.r, p.seed), (256, 0.2, 10.0, 7));
            }
            _ => unreachable!(),
        }
        assert_eq!(cfg.damping, DampingMode::Fixed);
        assert!(matches!(
            validate_config(ModelKind::ThinFilm, "nu = 1.0"),
            Err(MarsError::Validation { field, .. }) if field == "nu"
        ));
        assert!(matches!(
            validate_config(ModelKind::Ks2d, "nx = 1.5"),
            Err(MarsError::Validation { field, .. }) if field == "nx"
        ));
        assert!(matches!(
            validate_config(ModelKind::ThinFilm, "N = 64\nn = 64"),
            Err(MarsError::Validation { .. })
        ));
        assert!(matches!(validate_config(ModelKind::ThinFilm, "dt = "), Err(MarsError::Config(_))));
        assert!(matches!(
            validate_config(ModelKind::ThinFilm, "N = 4"),
            Err(MarsError::Validation { field, .. }) if field == "n"
        ));
    }

    #[test]
    fn out_dir_precedence() {
        let mut cfg = validate_config(ModelKind::Ks2d, "out_dir = \"from_file\"").unwrap();
        cfg.resolve_out_dir(None, None);
        assert_eq!(cfg.out_dir, PathBuf::from("from_file"));
        cfg.resolve_out_dir(None, Some("from_env".into()));
        assert_eq!(cfg.out_dir, PathBuf::from("from_env"));
        cfg.resolve_out_dir(Some("from_cli".into()), Some("from_env".into()));
        assert_eq!(cfg.out_dir, PathBuf::from("from_cli"));
    }

    #[test]
    fn step_count_rounds_to_whole_steps() {
        let mut cfg = RunConfig::defaults(ModelKind::HeleShaw);
        cfg.t_end = 100.0 * 3.125e-5;
        assert_eq!(cfg.total_steps(), 100);
        cfg.t_end = 100.5 * 3.125e-5;
        assert_eq!(cfg.total_steps(), 101);
    }
}
