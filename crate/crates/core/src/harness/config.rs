//! Experiment configuration: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key must be one of the [`ExperimentConfig`]
//! field names; anything else is rejected.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::array::ArrayConfig;
use crate::baselines::Algorithm;
use crate::scenario::MAX_OMEGA;
use crate::tracker::StepSchedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    StaticMse,
    Dynamic,
    CrlbSurface,
    Analysis,
}

impl Mode {
    pub fn key(&self) -> &'static str {
        match self {
            Mode::StaticMse => "static_mse",
            Mode::Dynamic => "dynamic",
            Mode::CrlbSurface => "crlb_surface",
            Mode::Analysis => "analysis",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "static_mse" => Ok(Mode::StaticMse),
            "dynamic" => Ok(Mode::Dynamic),
            "crlb_surface" => Ok(Mode::CrlbSurface),
            "analysis" => Ok(Mode::Analysis),
            other => Err(ConfigError::Value {
                key: "mode".into(),
                msg: format!("unknown mode '{other}'"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Diminishing,
    Constant,
}

impl FromStr for StepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "diminishing" => Ok(StepKind::Diminishing),
            "constant" => Ok(StepKind::Constant),
            other => Err(format!("expected diminishing or constant, got '{other}'")),
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Diminishing => "diminishing",
            StepKind::Constant => "constant",
        })
    }
}

/// Every tunable of an experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub trials: usize,
    pub slots: usize,
    /// Transmit SNR `|s|²/σ₀²` in dB; also used as the data SNR for rates.
    pub snr_db: f64,
    pub m: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub pilot_re: f64,
    pub pilot_im: f64,
    pub algorithms: Vec<Algorithm>,
    pub omega_list: Vec<f64>,
    pub seed: u64,
    pub step: StepKind,
    pub alpha: f64,
    pub n0: usize,
    pub step_value: f64,
    /// Coarse-grid size; 0 selects `4·m`.
    pub m0: usize,
    pub kappa_db: f64,
    pub grid_steps: usize,
    pub x_true: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub x_hat: f64,
    pub beta_hat_re: f64,
    pub beta_hat_im: f64,
    pub follow_beams: bool,
    pub tol_f: f64,
    pub tol_eig: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults for a mode.
    pub fn defaults(mode: Mode) -> Self {
        let dynamic = mode == Mode::Dynamic;
        Self {
            mode,
            trials: if dynamic { 500 } else { 2000 },
            slots: 2000,
            snr_db: 5.0,
            m: 32,
            spacing: 0.5,
            pilot_re: 0.5,
            pilot_im: 0.5,
            algorithms: Algorithm::ALL.to_vec(),
            omega_list: vec![0.0, 0.005, 0.01, 0.019, 0.03, 0.04],
            seed: 1,
            step: if dynamic {
                StepKind::Constant
            } else {
                StepKind::Diminishing
            },
            alpha: 1.0,
            n0: 0,
            step_value: 1.0,
            m0: 0,
            kappa_db: 15.0,
            grid_steps: 201,
            x_true: 0.2,
            beta_re: 1.0,
            beta_im: 0.0,
            x_hat: 0.2,
            beta_hat_re: 1.0,
            beta_hat_im: 0.0,
            follow_beams: false,
            tol_f: 1e-6,
            tol_eig: 1e-3,
            threads: 0,
            out_dir: PathBuf::from("out"),
        }
    }

    /// Parses a config file. `mode_hint` (the CLI subcommand) supplies the
    /// mode when the file has none and must agree with it otherwise.
    pub fn parse(text: &str, mode_hint: Option<Mode>) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let file_mode = pairs
            .iter()
            .find(|(_, k, _)| k == "mode")
            .map(|(_, _, v)| v.parse::<Mode>())
            .transpose()?;
        let mode = match (file_mode, mode_hint) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::Invalid(format!(
                    "config mode '{a}' does not match subcommand '{b}'"
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(ConfigError::Invalid("no mode given".into())),
        };
        let mut cfg = Self::defaults(mode);
        let mut seen = std::collections::HashSet::new();
        for (line, k, v) in &pairs {
            if !seen.insert(k.clone()) {
                return Err(ConfigError::Syntax {
                    line: *line,
                    msg: format!("duplicate key '{k}'"),
                });
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| ConfigError::Value {
                key: key.into(),
                msg: format!("'{v}': {e}"),
            })
        }
        match key {
            "mode" => self.mode = value.parse()?,
            "trials" => self.trials = num(key, value)?,
            "slots" => self.slots = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "spacing" => self.spacing = num(key, value)?,
            "pilot_re" => self.pilot_re = num(key, value)?,
            "pilot_im" => self.pilot_im = num(key, value)?,
            "algorithms" => {
                self.algorithms = split_list(value)
                    .map(|s| {
                        s.parse::<Algorithm>().map_err(|e| ConfigError::Value {
                            key: key.into(),
                            msg: e.to_string(),
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
            "omega_list" => {
                self.omega_list = split_list(value)
                    .map(|s| num::<f64>(key, s))
                    .collect::<Result<_, _>>()?
            }
            "seed" => self.seed = num(key, value)?,
            "step" => {
                self.step = value
                    .parse()
                    .map_err(|msg| ConfigError::Value { key: key.into(), msg })?
            }
            "alpha" => self.alpha = num(key, value)?,
            "n0" => self.n0 = num(key, value)?,
            "step_value" => self.step_value = num(key, value)?,
            "m0" => self.m0 = num(key, value)?,
            "kappa_db" => self.kappa_db = num(key, value)?,
            "grid_steps" => self.grid_steps = num(key, value)?,
            "x_true" => self.x_true = num(key, value)?,
            "beta_re" => self.beta_re = num(key, value)?,
            "beta_im" => self.beta_im = num(key, value)?,
            "x_hat" => self.x_hat = num(key, value)?,
            "beta_hat_re" => self.beta_hat_re = num(key, value)?,
            "beta_hat_im" => self.beta_hat_im = num(key, value)?,
            "follow_beams" => self.follow_beams = num(key, value)?,
            "tol_f" => self.tol_f = num(key, value)?,
            "tol_eig" => self.tol_eig = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.trials < 1 {
            return bad("trials must be at least 1");
        }
        if self.slots < 1 {
            return bad("slots must be at least 1");
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite");
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty");
        }
        if self.omega_list.iter().any(|w| !(0.0..=MAX_OMEGA).contains(w)) {
            return bad("omega values must lie in [0, 0.04]");
        }
        if self.mode == Mode::Dynamic && self.omega_list.is_empty() {
            return bad("omega_list must not be empty for dynamic runs");
        }
        if self.m0 != 0 && self.m0 < self.m {
            return bad("m0 must be at least m");
        }
        if self.grid_steps < 3 {
            return bad("grid_steps must be at least 3");
        }
        if !self.kappa_db.is_finite() {
            return bad("kappa_db must be finite");
        }
        self.array().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.schedule().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn array(&self) -> crate::Result<ArrayConfig<f64>> {
        ArrayConfig::from_snr_db(
            self.m,
            self.spacing,
            Complex::new(self.pilot_re, self.pilot_im),
            self.snr_db,
        )
    }

    pub fn schedule(&self) -> crate::Result<StepSchedule<f64>> {
        match self.step {
            StepKind::Diminishing => StepSchedule::diminishing(self.alpha, self.n0),
            StepKind::Constant => StepSchedule::constant(self.step_value),
        }
    }

    /// Coarse-grid size with the `4·m` default applied.
    pub fn coarse_grid(&self) -> usize {
        if self.m0 == 0 {
            4 * self.m
        } else {
            self.m0
        }
    }

    /// `key = value` lines of every setting that affects results. The output
    /// directory and thread count are left out so reruns compare byte-equal.
    pub fn echo(&self) -> String {
        let list = |v: &[String]| v.join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("mode", self.mode.to_string());
        kv("trials", self.trials.to_string());
        kv("slots", self.slots.to_string());
        kv("snr_db", self.snr_db.to_string());
        kv("m", self.m.to_string());
        kv("spacing", self.spacing.to_string());
        kv("pilot_re", self.pilot_re.to_string());
        kv("pilot_im", self.pilot_im.to_string());
        kv(
            "algorithms",
            list(&self.algorithms.iter().map(|a| a.key().to_string()).collect::<Vec<_>>()),
        );
        kv(
            "omega_list",
            list(&self.omega_list.iter().map(|w| w.to_string()).collect::<Vec<_>>()),
        );
        kv("seed", self.seed.to_string());
        kv("step", self.step.to_string());
        kv("alpha", self.alpha.to_string());
        kv("n0", self.n0.to_string());
        kv("step_value", self.step_value.to_string());
        kv("m0", self.coarse_grid().to_string());
        kv("kappa_db", self.kappa_db.to_string());
        kv("grid_steps", self.grid_steps.to_string());
        if self.mode == Mode::Analysis {
            kv("x_true", self.x_true.to_string());
            kv("beta_re", self.beta_re.to_string());
            kv("beta_im", self.beta_im.to_string());
            kv("x_hat", self.x_hat.to_string());
            kv("beta_hat_re", self.beta_hat_re.to_string());
            kv("beta_hat_im", self.beta_hat_im.to_string());
            kv("follow_beams", self.follow_beams.to_string());
            kv("tol_f", self.tol_f.to_string());
            kv("tol_eig", self.tol_eig.to_string());
        }
        out
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}
