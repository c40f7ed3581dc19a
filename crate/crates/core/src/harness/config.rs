//! Experiment configuration: presets, TOML loading with defaults, validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ScenarioSpec, SystemConfig, DEFAULT_BS_IRS_DISTANCE};
use crate::error::{Error, Result};
use crate::estimator::Hyperparams;
use crate::observation::ScheduleKind;

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// The reference simulation setup (25-antenna BS, 256-element IRS).
    Paper,
    /// Small setup for quick runs and tests.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(config_err("preset", format!("unknown preset `{other}`, expected `paper` or `desk`"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        })
    }
}

/// The swept quantity and its values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    Snr { values: Vec<f64> },
    Bandwidth { values: Vec<f64> },
    /// `(Nr_z, Nr_y)` pairs.
    IrsElements { values: Vec<[usize; 2]> },
    Paths { values: Vec<usize> },
    PilotLength { values: Vec<usize> },
    LambdaGrid { lambda1: Vec<f64>, lambda2: Vec<f64> },
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Snr { .. } => "snr",
            Sweep::Bandwidth { .. } => "bandwidth",
            Sweep::IrsElements { .. } => "irs_elements",
            Sweep::Paths { .. } => "paths",
            Sweep::PilotLength { .. } => "pilot_length",
            Sweep::LambdaGrid { .. } => "lambda_grid",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Snr { values } | Sweep::Bandwidth { values } => values.len(),
            Sweep::IrsElements { values } => values.len(),
            Sweep::Paths { values } | Sweep::PilotLength { values } => values.len(),
            Sweep::LambdaGrid { lambda1, lambda2 } => lambda1.len() * lambda2.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Master seed.
    pub seed: u64,
    /// Monte-Carlo trials per sweep point.
    pub trials: usize,
    /// SNR (dB) used when the sweep is not over SNR; `inf` means noiseless.
    pub snr_db: f64,
    pub schedule: ScheduleKind,
    /// Fill `wall_ms` with measured times. Off by default so that output is
    /// a pure function of the configuration.
    pub record_timing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub system: SystemConfig,
    pub scenario: ScenarioSpec,
    pub hyper: Hyperparams,
    pub sweep: Sweep,
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Self::paper(),
            Preset::Desk => Self::desk(),
        }
    }

    pub fn paper() -> Self {
        Self {
            preset: Preset::Paper,
            seed: 0,
            trials: 100,
            snr_db: 20.0,
            schedule: ScheduleKind::OrthogonalDft,
            record_timing: false,
            output: None,
            system: SystemConfig::paper(),
            scenario: ScenarioSpec::paper(),
            hyper: Hyperparams::default(),
            sweep: Sweep::Snr { values: vec![0.0, 10.0, 20.0, 30.0] },
        }
    }

    pub fn desk() -> Self {
        Self {
            preset: Preset::Desk,
            trials: 20,
            system: SystemConfig::desk(),
            // the desk IRS's Rayleigh distance is about 0.31 m
            scenario: ScenarioSpec { paths: 2, ue_distance: (0.1, 0.3), bs_irs_distance: DEFAULT_BS_IRS_DISTANCE },
            hyper: Hyperparams { t_max: 100, ..Hyperparams::default() },
            ..Self::paper()
        }
    }

    /// Resolved parameters of every sweep point, in emission order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let base = |value: String| SweepPoint {
            var: self.sweep.name(),
            value,
            system: self.system.clone(),
            scenario: self.scenario.clone(),
            hyper: self.hyper.clone(),
            snr_db: self.snr_db,
        };
        match &self.sweep {
            Sweep::Snr { values } => values
                .iter()
                .map(|&v| SweepPoint { snr_db: v, ..base(super::format_number(v)) })
                .collect(),
            Sweep::Bandwidth { values } => values
                .iter()
                .map(|&v| {
                    let mut p = base(super::format_number(v));
                    p.system.bandwidth_hz = v;
                    p
                })
                .collect(),
            Sweep::IrsElements { values } => values
                .iter()
                .map(|&[z, y]| {
                    let mut p = base(format!("{z}x{y}"));
                    p.system.nr_z = z;
                    p.system.nr_y = y;
                    p
                })
                .collect(),
            Sweep::Paths { values } => values
                .iter()
                .map(|&l| {
                    let mut p = base(l.to_string());
                    p.scenario.paths = l;
                    p
                })
                .collect(),
            Sweep::PilotLength { values } => values
                .iter()
                .map(|&n| {
                    let mut p = base(n.to_string());
                    p.system.pilots = n;
                    p
                })
                .collect(),
            Sweep::LambdaGrid { lambda1, lambda2 } => lambda1
                .iter()
                .flat_map(|&l1| lambda2.iter().map(move |&l2| (l1, l2)))
                .map(|(l1, l2)| {
                    let mut p = base(format!("{};{}", super::format_number(l1), super::format_number(l2)));
                    p.hyper.lambda1 = l1;
                    p.hyper.lambda2 = l2;
                    p
                })
                .collect(),
        }
    }

    /// Checks every field and every sweep point against the preconditions of
    /// the simulation chain.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if !(self.snr_db.is_finite() || self.snr_db == f64::INFINITY) {
            return Err(config_err("snr_db", format!("must be finite or inf, got {}", self.snr_db)));
        }
        if self.sweep.is_empty() {
            return Err(config_err("sweep", "sweep has no values"));
        }
        for (i, point) in self.points().iter().enumerate() {
            let at = |field: &str| {
                if field_is_swept(&self.sweep, field) {
                    format!("sweep[{i}]")
                } else {
                    field.to_string()
                }
            };
            point.system.validate().map_err(|e| config_err(&at("system"), e.to_string()))?;
            let (p, n_r) = (point.system.pilots, point.system.n_r());
            if p < n_r {
                return Err(config_err(
                    &at("system.pilots"),
                    format!("P = {p} is smaller than N_r = {n_r}; channel recovery needs P ≥ N_r"),
                ));
            }
            point.hyper.validate().map_err(|e| config_err(&at("hyper"), e.to_string()))?;
            if point.scenario.paths == 0 {
                return Err(config_err(&at("scenario.paths"), "at least one path is required"));
            }
            let (lo, hi) = point.scenario.ue_distance;
            let rayleigh = point.system.irs_rayleigh_distance();
            if !(lo > 0.0 && lo <= hi && hi < rayleigh) {
                return Err(config_err(
                    &at("scenario.ue_distance"),
                    format!("range ({lo}, {hi}) m must lie inside (0, {rayleigh:.4}) m, the IRS Rayleigh distance"),
                ));
            }
            if !(point.scenario.bs_irs_distance > 0.0) {
                return Err(config_err("scenario.bs_irs_distance", "must be positive"));
            }
            if !(point.snr_db.is_finite() || point.snr_db == f64::INFINITY) {
                return Err(config_err(&at("snr_db"), format!("must be finite or inf, got {}", point.snr_db)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

fn field_is_swept(sweep: &Sweep, field: &str) -> bool {
    matches!(
        (sweep, field),
        (Sweep::Snr { .. }, "snr_db")
            | (Sweep::Bandwidth { .. }, "system")
            | (Sweep::IrsElements { .. }, "system" | "system.pilots" | "scenario.ue_distance")
            | (Sweep::Paths { .. }, "scenario.paths")
            | (Sweep::PilotLength { .. }, "system.pilots" | "system")
            | (Sweep::LambdaGrid { .. }, "hyper")
    )
}

/// One fully resolved sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub var: &'static str,
    pub value: String,
    pub system: SystemConfig,
    pub scenario: ScenarioSpec,
    pub hyper: Hyperparams,
    pub snr_db: f64,
}

pub(crate) fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

/// Overlays `over` onto `base`. Tables merge key by key; any other value,
/// and the whole `sweep` table, replaces the base value.
fn merge(base: &mut toml::Value, over: toml::Value, depth: usize) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                let replace_whole = depth == 0 && k == "sweep";
                match b.get_mut(&k) {
                    Some(slot) if !replace_whole => merge(slot, v, depth + 1),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses a TOML document, filling unspecified fields from the preset named
/// by `preset_override`, else by the file's `preset` key, else `paper`.
pub fn parse_config(text: &str, preset_override: Option<Preset>) -> Result<ExperimentConfig> {
    let file: toml::Value = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let file_preset = match file.get("preset") {
        Some(toml::Value::String(s)) => Some(s.parse::<Preset>()?),
        Some(_) => return Err(config_err("preset", "must be a string")),
        None => None,
    };
    let preset = preset_override.or(file_preset).unwrap_or(Preset::Paper);
    let mut merged = toml::Value::try_from(ExperimentConfig::preset(preset)).map_err(|e| Error::Parse(e.to_string()))?;
    merge(&mut merged, file, 0);
    if let toml::Value::Table(t) = &mut merged {
        t.insert("preset".into(), toml::Value::String(preset.to_string()));
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, preset_override: Option<Preset>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, preset_override)
}
