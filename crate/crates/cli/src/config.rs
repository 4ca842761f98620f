//! JSON run configuration. Values resolve as `--set` flags, then the config
//! file, then built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qi_cd_core::{NumericsConfig, ScenarioParams};

use crate::error::{CliError, CliResult};
use crate::quantities::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Fixed,
    Rayleigh,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Fixed => "fixed",
            Model::Rayleigh => "rayleigh",
        }
    }
}

/// Physical parameters without the mode count. `kappa` is the known
/// reflectivity for the fixed model and the mean for the Rayleigh model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub n_s: f64,
    pub n_e: f64,
    pub kappa: f64,
    pub model: Option<Model>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_s: 0.001,
            n_e: 20.0,
            kappa: 0.01,
            model: None,
        }
    }
}

impl Scenario {
    pub fn params(&self, model: Model, m: u64) -> ScenarioParams {
        match model {
            Model::Fixed => ScenarioParams::fixed(self.n_s, self.n_e, self.kappa, m),
            Model::Rayleigh => ScenarioParams::rayleigh(self.n_s, self.n_e, self.kappa, m),
        }
    }

    /// The model requested by the config, or `default` when none was given.
    pub fn model_or(&self, default: Model) -> Model {
        self.model.unwrap_or(default)
    }

    /// Rejects an explicit model that a figure cannot honour.
    pub fn require_model(&self, figure: &str, model: Model) -> CliResult<()> {
        match self.model {
            Some(m) if m != model => Err(CliError::validation(format!(
                "{figure} uses the {} model; remove `model = {}` from the config",
                model.name(),
                m.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn validate(&self, model: Model) -> CliResult<()> {
        self.params(model, 1).validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MGrid {
    Geometric {
        start: f64,
        stop: f64,
        points: usize,
    },
    Linear {
        start: f64,
        stop: f64,
        points: usize,
    },
    Explicit(Vec<u64>),
}

impl MGrid {
    pub fn values(&self) -> CliResult<Vec<u64>> {
        let ms: Vec<u64> = match *self {
            MGrid::Explicit(ref v) => v.clone(),
            MGrid::Geometric {
                start,
                stop,
                points,
            }
            | MGrid::Linear {
                start,
                stop,
                points,
            } => {
                if points == 0 || !(start >= 1.0) || !(stop >= start) || !stop.is_finite() {
                    return Err(CliError::validation(format!(
                        "m_grid needs 1 <= start <= stop and points >= 1 (got {start}, {stop}, {points})"
                    )));
                }
                let geometric = matches!(self, MGrid::Geometric { .. });
                (0..points)
                    .map(|i| {
                        let t = if points == 1 {
                            0.0
                        } else {
                            i as f64 / (points - 1) as f64
                        };
                        let m = if geometric {
                            (start.ln() + (stop / start).ln() * t).exp()
                        } else {
                            start + (stop - start) * t
                        };
                        m.round() as u64
                    })
                    .collect()
            }
        };
        if ms.is_empty() {
            return Err(CliError::validation("m_grid is empty"));
        }
        if ms[0] == 0 {
            return Err(CliError::validation("m_grid values must be >= 1"));
        }
        if let Some(w) = ms.windows(2).find(|w| w[1] <= w[0]) {
            return Err(CliError::validation(format!(
                "m_grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub m_grid: Option<MGrid>,
    pub quantities: Vec<Quantity>,
    /// Output file for `sweep`, output directory for `figure`.
    pub output: Option<PathBuf>,
    pub numerics: NumericsConfig,
    /// Brightness values for the exponent-ratio figure.
    pub n_s_grid: Option<Vec<f64>>,
    /// Digitised `m,p` pairs copied next to the fading figure.
    pub sfg_overlay: Option<PathBuf>,
    /// Add linear-probability columns next to the log columns.
    pub linear: bool,
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    /// Applies `key=value` overrides. Keys are dotted paths into the config
    /// document (`numerics.kappa_nodes`); `n_s`, `n_e`, `kappa` and `model`
    /// are shorthands for their `scenario.` paths. Values are parsed as JSON
    /// and fall back to plain strings.
    pub fn with_overrides(self, sets: &[String]) -> CliResult<Config> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut doc = serde_json::to_value(&self).expect("config serialises");
        for set in sets {
            let (key, raw) = set.split_once('=').ok_or_else(|| {
                CliError::validation(format!("--set expects key=value, got `{set}`"))
            })?;
            let key = match key.trim() {
                k @ ("n_s" | "n_e" | "kappa" | "model") => format!("scenario.{k}"),
                k => k.to_string(),
            };
            let value = serde_json::from_str(raw.trim())
                .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            set_path(&mut doc, &key, value)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::validation(format!("invalid --set: {e}")))
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::validation(format!(
                "empty component in --set key `{key}`"
            )));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let Value::Object(map) = node else {
            return Err(CliError::validation(format!(
                "--set key `{key}`: `{part}` is not inside an object"
            )));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one part")
}
