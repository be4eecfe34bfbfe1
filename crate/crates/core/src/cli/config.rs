//! Flat kebab-case run configuration, loaded from JSON and `--key value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::network::{ActivationKind, ActivationSpec, EncodingKind, EncodingSpec, NetworkSpec};
use crate::training::{LrSchedule, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    FitImage,
    ReconCt,
    FitOccupancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    Exponential,
}

/// Everything a training command needs. Optional fields take task-specific
/// defaults in [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub task: Option<TaskKind>,
    pub activation: ActivationKind,
    pub omega: Option<f64>,
    pub scale: Option<f64>,
    pub width: usize,
    pub hidden_layers: usize,
    /// 1 is the dense baseline.
    pub splits: usize,
    pub split_bias: bool,
    /// Also split the input layer of split networks.
    pub split_input: bool,
    pub encoding: EncodingKind,
    pub frequencies: usize,
    pub final_sigmoid: Option<bool>,
    pub iterations: Option<usize>,
    pub learning_rate: Option<f64>,
    /// 0 is full batch.
    pub batch_size: Option<usize>,
    pub lr_schedule: ScheduleKind,
    pub lr_final_ratio: f64,
    pub log_every: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub wall_clock: bool,
    /// Side length of the bundled image or phantom when no input is given.
    pub size: usize,
    pub clip: bool,
    pub angles: usize,
    pub detectors: usize,
    pub sinogram: Option<PathBuf>,
    pub shape: String,
    pub volume: Option<PathBuf>,
    pub samples: usize,
    pub eval_resolution: usize,
    /// Report unsquared chamfer distances.
    pub root: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: None,
            activation: ActivationKind::Relu,
            omega: None,
            scale: None,
            width: 64,
            hidden_layers: 2,
            splits: 1,
            split_bias: true,
            split_input: true,
            encoding: EncodingKind::None,
            frequencies: 10,
            final_sigmoid: None,
            iterations: None,
            learning_rate: None,
            batch_size: None,
            lr_schedule: ScheduleKind::Exponential,
            lr_final_ratio: 0.1,
            log_every: 100,
            seed: 0,
            input: None,
            output: PathBuf::from("out"),
            wall_clock: true,
            size: 64,
            clip: false,
            angles: 40,
            detectors: 96,
            sinogram: None,
            shape: "sphere".into(),
            volume: None,
            samples: 20_000,
            eval_resolution: 64,
            root: false,
        }
    }
}

impl RunConfig {
    /// Fills task-dependent defaults and checks every precondition.
    pub fn resolve(mut self, task: TaskKind) -> Result<Self> {
        if let Some(t) = self.task {
            if t != task {
                return Err(Error::config(format!("config is for task {t:?}, command runs {task:?}")));
            }
        }
        self.task = Some(task);
        self.omega.get_or_insert(self.activation.default_omega());
        self.scale.get_or_insert(self.activation.default_scale());
        self.final_sigmoid.get_or_insert(task == TaskKind::FitOccupancy);
        self.iterations.get_or_insert(match task {
            TaskKind::FitOccupancy => 1000,
            _ => 2000,
        });
        let periodic = matches!(self.activation, ActivationKind::Sine | ActivationKind::VariablePeriodic);
        self.learning_rate.get_or_insert(if task == TaskKind::ReconCt && periodic { 5e-4 } else { 1e-3 });
        self.batch_size.get_or_insert(match task {
            TaskKind::FitOccupancy => 4096,
            _ => 0,
        });
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        self.network_spec()?.validate()?;
        self.train_config().validate()?;
        if self.splits == 0 {
            return Err(Error::config("splits must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(Error::config("log-every must be at least 1"));
        }
        match self.task {
            Some(TaskKind::FitImage) if self.input.is_none() && self.size == 0 => {
                Err(Error::config("size must be positive"))
            }
            Some(TaskKind::ReconCt) => {
                if self.angles == 0 || self.detectors == 0 {
                    return Err(Error::config("angles and detectors must be positive"));
                }
                if self.size < 16 && self.input.is_none() {
                    return Err(Error::config("phantom size must be at least 16"));
                }
                if self.input.is_some() && self.sinogram.is_some() {
                    return Err(Error::config("give either an input image or a sinogram, not both"));
                }
                Ok(())
            }
            Some(TaskKind::FitOccupancy) => {
                if self.samples == 0 {
                    return Err(Error::config("samples must be positive"));
                }
                if self.eval_resolution < 8 {
                    return Err(Error::config("eval-resolution must be at least 8"));
                }
                if self.volume.is_none() {
                    self.shape.parse::<crate::tasks::AnalyticShape>()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn activation_spec(&self) -> ActivationSpec {
        ActivationSpec {
            kind: self.activation,
            omega: self.omega.unwrap_or(self.activation.default_omega()),
            scale: self.scale.unwrap_or(self.activation.default_scale()),
        }
    }

    pub fn encoding_spec(&self) -> EncodingSpec {
        match self.encoding {
            EncodingKind::None => EncodingSpec::none(),
            EncodingKind::Positional => EncodingSpec::positional(self.frequencies),
        }
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let (d_in, d_out) = match self.task {
            Some(TaskKind::FitOccupancy) => (3, 1),
            Some(TaskKind::ReconCt) => (2, 1),
            _ => (2, 3),
        };
        self.network_spec_with(d_in, d_out)
    }

    /// Network for explicit input/output sizes (image channels are only known
    /// after loading).
    pub fn network_spec_with(&self, d_in: usize, d_out: usize) -> Result<NetworkSpec> {
        let mut spec = NetworkSpec::baseline(d_in, d_out, self.width, self.hidden_layers, self.activation_spec())
            .with_encoding(self.encoding_spec())
            .with_final_sigmoid(self.final_sigmoid.unwrap_or(false));
        spec.num_splits = if self.splits >= 2 { self.splits } else { 0 };
        spec.split_bias = self.split_bias;
        spec.split_input = self.split_input;
        spec.validate()?;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations.unwrap_or(2000),
            learning_rate: self.learning_rate.unwrap_or(1e-3),
            batch_size: self.batch_size.unwrap_or(0),
            seed: self.seed,
            lr_schedule: match self.lr_schedule {
                ScheduleKind::Constant => LrSchedule::Constant,
                ScheduleKind::Exponential => LrSchedule::Exponential { final_ratio: self.lr_final_ratio },
            },
            log_every: self.log_every,
            record_wall_time: self.wall_clock,
        }
    }
}

/// Options of the `analyze` subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct AnalyzeConfig {
    pub width: usize,
    pub splits: usize,
    pub activation: ActivationKind,
    pub omega: Option<f64>,
    pub scale: Option<f64>,
    pub hidden_layers: usize,
    pub seed: u64,
    /// Number of independent initializations (ntk).
    pub seeds: usize,
    /// Sample points (ntk).
    pub samples: usize,
    /// Feature grid side (features) or image side (sweep).
    pub resolution: usize,
    /// Neurons in the first layer (features).
    pub neurons: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub widths: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub split_values: Vec<usize>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub output: PathBuf,
    pub wall_clock: bool,
}

/// Accepts `8` as well as `[8, 16]`, so a single-item list needs no comma.
fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            width: 256,
            splits: 2,
            activation: ActivationKind::Relu,
            omega: None,
            scale: None,
            hidden_layers: 2,
            seed: 0,
            seeds: 5,
            samples: 64,
            resolution: 64,
            neurons: 9,
            widths: vec![64],
            split_values: vec![1, 2, 4, 8, 16],
            iterations: 500,
            learning_rate: 1e-3,
            output: PathBuf::from("out"),
            wall_clock: true,
        }
    }
}

impl AnalyzeConfig {
    pub fn activation_spec(&self) -> ActivationSpec {
        ActivationSpec {
            kind: self.activation,
            omega: self.omega.unwrap_or(self.activation.default_omega()),
            scale: self.scale.unwrap_or(self.activation.default_scale()),
        }
    }
}

/// Parses `--key value`, `--key=value` and bare `--flag` (true) tokens.
/// Values are read as JSON when they parse, comma lists become arrays, and
/// anything else is a string.
pub fn parse_overrides(tokens: &[String]) -> Result<Map<String, Value>> {
    let mut out = Map::new();
    let mut k = 0;
    while k < tokens.len() {
        let tok = &tokens[k];
        let Some(body) = tok.strip_prefix("--") else {
            return Err(Error::config(format!("expected --key, found {tok:?}")));
        };
        let (key, raw) = match body.split_once('=') {
            Some((key, v)) => (key.to_string(), Some(v.to_string())),
            None => {
                let next = tokens.get(k + 1).filter(|t| !t.starts_with("--") || t.parse::<f64>().is_ok());
                if next.is_some() {
                    k += 1;
                }
                (body.to_string(), next.cloned())
            }
        };
        if key.is_empty() {
            return Err(Error::config("empty option name"));
        }
        let value = match raw {
            None => Value::Bool(true),
            Some(v) => parse_scalar_or_list(&v),
        };
        out.insert(key, value);
        k += 1;
    }
    Ok(out)
}

fn parse_scalar(v: &str) -> Value {
    match serde_json::from_str::<Value>(v) {
        Ok(j @ (Value::Number(_) | Value::Bool(_) | Value::Null | Value::Array(_))) => j,
        _ => Value::String(v.to_string()),
    }
}

fn parse_scalar_or_list(v: &str) -> Value {
    if v.contains(',') && !v.starts_with('[') {
        let items: Vec<Value> = v.split(',').map(|s| parse_scalar(s.trim())).collect();
        if items.iter().all(Value::is_number) {
            return Value::Array(items);
        }
    }
    parse_scalar(v)
}

/// Reads the config file (if any), applies overrides and deserializes.
pub fn load<T: DeserializeOwned>(config: Option<&Path>, overrides: &[String]) -> Result<T> {
    let mut map = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => m,
                _ => return Err(Error::config(format!("{} must hold a JSON object", path.display()))),
            }
        }
        None => Map::new(),
    };
    for (k, v) in parse_overrides(overrides)? {
        map.insert(k, v);
    }
    // a config echo from a report may carry the task; drop nulls for optional keys
    map.retain(|_, v| !v.is_null());
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn override_forms() {
        let m = parse_overrides(&toks("--width 32 --activation=sine --root --learning-rate 1e-3 --widths 32,64 --omega -5")).unwrap();
        assert_eq!(m["width"], Value::from(32));
        assert_eq!(m["activation"], Value::from("sine"));
        assert_eq!(m["root"], Value::Bool(true));
        assert_eq!(m["learning-rate"], Value::from(1e-3));
        assert_eq!(m["widths"], serde_json::json!([32, 64]));
        assert_eq!(m["omega"], Value::from(-5));
        assert!(parse_overrides(&toks("width 3")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load::<RunConfig>(None, &toks("--widht 32")).is_err());
        let c: RunConfig = load(None, &toks("--width 32 --splits 2")).unwrap();
        assert_eq!((c.width, c.splits), (32, 2));
    }

    #[test]
    fn resolve_fills_task_defaults() {
        let c = RunConfig::default().resolve(TaskKind::FitOccupancy).unwrap();
        assert_eq!(c.final_sigmoid, Some(true));
        assert_eq!(c.iterations, Some(1000));
        let c = RunConfig { activation: ActivationKind::Sine, ..Default::default() }.resolve(TaskKind::ReconCt).unwrap();
        assert_eq!(c.learning_rate, Some(5e-4));
    }

    #[test]
    fn invalid_configs_fail_before_compute() {
        let zero_angles = RunConfig { angles: 0, ..Default::default() };
        assert!(zero_angles.resolve(TaskKind::ReconCt).is_err());
        let bad_split = RunConfig { width: 2, splits: 5, ..Default::default() };
        assert!(bad_split.resolve(TaskKind::FitImage).is_err());
        let bad_shape = RunConfig { shape: "teapot".into(), ..Default::default() };
        assert!(bad_shape.resolve(TaskKind::FitOccupancy).is_err());
        let mismatch = RunConfig { task: Some(TaskKind::ReconCt), ..Default::default() };
        assert!(mismatch.resolve(TaskKind::FitImage).is_err());
    }

    #[test]
    fn resolved_config_roundtrips() {
        let c = RunConfig::default().resolve(TaskKind::FitImage).unwrap();
        let back: RunConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
