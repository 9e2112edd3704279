//! Plain-text `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. A line `sweep.<key> = v1, v2, …` asks the `sweep` command to
//! run once per value; several sweep lines expand to their cartesian product.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use cirauth::auth::AuthMode;
use cirauth::channel::{mobile_geometry, static_geometry, ScenarioParams};
use cirauth::features::FeatureMode;
use cirauth::kl::DoublePeakKl;
use cirauth::model::ModelKind;
use cirauth::protocol::ProtocolConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Static,
    Mobile,
    File(PathBuf),
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Scenario::Static),
            "mobile" => Ok(Scenario::Mobile),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Scenario::File(PathBuf::from(p))),
                _ => err(format!("expected static, mobile or file:<path>, got `{s}`")),
            },
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::Static => f.write_str("static"),
            Scenario::Mobile => f.write_str("mobile"),
            Scenario::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Optional overrides of the built-in channel statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelOverrides {
    pub k_factor_db: Option<f64>,
    pub dynamic_fraction: Option<f64>,
    pub noise_floor: Option<f64>,
    pub temporal_correlation: Option<f64>,
    pub spatial_correlation_length: Option<f64>,
    pub num_taps: Option<u32>,
}

/// The swept `(key, value)` labels of one grid point and its config.
pub type SweepPoint = (Vec<(String, String)>, ExperimentConfig);

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub samples_per_node: u32,
    pub eve_interval: u32,
    pub cir_dim: u32,
    pub channel: ChannelOverrides,
    pub protocol: ProtocolConfig,
    pub output_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// `(key, values)` in file order.
    pub sweep: Vec<(String, Vec<String>)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut protocol = ProtocolConfig::default();
        protocol.models.hvae.h = 64;
        protocol.models.hvae.z = 32;
        Self {
            scenario: Scenario::Static,
            seed: 1,
            samples_per_node: 40,
            eve_interval: 1,
            cir_dim: 128,
            channel: ChannelOverrides::default(),
            protocol,
            output_dir: None,
            checkpoint: None,
            sweep: Vec::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| {
        ConfigError(format!(
            "{key}: cannot parse `{v}` as {}",
            std::any::type_name::<T>()
        ))
    })
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v == "default" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref()
        .map_or_else(|| "default".to_string(), T::to_string)
}

fn kl_mode_name(m: DoublePeakKl) -> &'static str {
    match m {
        DoublePeakKl::Bound => "bound",
        DoublePeakKl::Exact => "exact",
    }
}

fn auth_mode_name(m: AuthMode) -> &'static str {
    match m {
        AuthMode::ThresholdFree => "threshold_free",
        AuthMode::ThresholdSweep => "threshold_sweep",
    }
}

/// Every recognized key, in the order the effective config is printed.
pub const KEYS: &[&str] = &[
    "scenario",
    "seed",
    "model",
    "alice_node",
    "samples_per_node",
    "train_per_node",
    "test_per_node",
    "eve_interval",
    "cir_dim",
    "features",
    "k_factor_db",
    "dynamic_fraction",
    "noise_floor",
    "temporal_correlation",
    "spatial_correlation_length",
    "num_taps",
    "h",
    "z",
    "double_peak_m",
    "double_peak_s",
    "prior_weight",
    "kl2_weight",
    "kl3_weight",
    "kl_mode",
    "ae_h",
    "vae_h",
    "vae_z",
    "vae_kl_weight",
    "learning_rate",
    "momentum",
    "epochs",
    "batch_size",
    "alpha",
    "auth_mode",
    "threshold_points",
    "threshold_grid",
    "out",
    "checkpoint",
];

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        let p = &mut self.protocol;
        let m = &mut p.models;
        let c = &mut self.channel;
        match key {
            "scenario" => self.scenario = v.parse()?,
            "seed" => self.seed = parse(key, v)?,
            "model" => {
                p.kind = ModelKind::parse(v).ok_or_else(|| {
                    ConfigError(format!(
                        "model: expected tf_hvae, tf_ae, tb_ae or tf_vae, got `{v}`"
                    ))
                })?
            }
            "alice_node" => p.alice_node = parse_opt(key, v)?,
            "samples_per_node" => self.samples_per_node = parse(key, v)?,
            "train_per_node" => p.train_per_node = parse(key, v)?,
            "test_per_node" => p.test_per_node = parse(key, v)?,
            "eve_interval" => self.eve_interval = parse(key, v)?,
            "cir_dim" => self.cir_dim = parse(key, v)?,
            "features" => {
                p.features = FeatureMode::parse(v).ok_or_else(|| {
                    ConfigError(format!(
                        "features: expected magnitude or real_imag, got `{v}`"
                    ))
                })?
            }
            "k_factor_db" => c.k_factor_db = parse_opt(key, v)?,
            "dynamic_fraction" => c.dynamic_fraction = parse_opt(key, v)?,
            "noise_floor" => c.noise_floor = parse_opt(key, v)?,
            "temporal_correlation" => c.temporal_correlation = parse_opt(key, v)?,
            "spatial_correlation_length" => c.spatial_correlation_length = parse_opt(key, v)?,
            "num_taps" => c.num_taps = parse_opt(key, v)?,
            "h" => m.hvae.h = parse(key, v)?,
            "z" => m.hvae.z = parse(key, v)?,
            "double_peak_m" => m.hvae.double_peak_m = parse(key, v)?,
            "double_peak_s" => m.hvae.double_peak_s = parse(key, v)?,
            "prior_weight" => m.hvae.prior_weight = parse(key, v)?,
            "kl2_weight" => m.hvae.kl2_weight = parse(key, v)?,
            "kl3_weight" => m.hvae.kl3_weight = parse(key, v)?,
            "kl_mode" => {
                m.hvae.kl_mode = match v {
                    "bound" => DoublePeakKl::Bound,
                    "exact" => DoublePeakKl::Exact,
                    _ => return err(format!("kl_mode: expected bound or exact, got `{v}`")),
                }
            }
            "ae_h" => m.ae_h = parse(key, v)?,
            "vae_h" => m.vae_h = parse(key, v)?,
            "vae_z" => m.vae_z = parse(key, v)?,
            "vae_kl_weight" => m.vae_kl_weight = parse(key, v)?,
            "learning_rate" => m.hvae.train.learning_rate = parse(key, v)?,
            "momentum" => m.hvae.train.momentum = parse(key, v)?,
            "epochs" => m.hvae.train.epochs = parse(key, v)?,
            "batch_size" => m.hvae.train.batch_size = parse(key, v)?,
            "alpha" => p.auth.alpha = parse(key, v)?,
            "auth_mode" => {
                p.auth.mode = match v {
                    "threshold_free" => AuthMode::ThresholdFree,
                    "threshold_sweep" => AuthMode::ThresholdSweep,
                    _ => {
                        return err(format!(
                            "auth_mode: expected threshold_free or threshold_sweep, got `{v}`"
                        ))
                    }
                }
            }
            "threshold_points" => p.auth.threshold_points = parse(key, v)?,
            "threshold_grid" => p.auth.threshold_grid = parse_list(key, v)?,
            "out" => self.output_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "checkpoint" => self.checkpoint = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => match key.strip_prefix("sweep.") {
                Some(k) => self.add_sweep(k, v)?,
                None => return err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    fn add_sweep(&mut self, key: &str, v: &str) -> Result<()> {
        if matches!(key, "out" | "checkpoint") || key.starts_with("sweep.") || !KEYS.contains(&key)
        {
            return err(format!("`{key}` cannot be swept"));
        }
        let values: Vec<String> = v
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if values.is_empty() {
            return err(format!("sweep.{key}: no values"));
        }
        for value in &values {
            self.clone().set(key, value)?;
        }
        self.sweep.retain(|(k, _)| k != key);
        self.sweep.push((key.to_string(), values));
        Ok(())
    }

    /// Current value of `key` as it would be written to a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.protocol;
        let m = &p.models;
        let c = &self.channel;
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        Some(match key {
            "scenario" => self.scenario.to_string(),
            "seed" => self.seed.to_string(),
            "model" => p.kind.name().to_string(),
            "alice_node" => opt_str(&p.alice_node),
            "samples_per_node" => self.samples_per_node.to_string(),
            "train_per_node" => p.train_per_node.to_string(),
            "test_per_node" => p.test_per_node.to_string(),
            "eve_interval" => self.eve_interval.to_string(),
            "cir_dim" => self.cir_dim.to_string(),
            "features" => p.features.name().to_string(),
            "k_factor_db" => opt_str(&c.k_factor_db),
            "dynamic_fraction" => opt_str(&c.dynamic_fraction),
            "noise_floor" => opt_str(&c.noise_floor),
            "temporal_correlation" => opt_str(&c.temporal_correlation),
            "spatial_correlation_length" => opt_str(&c.spatial_correlation_length),
            "num_taps" => opt_str(&c.num_taps),
            "h" => m.hvae.h.to_string(),
            "z" => m.hvae.z.to_string(),
            "double_peak_m" => m.hvae.double_peak_m.to_string(),
            "double_peak_s" => m.hvae.double_peak_s.to_string(),
            "prior_weight" => m.hvae.prior_weight.to_string(),
            "kl2_weight" => m.hvae.kl2_weight.to_string(),
            "kl3_weight" => m.hvae.kl3_weight.to_string(),
            "kl_mode" => kl_mode_name(m.hvae.kl_mode).to_string(),
            "ae_h" => m.ae_h.to_string(),
            "vae_h" => m.vae_h.to_string(),
            "vae_z" => m.vae_z.to_string(),
            "vae_kl_weight" => m.vae_kl_weight.to_string(),
            "learning_rate" => m.hvae.train.learning_rate.to_string(),
            "momentum" => m.hvae.train.momentum.to_string(),
            "epochs" => m.hvae.train.epochs.to_string(),
            "batch_size" => m.hvae.train.batch_size.to_string(),
            "alpha" => p.auth.alpha.to_string(),
            "auth_mode" => auth_mode_name(p.auth.mode).to_string(),
            "threshold_points" => p.auth.threshold_points.to_string(),
            "threshold_grid" => p
                .auth
                .threshold_grid
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(", "),
            "out" => path(&self.output_dir),
            "checkpoint" => path(&self.checkpoint),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    n + 1
                ));
            };
            self.set(k.trim(), v)
                .map_err(|e| ConfigError(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// The full effective configuration; parsing it back yields `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).unwrap_or_default());
        }
        for (k, vs) in &self.sweep {
            let _ = writeln!(out, "sweep.{k} = {}", vs.join(", "));
        }
        out
    }

    /// Channel statistics for generated scenarios.
    pub fn scenario_params(&self) -> Option<ScenarioParams> {
        let mut s = match self.scenario {
            Scenario::Static => ScenarioParams::static_default(),
            Scenario::Mobile => ScenarioParams::mobile_default(),
            Scenario::File(_) => return None,
        };
        s.cir_dim = self.cir_dim;
        let c = &self.channel;
        if let Some(v) = c.k_factor_db {
            s.k_factor_db = v;
        }
        if let Some(v) = c.dynamic_fraction {
            s.dynamic_fraction = v;
        }
        if let Some(v) = c.noise_floor {
            s.noise_floor = v;
        }
        if let Some(v) = c.temporal_correlation {
            s.temporal_correlation = v;
        }
        if let Some(v) = c.spatial_correlation_length {
            s.spatial_correlation_length = v;
        }
        if let Some(v) = c.num_taps {
            s.num_taps = v;
        }
        Some(s)
    }

    /// Checks field relations that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        let p = &self.protocol;
        let split = p.train_per_node + p.test_per_node;
        if !matches!(self.scenario, Scenario::File(_)) && split > self.samples_per_node as usize {
            return err(format!(
                "train_per_node + test_per_node = {split} exceeds samples_per_node = {}",
                self.samples_per_node
            ));
        }
        match (&self.scenario, p.alice_node) {
            (Scenario::Mobile, Some(_)) => return err(
                "alice_node: the mobile scenario has a moving legitimate node; leave it at default",
            ),
            (Scenario::Static, Some(a)) => {
                let n = static_geometry().node_count() as u32;
                if a == 0 || a > n {
                    return err(format!("alice_node: must lie in 1..={n}, got {a}"));
                }
            }
            _ => {}
        }
        if self.scenario == Scenario::Mobile
            && (self.eve_interval == 0
                || self.eve_interval as usize >= mobile_geometry().node_count())
        {
            return err(format!(
                "eve_interval: must lie in 1..{}, got {}",
                mobile_geometry().node_count(),
                self.eve_interval
            ));
        }
        if let Some(s) = self.scenario_params() {
            s.validate().map_err(|e| ConfigError(e.to_string()))?;
            p.validate(p.features.dim(s.cir_dim as usize))
                .map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(())
    }

    /// One configuration per point of the sweep grid, with the swept values.
    pub fn expand(&self) -> Result<Vec<SweepPoint>> {
        let mut runs = vec![(
            Vec::new(),
            Self {
                sweep: Vec::new(),
                ..self.clone()
            },
        )];
        for (key, values) in &self.sweep {
            let mut next = Vec::with_capacity(runs.len() * values.len());
            for (labels, cfg) in &runs {
                for v in values {
                    let mut c = cfg.clone();
                    c.set(key, v)?;
                    let mut l = labels.clone();
                    l.push((key.clone(), v.clone()));
                    next.push((l, c));
                }
            }
            runs = next;
        }
        Ok(runs)
    }

    pub fn require_output_dir(&self) -> Result<&PathBuf> {
        self.output_dir
            .as_ref()
            .ok_or_else(|| ConfigError("missing required field `out`".into()))
    }

    pub fn require_checkpoint(&self) -> Result<&PathBuf> {
        self.checkpoint
            .as_ref()
            .ok_or_else(|| ConfigError("missing required field `checkpoint`".into()))
    }
}
