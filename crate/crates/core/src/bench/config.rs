use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::high_level::Strategy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),
}

/// A map to run on and the group it is reported under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSpec {
    pub path: PathBuf,
    pub group: String,
}

impl MapSpec {
    /// Uses the group implied by the file name.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let group = infer_group(&path);
        MapSpec { path, group }
    }

    pub fn with_group(path: impl Into<PathBuf>, group: impl Into<String>) -> Self {
        MapSpec {
            path: path.into(),
            group: group.into(),
        }
    }

    /// File name without extension, used to name per-map outputs.
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// Benchmark group of a MovingAI map from its file name.
pub fn infer_group(path: &FsPath) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let prefix = stem.split(['-', '_']).next().unwrap_or("");
    match prefix {
        "empty" => "empty",
        "random" => "random",
        "maze" | "room" => "narrow",
        "berlin" | "boston" | "paris" | "city" => "city",
        "ht" | "lt" | "w" | "game" => "game",
        p if ["den", "lak", "ost", "brc", "orz"].iter().any(|g| p.starts_with(g)) => "game",
        _ => "other",
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub maps: Vec<MapSpec>,
    pub resolutions: Vec<u32>,
    pub scenarios_per_map: usize,
    pub agent_base: usize,
    pub agent_increment: usize,
    pub time_limit: Duration,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    /// High-level expansions allowed per instance. Makes runs reproducible
    /// when it binds before the time limit.
    pub node_limit: Option<usize>,
    /// Stop escalating past this many agents.
    pub max_agents: Option<usize>,
    pub robot_width: f64,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            maps: Vec::new(),
            resolutions: vec![1, 2, 4],
            scenarios_per_map: 5,
            agent_base: 4,
            agent_increment: 4,
            time_limit: Duration::from_secs(60),
            strategies: vec![Strategy::MotionCbs, Strategy::PriorityCbswp],
            seed: 0,
            node_limit: None,
            max_agents: None,
            robot_width: crate::roadmap::DEFAULT_ROBOT_WIDTH,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    /// Full-size protocol: 25 scenarios, 15 minutes, resolutions 1, 2 and 4.
    pub fn full_scale(mut self) -> Self {
        self.scenarios_per_map = 25;
        self.time_limit = Duration::from_secs(15 * 60);
        self.resolutions = vec![1, 2, 4];
        self.node_limit = None;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.maps.is_empty() {
            return bad("no maps configured");
        }
        if self.resolutions.is_empty() || self.resolutions.contains(&0) {
            return bad("resolutions must be a non-empty list of positive integers");
        }
        if self.scenarios_per_map == 0 || self.agent_base == 0 || self.agent_increment == 0 {
            return bad("scenarios, agent_base and agent_increment must be positive");
        }
        if self.time_limit.is_zero() {
            return bad("time_limit must be positive");
        }
        if self.strategies.is_empty() {
            return bad("no strategies configured");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if self.node_limit == Some(0) {
            return bad("node_limit must be positive");
        }
        let mut stems: Vec<String> = self.maps.iter().map(MapSpec::stem).collect();
        stems.sort();
        if let Some(w) = stems.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid(format!("map name {} is used twice", w[0])));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MapEntry {
    Path(String),
    Spec { path: String, group: Option<String> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Limit {
    Seconds(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    maps: Option<Vec<MapEntry>>,
    resolutions: Option<Vec<u32>>,
    scenarios: Option<usize>,
    agent_base: Option<usize>,
    agent_increment: Option<usize>,
    time_limit: Option<Limit>,
    strategies: Option<Vec<String>>,
    seed: Option<u64>,
    node_limit: Option<usize>,
    max_agents: Option<usize>,
    robot_width: Option<f64>,
    workers: Option<usize>,
    full_scale: Option<bool>,
}

/// Parses a duration such as `60`, `60s`, `500ms`, `2.5s` or `15m`.
pub fn parse_duration(text: &str) -> Result<Duration, String> {
    let t = text.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1.0)
    } else if let Some(n) = t.strip_suffix('m') {
        (n, 60.0)
    } else if let Some(n) = t.strip_suffix('h') {
        (n, 3600.0)
    } else {
        (t, 1.0)
    };
    let value: f64 = num.trim().parse().map_err(|_| format!("invalid duration {text:?}"))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("invalid duration {text:?}"));
    }
    Ok(Duration::from_secs_f64(value * scale))
}

/// Parses a benchmark config, either JSON (starting with `{`) or one
/// `key = value` per line with `#` comments. Relative map paths are looked up
/// next to the config (`base_dir`), then under `data_root`.
pub fn parse_config(
    text: &str,
    base_dir: &FsPath,
    data_root: Option<&FsPath>,
) -> Result<ExperimentConfig, ConfigError> {
    let cfg = parse_config_partial(text, base_dir, data_root)?;
    cfg.validate()?;
    Ok(cfg)
}

/// As [`parse_config`] without the final [`ExperimentConfig::validate`], for
/// callers that complete the config from other sources first.
pub fn parse_config_partial(
    text: &str,
    base_dir: &FsPath,
    data_root: Option<&FsPath>,
) -> Result<ExperimentConfig, ConfigError> {
    let raw = if text.trim_start().starts_with('{') {
        serde_json::from_str::<RawConfig>(text)?
    } else {
        parse_key_values(text)?
    };

    let mut cfg = ExperimentConfig::default();
    if raw.full_scale == Some(true) {
        cfg = cfg.full_scale();
    }
    for entry in raw.maps.unwrap_or_default() {
        let (path, group) = match entry {
            MapEntry::Path(p) => (p, None),
            MapEntry::Spec { path, group } => (path, group),
        };
        let resolved = resolve_path(&path, base_dir, data_root);
        cfg.maps.push(match group {
            Some(g) => MapSpec::with_group(resolved, g),
            None => MapSpec::new(resolved),
        });
    }
    if let Some(v) = raw.resolutions {
        cfg.resolutions = v;
    }
    if let Some(v) = raw.scenarios {
        cfg.scenarios_per_map = v;
    }
    if let Some(v) = raw.agent_base {
        cfg.agent_base = v;
    }
    if let Some(v) = raw.agent_increment {
        cfg.agent_increment = v;
    }
    if let Some(v) = raw.time_limit {
        cfg.time_limit = match v {
            Limit::Seconds(s) if s.is_finite() && s >= 0.0 => Duration::from_secs_f64(s),
            Limit::Seconds(s) => return Err(ConfigError::Invalid(format!("invalid time_limit {s}"))),
            Limit::Text(t) => parse_duration(&t).map_err(ConfigError::Invalid)?,
        };
    }
    if let Some(v) = raw.strategies {
        cfg.strategies = v
            .iter()
            .map(|s| s.parse::<Strategy>())
            .collect::<Result<_, _>>()
            .map_err(ConfigError::Invalid)?;
    }
    if let Some(v) = raw.seed {
        cfg.seed = v;
    }
    cfg.node_limit = raw.node_limit.or(cfg.node_limit);
    cfg.max_agents = raw.max_agents;
    if let Some(v) = raw.robot_width {
        cfg.robot_width = v;
    }
    if let Some(v) = raw.workers {
        cfg.workers = v;
    }
    Ok(cfg)
}

fn resolve_path(path: &str, base_dir: &FsPath, data_root: Option<&FsPath>) -> PathBuf {
    let p = FsPath::new(path);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    let local = base_dir.join(p);
    if local.exists() {
        return local;
    }
    match data_root {
        Some(root) if root.join(p).exists() => root.join(p),
        _ => local,
    }
}

fn parse_key_values(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Line { line: line_no, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(format!("{key}: expected a non-negative integer, found {v:?}")))
        };
        let list = |v: &str| -> Vec<String> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        };
        match key {
            "map" => {
                let mut parts = value.split_whitespace();
                let path = parts.next().ok_or_else(|| err("map: missing path".into()))?.to_string();
                let group = parts.next().map(String::from);
                if parts.next().is_some() {
                    return Err(err("map: expected `path [group]`".into()));
                }
                raw.maps
                    .get_or_insert_with(Vec::new)
                    .push(MapEntry::Spec { path, group });
            }
            "resolutions" => {
                raw.resolutions = Some(
                    list(value)
                        .iter()
                        .map(|v| {
                            v.parse::<u32>()
                                .map_err(|_| err(format!("resolutions: invalid value {v:?}")))
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
            "scenarios" => raw.scenarios = Some(num(value)?),
            "agent_base" => raw.agent_base = Some(num(value)?),
            "agent_increment" => raw.agent_increment = Some(num(value)?),
            "time_limit" => raw.time_limit = Some(Limit::Text(value.to_string())),
            "strategies" => raw.strategies = Some(list(value)),
            "seed" => {
                raw.seed = Some(
                    value
                        .parse()
                        .map_err(|_| err(format!("seed: invalid value {value:?}")))?,
                )
            }
            "node_limit" => raw.node_limit = Some(num(value)?),
            "max_agents" => raw.max_agents = Some(num(value)?),
            "robot_width" => {
                raw.robot_width = Some(
                    value
                        .parse()
                        .map_err(|_| err(format!("robot_width: invalid value {value:?}")))?,
                )
            }
            "workers" => raw.workers = Some(num(value)?),
            "full_scale" => {
                raw.full_scale = Some(
                    value
                        .parse()
                        .map_err(|_| err("full_scale: expected true or false".to_string()))?,
                )
            }
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    Ok(raw)
}
