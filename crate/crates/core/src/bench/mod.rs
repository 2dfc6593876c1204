//! Benchmark protocol: escalate the agent count per scenario until the
//! solver fails, record every attempt, and aggregate the records into
//! success rates, runtime-instance series and cost ratios.
//!
//! A run directory holds `records/<map>.csv` (appended and flushed after
//! every attempt) and `plans/<map>/r<res>_s<scenario>_n<agents>_<strategy>.json`
//! for every solved instance.

mod aggregate;
mod config;

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::high_level::{solve, Budget, Outcome, Strategy};
use crate::instance::ProblemInstance;
use crate::map::{parse_map, parse_scenario, random_scenario, GridMap, MapError, ScenarioEntry, ScenarioError};
use crate::plan_file::PlanFile;
use crate::roadmap::{build_roadmap, GridRoadmap, RoadmapError};

pub use aggregate::{
    aggregate, export, AggregateError, AggregateMetrics, CostRatio, ExportFormat, RuntimeSeries, SuccessRate,
};
pub use config::{
    infer_group, parse_config, parse_config_partial, parse_duration, ConfigError, ExperimentConfig, MapSpec,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Map { path: PathBuf, source: MapError },

    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },

    #[error("{path} at resolution {resolution}: {source}")]
    Roadmap {
        path: PathBuf,
        resolution: u32,
        source: RoadmapError,
    },

    #[error("{path}: cannot draw {count} random start/goal pairs")]
    TooFewCells { path: PathBuf, count: usize },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("records file {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// One attempted (map, resolution, scenario, agent count, strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub map: String,
    pub group: String,
    pub resolution: u32,
    pub scenario: usize,
    pub agents: usize,
    pub strategy: Strategy,
    pub outcome: Outcome,
    pub time_ms: f64,
    pub cost: Option<u64>,
    pub nodes_expanded: usize,
}

impl ExperimentRecord {
    /// Identity of the attempt, everything except results.
    pub fn key(&self) -> (String, u32, usize, usize, Strategy) {
        (
            self.map.clone(),
            self.resolution,
            self.scenario,
            self.agents,
            self.strategy,
        )
    }
}

/// Start/goal pairs of one scenario and where they came from.
#[derive(Debug, Clone)]
pub struct ScenarioSource {
    pub entries: Vec<ScenarioEntry>,
    /// The `.scen` file, or `None` for seeded random pairs.
    pub file: Option<PathBuf>,
}

/// MovingAI scenario file for scenario index `k` (numbered from 1 on disk).
pub fn scenario_path(map_path: &FsPath, k: usize) -> PathBuf {
    let stem = map_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    map_path.with_file_name(format!("{stem}-random-{}.scen", k + 1))
}

/// Seed of the `k`-th generated scenario.
pub fn scenario_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Loads the scenario file next to the map when there is one, otherwise
/// draws seeded random pairs.
pub fn load_scenario(
    map_path: &FsPath,
    map: &GridMap,
    k: usize,
    seed: u64,
    count: usize,
) -> Result<ScenarioSource, BenchError> {
    let file = scenario_path(map_path, k);
    if file.exists() {
        let text = fs::read_to_string(&file).map_err(|source| BenchError::Read {
            path: file.clone(),
            source,
        })?;
        let entries = parse_scenario(&text, map).map_err(|source| BenchError::Scenario {
            path: file.clone(),
            source,
        })?;
        return Ok(ScenarioSource {
            entries,
            file: Some(file),
        });
    }
    let region = crate::map::largest_region(map).len();
    let count = count.min(region);
    let entries = random_scenario(map, count, scenario_seed(seed, k)).ok_or(BenchError::TooFewCells {
        path: map_path.to_path_buf(),
        count,
    })?;
    Ok(ScenarioSource { entries, file: None })
}

/// Length of the longest prefix of `entries` that forms a valid instance.
fn usable_prefix(roadmap: &Arc<GridRoadmap>, entries: &[ScenarioEntry]) -> usize {
    let mut placed: Vec<(crate::roadmap::HalfPos, crate::roadmap::HalfPos)> = Vec::new();
    for e in entries {
        let (Some(s), Some(g)) = (roadmap.vertex_at_cell(e.start), roadmap.vertex_at_cell(e.goal)) else {
            break;
        };
        let (s, g) = (roadmap.half_pos(s), roadmap.half_pos(g));
        if placed
            .iter()
            .any(|(ps, pg)| roadmap.half_overlap(*ps, s) || roadmap.half_overlap(*pg, g))
        {
            break;
        }
        placed.push((s, g));
    }
    placed.len()
}

struct PreparedMap {
    spec: MapSpec,
    name: String,
    roadmaps: Vec<(u32, Arc<GridRoadmap>)>,
    scenarios: Vec<ScenarioSource>,
}

fn prepare(config: &ExperimentConfig) -> Result<Vec<PreparedMap>, BenchError> {
    config.validate()?;
    let pairs_wanted = config.max_agents.unwrap_or(usize::MAX);
    let mut out = Vec::with_capacity(config.maps.len());
    for spec in &config.maps {
        let text = fs::read_to_string(&spec.path).map_err(|source| BenchError::Read {
            path: spec.path.clone(),
            source,
        })?;
        let map = Arc::new(parse_map(&text).map_err(|source| BenchError::Map {
            path: spec.path.clone(),
            source,
        })?);
        let mut roadmaps = Vec::new();
        for &r in &config.resolutions {
            let rm = build_roadmap(Arc::clone(&map), r, config.robot_width).map_err(|source| BenchError::Roadmap {
                path: spec.path.clone(),
                resolution: r,
                source,
            })?;
            roadmaps.push((r, Arc::new(rm)));
        }
        let scenarios = (0..config.scenarios_per_map)
            .map(|k| load_scenario(&spec.path, &map, k, config.seed, pairs_wanted))
            .collect::<Result<_, _>>()?;
        let name = spec
            .path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push(PreparedMap {
            spec: spec.clone(),
            name,
            roadmaps,
            scenarios,
        });
    }
    Ok(out)
}

fn plan_path(dir: &FsPath, stem: &str, r: &ExperimentRecord) -> PathBuf {
    dir.join("plans").join(stem).join(format!(
        "r{}_s{}_n{}_{}.json",
        r.resolution, r.scenario, r.agents, r.strategy
    ))
}

/// Runs the escalation protocol on one map, appending to its records file.
fn run_map(
    config: &ExperimentConfig,
    prepared: &PreparedMap,
    out_dir: Option<&FsPath>,
    progress: &(dyn Fn(&ExperimentRecord) + Sync),
) -> Result<Vec<ExperimentRecord>, BenchError> {
    let stem = prepared.spec.stem();
    let mut writer = match out_dir {
        Some(dir) => {
            let path = dir.join("records").join(format!("{stem}.csv"));
            let write_err = |source| BenchError::Write {
                path: path.clone(),
                source,
            };
            fs::create_dir_all(path.parent().unwrap()).map_err(write_err)?;
            let file = fs::File::create(&path).map_err(write_err)?;
            Some((csv::Writer::from_writer(file), path))
        }
        None => None,
    };
    let budget = Budget {
        time_limit: Some(config.time_limit),
        node_limit: config.node_limit,
        ..Budget::default()
    };
    let mut records = Vec::new();
    for (resolution, roadmap) in &prepared.roadmaps {
        for (k, scenario) in prepared.scenarios.iter().enumerate() {
            let usable = usable_prefix(roadmap, &scenario.entries);
            for &strategy in &config.strategies {
                let mut agents = config.agent_base;
                while agents <= usable && config.max_agents.is_none_or(|m| agents <= m) {
                    let instance = ProblemInstance::from_scenario(Arc::clone(roadmap), &scenario.entries, agents)
                        .expect("prefix was checked");
                    let result = solve(&instance, strategy, &budget);
                    let record = ExperimentRecord {
                        map: prepared.name.clone(),
                        group: prepared.spec.group.clone(),
                        resolution: *resolution,
                        scenario: k,
                        agents,
                        strategy,
                        outcome: result.outcome,
                        time_ms: (result.stats.wall_time_ms * 1000.0).round() / 1000.0,
                        cost: result.cost,
                        nodes_expanded: result.stats.nodes_expanded,
                    };
                    if let Some((w, path)) = writer.as_mut() {
                        let csv_err = |source| BenchError::Csv {
                            path: path.clone(),
                            source,
                        };
                        w.serialize(&record).map_err(csv_err)?;
                        w.flush().map_err(|source| BenchError::Write {
                            path: path.clone(),
                            source,
                        })?;
                    }
                    if let (Some(dir), Some(plan)) = (out_dir, result.plan.as_ref()) {
                        let path = plan_path(dir, &stem, &record);
                        let file = PlanFile::new(&prepared.name, *resolution, config.robot_width, Some(strategy), plan);
                        let write =
                            fs::create_dir_all(path.parent().unwrap()).and_then(|_| fs::write(&path, file.to_json()));
                        write.map_err(|source| BenchError::Write { path, source })?;
                    }
                    progress(&record);
                    let solved = record.outcome == Outcome::Solved;
                    records.push(record);
                    if !solved {
                        break;
                    }
                    agents += config.agent_increment;
                }
            }
        }
    }
    Ok(records)
}

/// Runs the whole protocol. Inputs are read and checked before the first
/// solve; with `out_dir` set, records and plans are written as they come.
/// Maps are spread over `config.workers` threads; the returned records are
/// in map order regardless.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: Option<&FsPath>,
    progress: &(dyn Fn(&ExperimentRecord) + Sync),
) -> Result<Vec<ExperimentRecord>, BenchError> {
    let prepared = prepare(config)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| BenchError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    type MapResult = Result<Vec<ExperimentRecord>, BenchError>;
    let results: Mutex<Vec<Option<MapResult>>> = Mutex::new((0..prepared.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = config.workers.min(prepared.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= prepared.len() {
                    break;
                }
                let result = run_map(config, &prepared[i], out_dir, progress);
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let mut records = Vec::new();
    for r in results.into_inner().unwrap() {
        records.extend(r.expect("every map was run")?);
    }
    Ok(records)
}

pub fn write_records_csv(records: &[ExperimentRecord], path: &FsPath) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if records.is_empty() {
        w.write_record(RECORD_HEADER).map_err(csv_err)?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_records_csv(path: &FsPath) -> Result<Vec<ExperimentRecord>, BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    reader.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

pub const RECORD_HEADER: [&str; 10] = [
    "map",
    "group",
    "resolution",
    "scenario",
    "agents",
    "strategy",
    "outcome",
    "time_ms",
    "cost",
    "nodes_expanded",
];
