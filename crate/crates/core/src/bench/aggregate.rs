use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ExperimentRecord;
use crate::high_level::{Outcome, Strategy};

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("record for {map} r={resolution} scenario {scenario} with {agents} agents ({strategy}) appears twice")]
    Duplicate {
        map: String,
        resolution: u32,
        scenario: usize,
        agents: usize,
        strategy: Strategy,
    },

    #[error("map {map} is reported under groups {first} and {second}")]
    GroupMismatch { map: String, first: String, second: String },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub group: String,
    pub resolution: u32,
    pub strategy: Strategy,
    pub agents: usize,
    pub solved: usize,
    /// Every (map, scenario) run of the group, whether or not escalation
    /// reached this agent count.
    pub scenarios: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSeries {
    pub group: String,
    pub resolution: u32,
    pub strategy: Strategy,
    /// Wall times of solved instances, ascending.
    pub times_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRatio {
    pub map: String,
    pub group: String,
    pub resolution: u32,
    pub scenario: usize,
    pub agents: usize,
    pub cbs_cost: u64,
    pub cbswp_cost: u64,
    /// `cbswp_cost / cbs_cost`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub success_rate: Vec<SuccessRate>,
    pub runtime_instances: Vec<RuntimeSeries>,
    pub cost_ratios: Vec<CostRatio>,
}

impl AggregateMetrics {
    pub fn mean_cost_ratio(&self) -> Option<f64> {
        if self.cost_ratios.is_empty() {
            None
        } else {
            Some(self.cost_ratios.iter().map(|c| c.ratio).sum::<f64>() / self.cost_ratios.len() as f64)
        }
    }
}

/// Summarizes records. The result depends only on the set of records, not
/// on their order.
pub fn aggregate(records: &[ExperimentRecord]) -> Result<AggregateMetrics, AggregateError> {
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<&str, &str> = BTreeMap::new();
    for r in records {
        if !seen.insert(r.key()) {
            return Err(AggregateError::Duplicate {
                map: r.map.clone(),
                resolution: r.resolution,
                scenario: r.scenario,
                agents: r.agents,
                strategy: r.strategy,
            });
        }
        if let Some(first) = groups.insert(&r.map, &r.group) {
            if first != r.group {
                return Err(AggregateError::GroupMismatch {
                    map: r.map.clone(),
                    first: first.to_string(),
                    second: r.group.clone(),
                });
            }
        }
    }

    // (group, resolution, strategy) -> set of (map, scenario) runs
    type RunSet<'a> = BTreeSet<(&'a str, usize)>;
    let mut runs: BTreeMap<(&str, u32, Strategy), RunSet> = BTreeMap::new();
    let mut solved: BTreeMap<(&str, u32, Strategy, usize), usize> = BTreeMap::new();
    let mut times: BTreeMap<(&str, u32, Strategy), Vec<f64>> = BTreeMap::new();
    let mut costs: BTreeMap<(&str, u32, usize, usize), [Option<u64>; 2]> = BTreeMap::new();
    for r in records {
        let g = (r.group.as_str(), r.resolution, r.strategy);
        runs.entry(g).or_default().insert((&r.map, r.scenario));
        times.entry(g).or_default();
        let count = solved
            .entry((&r.group, r.resolution, r.strategy, r.agents))
            .or_default();
        if r.outcome == Outcome::Solved {
            *count += 1;
            times.get_mut(&g).unwrap().push(r.time_ms);
            let slot = match r.strategy {
                Strategy::MotionCbs => 0,
                Strategy::PriorityCbswp => 1,
            };
            costs.entry((&r.map, r.resolution, r.scenario, r.agents)).or_default()[slot] = r.cost;
        }
    }

    let success_rate = solved
        .into_iter()
        .map(|((group, resolution, strategy, agents), solved)| {
            let scenarios = runs[&(group, resolution, strategy)].len();
            SuccessRate {
                group: group.to_string(),
                resolution,
                strategy,
                agents,
                solved,
                scenarios,
                rate: solved as f64 / scenarios as f64,
            }
        })
        .collect();
    let runtime_instances = times
        .into_iter()
        .map(|((group, resolution, strategy), mut t)| {
            t.sort_by(f64::total_cmp);
            RuntimeSeries {
                group: group.to_string(),
                resolution,
                strategy,
                times_ms: t,
            }
        })
        .collect();
    let cost_ratios = costs
        .into_iter()
        .filter_map(|((map, resolution, scenario, agents), c)| match c {
            [Some(cbs), Some(cbswp)] => Some(CostRatio {
                map: map.to_string(),
                group: groups[map].to_string(),
                resolution,
                scenario,
                agents,
                cbs_cost: cbs,
                cbswp_cost: cbswp,
                ratio: if cbs == 0 { 1.0 } else { cbswp as f64 / cbs as f64 },
            }),
            _ => None,
        })
        .collect();
    Ok(AggregateMetrics {
        success_rate,
        runtime_instances,
        cost_ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    /// `path` receives the runtime-instance rows; `<stem>_success.csv` and
    /// `<stem>_cost_ratios.csv` are written next to it.
    Csv,
}

pub fn export(metrics: &AggregateMetrics, format: ExportFormat, path: &FsPath) -> Result<(), AggregateError> {
    let write_err = |path: &FsPath| {
        let path = path.to_path_buf();
        move |source| AggregateError::Write { path, source }
    };
    match format {
        ExportFormat::Json => {
            let text = serde_json::to_string_pretty(metrics).expect("metrics serialize");
            fs::write(path, text).map_err(write_err(path))
        }
        ExportFormat::Csv => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let runtime_rows = metrics.runtime_instances.iter().flat_map(|s| {
                s.times_ms.iter().enumerate().map(move |(i, t)| {
                    vec![
                        s.group.clone(),
                        s.resolution.to_string(),
                        s.strategy.to_string(),
                        (i + 1).to_string(),
                        format!("{t:.3}"),
                    ]
                })
            });
            write_csv(
                path,
                &["group", "resolution", "strategy", "instances", "time_ms"],
                runtime_rows,
            )?;

            let success_rows = metrics.success_rate.iter().map(|s| {
                vec![
                    s.group.clone(),
                    s.resolution.to_string(),
                    s.strategy.to_string(),
                    s.agents.to_string(),
                    s.solved.to_string(),
                    s.scenarios.to_string(),
                    format!("{:.6}", s.rate),
                ]
            });
            write_csv(
                &path.with_file_name(format!("{stem}_success.csv")),
                &[
                    "group",
                    "resolution",
                    "strategy",
                    "agents",
                    "solved",
                    "scenarios",
                    "success_rate",
                ],
                success_rows,
            )?;

            let ratio_rows = metrics.cost_ratios.iter().map(|c| {
                vec![
                    c.map.clone(),
                    c.group.clone(),
                    c.resolution.to_string(),
                    c.scenario.to_string(),
                    c.agents.to_string(),
                    c.cbs_cost.to_string(),
                    c.cbswp_cost.to_string(),
                    format!("{:.6}", c.ratio),
                ]
            });
            write_csv(
                &path.with_file_name(format!("{stem}_cost_ratios.csv")),
                &[
                    "map",
                    "group",
                    "resolution",
                    "scenario",
                    "agents",
                    "cbs_cost",
                    "cbswp_cost",
                    "cost_ratio",
                ],
                ratio_rows,
            )
        }
    }
}

fn write_csv(path: &FsPath, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), AggregateError> {
    let csv_err = |source| AggregateError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| AggregateError::Write {
        path: path.to_path_buf(),
        source,
    })
}
