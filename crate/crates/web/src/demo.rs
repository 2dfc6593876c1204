//! The demo operations, independent of the JavaScript boundary.

use std::sync::Arc;

use serde_json::{json, Value};

use mapf_lab::high_level::{solve as run, Budget, Strategy};
use mapf_lab::map::{parse_map, random_scenario};
use mapf_lab::topology::{analyze, ClassifierConfig};
use mapf_lab::{build_roadmap, GridRoadmap, ProblemInstance, DEFAULT_ROBOT_WIDTH};

fn build(map: &str, resolution: u32, robot_width: f64) -> Result<Arc<GridRoadmap>, String> {
    let grid = parse_map(map).map_err(|e| format!("map: {e}"))?;
    build_roadmap(grid, resolution, robot_width)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

pub fn roadmap(map: &str, resolution: u32, robot_width: f64) -> Result<Value, String> {
    let rm = build(map, resolution, robot_width)?;
    serde_json::to_value(rm.to_json()).map_err(|e| e.to_string())
}

pub fn topology(map: &str, resolution: u32) -> Result<Value, String> {
    let rm = build(map, resolution, DEFAULT_ROBOT_WIDTH)?;
    let config = ClassifierConfig {
        resolution,
        ..ClassifierConfig::default()
    };
    let (field, label) = analyze(&rm, &config).map_err(|e| e.to_string())?;
    let heat: Vec<[f64; 3]> = rm
        .ids()
        .map(|v| {
            let p = rm.point(v);
            [p.x, p.y, field.normalized[v.index()]]
        })
        .collect();
    Ok(json!({
        "label": label.label,
        "evidence": label.evidence,
        "heat": heat,
    }))
}

pub fn solve(
    map: &str,
    resolution: u32,
    agents: usize,
    strategy: &str,
    seed: u64,
    node_limit: usize,
) -> Result<Value, String> {
    let strategy = strategy.parse::<Strategy>().map_err(|e| e.to_string())?;
    let rm = build(map, resolution, DEFAULT_ROBOT_WIDTH)?;
    let entries = random_scenario(rm.map(), agents, seed)
        .ok_or_else(|| format!("the map has fewer than {agents} connected free cells"))?;
    let instance = ProblemInstance::from_scenario(Arc::clone(&rm), &entries, agents).map_err(|e| e.to_string())?;
    let result = run(&instance, strategy, &Budget::default().with_node_limit(node_limit));
    let paths: Vec<Vec<[f64; 2]>> = result
        .plan
        .iter()
        .flat_map(|plan| &plan.paths)
        .map(|p| {
            p.states
                .iter()
                .map(|&v| {
                    let q = rm.point(v);
                    [q.x, q.y]
                })
                .collect()
        })
        .collect();
    Ok(json!({
        "outcome": result.outcome,
        "strategy": result.strategy,
        "cost": result.cost,
        "nodes_expanded": result.stats.nodes_expanded,
        "robot_width": rm.robot_width(),
        "paths": paths,
    }))
}
