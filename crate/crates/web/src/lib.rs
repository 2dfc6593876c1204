//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes the map as MovingAI text and returns a JSON string.
//! The plain-Rust functions in [`demo`] do the work so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(result: Result<serde_json::Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Roadmap vertices and edges at `resolution`.
#[wasm_bindgen]
pub fn roadmap(map: &str, resolution: u32, robot_width: f64) -> Result<String, JsError> {
    js(demo::roadmap(map, resolution, robot_width))
}

/// Topology label, evidence and per-vertex normalized centrality.
#[wasm_bindgen]
pub fn topology(map: &str, resolution: u32) -> Result<String, JsError> {
    js(demo::topology(map, resolution))
}

/// Solves a seeded random instance and returns the plan as coordinates.
#[wasm_bindgen]
pub fn solve(
    map: &str,
    resolution: u32,
    agents: usize,
    strategy: &str,
    seed: u64,
    node_limit: usize,
) -> Result<String, JsError> {
    js(demo::solve(map, resolution, agents, strategy, seed, node_limit))
}
