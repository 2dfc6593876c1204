//! JSON form of a solved plan, self-describing enough to be re-validated
//! against its map.

use serde::{Deserialize, Serialize};

use crate::conflict::{Path, TeamPlan};
use crate::high_level::Strategy;
use crate::instance::AgentTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    /// Map file name the plan was computed on.
    pub map: String,
    pub resolution: u32,
    pub robot_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    pub cost: u64,
    pub makespan: u32,
    pub paths: Vec<Path>,
}

impl PlanFile {
    pub fn new(
        map: impl Into<String>,
        resolution: u32,
        robot_width: f64,
        strategy: Option<Strategy>,
        plan: &TeamPlan,
    ) -> Self {
        PlanFile {
            map: map.into(),
            resolution,
            robot_width,
            strategy,
            cost: plan.cost(),
            makespan: plan.makespan(),
            paths: plan.paths.clone(),
        }
    }

    pub fn plan(&self) -> TeamPlan {
        TeamPlan::new(self.paths.clone())
    }

    /// Tasks implied by the first and last state of every path.
    pub fn tasks(&self) -> Vec<AgentTask> {
        self.paths
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.states.is_empty())
            .map(|(agent, p)| AgentTask {
                agent,
                start: p.start(),
                goal: p.goal(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
