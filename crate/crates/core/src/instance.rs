use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::ScenarioEntry;
use crate::roadmap::{GridRoadmap, VertexId};

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTask {
    pub agent: AgentId,
    pub start: VertexId,
    pub goal: VertexId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("task {index} has agent id {agent}, expected {index}")]
    AgentId { index: usize, agent: AgentId },

    #[error("agent {agent}: {what} {vertex} is not a roadmap vertex")]
    UnknownVertex {
        agent: AgentId,
        what: &'static str,
        vertex: VertexId,
    },

    #[error("agent {agent}: {what} cell ({x}, {y}) has no vertex at this resolution")]
    CellNotOnRoadmap {
        agent: AgentId,
        what: &'static str,
        x: u32,
        y: u32,
    },

    #[error("agents {a} and {b} have overlapping {what}s")]
    Overlap { a: AgentId, b: AgentId, what: &'static str },

    #[error("requested {requested} agents but the scenario has {available} pairs")]
    NotEnoughPairs { requested: usize, available: usize },
}

/// A roadmap plus one start/goal task per agent.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    roadmap: Arc<GridRoadmap>,
    tasks: Vec<AgentTask>,
}

impl ProblemInstance {
    pub fn new(roadmap: Arc<GridRoadmap>, tasks: Vec<AgentTask>) -> Result<Self, InstanceError> {
        for (index, t) in tasks.iter().enumerate() {
            if t.agent != index {
                return Err(InstanceError::AgentId { index, agent: t.agent });
            }
            for (what, vertex) in [("start", t.start), ("goal", t.goal)] {
                if !roadmap.contains(vertex) {
                    return Err(InstanceError::UnknownVertex {
                        agent: t.agent,
                        what,
                        vertex,
                    });
                }
            }
        }
        for (what, pick) in [
            ("start", (|t: &AgentTask| t.start) as fn(&AgentTask) -> VertexId),
            ("goal", |t: &AgentTask| t.goal),
        ] {
            for a in 0..tasks.len() {
                for b in a + 1..tasks.len() {
                    let (pa, pb) = (roadmap.half_pos(pick(&tasks[a])), roadmap.half_pos(pick(&tasks[b])));
                    if roadmap.half_overlap(pa, pb) {
                        return Err(InstanceError::Overlap { a, b, what });
                    }
                }
            }
        }
        Ok(ProblemInstance { roadmap, tasks })
    }

    /// Uses the first `agents` pairs of a scenario, mapped to cell-centre vertices.
    pub fn from_scenario(
        roadmap: Arc<GridRoadmap>,
        entries: &[ScenarioEntry],
        agents: usize,
    ) -> Result<Self, InstanceError> {
        if agents > entries.len() {
            return Err(InstanceError::NotEnoughPairs {
                requested: agents,
                available: entries.len(),
            });
        }
        let mut tasks = Vec::with_capacity(agents);
        for (agent, e) in entries[..agents].iter().enumerate() {
            let lookup = |what, cell: crate::map::Cell| {
                roadmap.vertex_at_cell(cell).ok_or(InstanceError::CellNotOnRoadmap {
                    agent,
                    what,
                    x: cell.x,
                    y: cell.y,
                })
            };
            tasks.push(AgentTask {
                agent,
                start: lookup("start", e.start)?,
                goal: lookup("goal", e.goal)?,
            });
        }
        Self::new(roadmap, tasks)
    }

    pub fn roadmap(&self) -> &GridRoadmap {
        &self.roadmap
    }

    pub fn shared_roadmap(&self) -> Arc<GridRoadmap> {
        Arc::clone(&self.roadmap)
    }

    pub fn tasks(&self) -> &[AgentTask] {
        &self.tasks
    }

    pub fn num_agents(&self) -> usize {
        self.tasks.len()
    }
}
