//! Geometric conflict detection between agent paths.
//!
//! Bodies are compared at every integer timestep (vertex positions) and once
//! per transition, at the midpoint of the traversed edge (a waiting agent
//! stays on its vertex). Agents rest at their goal forever after arriving.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{AgentId, ProblemInstance};
use crate::roadmap::{GridRoadmap, HalfPos, Point, VertexId};

/// Open overlap of two axis-aligned square bodies of side `robot_width`.
pub fn bodies_overlap(p: Point, q: Point, robot_width: f64) -> bool {
    (p.x - q.x).abs() < robot_width && (p.y - q.y).abs() < robot_width
}

/// Timestep-indexed vertex sequence of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub agent: AgentId,
    pub states: Vec<VertexId>,
}

impl Path {
    pub fn new(agent: AgentId, states: Vec<VertexId>) -> Self {
        assert!(!states.is_empty(), "a path needs at least one state");
        Path { agent, states }
    }

    pub fn start(&self) -> VertexId {
        self.states[0]
    }

    pub fn goal(&self) -> VertexId {
        *self.states.last().unwrap()
    }

    /// Arrival timestep: the first `t` after which the agent never leaves
    /// its goal. Trailing waits are not counted.
    pub fn cost(&self) -> u32 {
        let goal = self.goal();
        let trailing = self.states.iter().rev().take_while(|v| **v == goal).count();
        (self.states.len() - trailing) as u32
    }

    pub fn position_at(&self, t: u32) -> VertexId {
        position_at(self, t)
    }
}

/// `states[t]`, or the goal once the path has ended.
pub fn position_at(path: &Path, t: u32) -> VertexId {
    path.states.get(t as usize).copied().unwrap_or_else(|| path.goal())
}

/// One path per agent, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamPlan {
    pub paths: Vec<Path>,
}

impl TeamPlan {
    pub fn new(paths: Vec<Path>) -> Self {
        TeamPlan { paths }
    }

    pub fn cost(&self) -> u64 {
        sum_of_costs(self)
    }

    pub fn makespan(&self) -> u32 {
        makespan(self)
    }
}

/// Sum of arrival timesteps.
pub fn sum_of_costs(plan: &TeamPlan) -> u64 {
    plan.paths.iter().map(|p| p.cost() as u64).sum()
}

/// Largest arrival timestep, zero for an empty team.
pub fn makespan(plan: &TeamPlan) -> u32 {
    plan.paths.iter().map(Path::cost).max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConflictKind {
    Vertex,
    Edge,
}

/// Where an agent was when a conflict happened. For edge conflicts every
/// agent is described by its transition `from -> to` between `t` and `t+1`,
/// with `from == to` for an agent that waited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Vertex(VertexId),
    Edge(VertexId, VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    /// Ordered so that `agents.0 < agents.1`.
    pub agents: (AgentId, AgentId),
    pub locations: (Location, Location),
    pub timestep: u32,
}

impl Conflict {
    fn sort_key(&self) -> (u32, ConflictKind, AgentId, AgentId) {
        (self.timestep, self.kind, self.agents.0, self.agents.1)
    }
}

/// Body position of `path` at half-step `k`: even `k = 2t` is the vertex at
/// `t`, odd `k = 2t + 1` the midpoint of the transition `t -> t + 1`.
#[inline]
pub(crate) fn half_step_pos(roadmap: &GridRoadmap, path: &Path, k: u32) -> HalfPos {
    let t = k / 2;
    if k.is_multiple_of(2) {
        roadmap.half_pos(position_at(path, t))
    } else {
        roadmap.half_mid(position_at(path, t), position_at(path, t + 1))
    }
}

fn last_index(plan: &TeamPlan) -> u32 {
    plan.paths.iter().map(|p| p.states.len() as u32 - 1).max().unwrap_or(0)
}

/// Pairs `(i, j)`, `i < j` (indices into `pos`), whose bodies overlap.
/// Sorted by `i` then `j`.
fn overlapping_pairs(roadmap: &GridRoadmap, pos: &[HalfPos]) -> Vec<(usize, usize)> {
    let reach = roadmap.half_reach();
    let mut order: Vec<usize> = (0..pos.len()).collect();
    order.sort_by_key(|&i| (pos[i].0, i));
    let mut out = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            if pos[j].0 - pos[i].0 > reach {
                break;
            }
            if roadmap.half_overlap(pos[i], pos[j]) {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort_unstable();
    out
}

fn make_conflict(plan: &TeamPlan, k: u32, i: usize, j: usize) -> Conflict {
    let t = k / 2;
    let loc = |p: &Path| {
        if k.is_multiple_of(2) {
            Location::Vertex(position_at(p, t))
        } else {
            Location::Edge(position_at(p, t), position_at(p, t + 1))
        }
    };
    let (pi, pj) = (&plan.paths[i], &plan.paths[j]);
    let (a, b) = if pi.agent < pj.agent { (pi, pj) } else { (pj, pi) };
    Conflict {
        kind: if k.is_multiple_of(2) {
            ConflictKind::Vertex
        } else {
            ConflictKind::Edge
        },
        agents: (a.agent, b.agent),
        locations: (loc(a), loc(b)),
        timestep: t,
    }
}

/// Scans the plan in time order and returns the earliest conflict: ties go
/// to vertex conflicts over edge conflicts at the same `t`, then to the
/// lowest agent pair.
pub fn find_first_conflict(plan: &TeamPlan, roadmap: &GridRoadmap) -> Option<Conflict> {
    let mut pos = vec![(0, 0); plan.paths.len()];
    for k in 0..=2 * last_index(plan) {
        for (slot, p) in pos.iter_mut().zip(&plan.paths) {
            *slot = half_step_pos(roadmap, p, k);
        }
        if let Some(&(i, j)) = overlapping_pairs(roadmap, &pos).iter().min_by_key(|(i, j)| {
            let (a, b) = (plan.paths[*i].agent, plan.paths[*j].agent);
            (a.min(b), a.max(b))
        }) {
            return Some(make_conflict(plan, k, i, j));
        }
    }
    None
}

/// Every conflict in the plan, in the same order `find_first_conflict` would
/// visit them.
pub fn all_conflicts(plan: &TeamPlan, roadmap: &GridRoadmap) -> Vec<Conflict> {
    let mut out = Vec::new();
    let mut pos = vec![(0, 0); plan.paths.len()];
    for k in 0..=2 * last_index(plan) {
        for (slot, p) in pos.iter_mut().zip(&plan.paths) {
            *slot = half_step_pos(roadmap, p, k);
        }
        for (i, j) in overlapping_pairs(roadmap, &pos) {
            out.push(make_conflict(plan, k, i, j));
        }
    }
    out.sort_by_key(Conflict::sort_key);
    out
}

/// Whether two paths' bodies overlap at any vertex time or transition
/// midpoint, including after either one has come to rest.
pub fn paths_conflict(roadmap: &GridRoadmap, a: &Path, b: &Path) -> bool {
    let last = (a.states.len().max(b.states.len()) as u32 - 1) * 2;
    (0..=last).any(|k| roadmap.half_overlap(half_step_pos(roadmap, a, k), half_step_pos(roadmap, b, k)))
}

/// Number of distinct agent pairs that conflict at least once.
pub fn count_conflicting_pairs(plan: &TeamPlan, roadmap: &GridRoadmap) -> usize {
    let mut pairs: Vec<(AgentId, AgentId)> = all_conflicts(plan, roadmap).into_iter().map(|c| c.agents).collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs.len()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan has {found} paths for {expected} agents")]
    AgentCount { expected: usize, found: usize },

    #[error("path {index} belongs to agent {agent}")]
    AgentOrder { index: usize, agent: AgentId },

    #[error("agent {agent}: path is empty")]
    Empty { agent: AgentId },

    #[error("agent {agent}: {what} is {found}, expected {expected}")]
    Endpoint {
        agent: AgentId,
        what: &'static str,
        found: VertexId,
        expected: VertexId,
    },

    #[error("agent {agent}: vertex {vertex} at t={t} is not on the roadmap")]
    UnknownVertex { agent: AgentId, vertex: VertexId, t: usize },

    #[error("agent {agent}: {from} -> {to} at t={t} is neither a wait nor an edge")]
    InvalidMove {
        agent: AgentId,
        from: VertexId,
        to: VertexId,
        t: usize,
    },
}

/// Audits a plan against an instance: endpoints, step validity, then every
/// conflict. An empty list means the plan is valid.
pub fn validate_plan(
    plan: &TeamPlan,
    roadmap: &GridRoadmap,
    instance: &ProblemInstance,
) -> Result<Vec<Conflict>, PlanError> {
    let tasks = instance.tasks();
    if plan.paths.len() != tasks.len() {
        return Err(PlanError::AgentCount {
            expected: tasks.len(),
            found: plan.paths.len(),
        });
    }
    for (index, (path, task)) in plan.paths.iter().zip(tasks).enumerate() {
        if path.agent != index {
            return Err(PlanError::AgentOrder {
                index,
                agent: path.agent,
            });
        }
        let agent = path.agent;
        if path.states.is_empty() {
            return Err(PlanError::Empty { agent });
        }
        for (t, v) in path.states.iter().enumerate() {
            if !roadmap.contains(*v) {
                return Err(PlanError::UnknownVertex { agent, vertex: *v, t });
            }
        }
        for (what, found, expected) in [("start", path.start(), task.start), ("goal", path.goal(), task.goal)] {
            if found != expected {
                return Err(PlanError::Endpoint {
                    agent,
                    what,
                    found,
                    expected,
                });
            }
        }
        for (t, w) in path.states.windows(2).enumerate() {
            if !roadmap.is_step(w[0], w[1]) {
                return Err(PlanError::InvalidMove {
                    agent,
                    from: w[0],
                    to: w[1],
                    t,
                });
            }
        }
    }
    Ok(all_conflicts(plan, roadmap))
}
