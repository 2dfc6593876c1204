//! Space-time A* for a single agent.
//!
//! The agent must respect its motion constraints, keep its body clear of a
//! set of dynamic obstacles (paths of other agents, resting at their goals
//! forever) and finally rest at its own goal without ever being disturbed.
//!
//! Once every constraint and every obstacle movement lies in the past the
//! problem no longer depends on time, so states later than that point are
//! folded together. This keeps the search finite and makes "no path" a proof
//! rather than a horizon artefact.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::clock::Deadline;
use crate::conflict::{half_step_pos, Location, Path};
use crate::instance::{AgentId, AgentTask};
use crate::roadmap::{GridRoadmap, HalfPos, VertexId};

/// Sentinel for unreachable vertices in a heuristic table.
pub const UNREACHABLE: u32 = u32::MAX;

/// Forbids `agent` from a vertex at `timestep`, or from the transition
/// `from -> to` between `timestep` and `timestep + 1` (`from == to` forbids
/// a wait).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MotionConstraint {
    pub agent: AgentId,
    pub location: Location,
    pub timestep: u32,
}

/// Paths whose swept bodies the agent has to stay clear of.
#[derive(Debug, Clone, Copy, Default)]
pub struct DynamicObstacleSet<'a> {
    pub paths: &'a [&'a Path],
}

impl<'a> DynamicObstacleSet<'a> {
    pub fn new(paths: &'a [&'a Path]) -> Self {
        DynamicObstacleSet { paths }
    }

    pub fn none() -> Self {
        DynamicObstacleSet { paths: &[] }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    /// Latest arrival considered. `None` uses the exact bound
    /// (last time-dependent event + number of vertices).
    pub horizon: Option<u32>,
    /// Maximum number of state expansions.
    pub node_budget: usize,
    pub deadline: Deadline,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            horizon: None,
            node_budget: 2_000_000,
            deadline: Deadline::never(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LowLevelOutcome {
    Found(Path),
    /// No path exists (within the horizon, when one was given).
    Infeasible,
    /// The node budget ran out first.
    Exhausted,
    TimedOut,
}

impl LowLevelOutcome {
    pub fn path(self) -> Option<Path> {
        match self {
            LowLevelOutcome::Found(p) => Some(p),
            _ => None,
        }
    }
}

/// Exact unconstrained distances (in moves) from every vertex to `goal`,
/// [`UNREACHABLE`] where no path exists.
pub fn admissible_heuristic(roadmap: &GridRoadmap, goal: VertexId) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; roadmap.num_vertices()];
    dist[goal.index()] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.index()] + 1;
        for &w in roadmap.neighbors(v) {
            if dist[w.index()] == UNREACHABLE {
                dist[w.index()] = d;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Obstacle body positions per half-step, see [`half_step_pos`].
struct ObstacleTable {
    by_step: Vec<Vec<HalfPos>>,
    resting: Vec<HalfPos>,
}

impl ObstacleTable {
    fn new(roadmap: &GridRoadmap, obstacles: &DynamicObstacleSet) -> Self {
        let last = obstacles
            .paths
            .iter()
            .map(|p| 2 * (p.states.len() as u32 - 1))
            .max()
            .unwrap_or(0);
        let by_step = (0..last)
            .map(|k| obstacles.paths.iter().map(|p| half_step_pos(roadmap, p, k)).collect())
            .collect();
        let resting = obstacles.paths.iter().map(|p| roadmap.half_pos(p.goal())).collect();
        ObstacleTable { by_step, resting }
    }

    fn at(&self, k: u32) -> &[HalfPos] {
        self.by_step.get(k as usize).unwrap_or(&self.resting)
    }

    /// First timestep from which all obstacles are at rest.
    fn settled_at(&self) -> u32 {
        (self.by_step.len() as u32).div_ceil(2)
    }

    fn hits(&self, roadmap: &GridRoadmap, k: u32, pos: HalfPos) -> bool {
        self.at(k).iter().any(|o| roadmap.half_overlap(*o, pos))
    }
}

struct ConstraintTable {
    vertices: HashSet<(VertexId, u32)>,
    transitions: HashSet<(VertexId, VertexId, u32)>,
    /// One past the last timestep any constraint refers to.
    settled_at: u32,
}

impl ConstraintTable {
    fn new(constraints: &[MotionConstraint]) -> Self {
        let mut table = ConstraintTable {
            vertices: HashSet::new(),
            transitions: HashSet::new(),
            settled_at: 0,
        };
        for c in constraints {
            match c.location {
                Location::Vertex(v) => {
                    table.vertices.insert((v, c.timestep));
                }
                Location::Edge(a, b) => {
                    table.transitions.insert((a, b, c.timestep));
                }
            }
            table.settled_at = table.settled_at.max(c.timestep + 1);
        }
        table
    }
}

struct Node {
    vertex: VertexId,
    time: u32,
    parent: u32,
}

/// Shortest path for one agent. `constraints` should already be filtered to
/// this agent; entries for other agents are ignored.
pub fn shortest_path(
    roadmap: &GridRoadmap,
    task: &AgentTask,
    constraints: &[MotionConstraint],
    obstacles: &DynamicObstacleSet,
    limits: &SearchLimits,
) -> LowLevelOutcome {
    let h = admissible_heuristic(roadmap, task.goal);
    shortest_path_with_heuristic(roadmap, task, constraints, obstacles, limits, &h)
}

/// As [`shortest_path`], with a precomputed [`admissible_heuristic`] table
/// for `task.goal`.
pub fn shortest_path_with_heuristic(
    roadmap: &GridRoadmap,
    task: &AgentTask,
    constraints: &[MotionConstraint],
    obstacles: &DynamicObstacleSet,
    limits: &SearchLimits,
    h: &[u32],
) -> LowLevelOutcome {
    let own: Vec<MotionConstraint> = constraints.iter().filter(|c| c.agent == task.agent).copied().collect();
    let table = ConstraintTable::new(&own);
    let obs = ObstacleTable::new(roadmap, obstacles);
    let (start, goal) = (task.start, task.goal);

    if h[start.index()] == UNREACHABLE {
        return LowLevelOutcome::Infeasible;
    }

    // Earliest arrival from which resting on the goal is safe forever.
    let goal_pos = roadmap.half_pos(goal);
    if obs.resting.iter().any(|o| roadmap.half_overlap(*o, goal_pos)) {
        return LowLevelOutcome::Infeasible;
    }
    let mut rest_from = 0u32;
    for &(v, t) in &table.vertices {
        if v == goal {
            rest_from = rest_from.max(t + 1);
        }
    }
    for &(a, b, t) in &table.transitions {
        if a == goal && b == goal {
            rest_from = rest_from.max(t + 1);
        }
    }
    for k in 0..obs.by_step.len() as u32 {
        if obs.hits(roadmap, k, goal_pos) {
            rest_from = rest_from.max(k / 2 + 1);
        }
    }

    let settled = table.settled_at.max(obs.settled_at());
    let horizon = limits
        .horizon
        .unwrap_or(settled.saturating_add(roadmap.num_vertices() as u32));

    let state_ok =
        |v: VertexId, t: u32| !table.vertices.contains(&(v, t)) && !obs.hits(roadmap, 2 * t, roadmap.half_pos(v));
    let move_ok = |a: VertexId, b: VertexId, t: u32| {
        !table.transitions.contains(&(a, b, t))
            && !obs.hits(roadmap, 2 * t + 1, roadmap.half_mid(a, b))
            && state_ok(b, t + 1)
    };

    if !state_ok(start, 0) {
        return LowLevelOutcome::Infeasible;
    }

    let f_of = |v: VertexId, t: u32| (t + h[v.index()]).max(rest_from);
    let key = |v: VertexId, t: u32| (v, t.min(settled));

    let mut nodes: Vec<Node> = vec![Node {
        vertex: start,
        time: 0,
        parent: u32::MAX,
    }];
    // (f, h, vertex, is_wait, node index)
    let mut open = BinaryHeap::new();
    open.push(Reverse((f_of(start, 0), h[start.index()], start, false, 0u32)));
    let mut best: HashMap<(VertexId, u32), u32> = HashMap::new();
    best.insert(key(start, 0), 0);
    let mut closed: HashSet<(VertexId, u32)> = HashSet::new();
    let mut expansions = 0usize;

    while let Some(Reverse((_, _, v, _, idx))) = open.pop() {
        let t = nodes[idx as usize].time;
        if !closed.insert(key(v, t)) {
            continue;
        }
        if v == goal && t >= rest_from {
            let mut states = Vec::with_capacity(t as usize + 1);
            let mut cur = idx;
            while cur != u32::MAX {
                states.push(nodes[cur as usize].vertex);
                cur = nodes[cur as usize].parent;
            }
            states.reverse();
            return LowLevelOutcome::Found(Path::new(task.agent, states));
        }
        expansions += 1;
        if expansions > limits.node_budget {
            return LowLevelOutcome::Exhausted;
        }
        if expansions.is_multiple_of(256) && limits.deadline.expired() {
            return LowLevelOutcome::TimedOut;
        }
        if t >= horizon {
            continue;
        }
        let nt = t + 1;
        let succ = roadmap
            .neighbors(v)
            .iter()
            .map(|w| (*w, false))
            .chain(std::iter::once((v, true)));
        for (w, wait) in succ {
            if h[w.index()] == UNREACHABLE || !move_ok(v, w, t) {
                continue;
            }
            let k = key(w, nt);
            if closed.contains(&k) || best.get(&k).is_some_and(|g| *g <= nt) {
                continue;
            }
            best.insert(k, nt);
            nodes.push(Node {
                vertex: w,
                time: nt,
                parent: idx,
            });
            open.push(Reverse((f_of(w, nt), h[w.index()], w, wait, nodes.len() as u32 - 1)));
        }
    }
    LowLevelOutcome::Infeasible
}

/// Replays a path against constraints and obstacles; returns the first
/// offending timestep, if any. Resting on the goal is checked up to
/// `check_until`.
pub fn first_violation(
    roadmap: &GridRoadmap,
    path: &Path,
    constraints: &[MotionConstraint],
    obstacles: &DynamicObstacleSet,
    check_until: u32,
) -> Option<u32> {
    let own: Vec<MotionConstraint> = constraints.iter().filter(|c| c.agent == path.agent).copied().collect();
    let table = ConstraintTable::new(&own);
    let obs = ObstacleTable::new(roadmap, obstacles);
    let end = check_until
        .max(table.settled_at)
        .max(obs.settled_at())
        .max(path.states.len() as u32);
    for t in 0..=end {
        let v = path.position_at(t);
        if table.vertices.contains(&(v, t)) || obs.hits(roadmap, 2 * t, roadmap.half_pos(v)) {
            return Some(t);
        }
        let w = path.position_at(t + 1);
        if table.transitions.contains(&(v, w, t)) || obs.hits(roadmap, 2 * t + 1, roadmap.half_mid(v, w)) {
            return Some(t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{Cell, GridMap};
    use crate::roadmap::build_roadmap;

    fn empty(n: u32) -> GridRoadmap {
        build_roadmap(GridMap::empty(n, n), 1, 0.5).unwrap()
    }

    fn at(rm: &GridRoadmap, x: u32, y: u32) -> VertexId {
        rm.vertex_at_cell(Cell::new(x, y)).unwrap()
    }

    #[test]
    fn straight_line_cost() {
        let rm = empty(4);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 3, 0),
        };
        let p = shortest_path(&rm, &task, &[], &DynamicObstacleSet::none(), &SearchLimits::default())
            .path()
            .unwrap();
        assert_eq!(p.cost(), 3);
        assert_eq!(p.states.len(), 4);
    }

    #[test]
    fn vertex_constraint_costs_one_step() {
        let rm = empty(4);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 3, 0),
        };
        let c = MotionConstraint {
            agent: 0,
            location: Location::Vertex(at(&rm, 1, 0)),
            timestep: 1,
        };
        let p = shortest_path(&rm, &task, &[c], &DynamicObstacleSet::none(), &SearchLimits::default())
            .path()
            .unwrap();
        assert_eq!(p.cost(), 4);
        assert_ne!(p.states[1], at(&rm, 1, 0));
        // constraints of other agents are ignored
        let other = MotionConstraint { agent: 1, ..c };
        let q = shortest_path(
            &rm,
            &task,
            &[other],
            &DynamicObstacleSet::none(),
            &SearchLimits::default(),
        )
        .path()
        .unwrap();
        assert_eq!(q.cost(), 3);
    }

    #[test]
    fn goal_constraint_after_arrival_delays_rest() {
        let rm = empty(3);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 1, 0),
        };
        let c = MotionConstraint {
            agent: 0,
            location: Location::Vertex(at(&rm, 1, 0)),
            timestep: 5,
        };
        let p = shortest_path(&rm, &task, &[c], &DynamicObstacleSet::none(), &SearchLimits::default())
            .path()
            .unwrap();
        assert_eq!(p.cost(), 6);
        assert_ne!(p.position_at(5), at(&rm, 1, 0));
        assert_eq!(first_violation(&rm, &p, &[c], &DynamicObstacleSet::none(), 10), None);
    }

    #[test]
    fn wait_constraint_is_respected() {
        let rm = empty(3);
        let s = at(&rm, 0, 0);
        let task = AgentTask {
            agent: 0,
            start: s,
            goal: s,
        };
        let c = MotionConstraint {
            agent: 0,
            location: Location::Edge(s, s),
            timestep: 0,
        };
        let p = shortest_path(&rm, &task, &[c], &DynamicObstacleSet::none(), &SearchLimits::default())
            .path()
            .unwrap();
        // must step off and come back
        assert_eq!(p.cost(), 2);
    }

    #[test]
    fn resting_obstacle_on_goal_is_infeasible() {
        let rm = empty(4);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 3, 0),
        };
        let blocker = Path::new(1, vec![at(&rm, 3, 1), at(&rm, 3, 0)]);
        let obs = [&blocker];
        let out = shortest_path(
            &rm,
            &task,
            &[],
            &DynamicObstacleSet::new(&obs),
            &SearchLimits::default(),
        );
        assert_eq!(out, LowLevelOutcome::Infeasible);
    }

    #[test]
    fn obstacle_passing_through_goal_delays_arrival() {
        let rm = empty(5);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 2),
            goal: at(&rm, 2, 2),
        };
        // crosses (2,2) at t=4 on its way down
        let other = Path::new(1, (0..5).map(|y| at(&rm, 2, y)).chain([at(&rm, 3, 4)]).collect());
        let mut shifted = vec![at(&rm, 2, 0); 2];
        shifted.extend(other.states[1..].iter().copied());
        let other = Path::new(1, shifted);
        let obs = [&other];
        let p = shortest_path(
            &rm,
            &task,
            &[],
            &DynamicObstacleSet::new(&obs),
            &SearchLimits::default(),
        )
        .path()
        .unwrap();
        assert!(p.cost() > 2);
        assert_eq!(first_violation(&rm, &p, &[], &DynamicObstacleSet::new(&obs), 20), None);
    }

    #[test]
    fn walled_start_is_infeasible() {
        let text = "type octile\nheight 3\nwidth 3\nmap\n.@.\n@@.\n...\n";
        let rm = build_roadmap(crate::map::parse_map(text).unwrap(), 1, 0.5).unwrap();
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 2, 2),
        };
        let out = shortest_path(&rm, &task, &[], &DynamicObstacleSet::none(), &SearchLimits::default());
        assert_eq!(out, LowLevelOutcome::Infeasible);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let rm = empty(8);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 7, 7),
        };
        let limits = SearchLimits {
            node_budget: 3,
            ..SearchLimits::default()
        };
        assert_eq!(
            shortest_path(&rm, &task, &[], &DynamicObstacleSet::none(), &limits),
            LowLevelOutcome::Exhausted
        );
    }

    #[test]
    fn heuristic_is_bfs_distance() {
        let rm = empty(4);
        let g = at(&rm, 0, 0);
        let h = admissible_heuristic(&rm, g);
        assert_eq!(h[g.index()], 0);
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(h[at(&rm, x, y).index()], x + y);
            }
        }
        let text = "type octile\nheight 3\nwidth 3\nmap\n...\n@@.\n...\n";
        let rm = build_roadmap(crate::map::parse_map(text).unwrap(), 1, 0.5).unwrap();
        let h = admissible_heuristic(&rm, at(&rm, 0, 2));
        // Manhattan distance 2, detour through the gap on the right: 6
        assert_eq!(h[at(&rm, 0, 0).index()], 6);
    }

    #[test]
    fn deterministic() {
        let rm = empty(6);
        let task = AgentTask {
            agent: 0,
            start: at(&rm, 0, 0),
            goal: at(&rm, 5, 5),
        };
        let run = || shortest_path(&rm, &task, &[], &DynamicObstacleSet::none(), &SearchLimits::default());
        assert_eq!(run(), run());
    }
}
