//! Best-first constraint-tree search shared by both conflict-resolution
//! strategies.
//!
//! The root holds independently planned shortest paths. Each iteration pops
//! the cheapest open node, looks for the first conflict and either returns
//! the conflict-free plan or branches into two children. Motion branching
//! forbids one agent its own location at the conflict time; priority
//! branching orders the two agents and replans the lower one (and whoever
//! below it is disturbed) around every higher agent's whole path.

mod motion;
mod priority;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Deadline;
use crate::conflict::{count_conflicting_pairs, find_first_conflict, Path, TeamPlan};
use crate::instance::{AgentId, ProblemInstance};
use crate::low_level::{
    admissible_heuristic, shortest_path_with_heuristic, DynamicObstacleSet, LowLevelOutcome, MotionConstraint,
    SearchLimits,
};
use crate::roadmap::VertexId;

pub use motion::resolve_motion;
pub use priority::{ancestor_sets, resolve_priority, PriorityConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Conservative motion constraints (CBS).
    #[serde(rename = "cbs")]
    MotionCbs,
    /// Aggressive priority constraints (CBSw/P).
    #[serde(rename = "cbswp")]
    PriorityCbswp,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::MotionCbs => "cbs",
            Strategy::PriorityCbswp => "cbswp",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cbs" | "motion" => Ok(Strategy::MotionCbs),
            "cbswp" | "cbsw/p" | "priority" | "pbs" => Ok(Strategy::PriorityCbswp),
            other => Err(format!("unknown strategy {other:?}, expected cbs or cbswp")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub time_limit: Option<Duration>,
    /// Maximum high-level expansions.
    pub node_limit: Option<usize>,
    /// Expansion budget of every low-level call.
    pub low_level_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            time_limit: None,
            node_limit: None,
            low_level_nodes: SearchLimits::default().node_budget,
        }
    }
}

impl Budget {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_node_limit(mut self, limit: usize) -> Self {
        self.node_limit = Some(limit);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Solved,
    Infeasible,
    Timeout,
    Exhausted,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Solved => "Solved",
            Outcome::Infeasible => "Infeasible",
            Outcome::Timeout => "Timeout",
            Outcome::Exhausted => "Exhausted",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Solved" => Ok(Outcome::Solved),
            "Infeasible" => Ok(Outcome::Infeasible),
            "Timeout" => Ok(Outcome::Timeout),
            "Exhausted" => Ok(Outcome::Exhausted),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub conflicts_resolved: usize,
    pub low_level_calls: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub strategy: Strategy,
    pub cost: Option<u64>,
    pub plan: Option<TeamPlan>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn is_solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}

/// A constraint-tree (or priority-tree) node.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub paths: Vec<Arc<Path>>,
    pub cost: u64,
    /// Number of agent pairs in conflict.
    pub conflicts: usize,
    pub motion_constraints: Vec<MotionConstraint>,
    pub priority_order: Vec<PriorityConstraint>,
    /// The unordered agent pair whose conflict created this node.
    pub branch: Option<(AgentId, AgentId)>,
}

impl SearchNode {
    pub fn plan(&self) -> TeamPlan {
        TeamPlan::new(self.paths.iter().map(|p| (**p).clone()).collect())
    }

    pub fn constraints_for(&self, agent: AgentId) -> Vec<MotionConstraint> {
        self.motion_constraints
            .iter()
            .filter(|c| c.agent == agent)
            .copied()
            .collect()
    }
}

/// State shared by node expansion: heuristic tables, limits and counters.
pub(crate) struct Planner<'a> {
    pub instance: &'a ProblemInstance,
    heuristics: HashMap<VertexId, Arc<Vec<u32>>>,
    pub limits: SearchLimits,
    pub low_level_calls: usize,
    /// Set when a child was dropped for lack of low-level budget, so an
    /// empty open list can no longer prove infeasibility.
    pub incomplete: bool,
    pub timed_out: bool,
}

pub(crate) enum Replan {
    Path(Path),
    Failed,
    TimedOut,
}

impl<'a> Planner<'a> {
    fn new(instance: &'a ProblemInstance, budget: &Budget, deadline: Deadline) -> Self {
        Planner {
            instance,
            heuristics: HashMap::new(),
            limits: SearchLimits {
                horizon: None,
                node_budget: budget.low_level_nodes,
                deadline,
            },
            low_level_calls: 0,
            incomplete: false,
            timed_out: false,
        }
    }

    pub fn plan(&mut self, agent: AgentId, constraints: &[MotionConstraint], obstacles: &[&Path]) -> Replan {
        let task = self.instance.tasks()[agent];
        let roadmap = self.instance.roadmap();
        let h = Arc::clone(
            self.heuristics
                .entry(task.goal)
                .or_insert_with(|| Arc::new(admissible_heuristic(roadmap, task.goal))),
        );
        self.low_level_calls += 1;
        match shortest_path_with_heuristic(
            roadmap,
            &task,
            constraints,
            &DynamicObstacleSet::new(obstacles),
            &self.limits,
            &h,
        ) {
            LowLevelOutcome::Found(p) => Replan::Path(p),
            LowLevelOutcome::Infeasible => Replan::Failed,
            LowLevelOutcome::Exhausted => {
                self.incomplete = true;
                Replan::Failed
            }
            LowLevelOutcome::TimedOut => {
                self.timed_out = true;
                Replan::TimedOut
            }
        }
    }
}

/// Child contents produced by a strategy before it is turned into a node.
pub(crate) struct ChildSpec {
    pub paths: Vec<Arc<Path>>,
    pub motion_constraints: Vec<MotionConstraint>,
    pub priority_order: Vec<PriorityConstraint>,
}

/// Solves `instance` with the given strategy and budget.
pub fn solve(instance: &ProblemInstance, strategy: Strategy, budget: &Budget) -> SolveResult {
    solve_observed(instance, strategy, budget, &mut |_| {})
}

/// As [`solve`], calling `observer` on every node as it is expanded (popped
/// from the open list), in expansion order.
pub fn solve_observed(
    instance: &ProblemInstance,
    strategy: Strategy,
    budget: &Budget,
    observer: &mut dyn FnMut(&SearchNode),
) -> SolveResult {
    let deadline = Deadline::new(budget.time_limit);
    let mut planner = Planner::new(instance, budget, deadline);
    let mut stats = SolveStats::default();
    let roadmap = instance.roadmap();

    let finish = |outcome: Outcome, node: Option<&SearchNode>, mut stats: SolveStats, calls: usize| {
        stats.low_level_calls = calls;
        stats.wall_time_ms = deadline.elapsed().as_secs_f64() * 1e3;
        SolveResult {
            outcome,
            strategy,
            cost: node.map(|n| n.cost),
            plan: node.map(SearchNode::plan),
            stats,
        }
    };

    let mut root_paths = Vec::with_capacity(instance.num_agents());
    for agent in 0..instance.num_agents() {
        match planner.plan(agent, &[], &[]) {
            Replan::Path(p) => root_paths.push(Arc::new(p)),
            Replan::TimedOut => return finish(Outcome::Timeout, None, stats, planner.low_level_calls),
            Replan::Failed if planner.incomplete => {
                return finish(Outcome::Exhausted, None, stats, planner.low_level_calls)
            }
            Replan::Failed => return finish(Outcome::Infeasible, None, stats, planner.low_level_calls),
        }
    }

    let make_node = |id: usize, parent: Option<usize>, branch, spec: ChildSpec| {
        let plan = TeamPlan::new(spec.paths.iter().map(|p| (**p).clone()).collect());
        SearchNode {
            id,
            parent,
            cost: plan.cost(),
            conflicts: count_conflicting_pairs(&plan, roadmap),
            paths: spec.paths,
            motion_constraints: spec.motion_constraints,
            priority_order: spec.priority_order,
            branch,
        }
    };

    let root = make_node(
        0,
        None,
        None,
        ChildSpec {
            paths: root_paths,
            motion_constraints: Vec::new(),
            priority_order: Vec::new(),
        },
    );
    stats.nodes_generated = 1;
    let mut nodes: Vec<Option<SearchNode>> = vec![Some(root)];
    let mut open = BinaryHeap::new();
    {
        let r = nodes[0].as_ref().unwrap();
        open.push(Reverse((r.cost, r.conflicts, 0usize)));
    }

    while let Some(Reverse((_, _, id))) = open.pop() {
        if deadline.expired() {
            return finish(Outcome::Timeout, None, stats, planner.low_level_calls);
        }
        if budget.node_limit.is_some_and(|limit| stats.nodes_expanded >= limit) {
            return finish(Outcome::Exhausted, None, stats, planner.low_level_calls);
        }
        let node = nodes[id].take().expect("node popped twice");
        stats.nodes_expanded += 1;
        observer(&node);

        let plan = node.plan();
        let Some(conflict) = find_first_conflict(&plan, roadmap) else {
            return finish(Outcome::Solved, Some(&node), stats, planner.low_level_calls);
        };
        stats.conflicts_resolved += 1;

        let children = match strategy {
            Strategy::MotionCbs => motion::expand(&mut planner, &node, &conflict),
            Strategy::PriorityCbswp => priority::expand(&mut planner, &node, &conflict),
        };
        if planner.timed_out {
            return finish(Outcome::Timeout, None, stats, planner.low_level_calls);
        }
        for spec in children {
            let child_id = nodes.len();
            let child = make_node(child_id, Some(id), Some(conflict.agents), spec);
            open.push(Reverse((child.cost, child.conflicts, child_id)));
            nodes.push(Some(child));
            stats.nodes_generated += 1;
        }
    }

    let outcome = if planner.incomplete {
        Outcome::Exhausted
    } else {
        Outcome::Infeasible
    };
    finish(outcome, None, stats, planner.low_level_calls)
}
