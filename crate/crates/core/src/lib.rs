//! Constraint-based multi-agent pathfinding on multi-resolution grid roadmaps.
//!
//! The crate covers the whole pipeline: MovingAI map and scenario parsing
//! ([`map`]), roadmap construction with a square robot body ([`roadmap`]),
//! geometric conflict detection ([`conflict`]), space-time A* ([`low_level`]),
//! the shared constraint-tree search with motion or priority branching
//! ([`high_level`]), betweenness-centrality topology analysis ([`topology`])
//! and the benchmark protocol ([`bench`]).

pub mod bench;
pub mod clock;
pub mod conflict;
pub mod high_level;
pub mod instance;
pub mod low_level;
pub mod map;
pub mod plan_file;
pub mod roadmap;
pub mod topology;

pub use conflict::{
    bodies_overlap, find_first_conflict, makespan, position_at, sum_of_costs, validate_plan, Conflict, ConflictKind,
    Location, Path, TeamPlan,
};
pub use high_level::{solve, Budget, Outcome, SolveResult, Strategy};
pub use instance::{AgentId, AgentTask, ProblemInstance};
pub use map::{parse_map, parse_scenario, Cell, GridMap, ScenarioEntry};
pub use roadmap::{build_roadmap, project_path, GridRoadmap, Point, VertexId, DEFAULT_ROBOT_WIDTH};
