use std::sync::Arc;

use crate::conflict::Conflict;
use crate::low_level::MotionConstraint;

use super::{ChildSpec, Planner, Replan, SearchNode};

/// The two motion constraints a conflict branches on: each agent is
/// forbidden its own location at the conflict time.
pub fn resolve_motion(conflict: &Conflict) -> [MotionConstraint; 2] {
    [
        MotionConstraint {
            agent: conflict.agents.0,
            location: conflict.locations.0,
            timestep: conflict.timestep,
        },
        MotionConstraint {
            agent: conflict.agents.1,
            location: conflict.locations.1,
            timestep: conflict.timestep,
        },
    ]
}

pub(super) fn expand(planner: &mut Planner<'_>, node: &SearchNode, conflict: &Conflict) -> Vec<ChildSpec> {
    let mut children = Vec::with_capacity(2);
    for constraint in resolve_motion(conflict) {
        if node.motion_constraints.contains(&constraint) {
            continue;
        }
        let mut constraints = node.motion_constraints.clone();
        constraints.push(constraint);
        let own: Vec<MotionConstraint> = constraints
            .iter()
            .filter(|c| c.agent == constraint.agent)
            .copied()
            .collect();
        match planner.plan(constraint.agent, &own, &[]) {
            Replan::Path(path) => {
                let mut paths = node.paths.clone();
                paths[constraint.agent] = Arc::new(path);
                children.push(ChildSpec {
                    paths,
                    motion_constraints: constraints,
                    priority_order: Vec::new(),
                });
            }
            Replan::Failed => {}
            Replan::TimedOut => return Vec::new(),
        }
    }
    children
}
