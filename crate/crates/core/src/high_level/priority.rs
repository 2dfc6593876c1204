use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conflict::{paths_conflict, Conflict, Path};
use crate::instance::AgentId;

use super::{ChildSpec, Planner, Replan, SearchNode};

/// `higher` plans first; `lower` must avoid its whole path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PriorityConstraint {
    pub higher: AgentId,
    pub lower: AgentId,
}

/// The two orderings a conflict branches on: first agent above second, then
/// second above first.
pub fn resolve_priority(conflict: &Conflict) -> [PriorityConstraint; 2] {
    let (a, b) = conflict.agents;
    [
        PriorityConstraint { higher: a, lower: b },
        PriorityConstraint { higher: b, lower: a },
    ]
}

/// `result[a][b]` is true when `b` is a transitive ancestor (higher
/// priority) of `a`.
pub fn ancestor_sets(order: &[PriorityConstraint], agents: usize) -> Vec<Vec<bool>> {
    let mut anc = vec![vec![false; agents]; agents];
    for c in order {
        anc[c.lower][c.higher] = true;
    }
    for k in 0..agents {
        for i in 0..agents {
            if anc[i][k] {
                let via = anc[k].clone();
                for (cell, &reach) in anc[i].iter_mut().zip(&via) {
                    *cell |= reach;
                }
            }
        }
    }
    anc
}

/// Agents in an order where every ancestor comes before its descendants,
/// lowest id first among the ready ones.
fn topological_order(anc: &[Vec<bool>]) -> Vec<AgentId> {
    let n = anc.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n)
            .find(|&a| !placed[a] && (0..n).all(|b| !anc[a][b] || placed[b]))
            .expect("priority order is cyclic");
        placed[next] = true;
        order.push(next);
    }
    order
}

pub(super) fn expand(planner: &mut Planner<'_>, node: &SearchNode, conflict: &Conflict) -> Vec<ChildSpec> {
    let n = node.paths.len();
    let current = ancestor_sets(&node.priority_order, n);
    let (a, b) = conflict.agents;
    assert!(
        !current[a][b] && !current[b][a],
        "agents {a} and {b} conflict although one has priority over the other"
    );
    let roadmap = planner.instance.roadmap();
    let mut children = Vec::with_capacity(2);
    'child: for constraint in resolve_priority(conflict) {
        if node.priority_order.contains(&constraint) {
            continue;
        }
        let mut order = node.priority_order.clone();
        order.push(constraint);
        let anc = ancestor_sets(&order, n);
        if (0..n).any(|i| anc[i][i]) {
            continue;
        }
        let mut paths = node.paths.clone();
        for agent in topological_order(&anc) {
            if agent != constraint.lower && !anc[agent][constraint.lower] {
                continue;
            }
            let higher: Vec<&Path> = (0..n).filter(|&h| anc[agent][h]).map(|h| paths[h].as_ref()).collect();
            let disturbed =
                agent == constraint.lower || higher.iter().any(|h| paths_conflict(roadmap, h, &paths[agent]));
            if !disturbed {
                continue;
            }
            match planner.plan(agent, &[], &higher) {
                Replan::Path(path) => paths[agent] = Arc::new(path),
                Replan::Failed => continue 'child,
                Replan::TimedOut => return Vec::new(),
            }
        }
        children.push(ChildSpec {
            paths,
            motion_constraints: Vec::new(),
            priority_order: order,
        });
    }
    children
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_and_topological_order() {
        let order = [
            PriorityConstraint { higher: 2, lower: 0 },
            PriorityConstraint { higher: 0, lower: 1 },
        ];
        let anc = ancestor_sets(&order, 4);
        assert!(anc[1][0] && anc[1][2] && anc[0][2]);
        assert!(!anc[2][0] && !anc[3][0]);
        assert_eq!(topological_order(&anc), vec![2, 0, 1, 3]);
    }

    #[test]
    fn cycle_is_visible_on_the_diagonal() {
        let order = [
            PriorityConstraint { higher: 0, lower: 1 },
            PriorityConstraint { higher: 1, lower: 2 },
            PriorityConstraint { higher: 2, lower: 0 },
        ];
        let anc = ancestor_sets(&order, 3);
        assert!((0..3).all(|i| anc[i][i]));
    }
}
