mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use mapf_lab::conflict::{all_conflicts, find_first_conflict};
use mapf_lab::roadmap::{GridRoadmap, VertexId};
use mapf_lab::{bodies_overlap, ConflictKind, Path, TeamPlan};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random roadmap and a team of random walks on it.
fn scene(seed: u64) -> Option<(Arc<GridRoadmap>, TeamPlan)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = [1, 2, 4][rng.random_range(0..3)];
    let side = rng.random_range(2..=5u32);
    let density = rng.random_range(0.0..0.3);
    let rm = common::roadmap(common::random_map(&mut rng, side, side, density), r);
    if rm.num_vertices() == 0 {
        return None;
    }
    let agents = rng.random_range(2..=4);
    let paths = (0..agents)
        .map(|agent| {
            let mut v = VertexId(rng.random_range(0..rm.num_vertices() as u32));
            let mut states = vec![v];
            for _ in 0..rng.random_range(0..8) {
                let n = rm.neighbors(v);
                if !n.is_empty() && rng.random_bool(0.7) {
                    v = n[rng.random_range(0..n.len())];
                }
                states.push(v);
            }
            Path::new(agent, states)
        })
        .collect();
    Some((rm, TeamPlan::new(paths)))
}

fn at(path: &Path, t: usize) -> VertexId {
    *path.states.get(t).unwrap_or_else(|| path.states.last().unwrap())
}

/// Every (half-step, pair) where two bodies overlap, by direct f64 sampling.
fn overlaps(rm: &GridRoadmap, plan: &TeamPlan) -> BTreeSet<(u32, usize, usize)> {
    let w = rm.robot_width();
    let len = plan.paths.iter().map(|p| p.states.len()).max().unwrap();
    let mut out = BTreeSet::new();
    for i in 0..plan.paths.len() {
        for j in i + 1..plan.paths.len() {
            let (a, b) = (&plan.paths[i], &plan.paths[j]);
            for t in 0..len {
                if bodies_overlap(rm.point(at(a, t)), rm.point(at(b, t)), w) {
                    out.insert((2 * t as u32, i, j));
                }
                let ma = common::midpoint(rm, at(a, t), at(a, t + 1));
                let mb = common::midpoint(rm, at(b, t), at(b, t + 1));
                if t + 1 < len && bodies_overlap(ma, mb, w) {
                    out.insert((2 * t as u32 + 1, i, j));
                }
            }
        }
    }
    out
}

fn half_steps(rm: &GridRoadmap, plan: &TeamPlan) -> BTreeSet<(u32, usize, usize)> {
    all_conflicts(plan, rm)
        .iter()
        .map(|c| {
            let k = match c.kind {
                ConflictKind::Vertex => 2 * c.timestep,
                ConflictKind::Edge => 2 * c.timestep + 1,
            };
            (k, c.agents.0, c.agents.1)
        })
        .collect()
}

proptest! {
    #[test]
    fn detector_agrees_with_sampling(seed in any::<u64>()) {
        let Some((rm, plan)) = scene(seed) else { return Ok(()) };
        let expected = overlaps(&rm, &plan);
        prop_assert_eq!(half_steps(&rm, &plan), expected.clone());
        let first = find_first_conflict(&plan, &rm);
        prop_assert_eq!(first.is_none(), expected.is_empty());
        if let Some(c) = first {
            let all = all_conflicts(&plan, &rm);
            let earliest = all.iter().map(|c| c.timestep).min().unwrap();
            prop_assert_eq!(c.timestep, earliest);
            prop_assert!(all.contains(&c));
        }
    }

    #[test]
    fn detector_is_symmetric_in_agents(seed in any::<u64>()) {
        let Some((rm, plan)) = scene(seed) else { return Ok(()) };
        let n = plan.paths.len();
        let reversed = TeamPlan::new(
            plan.paths.iter().rev().enumerate().map(|(i, p)| Path::new(i, p.states.clone())).collect(),
        );
        let mirror: BTreeSet<_> = half_steps(&rm, &reversed)
            .into_iter()
            .map(|(k, i, j)| (k, n - 1 - j, n - 1 - i))
            .collect();
        prop_assert_eq!(mirror, half_steps(&rm, &plan));
    }

    #[test]
    fn conflict_locations_describe_the_agents(seed in any::<u64>()) {
        let Some((rm, plan)) = scene(seed) else { return Ok(()) };
        for c in all_conflicts(&plan, &rm) {
            let t = c.timestep as usize;
            for (agent, loc) in [(c.agents.0, c.locations.0), (c.agents.1, c.locations.1)] {
                let p = &plan.paths[agent];
                let expected = match c.kind {
                    ConflictKind::Vertex => mapf_lab::Location::Vertex(at(p, t)),
                    ConflictKind::Edge => mapf_lab::Location::Edge(at(p, t), at(p, t + 1)),
                };
                prop_assert_eq!(loc, expected);
            }
        }
    }
}
