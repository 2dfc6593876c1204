//! Brute-force oracles and random generators shared by the integration
//! tests. Everything here is written against the public API only and uses
//! floating-point geometry rather than the library's integer shortcuts.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use mapf_lab::instance::{AgentTask, ProblemInstance};
use mapf_lab::map::{parse_map, GridMap};
use mapf_lab::roadmap::{build_roadmap, GridRoadmap, Point, VertexId};
use mapf_lab::{bodies_overlap, Path, TeamPlan};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    FsPath::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Loads a map, preferring `$MAPF_LAB_DATA/<name>` over the bundled copy.
/// Returns the map and where it came from.
pub fn load_map(name: &str) -> (GridMap, PathBuf) {
    let external = std::env::var_os("MAPF_LAB_DATA")
        .map(PathBuf::from)
        .map(|root| root.join(name))
        .filter(|p| p.exists());
    let path = external.unwrap_or_else(|| data_dir().join(name));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    (parse_map(&text).unwrap(), path)
}

pub fn midpoint(rm: &GridRoadmap, a: VertexId, b: VertexId) -> Point {
    let (p, q) = (rm.point(a), rm.point(b));
    Point {
        x: (p.x + q.x) / 2.0,
        y: (p.y + q.y) / 2.0,
    }
}

fn at(path: &Path, t: usize) -> VertexId {
    *path.states.get(t).unwrap_or_else(|| path.states.last().unwrap())
}

/// Whether two paths ever overlap, sampling vertices and transition
/// midpoints, with agents resting at their final vertex.
pub fn paths_touch(rm: &GridRoadmap, a: &Path, b: &Path) -> bool {
    let w = rm.robot_width();
    let len = a.states.len().max(b.states.len());
    for t in 0..len {
        if bodies_overlap(rm.point(at(a, t)), rm.point(at(b, t)), w) {
            return true;
        }
        if t + 1 < len
            && bodies_overlap(
                midpoint(rm, at(a, t), at(a, t + 1)),
                midpoint(rm, at(b, t), at(b, t + 1)),
                w,
            )
        {
            return true;
        }
    }
    false
}

/// Independent audit of a plan: valid moves, right endpoints, no contact.
pub fn plan_is_valid(rm: &GridRoadmap, instance: &ProblemInstance, plan: &TeamPlan) -> Result<(), String> {
    if plan.paths.len() != instance.num_agents() {
        return Err("wrong number of paths".into());
    }
    for (task, path) in instance.tasks().iter().zip(&plan.paths) {
        if path.states.first() != Some(&task.start) || path.states.last() != Some(&task.goal) {
            return Err(format!("agent {} has wrong endpoints", task.agent));
        }
        for w in path.states.windows(2) {
            if w[0] != w[1] && !rm.neighbors(w[0]).contains(&w[1]) {
                return Err(format!("agent {} jumps {:?} -> {:?}", task.agent, w[0], w[1]));
            }
        }
    }
    for i in 0..plan.paths.len() {
        for j in i + 1..plan.paths.len() {
            if paths_touch(rm, &plan.paths[i], &plan.paths[j]) {
                return Err(format!("agents {i} and {j} collide"));
            }
        }
    }
    Ok(())
}

pub fn bfs(rm: &GridRoadmap, source: VertexId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; rm.num_vertices()];
    dist[source.index()] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in rm.neighbors(v) {
            if dist[w.index()] == u32::MAX {
                dist[w.index()] = dist[v.index()] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Optimal sum of arrival times by A* over the joint configuration space.
///
/// A joint state holds every agent's vertex and whether it has committed to
/// stay on its goal for good. Each step, every uncommitted agent pays one;
/// committing is free. Moves are checked for body contact at the new
/// vertices and at the transition midpoints.
///
/// Returns `Err(())` when more than `max_states` states would be expanded,
/// `Ok(None)` when no solution exists.
pub fn joint_space_optimum(instance: &ProblemInstance, max_states: usize) -> Result<Option<u64>, ()> {
    let rm = instance.roadmap();
    let w = rm.robot_width();
    let tasks = instance.tasks();
    let n = tasks.len();
    let h_tables: Vec<Vec<u32>> = tasks.iter().map(|t| bfs(rm, t.goal)).collect();
    if tasks.iter().zip(&h_tables).any(|(t, h)| h[t.start.index()] == u32::MAX) {
        return Ok(None);
    }

    type State = (Vec<VertexId>, u32);
    let heuristic = |s: &State| -> u64 {
        (0..n)
            .filter(|i| s.1 & (1 << i) == 0)
            .map(|i| h_tables[i][s.0[i].index()] as u64)
            .sum()
    };
    let start: State = (tasks.iter().map(|t| t.start).collect(), 0);
    let full = (1u32 << n) - 1;
    let mut best: HashMap<State, u64> = HashMap::new();
    let mut open = BinaryHeap::new();
    best.insert(start.clone(), 0);
    open.push(Reverse((heuristic(&start), 0u64, start)));
    let mut expanded = 0usize;
    while let Some(Reverse((_, g, state))) = open.pop() {
        if best.get(&state).is_some_and(|&b| b < g) {
            continue;
        }
        if state.1 == full {
            return Ok(Some(g));
        }
        expanded += 1;
        if expanded > max_states {
            return Err(());
        }
        // per-agent options: (next vertex, committed)
        let options: Vec<Vec<(VertexId, bool)>> = (0..n)
            .map(|i| {
                let v = state.0[i];
                if state.1 & (1 << i) != 0 {
                    return vec![(v, true)];
                }
                let mut opts: Vec<(VertexId, bool)> = std::iter::once(v)
                    .chain(rm.neighbors(v).iter().copied())
                    .map(|u| (u, false))
                    .collect();
                if v == tasks[i].goal {
                    opts.push((v, true));
                }
                opts
            })
            .collect();
        let mut choice = vec![0usize; n];
        'combos: loop {
            let next: Vec<VertexId> = (0..n).map(|i| options[i][choice[i]].0).collect();
            let mut ok = true;
            'pairs: for i in 0..n {
                for j in i + 1..n {
                    if bodies_overlap(rm.point(next[i]), rm.point(next[j]), w)
                        || bodies_overlap(midpoint(rm, state.0[i], next[i]), midpoint(rm, state.0[j], next[j]), w)
                    {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if ok {
                let mut mask = state.1;
                let mut step = 0u64;
                for i in 0..n {
                    if options[i][choice[i]].1 {
                        mask |= 1 << i;
                    } else {
                        step += 1;
                    }
                }
                let succ: State = (next, mask);
                let ng = g + step;
                if best.get(&succ).is_none_or(|&b| ng < b) {
                    best.insert(succ.clone(), ng);
                    let f = ng + heuristic(&succ);
                    open.push(Reverse((f, ng, succ)));
                }
            }
            for i in 0..n {
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    continue 'combos;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    Ok(None)
}

/// Random map with roughly `density` blocked cells.
pub fn random_map<R: Rng>(rng: &mut R, width: u32, height: u32, density: f64) -> GridMap {
    let blocked = (0..width * height).map(|_| rng.random_bool(density)).collect();
    GridMap::new(width, height, blocked)
}

/// Random instance on `rm` with start/goal pairs that do not overlap and
/// goals reachable from starts. `None` if the draw failed.
pub fn random_instance<R: Rng>(rng: &mut R, rm: &Arc<GridRoadmap>, agents: usize) -> Option<ProblemInstance> {
    let n = rm.num_vertices();
    if n == 0 {
        return None;
    }
    let w = rm.robot_width();
    let mut tasks: Vec<AgentTask> = Vec::new();
    for agent in 0..agents {
        let mut placed = false;
        for _ in 0..200 {
            let s = VertexId(rng.random_range(0..n as u32));
            let g = VertexId(rng.random_range(0..n as u32));
            if bfs(rm, s)[g.index()] == u32::MAX {
                continue;
            }
            let clash = tasks.iter().any(|t| {
                bodies_overlap(rm.point(t.start), rm.point(s), w) || bodies_overlap(rm.point(t.goal), rm.point(g), w)
            });
            if !clash {
                tasks.push(AgentTask {
                    agent,
                    start: s,
                    goal: g,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    ProblemInstance::new(Arc::clone(rm), tasks).ok()
}

pub fn roadmap(map: GridMap, r: u32) -> Arc<GridRoadmap> {
    Arc::new(build_roadmap(map, r, 0.5).unwrap())
}

/// Random connected graph: a random spanning tree plus `extra` random edges.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Vec<Vec<VertexId>> {
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let add = |adj: &mut Vec<Vec<VertexId>>, a: usize, b: usize| {
        if a != b && !adj[a].contains(&VertexId(b as u32)) {
            adj[a].push(VertexId(b as u32));
            adj[b].push(VertexId(a as u32));
        }
    };
    for v in 1..n {
        let u = rng.random_range(0..v);
        add(&mut adj, u, v);
    }
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        add(&mut adj, a, b);
    }
    adj
}

/// Betweenness by listing every shortest path between every unordered pair
/// and counting, for each vertex, the share of paths through it.
pub fn brute_force_betweenness(adj: &[Vec<VertexId>]) -> Vec<f64> {
    let n = adj.len();
    let dist: Vec<Vec<u32>> = (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for w in &adj[v] {
                    if d[w.index()] == u32::MAX {
                        d[w.index()] = d[v] + 1;
                        q.push_back(w.index());
                    }
                }
            }
            d
        })
        .collect();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if dist[s][t] == u32::MAX {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let v = *p.last().unwrap();
                if v == t {
                    paths.push(p);
                    continue;
                }
                for w in &adj[v] {
                    let w = w.index();
                    if dist[s][w] == dist[s][v] + 1 && dist[s][w] <= dist[s][t] && dist[w][t] == dist[s][t] - dist[s][w]
                    {
                        let mut q = p.clone();
                        q.push(w);
                        stack.push(q);
                    }
                }
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / total;
                }
            }
        }
    }
    bc
}

/// Replays a path against motion constraints by direct lookup.
pub fn violates(path: &Path, c: &mapf_lab::low_level::MotionConstraint) -> bool {
    let t = c.timestep as usize;
    match c.location {
        mapf_lab::Location::Vertex(v) => at(path, t) == v,
        mapf_lab::Location::Edge(a, b) => at(path, t) == a && at(path, t + 1) == b,
    }
}
