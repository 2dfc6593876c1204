//! Grid roadmaps: the cell-centre lattice subdivided `resolution` times,
//! pruned by a square robot body.
//!
//! Lattice point `(i, j)` sits at `(0.5 + i/r, 0.5 + j/r)` in cell units, so
//! resolution-1 vertices are cell centres. Internally positions are kept in
//! half-lattice units (`1 / 2r` cells), where vertices have even coordinates
//! and edge midpoints are integers too; every clearance and overlap test is
//! exact in that frame.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::Path;
use crate::map::{Cell, GridMap};

/// Default robot width: half a cell.
pub const DEFAULT_ROBOT_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A continuous position in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Position in half-lattice units; see the module docs.
pub type HalfPos = (i64, i64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    /// Lattice column.
    pub i: u32,
    /// Lattice row.
    pub j: u32,
    pub pos: Point,
}

#[derive(Debug, Error, PartialEq)]
pub enum RoadmapError {
    #[error("resolution must be at least 1, got {0}")]
    Resolution(u32),

    #[error("robot width must lie in (0, 1], got {0}")]
    RobotWidth(f64),

    #[error("roadmaps were built from different maps")]
    MapMismatch,

    #[error("resolution {high} is not a multiple of {low}")]
    NotMultiple { low: u32, high: u32 },

    #[error("path step {step} is not a move or wait on the source roadmap")]
    InvalidStep { step: usize },

    #[error("lattice point ({i}, {j}) is not a vertex of the target roadmap")]
    MissingVertex { i: u32, j: u32 },
}

#[derive(Debug, Clone)]
pub struct GridRoadmap {
    map: Arc<GridMap>,
    resolution: u32,
    robot_width: f64,
    lattice_w: u32,
    lattice_h: u32,
    /// Lattice index (row-major) to vertex id, `u32::MAX` where invalid.
    lattice: Vec<u32>,
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<VertexId>>,
}

const NO_VERTEX: u32 = u32::MAX;

/// Whether an axis-aligned square body centred at half-lattice position
/// `(hx, hy)` stays inside the map and away from every blocked cell. Touching
/// a blocked cell counts as a collision; touching the map border does not.
fn body_is_clear(map: &GridMap, r: u32, half_width: f64, hx: i64, hy: i64) -> bool {
    // Scale everything by 2r: cell boundaries sit at multiples of 2r, the
    // lattice origin (cell centre 0.5) sits at r.
    let scale = 2 * r as i64;
    let cx = (r as i64 + hx) as f64;
    let cy = (r as i64 + hy) as f64;
    let h = half_width * scale as f64;
    let (w, ht) = (
        (map.width() as i64 * scale) as f64,
        (map.height() as i64 * scale) as f64,
    );
    if cx - h < 0.0 || cy - h < 0.0 || cx + h > w || cy + h > ht {
        return false;
    }
    let lo_x = ((cx - h) / scale as f64).floor() as i64 - 1;
    let hi_x = ((cx + h) / scale as f64).floor() as i64;
    let lo_y = ((cy - h) / scale as f64).floor() as i64 - 1;
    let hi_y = ((cy + h) / scale as f64).floor() as i64;
    for y in lo_y.max(0)..=hi_y.min(map.height() as i64 - 1) {
        for x in lo_x.max(0)..=hi_x.min(map.width() as i64 - 1) {
            if !map.is_blocked(x, y) {
                continue;
            }
            let (x0, x1) = ((x * scale) as f64, ((x + 1) * scale) as f64);
            let (y0, y1) = ((y * scale) as f64, ((y + 1) * scale) as f64);
            if cx + h >= x0 && cx - h <= x1 && cy + h >= y0 && cy - h <= y1 {
                return false;
            }
        }
    }
    true
}

/// Builds the resolution-`resolution` roadmap of `map` for a square robot of
/// side `robot_width` (cell units).
pub fn build_roadmap(
    map: impl Into<Arc<GridMap>>,
    resolution: u32,
    robot_width: f64,
) -> Result<GridRoadmap, RoadmapError> {
    let map = map.into();
    if resolution < 1 {
        return Err(RoadmapError::Resolution(resolution));
    }
    if !(robot_width > 0.0 && robot_width <= 1.0) {
        return Err(RoadmapError::RobotWidth(robot_width));
    }
    let r = resolution;
    let half = robot_width / 2.0;
    let lattice_w = r * (map.width() - 1) + 1;
    let lattice_h = r * (map.height() - 1) + 1;

    let mut lattice = vec![NO_VERTEX; (lattice_w * lattice_h) as usize];
    let mut vertices = Vec::new();
    for j in 0..lattice_h {
        for i in 0..lattice_w {
            if body_is_clear(&map, r, half, 2 * i as i64, 2 * j as i64) {
                lattice[(j * lattice_w + i) as usize] = vertices.len() as u32;
                vertices.push(Vertex {
                    i,
                    j,
                    pos: Point {
                        x: 0.5 + i as f64 / r as f64,
                        y: 0.5 + j as f64 / r as f64,
                    },
                });
            }
        }
    }

    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (id, v) in vertices.iter().enumerate() {
        for (di, dj) in [(1u32, 0u32), (0, 1)] {
            let (ni, nj) = (v.i + di, v.j + dj);
            if ni >= lattice_w || nj >= lattice_h {
                continue;
            }
            let other = lattice[(nj * lattice_w + ni) as usize];
            if other == NO_VERTEX {
                continue;
            }
            let mid = ((v.i + ni) as i64, (v.j + nj) as i64);
            if body_is_clear(&map, r, half, mid.0, mid.1) {
                adjacency[id].push(VertexId(other));
                adjacency[other as usize].push(VertexId(id as u32));
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    Ok(GridRoadmap {
        map,
        resolution,
        robot_width,
        lattice_w,
        lattice_h,
        lattice,
        vertices,
        adjacency,
    })
}

impl GridRoadmap {
    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<GridMap> {
        Arc::clone(&self.map)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn robot_width(&self) -> f64 {
        self.robot_width
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn adjacency(&self) -> &[Vec<VertexId>] {
        &self.adjacency
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.vertices.len()
    }

    pub fn are_adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// Equal vertices (a wait) or an edge.
    pub fn is_step(&self, a: VertexId, b: VertexId) -> bool {
        a == b || self.are_adjacent(a, b)
    }

    pub fn lattice_dims(&self) -> (u32, u32) {
        (self.lattice_w, self.lattice_h)
    }

    pub fn vertex_at_lattice(&self, i: u32, j: u32) -> Option<VertexId> {
        if i >= self.lattice_w || j >= self.lattice_h {
            return None;
        }
        match self.lattice[(j * self.lattice_w + i) as usize] {
            NO_VERTEX => None,
            id => Some(VertexId(id)),
        }
    }

    /// The vertex at the centre of `cell`.
    pub fn vertex_at_cell(&self, cell: Cell) -> Option<VertexId> {
        self.vertex_at_lattice(cell.x * self.resolution, cell.y * self.resolution)
    }

    /// The cell whose centre coincides with `v`, if any.
    pub fn cell_of(&self, v: VertexId) -> Option<Cell> {
        let vx = self.vertex(v);
        let r = self.resolution;
        (vx.i.is_multiple_of(r) && vx.j.is_multiple_of(r)).then(|| Cell::new(vx.i / r, vx.j / r))
    }

    pub fn point(&self, v: VertexId) -> Point {
        self.vertex(v).pos
    }

    #[inline]
    pub fn half_pos(&self, v: VertexId) -> HalfPos {
        let vx = &self.vertices[v.index()];
        (2 * vx.i as i64, 2 * vx.j as i64)
    }

    /// Half-lattice position of the midpoint of the transition `a -> b`
    /// (equal to `a` for a wait).
    #[inline]
    pub fn half_mid(&self, a: VertexId, b: VertexId) -> HalfPos {
        let (va, vb) = (&self.vertices[a.index()], &self.vertices[b.index()]);
        ((va.i + vb.i) as i64, (va.j + vb.j) as i64)
    }

    /// Converts half-lattice units back to cell units.
    pub fn half_to_point(&self, p: HalfPos) -> Point {
        let s = 2.0 * self.resolution as f64;
        Point {
            x: 0.5 + p.0 as f64 / s,
            y: 0.5 + p.1 as f64 / s,
        }
    }

    /// Open-overlap test for two robot bodies given in half-lattice units.
    /// Equivalent to [`crate::conflict::bodies_overlap`] on the
    /// corresponding points.
    #[inline]
    pub fn half_overlap(&self, a: HalfPos, b: HalfPos) -> bool {
        let limit = self.robot_width * 2.0 * self.resolution as f64;
        ((a.0 - b.0).abs() as f64) < limit && ((a.1 - b.1).abs() as f64) < limit
    }

    /// Largest half-lattice offset at which two bodies can still overlap.
    pub fn half_reach(&self) -> i64 {
        let limit = self.robot_width * 2.0 * self.resolution as f64;
        limit.ceil() as i64 - 1
    }

    pub fn to_json(&self) -> RoadmapJson {
        RoadmapJson {
            width: self.map.width(),
            height: self.map.height(),
            resolution: self.resolution,
            robot_width: self.robot_width,
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, v)| JsonVertex {
                    id: id as u32,
                    x: v.pos.x,
                    y: v.pos.y,
                })
                .collect(),
            edges: self
                .adjacency
                .iter()
                .enumerate()
                .flat_map(|(a, list)| list.iter().filter(move |b| b.index() > a).map(move |b| [a as u32, b.0]))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonVertex {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

/// Debug dump of a roadmap; edges are listed once with the smaller id first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadmapJson {
    pub width: u32,
    pub height: u32,
    pub resolution: u32,
    pub robot_width: f64,
    pub vertices: Vec<JsonVertex>,
    pub edges: Vec<[u32; 2]>,
}

/// Re-expresses a path on a finer roadmap of the same map. Each move becomes
/// `m = high / low` unit moves through the intermediate lattice points and
/// each wait becomes `m` waits.
pub fn project_path(low: &GridRoadmap, high: &GridRoadmap, path: &Path) -> Result<Path, RoadmapError> {
    if low.map() != high.map() {
        return Err(RoadmapError::MapMismatch);
    }
    if !high.resolution.is_multiple_of(low.resolution) {
        return Err(RoadmapError::NotMultiple {
            low: low.resolution,
            high: high.resolution,
        });
    }
    let m = high.resolution / low.resolution;
    let lift = |v: VertexId| {
        let vx = low.vertex(v);
        (vx.i * m, vx.j * m)
    };
    let find = |i: u32, j: u32| high.vertex_at_lattice(i, j).ok_or(RoadmapError::MissingVertex { i, j });

    let (i0, j0) = lift(path.states[0]);
    let mut states = vec![find(i0, j0)?];
    for (step, pair) in path.states.windows(2).enumerate() {
        if !low.is_step(pair[0], pair[1]) {
            return Err(RoadmapError::InvalidStep { step });
        }
        let (ai, aj) = lift(pair[0]);
        let (bi, bj) = lift(pair[1]);
        let di = (bi as i64 - ai as i64).signum();
        let dj = (bj as i64 - aj as i64).signum();
        for k in 1..=m as i64 {
            let i = (ai as i64 + di * k) as u32;
            let j = (aj as i64 + dj * k) as u32;
            states.push(find(i, j)?);
        }
    }
    Ok(Path::new(path.agent, states))
}
