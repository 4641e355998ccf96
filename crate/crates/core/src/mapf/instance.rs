//! Cropped subgrids and local instances built from world poses.

use super::graph::{Graph, Vertex};
use super::MapfError;
use crate::geom::{Rect, Vec2};
use crate::grid::{Cell, Grid};
use crate::world::{AgentId, ObstacleMap};

/// Abstract MAPF instance: agent `a` moves from `starts[a]` to `targets[a]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapfInstance {
    pub graph: Graph,
    pub starts: Vec<Vertex>,
    pub targets: Vec<Vertex>,
}

impl MapfInstance {
    pub fn new(graph: Graph, starts: Vec<Vertex>, targets: Vec<Vertex>) -> Result<Self, MapfError> {
        let inst = MapfInstance { graph, starts, targets };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    /// Checks lengths, ranges and injectivity of starts and targets.
    pub fn validate(&self) -> Result<(), MapfError> {
        let n = self.graph.len();
        if self.starts.len() != self.targets.len() {
            return Err(MapfError::InvalidInstance("starts and targets differ in length".into()));
        }
        for (name, list) in [("start", &self.starts), ("target", &self.targets)] {
            let mut seen = vec![false; n];
            for &v in list.iter() {
                if v >= n {
                    return Err(MapfError::InvalidInstance(format!("{name} vertex {v} out of range")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(MapfError::InvalidInstance(format!("{name} vertex {v} used twice")));
                }
            }
        }
        Ok(())
    }
}

/// Free cells of a crop as graph vertices (4-connected).
#[derive(Debug, Clone, PartialEq)]
pub struct Subgrid {
    pub grid: Grid,
    /// Requested crop region (participant box plus margin, clamped).
    pub bounds: Rect,
    pub cells: Vec<Cell>,
    vertex_of: Vec<Option<Vertex>>,
    pub graph: Graph,
}

impl Subgrid {
    /// Builds the vertex set and 4-connected edges of the free cells of `grid`.
    pub fn from_grid(grid: Grid, bounds: Rect) -> Self {
        let mut cells = Vec::new();
        let mut vertex_of = vec![None; grid.len()];
        for i in 0..grid.len() {
            let c = grid.cell_at(i);
            if grid.is_free(c) {
                vertex_of[i] = Some(cells.len());
                cells.push(c);
            }
        }
        let mut graph = Graph::new(cells.len());
        for (v, &c) in cells.iter().enumerate() {
            for n in grid.neighbors4(c) {
                if let Some(u) = vertex_of[grid.index(n)] {
                    if v < u {
                        graph.add_edge(v, u);
                    }
                }
            }
        }
        Subgrid { grid, bounds, cells, vertex_of, graph }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn center(&self, v: Vertex) -> Vec2 {
        self.grid.cell_center(self.cells[v])
    }

    pub fn vertex_of_cell(&self, c: Cell) -> Option<Vertex> {
        self.grid.contains(c).then(|| self.vertex_of[self.grid.index(c)]).flatten()
    }

    /// Free vertex whose cell contains `p`.
    pub fn vertex_at(&self, p: Vec2) -> Option<Vertex> {
        self.grid.world_to_cell(p).and_then(|c| self.vertex_of_cell(c))
    }

    /// Vertex among `allowed` nearest to `p` (lowest index on ties).
    pub fn nearest_vertex(&self, p: Vec2, allowed: impl Fn(Vertex) -> bool) -> Option<Vertex> {
        (0..self.len())
            .filter(|&v| allowed(v))
            .min_by(|&a, &b| self.center(a).distance(p).total_cmp(&self.center(b).distance(p)).then(a.cmp(&b)))
    }
}

/// Crops the participants' bounding box padded by `margin`, clamped to the
/// workspace, and discretizes it at `cell_size` on the workspace lattice.
/// Cells whose box inflated by `agent_radius` meets an obstacle are dropped.
pub fn crop_subgrid(map: &ObstacleMap, positions: &[Vec2], margin: f64, cell_size: f64, agent_radius: f64) -> Subgrid {
    assert!(!positions.is_empty(), "crop needs at least one participant");
    let mut lo = positions[0];
    let mut hi = positions[0];
    for p in positions {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let padded = Rect { min: lo, max: hi }.inflate(margin);
    let bounds = padded.intersection(&map.bounds).unwrap_or(padded);
    let grid = Grid::from_map(map, map.bounds.min, bounds, cell_size, agent_radius);
    Subgrid::from_grid(grid, bounds)
}

/// A local instance tied to its subgrid and to world agent ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInstance {
    pub subgrid: Subgrid,
    /// World id of each local agent, ascending.
    pub agents: Vec<AgentId>,
    pub instance: MapfInstance,
}

/// Projects points to distinct vertices. Agents are processed by distance to
/// their nearest admissible vertex (id breaks ties); an agent whose vertex is
/// taken receives the nearest untaken admissible vertex to its point.
fn project_distinct(
    sub: &Subgrid,
    points: &[Vec2],
    admissible: impl Fn(usize, Vertex) -> bool,
) -> Result<Vec<Vertex>, MapfError> {
    let k = points.len();
    let first: Vec<Option<Vertex>> = (0..k).map(|i| sub.nearest_vertex(points[i], |v| admissible(i, v))).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let da = first[a].map_or(f64::INFINITY, |v| sub.center(v).distance(points[a]));
        let db = first[b].map_or(f64::INFINITY, |v| sub.center(v).distance(points[b]));
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let mut taken = vec![false; sub.len()];
    let mut out = vec![usize::MAX; k];
    for i in order {
        let v = match first[i] {
            Some(v) if !taken[v] => v,
            _ => sub
                .nearest_vertex(points[i], |v| !taken[v] && admissible(i, v))
                .ok_or(MapfError::ProjectionConflict)?,
        };
        taken[v] = true;
        out[i] = v;
    }
    Ok(out)
}

/// Point where the segment `from → to` leaves `bounds`, or `to` if inside.
fn clip_to_bounds(bounds: &Rect, from: Vec2, to: Vec2) -> Vec2 {
    if bounds.contains(to) {
        return to;
    }
    match bounds.clip_segment(from, to) {
        Some((_, t1)) => from + (to - from) * t1,
        None => bounds.closest_point(to),
    }
}

/// Last free vertex of `component` met when walking from `from` to `to`.
fn last_free_on_segment(sub: &Subgrid, from: Vec2, to: Vec2, ok: impl Fn(Vertex) -> bool) -> Option<Vertex> {
    let len = from.distance(to);
    let n = ((len / (sub.grid.cell_size * 0.25)).ceil() as usize).max(1);
    (0..=n)
        .rev()
        .map(|i| from + (to - from) * (i as f64 / n as f64))
        .find_map(|p| sub.vertex_at(p).filter(|&v| ok(v)))
}

/// Builds starts (nearest-cell projection of positions) and targets
/// (projection of the active waypoints, clipped to the crop along the
/// segment from the agent) for agents `ids` at `positions`. Targets are
/// confined to the component of the agent's start.
pub fn build_instance(
    sub: &Subgrid,
    ids: &[AgentId],
    positions: &[Vec2],
    waypoints: &[Vec2],
) -> Result<LocalInstance, MapfError> {
    let k = ids.len();
    if k == 0 || positions.len() != k || waypoints.len() != k {
        return Err(MapfError::InvalidInstance("participant arrays differ in length".into()));
    }
    let labels = sub.graph.components();
    let starts = project_distinct(sub, positions, |_, _| true)?;
    let mut goal_points = Vec::with_capacity(k);
    for i in 0..k {
        let clipped = clip_to_bounds(&sub.bounds, positions[i], waypoints[i]);
        let comp = labels[starts[i]];
        let p = if clipped != waypoints[i] {
            last_free_on_segment(sub, positions[i], clipped, |v| labels[v] == comp)
                .map(|v| sub.center(v))
                .unwrap_or(clipped)
        } else {
            clipped
        };
        goal_points.push(p);
    }
    let targets = project_distinct(sub, &goal_points, |i, v| labels[v] == labels[starts[i]])?;
    let instance = MapfInstance::new(sub.graph.clone(), starts, targets)?;
    Ok(LocalInstance { subgrid: sub.clone(), agents: ids.to_vec(), instance })
}
