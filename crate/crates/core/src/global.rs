//! Global guidance: 8-connected grid A*, arc-length resampling into sparse
//! waypoint lists, and the runtime waypoint manager.

use crate::geom::Vec2;
use crate::grid::{Cell, Grid};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no path between start and goal")]
    NoPath,
    #[error("cell {0:?} is blocked or outside the grid")]
    InvalidCell(Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaypointKind {
    GlobalSparse,
    MapfDense,
}

/// Ordered reference points with an active index.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointList {
    pub points: Vec<Vec2>,
    pub active_index: usize,
    pub reach_threshold: f64,
    /// Reach threshold applied to the last point only.
    pub final_reach_threshold: f64,
    pub kind: WaypointKind,
    /// Simulation step at which `active_index` last changed.
    pub last_advance_step: usize,
}

impl WaypointList {
    pub fn new(points: Vec<Vec2>, reach_threshold: f64, kind: WaypointKind) -> Self {
        WaypointList {
            points,
            active_index: 0,
            reach_threshold,
            final_reach_threshold: reach_threshold,
            kind,
            last_advance_step: 0,
        }
    }

    pub fn with_final_threshold(mut self, t: f64) -> Self {
        self.final_reach_threshold = t;
        self
    }

    pub fn active(&self) -> Option<Vec2> {
        self.points.get(self.active_index).copied()
    }

    pub fn is_exhausted(&self) -> bool {
        self.active_index >= self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn goal(&self) -> Option<Vec2> {
        self.points.last().copied()
    }

    fn threshold_for(&self, index: usize) -> f64 {
        if index + 1 == self.points.len() {
            self.final_reach_threshold
        } else {
            self.reach_threshold
        }
    }

    /// Advances the active index by at most one when `pos` is within the
    /// reach threshold of the active point. Returns whether it advanced.
    pub fn advance(&mut self, pos: Vec2, step: usize) -> bool {
        match self.active() {
            Some(w) if pos.distance(w) <= self.threshold_for(self.active_index) => {
                self.active_index += 1;
                self.last_advance_step = step;
                true
            }
            _ => false,
        }
    }
}

/// Functional form of [`WaypointList::advance`].
pub fn waypoint_advance(wl: &WaypointList, pos: Vec2, step: usize) -> WaypointList {
    let mut out = wl.clone();
    out.advance(pos, step);
    out
}

#[derive(Copy, Clone)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    // Max-heap: smallest f first, then largest g, then smallest index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(self.g.total_cmp(&o.g))
            .then(o.idx.cmp(&self.idx))
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.col as f64 - b.col as f64).abs();
    let dy = (a.row as f64 - b.row as f64).abs();
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

/// Minimum-cost 8-connected path (diagonal cost sqrt 2, no corner cutting)
/// from `start` to `goal`, both inclusive.
pub fn plan_astar(grid: &Grid, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlanError> {
    for c in [start, goal] {
        if grid.is_blocked(c) {
            return Err(PlanError::InvalidCell(c));
        }
    }
    let n = grid.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let s = grid.index(start);
    let t = grid.index(goal);
    g[s] = 0.0;
    open.push(Open { f: octile(start, goal), g: 0.0, idx: s });
    while let Some(Open { g: gc, idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == t {
            let mut path = vec![goal];
            let mut cur = t;
            while cur != s {
                cur = parent[cur];
                path.push(grid.cell_at(cur));
            }
            path.reverse();
            return Ok(path);
        }
        let c = grid.cell_at(idx);
        for (nb, w) in grid.neighbors8(c) {
            let ni = grid.index(nb);
            let ng = gc + w;
            if !closed[ni] && ng < g[ni] {
                g[ni] = ng;
                parent[ni] = idx;
                open.push(Open { f: ng + octile(nb, goal), g: ng, idx: ni });
            }
        }
    }
    Err(PlanError::NoPath)
}

/// Sum of step lengths of a cell path, in cells.
pub fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2).map(|w| octile(w[0], w[1])).sum()
}

pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Resamples a polyline: samples at every multiple of `spacing` along the
/// arc, plus every turning vertex, plus the end point. Consecutive points are
/// at most `spacing` apart and the resampled polyline has the original length.
pub fn resample_polyline(points: &[Vec2], spacing: f64) -> Vec<Vec2> {
    assert!(!points.is_empty(), "cannot resample an empty path");
    assert!(spacing > 0.0, "spacing must be positive");
    // Drop duplicates and interior collinear vertices.
    let mut verts: Vec<Vec2> = Vec::with_capacity(points.len());
    for &p in points {
        if verts.last().is_some_and(|q| q.distance(p) < 1e-12) {
            continue;
        }
        if verts.len() >= 2 {
            let a = verts[verts.len() - 2];
            let b = verts[verts.len() - 1];
            let (d1, d2) = (b - a, p - b);
            if d1.cross(d2).abs() < 1e-12 * d1.norm() * d2.norm() && d1.dot(d2) > 0.0 {
                verts.pop();
            }
        }
        verts.push(p);
    }
    if verts.len() == 1 {
        return verts;
    }
    let mut out = vec![verts[0]];
    let mut arc = 0.0;
    let mut next_mark = spacing;
    for w in verts.windows(2) {
        let seg = w[0].distance(w[1]);
        let dir = (w[1] - w[0]) / seg;
        while next_mark < arc + seg - 1e-9 {
            out.push(w[0] + dir * (next_mark - arc));
            next_mark += spacing;
        }
        arc += seg;
        if (next_mark - arc).abs() <= 1e-9 {
            next_mark += spacing;
        }
        out.push(w[1]);
    }
    out
}

/// Converts an A* cell path into a sparse global waypoint list.
pub fn resample_waypoints(grid: &Grid, path: &[Cell], spacing: f64, reach_threshold: f64) -> WaypointList {
    let pts: Vec<Vec2> = path.iter().map(|c| grid.cell_center(*c)).collect();
    let mut pts = resample_polyline(&pts, spacing);
    if pts.len() == 1 {
        pts.push(pts[0]);
    }
    WaypointList::new(pts, reach_threshold, WaypointKind::GlobalSparse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_on_empty_grid() {
        let g = Grid::new(3, 3, 1.0, Vec2::ZERO);
        let p = plan_astar(&g, Cell::new(0, 0), Cell::new(2, 2)).unwrap();
        assert!((path_cost(&p) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn walled_in_start() {
        let g = Grid::from_ascii(&[".....", ".###.", ".#.#.", ".###.", "....."], 1.0);
        assert_eq!(plan_astar(&g, Cell::new(2, 2), Cell::new(0, 0)), Err(PlanError::NoPath));
        assert_eq!(
            plan_astar(&g, Cell::new(1, 1), Cell::new(0, 0)),
            Err(PlanError::InvalidCell(Cell::new(1, 1)))
        );
    }

    #[test]
    fn straight_segment_resample() {
        let pts = resample_polyline(&[Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)], 1.0);
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn short_path_two_points() {
        let pts = resample_polyline(&[Vec2::new(0.0, 0.0), Vec2::new(0.4, 0.0)], 1.0);
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn l_shape_keeps_arc_marks_and_corner() {
        let pts = resample_polyline(
            &[Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), Vec2::new(3.0, 3.0)],
            2.0,
        );
        // Arc-length positions of each resampled point.
        let mut arcs = vec![0.0];
        for w in pts.windows(2) {
            arcs.push(arcs.last().unwrap() + w[0].distance(w[1]));
        }
        for mark in [0.0, 2.0, 4.0, 6.0] {
            assert!(arcs.iter().any(|a| (a - mark).abs() < 1e-9), "missing mark {mark}");
        }
        assert!((polyline_length(&pts) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn advance_rules() {
        let mut wl = WaypointList::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)], 0.3, WaypointKind::GlobalSparse);
        assert!(wl.advance(Vec2::new(0.0, 0.0), 4));
        assert_eq!((wl.active_index, wl.last_advance_step), (1, 4));
        let before = wl.clone();
        assert!(!wl.advance(Vec2::new(1.0 - 0.3 - 1e-6, 0.0), 5));
        assert_eq!(wl, before);
    }

    #[test]
    fn advance_never_skips() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(0.05, 0.0), Vec2::new(0.1, 0.0)];
        let mut wl = WaypointList::new(pts, 0.3, WaypointKind::GlobalSparse);
        for step in 1..=3 {
            assert!(wl.advance(Vec2::new(0.05, 0.0), step));
            assert_eq!(wl.active_index, step);
        }
        assert!(!wl.advance(Vec2::new(0.05, 0.0), 4));
    }
}
