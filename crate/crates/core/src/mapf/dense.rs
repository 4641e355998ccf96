//! Conversion of a joint plan into per-agent dense waypoints with
//! precedence constraints for asynchronous tracking.

use super::graph::Vertex;
use super::schedule::JointPlan;
use crate::geom::Vec2;

/// Dense waypoints of every local agent. Waits are collapsed, so
/// consecutive points of one agent are distinct adjacent cell centers; point
/// 0 is the start cell.
///
/// `deps[a][i]` lists `(b, j)`: agent `a` may head for its point `i` only
/// once agent `b` has reached its point `j`. These encode the vertex order
/// of the plan: whoever occupied the cell before must have moved on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSchedule {
    pub points: Vec<Vec<Vec2>>,
    pub vertices: Vec<Vec<Vertex>>,
    /// Plan step at which each point is entered.
    pub times: Vec<Vec<usize>>,
    pub deps: Vec<Vec<Vec<(usize, usize)>>>,
}

impl DenseSchedule {
    pub fn n_agents(&self) -> usize {
        self.points.len()
    }

    /// Whether agent `a` may head for point `i`, where `reached[b]` counts
    /// the points agent `b` has reached so far.
    pub fn may_enter(&self, a: usize, i: usize, reached: &[usize]) -> bool {
        self.deps[a].get(i).map_or(true, |d| d.iter().all(|&(b, j)| reached[b] > j))
    }

    /// Total number of dense points over all agents.
    pub fn total_points(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    /// Longest per-agent point list.
    pub fn max_len(&self) -> usize {
        self.points.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Builds the dense schedule; `centers[v]` is the world position of vertex `v`.
pub fn plan_to_dense(plan: &JointPlan, centers: &[Vec2]) -> DenseSchedule {
    let k = plan.n_agents();
    let mut vertices = Vec::with_capacity(k);
    let mut times = Vec::with_capacity(k);
    for path in &plan.paths {
        let mut vs = Vec::new();
        let mut ts = Vec::new();
        for (t, &v) in path.iter().enumerate() {
            if vs.last() != Some(&v) {
                vs.push(v);
                ts.push(t);
            }
        }
        vertices.push(vs);
        times.push(ts);
    }
    let mut deps = vec![Vec::new(); k];
    for a in 0..k {
        for (i, (&v, &t)) in vertices[a].iter().zip(&times[a]).enumerate() {
            let mut d = Vec::new();
            if i > 0 {
                for b in (0..k).filter(|&b| b != a) {
                    // Latest earlier visit of `b` to `v`; it must have left.
                    let last = (0..vertices[b].len()).rev().find(|&j| vertices[b][j] == v && times[b][j] < t);
                    if let Some(j) = last {
                        debug_assert!(j + 1 < vertices[b].len(), "plan leaves an agent on an entered vertex");
                        d.push((b, j + 1));
                    }
                }
            }
            deps[a].push(d);
        }
    }
    let points = vertices.iter().map(|vs| vs.iter().map(|&v| centers[v]).collect()).collect();
    DenseSchedule { points, vertices, times, deps }
}
