//! Configurations (vertex assignments), unit moves, invariants and the
//! lexicographic progress potential.

use super::graph::{Graph, Vertex};
use super::MapfError;

/// Index of an agent inside a local instance (`0..k`).
pub type Agent = usize;

/// One agent moving to an adjacent blank vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub agent: Agent,
    pub from: Vertex,
    pub to: Vertex,
}

/// Assignment of agents to vertices plus the finished set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    occ: Vec<Option<Agent>>,
    pos: Vec<Vertex>,
    finished: Vec<bool>,
}

impl Configuration {
    pub fn new(n_vertices: usize, starts: &[Vertex]) -> Result<Self, MapfError> {
        let mut occ = vec![None; n_vertices];
        for (a, &v) in starts.iter().enumerate() {
            if v >= n_vertices {
                return Err(MapfError::InvalidInstance(format!("start of agent {a} out of range")));
            }
            if occ[v].is_some() {
                return Err(MapfError::InvalidInstance(format!("two agents start at vertex {v}")));
            }
            occ[v] = Some(a);
        }
        Ok(Configuration {
            occ,
            pos: starts.to_vec(),
            finished: vec![false; starts.len()],
        })
    }

    #[inline]
    pub fn occupant(&self, v: Vertex) -> Option<Agent> {
        self.occ[v]
    }

    #[inline]
    pub fn position(&self, a: Agent) -> Vertex {
        self.pos[a]
    }

    pub fn positions(&self) -> &[Vertex] {
        &self.pos
    }

    #[inline]
    pub fn is_blank(&self, v: Vertex) -> bool {
        self.occ[v].is_none()
    }

    pub fn n_agents(&self) -> usize {
        self.pos.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.occ.len()
    }

    #[inline]
    pub fn is_finished(&self, a: Agent) -> bool {
        self.finished[a]
    }

    pub fn set_finished(&mut self, a: Agent, f: bool) {
        self.finished[a] = f;
    }

    pub fn clear_finished(&mut self) {
        self.finished.iter_mut().for_each(|f| *f = false);
    }

    /// Per-vertex mask of vertices held by finished agents.
    pub fn finished_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.occ.len()];
        for (a, &v) in self.pos.iter().enumerate() {
            if self.finished[a] {
                m[v] = true;
            }
        }
        m
    }

    /// Per-vertex occupancy mask.
    pub fn occupied_mask(&self) -> Vec<bool> {
        self.occ.iter().map(|o| o.is_some()).collect()
    }

    /// Moves the occupant of `from` to the adjacent blank `to`.
    pub fn apply(&mut self, g: &Graph, from: Vertex, to: Vertex) -> Result<Move, MapfError> {
        let agent = self.occ[from].ok_or(MapfError::IllegalMove { from, to })?;
        if self.occ[to].is_some() || !g.has_edge(from, to) {
            return Err(MapfError::IllegalMove { from, to });
        }
        self.occ[from] = None;
        self.occ[to] = Some(agent);
        self.pos[agent] = to;
        Ok(Move { agent, from, to })
    }

    /// Number of blanks in each component label.
    pub fn blanks_per_component(&self, labels: &[usize]) -> Vec<usize> {
        let n_comp = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut b = vec![0; n_comp];
        for (v, o) in self.occ.iter().enumerate() {
            if o.is_none() {
                b[labels[v]] += 1;
            }
        }
        b
    }
}

/// Which invariant failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    FinishedFixed,
    TwoBlanks,
}

/// Checks that finished agents sit on their targets and that every component
/// holding an agent keeps at least two blanks.
pub fn check_invariants(cfg: &Configuration, targets: &[Vertex], labels: &[usize]) -> Result<(), InvariantKind> {
    for a in 0..cfg.n_agents() {
        if cfg.is_finished(a) && cfg.position(a) != targets[a] {
            return Err(InvariantKind::FinishedFixed);
        }
    }
    let blanks = cfg.blanks_per_component(labels);
    for a in 0..cfg.n_agents() {
        if blanks[labels[cfg.position(a)]] < 2 {
            return Err(InvariantKind::TwoBlanks);
        }
    }
    Ok(())
}

/// Lexicographic progress measure of the active agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Potential {
    /// Distance to target avoiding finished agents (`usize::MAX` if cut off).
    pub d: usize,
    /// Unfinished blockers on the chosen shortest path.
    pub k: usize,
    /// Summed distance from those blockers to their nearest blank.
    pub h: usize,
}

/// `Φ(A, r)` evaluated on the deterministic BFS shortest path of `r`.
pub fn potential(g: &Graph, cfg: &Configuration, targets: &[Vertex], r: Agent) -> Potential {
    let fin = cfg.finished_mask();
    let Some(path) = g.shortest_path(cfg.position(r), targets[r], &fin) else {
        return Potential { d: usize::MAX, k: usize::MAX, h: usize::MAX };
    };
    let mut k = 0;
    let mut h = 0;
    for &v in &path[1..] {
        if cfg.occupant(v).is_some() {
            k += 1;
            let to_blank = g
                .bfs_path(v, &fin, |u| cfg.is_blank(u))
                .map_or(usize::MAX / 4, |p| p.len() - 1);
            h += to_blank;
        }
    }
    Potential { d: path.len() - 1, k, h }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_rejects_illegal_moves() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let mut c = Configuration::new(3, &[0, 1]).unwrap();
        assert!(c.apply(&g, 0, 1).is_err());
        assert!(c.apply(&g, 0, 2).is_err());
        assert!(c.apply(&g, 2, 1).is_err());
        let m = c.apply(&g, 1, 2).unwrap();
        assert_eq!(m, Move { agent: 1, from: 1, to: 2 });
        assert_eq!(c.occupant(2), Some(1));
    }

    #[test]
    fn potential_counts_blockers() {
        // Path 0-1-2-3-4 with a spur 2-5; agent 0 at 0 targets 4, agent 1 at 2.
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)]);
        let c = Configuration::new(6, &[0, 2]).unwrap();
        let p = potential(&g, &c, &[4, 0], 0);
        assert_eq!(p, Potential { d: 4, k: 1, h: 1 });
    }

    #[test]
    fn invariants_detect_violations() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let labels = g.components();
        let mut c = Configuration::new(4, &[0, 1]).unwrap();
        assert_eq!(check_invariants(&c, &[0, 3], &labels), Ok(()));
        c.set_finished(1, true);
        assert_eq!(check_invariants(&c, &[0, 3], &labels), Err(InvariantKind::FinishedFixed));
        let c3 = Configuration::new(4, &[0, 1, 2]).unwrap();
        assert_eq!(check_invariants(&c3, &[0, 1, 2], &labels), Err(InvariantKind::TwoBlanks));
    }
}
