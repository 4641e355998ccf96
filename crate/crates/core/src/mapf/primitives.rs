//! Push, rotate and swap. Every primitive appends the unit moves it performs
//! to a trace; the swap exchanges two agents while every other agent ends
//! where it started.

use super::config::{Configuration, Move};
use super::graph::{Graph, Vertex};
use super::MapfError;
use std::collections::HashMap;

/// Vertex-level move, `(from, to)`.
pub type Step = (Vertex, Vertex);

fn apply_all(g: &Graph, cfg: &mut Configuration, steps: &[Step], trace: &mut Vec<Move>) -> Result<(), MapfError> {
    for &(f, t) in steps {
        trace.push(cfg.apply(g, f, t)?);
    }
    Ok(())
}

/// Shortest path from `start` to the nearest blank vertex that avoids the
/// vertices marked in `avoid`.
pub fn find_blank_path(g: &Graph, cfg: &Configuration, start: Vertex, avoid: &[bool]) -> Option<Vec<Vertex>> {
    g.bfs_path(start, avoid, |v| cfg.is_blank(v))
}

/// Shifts every occupant of `q` one vertex towards its blank tail, leaving
/// the head `q[0]` blank.
pub fn primitive_push(g: &Graph, cfg: &mut Configuration, q: &[Vertex], trace: &mut Vec<Move>) -> Result<(), MapfError> {
    let Some(&tail) = q.last() else {
        return Err(MapfError::NoBlankReachable);
    };
    if !cfg.is_blank(tail) {
        return Err(MapfError::NoBlankReachable);
    }
    for w in q.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            return Err(MapfError::IllegalMove { from: w[0], to: w[1] });
        }
    }
    let mut seen = vec![false; g.len()];
    for &v in q {
        if std::mem::replace(&mut seen[v], true) {
            return Err(MapfError::InvalidInstance("push path is not simple".into()));
        }
        if cfg.occupant(v).is_some_and(|a| cfg.is_finished(a)) {
            return Err(MapfError::FinishedVertex(v));
        }
    }
    for j in (0..q.len() - 1).rev() {
        if !cfg.is_blank(q[j]) {
            trace.push(cfg.apply(g, q[j], q[j + 1])?);
        }
    }
    Ok(())
}

/// Moves every agent on the closed walk `z[0] → z[1] → … → z[0]` one vertex
/// forward.
pub fn primitive_rotate(g: &Graph, cfg: &mut Configuration, z: &[Vertex], trace: &mut Vec<Move>) -> Result<(), MapfError> {
    let l = z.len();
    if l < 3 {
        return Err(MapfError::InvalidInstance("cycle shorter than three".into()));
    }
    for i in 0..l {
        if !g.has_edge(z[i], z[(i + 1) % l]) {
            return Err(MapfError::IllegalMove { from: z[i], to: z[(i + 1) % l] });
        }
        if cfg.occupant(z[i]).is_some_and(|a| cfg.is_finished(a)) {
            return Err(MapfError::FinishedVertex(z[i]));
        }
    }
    if z.iter().all(|&v| !cfg.is_blank(v)) {
        return Err(MapfError::NoBlankOnCycle);
    }
    let on_cycle: Vec<usize> = z.iter().filter_map(|&v| cfg.occupant(v)).collect();
    let mut moved = vec![false; cfg.n_agents()];
    let mut remaining = on_cycle.len();
    while remaining > 0 {
        for i in 0..l {
            let next = z[(i + 1) % l];
            if let Some(a) = cfg.occupant(z[i]) {
                if !moved[a] && cfg.is_blank(next) {
                    trace.push(cfg.apply(g, z[i], next)?);
                    moved[a] = true;
                    remaining -= 1;
                }
            }
        }
    }
    Ok(())
}

/// Shortest cycle that leaves `from` through the edge to `to` and returns,
/// avoiding `avoid`, with at least one blank; `None` if the shortest such
/// return path carries no blank.
pub fn find_rotate_cycle(g: &Graph, cfg: &Configuration, from: Vertex, to: Vertex, avoid: &[bool]) -> Option<Vec<Vertex>> {
    let mut best: Option<Vec<Vertex>> = None;
    let mut mask = avoid.to_vec();
    mask[from] = true;
    let back = g.bfs_path(to, &mask, |v| v != to && g.has_edge(v, from))?;
    if back.len() >= 2 {
        let mut cyc = vec![from];
        cyc.extend(&back);
        if cyc.iter().any(|&v| cfg.is_blank(v)) {
            best = Some(cyc);
        }
    }
    best
}

/// Occupancy-only view used while preparing an exchange.
struct Scratch<'a> {
    g: &'a Graph,
    occ: Vec<bool>,
    moves: Vec<Step>,
}

impl Scratch<'_> {
    fn mv(&mut self, f: Vertex, t: Vertex) {
        debug_assert!(self.occ[f] && !self.occ[t] && self.g.has_edge(f, t));
        self.occ[f] = false;
        self.occ[t] = true;
        self.moves.push((f, t));
    }

    /// Makes `w` blank by shifting occupants along a path to the nearest
    /// blank that avoids `avoid`.
    fn clear(&mut self, w: Vertex, avoid: &[bool]) -> bool {
        if !self.occ[w] {
            return true;
        }
        let occ = &self.occ;
        let Some(path) = self.g.bfs_path(w, avoid, |u| !occ[u]) else {
            return false;
        };
        for j in (0..path.len() - 1).rev() {
            if self.occ[path[j]] {
                self.mv(path[j], path[j + 1]);
            }
        }
        true
    }
}

/// Gadget exchanging the contents of adjacent `pa`, `pb` given the current
/// occupancy, or `None` when no gadget applies as is.
fn swap_gadget(g: &Graph, occ: &[bool], pa: Vertex, pb: Vertex) -> Option<Vec<Step>> {
    // Around a cycle: the occupant of pb travels through blanks to a
    // neighbor of pa, pa's occupant steps into pb, then it closes the loop.
    let mut blocked: Vec<bool> = occ.to_vec();
    blocked[pa] = true;
    blocked[pb] = true;
    if let Some(path) = g.bfs_path(pb, &blocked, |v| v != pb && g.has_edge(v, pa)) {
        let mut out: Vec<Step> = path.windows(2).map(|w| (w[0], w[1])).collect();
        let w = *path.last().unwrap();
        out.push((pa, pb));
        out.push((w, pa));
        return Some(out);
    }
    // Junction: the center and two more blank neighbors.
    for (v, u) in [(pb, pa), (pa, pb)] {
        let free: Vec<Vertex> = g.neighbors(v).iter().copied().filter(|&w| w != u && !occ[w]).collect();
        if free.len() >= 2 {
            let (w1, w2) = (free[0], free[1]);
            return Some(vec![(v, w1), (u, v), (v, w2), (w1, v), (v, u), (w2, v)]);
        }
    }
    None
}

fn with_reverse(prep: Vec<Step>, gadget: Vec<Step>) -> Vec<Step> {
    let mut out = prep.clone();
    out.extend(gadget);
    out.extend(prep.iter().rev().map(|&(f, t)| (t, f)));
    out
}

/// Cheap constructive attempt: walk `p`'s occupant next to `q`, then clear
/// a short cycle or a junction around the pair.
fn exchange_constructive(g: &Graph, occ0: &[bool], p: Vertex, q: Vertex) -> Option<Vec<Step>> {
    let mut s = Scratch { g, occ: occ0.to_vec(), moves: Vec::new() };
    let mut pa = p;
    let pb = q;
    if !g.has_edge(pa, pb) {
        let route = g.shortest_path(pa, pb, &vec![false; g.len()])?;
        for &next in &route[1..route.len() - 1] {
            let mut avoid = vec![false; g.len()];
            avoid[pa] = true;
            avoid[pb] = true;
            for &r in &route {
                avoid[r] = true;
            }
            avoid[next] = false;
            if !s.clear(next, &avoid) {
                let mut avoid = vec![false; g.len()];
                avoid[pa] = true;
                avoid[pb] = true;
                if !s.clear(next, &avoid) {
                    return None;
                }
            }
            s.mv(pa, next);
            pa = next;
        }
    }
    if let Some(gad) = swap_gadget(g, &s.occ, pa, pb) {
        return Some(with_reverse(s.moves, gad));
    }
    // Clear the other vertices of the shortest cycle through the pair edge.
    let mut blocked = vec![false; g.len()];
    blocked[pa] = true;
    blocked[pb] = true;
    if let Some(path) = g.bfs_path(pb, &blocked, |v| v != pb && g.has_edge(v, pa)) {
        let mark = s.moves.len();
        let saved = s.occ.clone();
        let mut avoid = blocked.clone();
        for &v in &path {
            avoid[v] = true;
        }
        let mut ok = true;
        for &v in &path[1..] {
            avoid[v] = false;
            let done = s.clear(v, &avoid);
            avoid[v] = true;
            if !done {
                ok = false;
                break;
            }
        }
        if ok {
            if let Some(gad) = swap_gadget(g, &s.occ, pa, pb) {
                return Some(with_reverse(s.moves, gad));
            }
        }
        s.moves.truncate(mark);
        s.occ = saved;
    }
    for (v, u) in [(pb, pa), (pa, pb)] {
        if g.degree(v) < 3 {
            continue;
        }
        let mark = s.moves.len();
        let saved = s.occ.clone();
        let mut avoid = vec![false; g.len()];
        avoid[v] = true;
        avoid[u] = true;
        let others: Vec<Vertex> = g.neighbors(v).iter().copied().filter(|&w| w != u).collect();
        let mut cleared = 0;
        for &w in &others {
            if s.clear(w, &avoid) {
                avoid[w] = true;
                cleared += 1;
                if cleared == 2 {
                    break;
                }
            }
        }
        if cleared == 2 {
            if let Some(gad) = swap_gadget(g, &s.occ, pa, pb) {
                return Some(with_reverse(s.moves, gad));
            }
        }
        s.moves.truncate(mark);
        s.occ = saved;
    }
    None
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct PairState {
    a: u32,
    b: u32,
    others: Box<[u64]>,
}

impl PairState {
    fn occ(&self, v: Vertex) -> bool {
        v == self.a as usize || v == self.b as usize || (self.others[v / 64] >> (v % 64)) & 1 == 1
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        (0..n).map(|v| self.occ(v)).collect()
    }
}

/// Breadth-first search over placements of the pair and the (unlabeled)
/// remaining agents until a gadget applies. Expands at most `budget` states.
fn exchange_search(g: &Graph, occ0: &[bool], p: Vertex, q: Vertex, budget: usize) -> Option<Vec<Step>> {
    let n = g.len();
    let words = n.div_ceil(64).max(1);
    let mut others = vec![0u64; words].into_boxed_slice();
    for v in 0..n {
        if occ0[v] && v != p && v != q {
            others[v / 64] |= 1 << (v % 64);
        }
    }
    let start = PairState { a: p as u32, b: q as u32, others };
    let mut states = vec![start.clone()];
    let mut parent: Vec<(usize, Step)> = vec![(usize::MAX, (0, 0))];
    let mut index: HashMap<PairState, usize> = HashMap::from([(start, 0)]);
    let mut head = 0;
    while head < states.len() {
        let s = states[head].clone();
        let (a, b) = (s.a as usize, s.b as usize);
        let occ = s.mask(n);
        if g.has_edge(a, b) {
            if let Some(gad) = swap_gadget(g, &occ, a, b) {
                let mut prep = Vec::new();
                let mut cur = head;
                while parent[cur].0 != usize::MAX {
                    prep.push(parent[cur].1);
                    cur = parent[cur].0;
                }
                prep.reverse();
                return Some(with_reverse(prep, gad));
            }
        }
        if head < budget {
            for x in 0..n {
                if !occ[x] {
                    continue;
                }
                for &y in g.neighbors(x) {
                    if occ[y] {
                        continue;
                    }
                    let mut t = s.clone();
                    if x == a {
                        t.a = y as u32;
                    } else if x == b {
                        t.b = y as u32;
                    } else {
                        t.others[x / 64] &= !(1 << (x % 64));
                        t.others[y / 64] |= 1 << (y % 64);
                    }
                    if !index.contains_key(&t) {
                        index.insert(t.clone(), states.len());
                        states.push(t);
                        parent.push((head, (x, y)));
                    }
                }
            }
        }
        head += 1;
    }
    None
}

/// Default state budget of the exchange search.
pub const EXCHANGE_BUDGET: usize = 20_000;

/// Vertex moves that exchange the occupants of `p` and `q` and return every
/// other occupant to its vertex, for the occupancy `occ`.
pub fn exchange_moves(g: &Graph, occ: &[bool], p: Vertex, q: Vertex, budget: usize) -> Option<Vec<Step>> {
    debug_assert!(occ[p] && occ[q] && p != q);
    exchange_constructive(g, occ, p, q).or_else(|| exchange_search(g, occ, p, q, budget))
}

/// Exchanges adjacent agents `r` and `b`; every other agent, finished or
/// not, is back on its vertex afterwards.
pub fn primitive_swap(
    g: &Graph,
    cfg: &mut Configuration,
    r: usize,
    b: usize,
    budget: usize,
    trace: &mut Vec<Move>,
) -> Result<(), MapfError> {
    if cfg.is_finished(b) {
        return Err(MapfError::FinishedVertex(cfg.position(b)));
    }
    let (pr, pb) = (cfg.position(r), cfg.position(b));
    if !g.has_edge(pr, pb) {
        return Err(MapfError::IllegalMove { from: pr, to: pb });
    }
    let steps = exchange_moves(g, &cfg.occupied_mask(), pr, pb, budget).ok_or(MapfError::NoCycleWithBlank)?;
    apply_all(g, cfg, &steps, trace)
}

/// Applies a precomputed exchange.
pub fn apply_exchange(g: &Graph, cfg: &mut Configuration, steps: &[Step], trace: &mut Vec<Move>) -> Result<(), MapfError> {
    apply_all(g, cfg, steps, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    #[test]
    fn push_single_shift() {
        let g = Graph::from_edges(2, &[(0, 1)]);
        let mut c = Configuration::new(2, &[0]).unwrap();
        let mut t = Vec::new();
        primitive_push(&g, &mut c, &[0, 1], &mut t).unwrap();
        assert_eq!(t, vec![Move { agent: 0, from: 0, to: 1 }]);
    }

    #[test]
    fn push_three_occupied() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut c = Configuration::new(4, &[0, 1, 2]).unwrap();
        let mut t = Vec::new();
        primitive_push(&g, &mut c, &[0, 1, 2, 3], &mut t).unwrap();
        assert_eq!(t.iter().map(|m| (m.from, m.to)).collect::<Vec<_>>(), vec![(2, 3), (1, 2), (0, 1)]);
        assert!(c.is_blank(0));
    }

    #[test]
    fn push_rejects_finished() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let mut c = Configuration::new(3, &[0, 1]).unwrap();
        c.set_finished(1, true);
        assert_eq!(primitive_push(&g, &mut c, &[0, 1, 2], &mut Vec::new()), Err(MapfError::FinishedVertex(1)));
    }

    #[test]
    fn rotate_advances_everyone() {
        let g = cycle4();
        let mut c = Configuration::new(4, &[0, 1, 2]).unwrap();
        primitive_rotate(&g, &mut c, &[0, 1, 2, 3], &mut Vec::new()).unwrap();
        assert_eq!(c.positions(), &[1, 2, 3]);
        let mut full = Configuration::new(4, &[0, 1, 2, 3]).unwrap();
        assert_eq!(primitive_rotate(&g, &mut full, &[0, 1, 2, 3], &mut Vec::new()), Err(MapfError::NoBlankOnCycle));
    }

    #[test]
    fn rotate_twice_is_rotation_by_two() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let z = [0, 1, 2, 3, 4];
        let mut c = Configuration::new(5, &[0, 1, 3]).unwrap();
        primitive_rotate(&g, &mut c, &z, &mut Vec::new()).unwrap();
        primitive_rotate(&g, &mut c, &z, &mut Vec::new()).unwrap();
        assert_eq!(c.positions(), &[2, 3, 0]);
    }

    #[test]
    fn swap_on_four_cycle() {
        let g = cycle4();
        let mut c = Configuration::new(4, &[0, 1]).unwrap();
        let mut t = Vec::new();
        primitive_swap(&g, &mut c, 0, 1, EXCHANGE_BUDGET, &mut t).unwrap();
        assert_eq!(c.positions(), &[1, 0]);
        assert!(t.len() <= 6);
    }

    #[test]
    fn swap_restores_bystanders() {
        // 3x3 grid, pair in the middle row, bystanders around.
        let mut g = Graph::new(9);
        for r in 0..3 {
            for col in 0..3 {
                let v = r * 3 + col;
                if col < 2 {
                    g.add_edge(v, v + 1);
                }
                if r < 2 {
                    g.add_edge(v, v + 3);
                }
            }
        }
        let mut c = Configuration::new(9, &[3, 4, 0, 1, 5, 7, 8]).unwrap();
        primitive_swap(&g, &mut c, 0, 1, EXCHANGE_BUDGET, &mut Vec::new()).unwrap();
        assert_eq!(c.positions(), &[4, 3, 0, 1, 5, 7, 8]);
    }

    #[test]
    fn swap_rejects_finished_and_trees() {
        let path = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let mut c = Configuration::new(5, &[1, 2]).unwrap();
        assert_eq!(primitive_swap(&path, &mut c, 0, 1, EXCHANGE_BUDGET, &mut Vec::new()), Err(MapfError::NoCycleWithBlank));
        c.set_finished(1, true);
        assert_eq!(primitive_swap(&path, &mut c, 0, 1, EXCHANGE_BUDGET, &mut Vec::new()), Err(MapfError::FinishedVertex(2)));
    }

    #[test]
    fn swap_at_tree_junction() {
        // Star with center 1 and leaves 0, 2, 3; tail 3-4.
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
        let mut c = Configuration::new(5, &[4, 3]).unwrap();
        primitive_swap(&g, &mut c, 0, 1, EXCHANGE_BUDGET, &mut Vec::new()).unwrap();
        assert_eq!(c.positions(), &[3, 4]);
    }
}
