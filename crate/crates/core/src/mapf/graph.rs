//! Undirected graphs on vertices `0..n` with deterministic neighbor order.

use std::collections::VecDeque;

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    /// Builds a graph from an edge list; duplicate edges and loops are ignored.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) {
        if u == v || self.adj[u].contains(&v) {
            return;
        }
        self.adj[u].push(v);
        self.adj[v].push(u);
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::new();
        for (u, ns) in self.adj.iter().enumerate() {
            for &v in ns {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Component label per vertex, labels numbered in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        q.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// BFS distances from `src` avoiding vertices with `blocked[v]`; the
    /// source itself is always expanded.
    pub fn distances(&self, src: Vertex, blocked: &[bool]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX && !blocked[v] {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path `src → dst` (inclusive) avoiding `blocked` interior and
    /// destination vertices. Ties resolve by neighbor order.
    pub fn shortest_path(&self, src: Vertex, dst: Vertex, blocked: &[bool]) -> Option<Vec<Vertex>> {
        self.bfs_path(src, blocked, |v| v == dst)
    }

    /// Shortest path from `src` to the first vertex satisfying `goal`
    /// (excluding `src` unless it satisfies `goal` itself).
    pub fn bfs_path(&self, src: Vertex, blocked: &[bool], goal: impl Fn(Vertex) -> bool) -> Option<Vec<Vertex>> {
        if goal(src) {
            return Some(vec![src]);
        }
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        parent[src] = src;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if parent[v] != usize::MAX || blocked[v] {
                    continue;
                }
                parent[v] = u;
                if goal(v) {
                    let mut path = vec![v];
                    let mut c = v;
                    while c != src {
                        c = parent[c];
                        path.push(c);
                    }
                    path.reverse();
                    return Some(path);
                }
                q.push_back(v);
            }
        }
        None
    }

    /// Vertices of the component containing `v`, in ascending order.
    pub fn component_of(&self, v: Vertex) -> Vec<Vertex> {
        let d = self.distances(v, &vec![false; self.len()]);
        (0..self.len()).filter(|&u| d[u] != usize::MAX).collect()
    }

    /// Whether the vertex set forms a simple cycle (all degrees two inside a
    /// connected set of at least three vertices).
    pub fn is_cycle(&self, comp: &[Vertex]) -> bool {
        comp.len() >= 3 && comp.iter().all(|&v| self.degree(v) == 2)
    }

    /// Vertices of a cycle component in traversal order starting at the
    /// smallest vertex and continuing towards its first neighbor.
    pub fn cycle_order(&self, comp: &[Vertex]) -> Vec<Vertex> {
        let start = *comp.iter().min().expect("non-empty component");
        let mut order = vec![start];
        let mut prev = start;
        let mut cur = self.adj[start][0];
        while cur != start {
            order.push(cur);
            let next = if self.adj[cur][0] == prev { self.adj[cur][1] } else { self.adj[cur][0] };
            prev = cur;
            cur = next;
        }
        order
    }

    /// Vertex-induced subgraph on `keep` (indices remapped in order).
    pub fn induced(&self, keep: &[Vertex]) -> (Graph, Vec<Option<Vertex>>) {
        let mut map = vec![None; self.len()];
        for (i, &v) in keep.iter().enumerate() {
            map[v] = Some(i);
        }
        let mut g = Graph::new(keep.len());
        for &u in keep {
            for &v in &self.adj[u] {
                if let (Some(a), Some(b)) = (map[u], map[v]) {
                    if a < b {
                        g.add_edge(a, b);
                    }
                }
            }
        }
        (g, map)
    }
}
