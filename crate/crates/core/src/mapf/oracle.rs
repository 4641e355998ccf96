//! Exhaustive ground truth for small instances: joint-state BFS
//! solvability, polyomino enumeration and the oracle sweeps that compare
//! the solver against it.

use super::{pnr_solve_with, verify_plan, Graph, MapfError, MapfInstance, SolveStats, SolverOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

pub type Poly = Vec<(i32, i32)>;

fn normalize(cells: &[(i32, i32)]) -> Poly {
    let mx = cells.iter().map(|c| c.0).min().unwrap();
    let my = cells.iter().map(|c| c.1).min().unwrap();
    let mut v: Poly = cells.iter().map(|&(x, y)| (x - mx, y - my)).collect();
    v.sort_unstable();
    v
}

fn canonical(cells: &[(i32, i32)]) -> Poly {
    let syms: [fn((i32, i32)) -> (i32, i32); 8] = [
        |(x, y)| (x, y),
        |(x, y)| (-x, y),
        |(x, y)| (x, -y),
        |(x, y)| (-x, -y),
        |(x, y)| (y, x),
        |(x, y)| (-y, x),
        |(x, y)| (y, -x),
        |(x, y)| (-y, -x),
    ];
    syms.iter()
        .map(|f| normalize(&cells.iter().map(|&c| f(c)).collect::<Vec<_>>()))
        .min()
        .unwrap()
}

/// Free polyominoes (connected 4-connected cell sets up to rotation and
/// reflection) of every size `1..=max`, grouped by size.
pub fn free_polyominoes(max: usize) -> Vec<Vec<Poly>> {
    let mut by_size: Vec<Vec<Poly>> = vec![Vec::new(); max + 1];
    if max == 0 {
        return by_size;
    }
    by_size[1].push(vec![(0, 0)]);
    for s in 2..=max {
        let mut seen = BTreeSet::new();
        for p in &by_size[s - 1] {
            let set: HashSet<_> = p.iter().copied().collect();
            for &(x, y) in p {
                for n in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                    if !set.contains(&n) {
                        let mut q = p.clone();
                        q.push(n);
                        seen.insert(canonical(&q));
                    }
                }
            }
        }
        by_size[s] = seen.into_iter().collect();
    }
    by_size
}

/// 4-connected graph on the cells, vertices numbered in sorted cell order.
pub fn poly_graph(cells: &[(i32, i32)]) -> Graph {
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    let idx: HashMap<_, _> = sorted.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut g = Graph::new(sorted.len());
    for (i, &(x, y)) in sorted.iter().enumerate() {
        for n in [(x + 1, y), (x, y + 1)] {
            if let Some(&j) = idx.get(&n) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Random connected cell set of the given size grown from the origin.
pub fn random_poly(rng: &mut impl Rng, size: usize) -> Poly {
    let mut cells = vec![(0, 0)];
    let mut set: HashSet<(i32, i32)> = cells.iter().copied().collect();
    while cells.len() < size {
        let &(x, y) = cells.choose(rng).unwrap();
        let n = *[(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].choose(rng).unwrap();
        if set.insert(n) {
            cells.push(n);
        }
    }
    cells
}

pub fn grid_graph(w: usize, h: usize) -> Graph {
    let cells: Poly = (0..w as i32).flat_map(|x| (0..h as i32).map(move |y| (x, y))).collect();
    poly_graph(&cells)
}

/// Joint configurations reachable from `start` by single-agent moves into
/// blank adjacent vertices.
pub fn reachable(g: &Graph, start: &[usize]) -> HashSet<Vec<usize>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::from([start.to_vec()]);
    let mut q = VecDeque::from([start.to_vec()]);
    while let Some(s) = q.pop_front() {
        for a in 0..s.len() {
            for &v in g.neighbors(s[a]) {
                if s.contains(&v) {
                    continue;
                }
                let mut t = s.clone();
                t[a] = v;
                if seen.insert(t.clone()) {
                    q.push_back(t);
                }
            }
        }
    }
    seen
}

/// Whether the instance is solvable, by exhaustive joint-state search.
pub fn bfs_solvable(g: &Graph, starts: &[usize], targets: &[usize]) -> bool {
    reachable(g, starts).contains(targets)
}

/// Ordered tuples of `k` distinct vertices out of `n`.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !cur.contains(&v) {
                cur.push(v);
                rec(n, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, k, &mut cur, &mut out);
    out
}

#[derive(Debug, Default, Clone)]
pub struct SweepReport {
    pub instances: usize,
    pub solvable: usize,
    pub mismatches: Vec<String>,
    pub invalid_plans: Vec<String>,
    pub stats: SolveStats,
}

impl SweepReport {
    fn merge(mut self, o: SweepReport) -> SweepReport {
        self.instances += o.instances;
        self.solvable += o.solvable;
        self.mismatches.extend(o.mismatches);
        self.invalid_plans.extend(o.invalid_plans);
        let (a, b) = (&mut self.stats, &o.stats);
        a.primitives += b.primitives;
        a.steps += b.steps;
        a.pushes += b.pushes;
        a.rotates += b.rotates;
        a.swaps += b.swaps;
        a.moves += b.moves;
        a.potential_checks += b.potential_checks;
        a.potential_violations += b.potential_violations;
        a.finished_violations += b.finished_violations;
        a.blank_violations += b.blank_violations;
        a.cutoff_selections += b.cutoff_selections;
        a.completion_phase |= b.completion_phase;
        self
    }
}

fn check_one(g: &Graph, s: &[usize], t: &[usize], truth: bool, r: &mut SweepReport) {
    let opts = SolverOptions { check_invariants: true, ..Default::default() };
    let inst = MapfInstance::new(g.clone(), s.to_vec(), t.to_vec()).unwrap();
    r.instances += 1;
    r.solvable += truth as usize;
    match pnr_solve_with(&inst, &opts) {
        Ok((plan, st)) => {
            if !truth {
                r.mismatches.push(format!("solved unsolvable: {:?} {s:?} -> {t:?}", g.edges()));
            }
            if let Err(e) = verify_plan(&inst, &plan) {
                r.invalid_plans.push(format!("{e}: {:?} {s:?} -> {t:?}", g.edges()));
            }
            let acc = SweepReport { stats: st, ..Default::default() };
            *r = std::mem::take(r).merge(acc);
        }
        Err(MapfError::Unsolvable) if !truth => {}
        Err(e) => {
            if truth {
                r.mismatches.push(format!("{e}: {:?} {s:?} -> {t:?}", g.edges()));
            } else if !matches!(e, MapfError::Unsolvable) {
                r.mismatches.push(format!("unexpected {e}: {:?} {s:?} -> {t:?}", g.edges()));
            }
        }
    }
}

/// Every 2-agent instance on every free polyomino with at least 4 cells and
/// at most `max_size`.
pub fn exhaustive_two_agent(max_size: usize) -> SweepReport {
    let polys: Vec<Poly> = free_polyominoes(max_size).into_iter().skip(4).flatten().collect();
    polys
        .par_iter()
        .map(|p| {
            let g = poly_graph(p);
            let mut r = SweepReport::default();
            let pairs = tuples(g.len(), 2);
            for s in &pairs {
                let reach = reachable(&g, s);
                for t in &pairs {
                    check_one(&g, s, t, reach.contains(t), &mut r);
                }
            }
            r
        })
        .reduce(SweepReport::default, SweepReport::merge)
}

/// `samples` random 3-agent instances on random polyominoes of 5..=`max_size` cells.
pub fn sampled_three_agent(samples: usize, max_size: usize, seed: u64) -> SweepReport {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let size = rng.gen_range(5..=max_size);
            let g = poly_graph(&random_poly(&mut rng, size));
            let mut verts: Vec<usize> = (0..g.len()).collect();
            verts.shuffle(&mut rng);
            let s = verts[..3].to_vec();
            verts.shuffle(&mut rng);
            let t = verts[..3].to_vec();
            let mut r = SweepReport::default();
            check_one(&g, &s, &t, bfs_solvable(&g, &s, &t), &mut r);
            r
        })
        .reduce(SweepReport::default, SweepReport::merge)
}
