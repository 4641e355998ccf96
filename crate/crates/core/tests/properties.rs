//! Randomized properties of the policy, the global planner, the solver and
//! whole episodes.

mod common;

use common::{bfs_solvable, grid_graph, poly_graph, random_poly};
use hybridnav::executive::{run_episode, ExecOptions, Method, Outcome};
use hybridnav::geom::{Rect, Vec2};
use hybridnav::global::{path_cost, plan_astar, PlanError};
use hybridnav::grid::{Cell, Grid};
use hybridnav::mapf::{pnr_solve, verify_plan, MapfError, MapfInstance};
use hybridnav::policy::{build_observation, LocalPolicy, PolicyConfig, ReciprocalPolicy};
use hybridnav::scenario::Scenario;
use hybridnav::world::{AgentState, ObstacleMap, WorldConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// ---- policy -------------------------------------------------------------

#[derive(Debug, Clone)]
struct Scene {
    ego_v: Vec2,
    target: Vec2,
    /// (position, velocity) of each neighbor.
    others: Vec<(Vec2, Vec2)>,
}

fn vec_in(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(x, y)| Vec2::new(x, y))
}

fn scene() -> impl Strategy<Value = Scene> {
    let other = (0.5f64..3.0, -3.2f64..3.2, vec_in(1.0)).prop_map(|(d, a, v)| (Vec2::new(d * a.cos(), d * a.sin()), v));
    (vec_in(1.0), vec_in(4.0), prop::collection::vec(other, 0..4))
        .prop_filter("neighbors overlap", |(_, _, o)| {
            o.iter().enumerate().all(|(i, a)| o[..i].iter().all(|b| a.0.distance(b.0) > 0.45))
        })
        .prop_map(|(ego_v, target, others)| Scene { ego_v, target, others })
}

/// Policy output for a scene mapped through the linear map `f`.
fn act(s: &Scene, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
    let w = WorldConfig::default();
    let pcfg = PolicyConfig::default();
    let policy = ReciprocalPolicy::new(&pcfg, &w);
    let mut ego = AgentState::new(0, Vec2::ZERO, w.agent_radius);
    ego.velocity = f(s.ego_v);
    let nbs: Vec<AgentState> = s
        .others
        .iter()
        .enumerate()
        .map(|(i, &(p, v))| {
            let mut a = AgentState::new(i + 1, f(p), w.agent_radius);
            a.velocity = f(v);
            a
        })
        .collect();
    let refs: Vec<&AgentState> = nbs.iter().collect();
    let obs = build_observation(&ego, &refs, Some(f(s.target)), w.v_max, None, &w, &pcfg);
    policy.act(&obs).dv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn policy_is_rotation_equivariant(s in scene(), theta in -3.2f64..3.2) {
        let dv = act(&s, |v| v);
        let rotated = act(&s, |v| v.rotate(theta));
        prop_assert!(rotated.distance(dv.rotate(theta)) < 1e-6, "{dv:?} rotated {rotated:?}");
    }

    #[test]
    fn policy_is_mirror_symmetric(s in scene()) {
        let flip = |v: Vec2| Vec2::new(v.x, -v.y);
        let dv = act(&s, |v| v);
        let mirrored = act(&s, flip);
        prop_assert!(mirrored.distance(flip(dv)) < 1e-6, "{dv:?} mirrored {mirrored:?}");
    }

    #[test]
    fn head_on_pair_never_collides(dy0 in -0.4f64..0.4, dy1 in -0.4f64..0.4, gap in 3.0f64..7.0) {
        let map = ObstacleMap::new(Rect::new(0.0, 0.0, 10.0, 6.0), vec![]);
        let a = Vec2::new(5.0 - gap / 2.0, 3.0 + dy0);
        let b = Vec2::new(5.0 + gap / 2.0, 3.0 + dy1);
        let sc = Scenario::new("head-on", map, vec![a, b], vec![b, a]);
        let r = run_episode(&sc, &ExecOptions::new(Method::BaseOnly), 1, 600).unwrap();
        prop_assert_eq!(r.collisions, 0);
        prop_assert_eq!(r.outcome, Outcome::Success);
    }
}

// ---- global planner -------------------------------------------------------

#[derive(PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Plain Dijkstra over the same 8-connected moves without corner cutting.
fn dijkstra(g: &Grid, s: Cell, t: Cell) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut heap = BinaryHeap::new();
    dist[g.index(s)] = 0.0;
    heap.push(Node(0.0, g.index(s)));
    while let Some(Node(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let c = g.cell_at(i);
        if c == t {
            return Some(d);
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (x, y) = (c.col as i64 + dx, c.row as i64 + dy);
                let free = |x: i64, y: i64| x >= 0 && y >= 0 && g.contains(Cell::new(x as usize, y as usize)) && g.is_free(Cell::new(x as usize, y as usize));
                if !free(x, y) || (dx != 0 && dy != 0 && (!free(c.col as i64 + dx, c.row as i64) || !free(c.col as i64, c.row as i64 + dy))) {
                    continue;
                }
                let n = g.index(Cell::new(x as usize, y as usize));
                let nd = d + if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Node(nd, n));
                }
            }
        }
    }
    None
}

proptest! {
    #[test]
    fn astar_matches_dijkstra(w in 2usize..14, h in 2usize..14, density in 0.0f64..0.45, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Grid::new(w, h, 1.0, Vec2::ZERO);
        let mut cells: Vec<Cell> = (0..w).flat_map(|c| (0..h).map(move |r| Cell::new(c, r))).collect();
        cells.shuffle(&mut rng);
        let (s, t) = (cells[0], cells[1]);
        for &c in cells[2..].iter().take((density * (w * h) as f64) as usize) {
            g.set_blocked(c, true);
        }
        match (plan_astar(&g, s, t), dijkstra(&g, s, t)) {
            (Ok(path), Some(d)) => {
                prop_assert!((path_cost(&path) - d).abs() < 1e-9, "astar {} dijkstra {d}", path_cost(&path));
                prop_assert_eq!(path[0], s);
                prop_assert_eq!(*path.last().unwrap(), t);
            }
            (Err(PlanError::NoPath), None) => {}
            (a, d) => prop_assert!(false, "astar {a:?} dijkstra {d:?}"),
        }
    }
}

// ---- solver -----------------------------------------------------------------

fn distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v.truncate(k);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Grids of at least 3×3 are 2-connected and not a cycle, so two blanks
    /// make every instance solvable.
    #[test]
    fn empty_grid_instances_are_solved_validly(w in 3usize..8, h in 3usize..8, k in 1usize..9, seed in any::<u64>()) {
        let g = grid_graph(w, h);
        let k = k.min(w * h - 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = MapfInstance::new(g, distinct(&mut rng, w * h, k), distinct(&mut rng, w * h, k)).unwrap();
        let plan = pnr_solve(&inst).unwrap();
        prop_assert_eq!(verify_plan(&inst, &plan), Ok(()));
    }

    #[test]
    fn polyomino_solves_agree_with_bfs(size in 4usize..11, k in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = poly_graph(&random_poly(&mut rng, size));
        let k = k.min(size - 2);
        let (s, t) = (distinct(&mut rng, size, k), distinct(&mut rng, size, k));
        let inst = MapfInstance::new(g.clone(), s.clone(), t.clone()).unwrap();
        let truth = bfs_solvable(&g, &s, &t);
        match pnr_solve(&inst) {
            Ok(plan) => {
                prop_assert!(truth, "solved an unsolvable instance");
                prop_assert_eq!(verify_plan(&inst, &plan), Ok(()));
            }
            Err(MapfError::Unsolvable) => prop_assert!(!truth, "missed a solvable instance"),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
