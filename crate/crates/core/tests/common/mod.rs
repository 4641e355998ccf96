//! Instance generators shared by integration tests; the BFS oracle itself
//! lives in the library.
#![allow(dead_code)]

pub mod snapshots;

pub use hybridnav::mapf::oracle::*;
use hybridnav::mapf::{pnr_solve_with, verify_plan, MapfInstance, SolverOptions};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Primitive count of one random instance on an empty grid.
#[derive(Debug, Clone, Copy)]
pub struct GridSample {
    pub side: usize,
    pub agents: usize,
    pub primitives: usize,
}

impl GridSample {
    pub fn vertices(&self) -> usize {
        self.side * self.side
    }

    /// count / (|V|² k)
    pub fn ratio(&self) -> f64 {
        self.primitives as f64 / ((self.vertices() * self.vertices() * self.agents) as f64)
    }
}

/// `per_cell` random instances for every grid side and agent count.
pub fn grid_primitive_counts(sides: &[usize], agents: &[usize], per_cell: usize, seed: u64) -> Vec<GridSample> {
    let cells: Vec<(usize, usize, usize)> = sides
        .iter()
        .flat_map(|&s| agents.iter().flat_map(move |&k| (0..per_cell).map(move |i| (s, k, i))))
        .collect();
    cells
        .par_iter()
        .map(|&(side, k, i)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((side * 1000 + k * 100 + i) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let g = grid_graph(side, side);
            let mut verts: Vec<usize> = (0..g.len()).collect();
            verts.shuffle(&mut rng);
            let s = verts[..k].to_vec();
            verts.shuffle(&mut rng);
            let t = verts[..k].to_vec();
            let inst = MapfInstance::new(g, s, t).unwrap();
            let opts = SolverOptions { check_invariants: false, ..Default::default() };
            let (plan, st) = pnr_solve_with(&inst, &opts).expect("empty grids are solvable");
            verify_plan(&inst, &plan).expect("valid plan");
            GridSample { side, agents: k, primitives: st.primitives }
        })
        .collect()
}
