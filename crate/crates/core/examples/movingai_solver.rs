//! The standalone solver on a MovingAI map and scenario, here inline: two
//! rooms joined by a one-cell gap, every agent crossing to the far room.
//!
//! cargo run --release --example movingai_solver

use hybridnav::mapf::{io, movingai, pnr_solve_with, verify_plan, SolverOptions};
use std::time::Instant;

const MAP: &str = "type octile
height 7
width 11
map
.....@.....
.....@.....
.....@.....
...........
.....@.....
.....@.....
.....@.....
";

fn scen() -> String {
    let mut s = String::from("version 1\n");
    // Every agent heads for the point reflection of its start.
    for (i, (x, y)) in [(0, 0), (1, 3), (2, 6), (0, 3), (1, 1), (2, 4), (3, 2), (4, 5)].iter().enumerate() {
        s += &format!("{i}\tm.map\t11\t7\t{x}\t{y}\t{}\t{}\t0\n", 10 - x, 6 - y);
    }
    s
}

fn main() {
    let grid = movingai::parse_map(MAP).expect("map");
    let entries = movingai::parse_scen(&scen()).expect("scen");
    for k in [2, 4, 8] {
        let (_, inst) = movingai::scen_instance(&grid, &entries, k).expect("instance");
        let t = Instant::now();
        let (plan, stats) = pnr_solve_with(&inst, &SolverOptions::default()).expect("solvable");
        let ms = t.elapsed().as_secs_f64() * 1e3;
        verify_plan(&inst, &plan).expect("valid plan");
        println!(
            "k={k}: {} primitives, {} moves, horizon {}, {ms:.2} ms",
            stats.primitives,
            plan.move_count(),
            plan.horizon()
        );
        if k == 2 {
            print!("{}", io::write_plan(&plan));
        }
    }
}
