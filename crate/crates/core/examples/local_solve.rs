//! Crop, instance, Push-and-Rotate and dense waypoints for a head-on swap
//! inside the corridor, without running the simulator.
//!
//! cargo run --example local_solve

use hybridnav::bench::corridor;
use hybridnav::geom::Vec2;
use hybridnav::mapf::{build_instance, crop_subgrid, plan_to_dense, pnr_solve_with, verify_plan, SolverOptions};

fn main() {
    let sc = corridor(2);
    // Two agents face each other mid-corridor, each aiming past the other.
    let positions = [Vec2::new(4.6, 3.0), Vec2::new(5.4, 3.0)];
    let waypoints = [Vec2::new(6.5, 3.0), Vec2::new(3.5, 3.0)];

    let sub = crop_subgrid(&sc.map, &positions, sc.solver.margin, sc.solver.cell_size, sc.world.agent_radius);
    let li = build_instance(&sub, &[0, 1], &positions, &waypoints).expect("instance");
    println!("crop {:?}: {} free cells", sub.bounds, li.subgrid.len());

    let (plan, stats) = pnr_solve_with(&li.instance, &SolverOptions::default()).expect("solvable");
    verify_plan(&li.instance, &plan).expect("valid plan");
    println!(
        "{} primitives ({} pushes, {} swaps, {} rotates), horizon {}",
        stats.primitives,
        stats.pushes,
        stats.swaps,
        stats.rotates,
        plan.horizon()
    );

    let centers: Vec<Vec2> = (0..li.subgrid.len()).map(|v| li.subgrid.center(v)).collect();
    let dense = plan_to_dense(&plan, &centers);
    for (a, pts) in dense.points.iter().enumerate() {
        let line: Vec<String> = pts.iter().map(|p| format!("({:.2}, {:.2})", p.x, p.y)).collect();
        println!("agent {a}: {}", line.join(" -> "));
        for (i, deps) in dense.deps[a].iter().enumerate().filter(|(_, d)| !d.is_empty()) {
            println!("    point {i} waits for {deps:?}");
        }
    }
}
