//! Records a doorway episode and writes its trajectory, with events
//! interleaved, for plotting.
//!
//! cargo run --release --example export_trajectory -- [out.csv]

use hybridnav::bench::{doorway, export_trajectories, T_MAX};
use hybridnav::executive::{run_episode, ExecOptions, Method};
use std::path::PathBuf;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("doorway_6_hybrid.csv"));
    let opts = ExecOptions { record_trajectory: true, ..ExecOptions::new(Method::Hybrid) };
    let r = run_episode(&doorway(6), &opts, 3, T_MAX).expect("valid scenario");
    export_trajectories(&r, &out).expect("writable path");
    let lines = std::fs::read_to_string(&out).map(|t| t.lines().count()).unwrap_or(0);
    println!("{} after {} steps; wrote {lines} lines to {}", r.outcome.as_str(), r.steps, out.display());
}
