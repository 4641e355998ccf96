//! BaseOnly against Hybrid on both built-in bottlenecks.
//!
//! cargo run --release --example compare_methods -- [episodes]

use hybridnav::bench::{corridor, doorway, emit_table, run_batch, seeds, T_MAX};
use hybridnav::executive::{ExecOptions, Method};

fn main() {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seeds = seeds(1, episodes);
    let mut results = Vec::new();
    for method in [Method::BaseOnly, Method::Hybrid] {
        for n in [4, 6, 8] {
            for sc in [corridor(n), doorway(n)] {
                results.push(run_batch(&sc, n, &ExecOptions::new(method), &seeds, T_MAX).expect("valid scenario"));
            }
        }
    }
    let (table, csv) = emit_table(&results);
    println!("{table}\n{csv}");
}
