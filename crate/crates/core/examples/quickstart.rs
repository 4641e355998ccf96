//! One Hybrid episode in the corridor, with the event log.
//!
//! cargo run --release --example quickstart

use hybridnav::bench::{corridor, T_MAX};
use hybridnav::executive::{run_episode, ExecOptions, Method};

fn main() {
    let scenario = corridor(6);
    let r = run_episode(&scenario, &ExecOptions::new(Method::Hybrid), 7, T_MAX).expect("valid scenario");

    print!("{}", r.log.to_text());
    println!(
        "\n{}: {} after {} steps, {} triggers, {} solves ({} failed)",
        scenario.name,
        r.outcome.as_str(),
        r.steps,
        r.triggers,
        r.solves_ok,
        r.solves_failed
    );
    for rec in &r.clearance {
        match rec.advanced_after {
            Some(s) => println!("plan {} agent {}: cleared after {s} steps (bound {})", rec.plan, rec.agent, rec.bound),
            None => println!("plan {} agent {}: not cleared", rec.plan, rec.agent),
        }
    }
}
