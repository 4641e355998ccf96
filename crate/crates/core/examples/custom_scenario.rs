//! A scenario written as TOML: a T-junction where three agents cross paths.
//! Unlisted settings keep their defaults. The same file works with
//! `hybridnav run --scenario <file>`.
//!
//! cargo run --release --example custom_scenario

use hybridnav::executive::{run_episode, ExecOptions, Method};
use hybridnav::scenario::Scenario;

const JUNCTION: &str = r#"
name = "junction"
bounds = [0.0, 0.0, 8.0, 8.0]
jitter = 0.05

[detector]
t_wp = 80

# The stem of the T runs up from the bottom edge; the bar spans y 5..6.5.
[[obstacle]]
rect = [0.0, 0.0, 3.25, 5.0]

[[obstacle]]
rect = [4.75, 0.0, 8.0, 5.0]

[[obstacle]]
rect = [0.0, 6.5, 8.0, 8.0]

[[agent]]
start = [0.5, 5.75]
goal = [4.0, 0.5]

[[agent]]
start = [7.5, 5.75]
goal = [0.5, 5.75]

[[agent]]
start = [4.0, 0.5]
goal = [7.5, 5.75]
"#;

fn main() {
    let sc = Scenario::from_toml(JUNCTION).expect("valid scenario");
    println!("{} with {} agents, t_wp = {}", sc.name, sc.n_agents(), sc.detector.t_wp);
    for method in [Method::BaseOnly, Method::Hybrid] {
        let r = run_episode(&sc, &ExecOptions::new(method), 1, 1000).expect("runs");
        println!("{:>8}: {} after {} steps, {} solves", method.as_str(), r.outcome.as_str(), r.steps, r.solves_ok);
    }
    // Round trip: the serialized form parses back to the same scenario.
    let again = Scenario::from_toml(&sc.to_toml().expect("serializable")).expect("parses");
    assert_eq!(again, sc);
}
