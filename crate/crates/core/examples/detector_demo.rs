//! The core-pair risk trigger on hand-placed agents.
//!
//! cargo run --example detector_demo

use hybridnav::detector::{most_at_risk, pair_risk, trigger_risk, DetectorConfig};
use hybridnav::geom::Vec2;
use hybridnav::world::{AgentState, WorldConfig};

fn agent(id: usize, x: f64, y: f64, vx: f64, vy: f64) -> AgentState {
    let mut a = AgentState::new(id, Vec2::new(x, y), 0.2);
    a.velocity = Vec2::new(vx, vy);
    a
}

fn report(title: &str, agents: &[AgentState]) {
    let w = WorldConfig::default();
    let cfg = DetectorConfig::default();
    println!("{title}");
    for a in agents {
        let Some((j, ttc, dmin)) = most_at_risk(a, agents, &w, &cfg) else {
            println!("  agent {}: nobody in range", a.id);
            continue;
        };
        let pair = trigger_risk(a, agents, &w, &cfg);
        println!("  agent {}: most at risk {j}, ttc {ttc:.3} s, dmin {dmin:.3} m, trigger {pair:?}", a.id);
    }
}

fn main() {
    // Closing at 2 m/s from 4 m apart: contact course, ttc 2 s.
    report("head-on", &[agent(0, 0.0, 0.0, 1.0, 0.0), agent(1, 4.0, 0.0, -1.0, 0.0)]);

    // Agent 2 closes in too, but agents 0 and 1 pick each other, so only
    // that mutual pair fires.
    report(
        "chain",
        &[agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 2.0, 0.0, -1.0, 0.0), agent(2, 5.0, 0.0, -1.5, 0.0)],
    );

    // Same heading and speed: not closing, ttc is infinite.
    report("platoon", &[agent(0, 0.0, 0.0, 1.0, 0.0), agent(1, 1.0, 0.0, 1.0, 0.0)]);

    let (ttc, dmin) = pair_risk(&agent(0, 0.0, 0.0, 1.0, 0.0), &agent(1, 3.0, 0.5, -1.0, 0.0), 1e-9);
    println!("offset pair: ttc {ttc:.3} s, dmin {dmin:.3} m");
}
