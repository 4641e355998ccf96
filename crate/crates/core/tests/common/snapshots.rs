//! Hand-constructed kinematic snapshots for the three deadlock triggers,
//! the gates, participant closure and the closed-form ttc/dmin values.
//! Expected values were worked out by hand; see the comment on each case.

use hybridnav::detector::{
    build_participants, detect, pair_risk, trigger_risk, trigger_spd, trigger_wp, DetectorConfig, DetectorInput,
    ProgressWindow, TriggerEvent, TriggerKind,
};
use hybridnav::geom::Vec2;
use hybridnav::global::{WaypointKind, WaypointList};
use hybridnav::policy::{dmin_pair, ttc_pair};
use hybridnav::world::{AgentState, Mode, WorldConfig};

pub struct Snapshot {
    pub name: &'static str,
    pub expected: bool,
    pub actual: bool,
}

pub struct Value {
    pub name: &'static str,
    pub expected: f64,
    pub actual: f64,
}

impl Value {
    pub fn agrees(&self, tol: f64) -> bool {
        if self.expected.is_infinite() {
            self.actual == self.expected
        } else {
            (self.actual - self.expected).abs() <= tol
        }
    }
}

fn agent(id: usize, x: f64, y: f64, vx: f64, vy: f64) -> AgentState {
    let mut a = AgentState::new(id, Vec2::new(x, y), 0.2);
    a.velocity = Vec2::new(vx, vy);
    a
}

fn window(speeds: &[f64], prog: f64) -> ProgressWindow {
    let mut w = ProgressWindow::new(10);
    for &s in speeds {
        w.push(s, prog);
    }
    w
}

fn still() -> ProgressWindow {
    window(&[0.0; 10], 0.0)
}

fn waypoints(points: &[(f64, f64)], last_advance: usize) -> WaypointList {
    let mut wl = WaypointList::new(points.iter().map(|&(x, y)| Vec2::new(x, y)).collect(), 0.3, WaypointKind::GlobalSparse);
    wl.last_advance_step = last_advance;
    wl
}

fn spd(windows: &[ProgressWindow], neighbors: &[usize], eps_n: usize) -> bool {
    let cfg = DetectorConfig { eps_n, ..Default::default() };
    trigger_spd(0, neighbors, windows, &cfg)
}

fn risk(agents: &[AgentState], ego: usize, tau: f64) -> Option<(usize, usize)> {
    let cfg = DetectorConfig { tau_ttc: tau, ..Default::default() };
    trigger_risk(&agents[ego], agents, &WorldConfig::default(), &cfg)
}

/// Flagged agent ids of one `detect` call; every agent heads for (9, 9)
/// unless `wps` overrides it.
fn flagged(agents: &[AgentState], windows: &[ProgressWindow], wps: Option<Vec<WaypointList>>, last: &[Option<usize>], eligible: &[bool], step: usize) -> Vec<usize> {
    let wps = wps.unwrap_or_else(|| agents.iter().map(|_| waypoints(&[(9.0, 9.0)], step)).collect());
    let input = DetectorInput { agents, windows, waypoints: &wps, last_trigger: last, eligible, step };
    detect(&input, &WorldConfig::default(), &DetectorConfig::default()).iter().map(|e| e.agent).collect()
}

pub fn boolean_snapshots() -> Vec<Snapshot> {
    let mut v = Vec::new();
    let mut add = |name, expected, actual| v.push(Snapshot { name, expected, actual });
    let cfg = DetectorConfig::default();

    // Speed / non-progress trigger. v_low = 0.1.
    add("spd: ego and neighbor stationary", true, spd(&[still(), still()], &[1], 1));
    add("spd: ego at v_max", false, spd(&[window(&[1.5; 10], 1.5), still()], &[1], 1));
    add("spd: slow neighbor still progressing", false, spd(&[still(), window(&[0.05; 10], 0.1)], &[1], 1));
    add("spd: no neighbors", false, spd(&[still()], &[], 1));
    add("spd: neighbor fast, zero progress", false, spd(&[still(), window(&[0.5; 10], 0.0)], &[1], 1));
    // mean(0.08, 0.10) = 0.09 < 0.1
    add("spd: mean over partial window below v_low", true, spd(&[window(&[0.08, 0.10], 0.0), still()], &[1], 1));
    add("spd: mean exactly v_low is not slow", false, spd(&[window(&[0.1; 4], 0.0), still()], &[1], 1));
    add("spd: neighbor drifting backwards", true, spd(&[still(), window(&[0.05; 10], -0.05)], &[1], 1));
    add("spd: quorum 2 with one stalled neighbor", false, spd(&[still(), still(), window(&[1.0; 10], 1.0)], &[1, 2], 2));
    add("spd: quorum 2 with two stalled neighbors", true, spd(&[still(), still(), still()], &[1, 2], 2));
    add("spd: neighbor without samples", false, spd(&[still(), ProgressWindow::new(10)], &[1], 1));
    add("spd: ego without samples", false, spd(&[ProgressWindow::new(10), still()], &[1], 1));

    // Waypoint trigger. T_wp = 60, eps_goal = 0.3.
    let o = Vec2::ZERO;
    add("wp: advanced this step", false, trigger_wp(&waypoints(&[(2.0, 0.0)], 100), o, 100, &cfg));
    add("wp: stalled T_wp, 2 m away", true, trigger_wp(&waypoints(&[(2.0, 0.0)], 40), o, 100, &cfg));
    add("wp: stalled T_wp within eps_goal", false, trigger_wp(&waypoints(&[(0.2, 0.0)], 40), o, 100, &cfg));
    add("wp: stalled T_wp - 1", false, trigger_wp(&waypoints(&[(2.0, 0.0)], 41), o, 100, &cfg));
    add("wp: distance exactly eps_goal", false, trigger_wp(&waypoints(&[(0.3, 0.0)], 0), o, 100, &cfg));
    let mut done = waypoints(&[(2.0, 0.0)], 0);
    done.active_index = 1;
    add("wp: exhausted list", false, trigger_wp(&done, o, 100, &cfg));

    // Risk trigger. Head-on, 2 m apart, 1 m/s each: ttc = 4/4 = 1 s.
    let head_on = [agent(0, 0.0, 0.0, 1.0, 0.0), agent(1, 2.0, 0.0, -1.0, 0.0)];
    add("risk: head-on, tau 2, fires", risk(&head_on, 0, 2.0) == Some((0, 1)), true);
    add("risk: head-on seen from the other agent", risk(&head_on, 1, 2.0) == Some((0, 1)), true);
    // ttc(0,1) = 2, ttc(0,2) = 1, ttc(1,2) = 0.5: b(0) = 2 but b(2) = 1.
    let chain = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 2.0, 0.0, -1.0, 0.0), agent(2, 3.0, 0.0, -3.0, 0.0)];
    add("risk: best neighbor prefers another agent", false, risk(&chain, 0, 3.0).is_some());
    add("risk: the mutual pair of that chain fires", risk(&chain, 1, 3.0) == Some((1, 2)), true);
    // r = (3, 3), u = (-0.3, 0): ttc = 0.9 / 0.09 = 10, dmin = 3.
    let slow_pass = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 3.0, 3.0, -0.3, 0.0)];
    add("risk: mutual but ttc 10 s and dmin 3 m", false, risk(&slow_pass, 0, 3.0).is_some());
    // Same ttc, dmin = 0.3 < 0.45.
    let grazing = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 3.0, 0.3, -0.3, 0.0)];
    add("risk: distant ttc but dmin below delta_min", true, risk(&grazing, 0, 3.0).is_some());
    let receding = [agent(0, 0.0, 0.0, -0.5, 0.0), agent(1, 1.0, 0.0, 0.5, 0.0)];
    add("risk: receding pair 1 m apart", false, risk(&receding, 0, 3.0).is_some());
    let close = [agent(0, 0.0, 0.0, -0.5, 0.0), agent(1, 0.44, 0.0, 0.5, 0.0)];
    add("risk: receding pair closer than delta_min", true, risk(&close, 0, 3.0).is_some());
    let mut parked = head_on.clone();
    parked[1].mode = Mode::Finished;
    parked[1].velocity = Vec2::ZERO;
    add("risk: finished neighbor ignored", false, risk(&parked, 0, 3.0).is_some());
    let far = [agent(0, 0.0, 0.0, 1.0, 0.0), agent(1, 6.0, 0.0, -1.5, 0.0)];
    add("risk: neighbor beyond sensing radius", false, risk(&far, 0, 3.0).is_some());
    // Equal ttc 2 to agents 1 and 2; ties go to the lowest id.
    let tie = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 2.0, 0.0, -1.0, 0.0), agent(2, -2.0, 0.0, 1.0, 0.0)];
    add("risk: tie broken towards lowest id", risk(&tie, 0, 3.0) == Some((0, 1)), true);
    add("risk: loser of the tie does not fire", false, risk(&tie, 2, 3.0).is_some());

    // Gates of the union rule. Two stationary agents 1 m apart.
    let pair = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 1.0, 0.0, 0.0, 0.0)];
    let w2 = [still(), still()];
    let all = [true, true];
    add("gate: warm-up suppresses everything", true, flagged(&pair, &w2, None, &[None, None], &all, 19).is_empty());
    add("gate: after warm-up both stalled agents fire", flagged(&pair, &w2, None, &[None, None], &all, 20) == vec![0, 1], true);
    let near_goal = Some(vec![waypoints(&[(0.1, 0.0)], 100), waypoints(&[(9.0, 9.0)], 100)]);
    add("gate: agent within eps_goal is never flagged", flagged(&pair, &w2, near_goal, &[None, None], &all, 100) == vec![1], true);
    add("gate: cool-down at t + T_cool - 1", flagged(&pair, &w2, None, &[Some(100), None], &all, 149) == vec![1], true);
    add("gate: re-eligible at t + T_cool", flagged(&pair, &w2, None, &[Some(100), None], &all, 150) == vec![0, 1], true);
    add("gate: ineligible (locked) agent skipped", flagged(&pair, &w2, None, &[None, None], &[false, true], 100) == vec![1], true);

    // Participant closure.
    let wcfg = WorldConfig::default();
    let seed = |agent, kind, core_pair| TriggerEvent { agent, step: 100, kind, core_pair };
    let lone = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 1.0, 0.0, 1.0, 0.0)];
    let p = build_participants(&seed(0, TriggerKind::Wp, None), &lone, &[still(), window(&[1.0; 10], 1.0)], &[true; 2], &wcfg, &cfg);
    add("participants: isolated stalled agent", p.agents.iter().copied().eq([0]), true);
    let p = build_participants(&seed(0, TriggerKind::Risk, Some((0, 1))), &head_on, &[window(&[1.0; 10], 1.0), window(&[1.0; 10], 1.0)], &[true; 2], &wcfg, &cfg);
    add("participants: core pair included", p.agents.contains(&0) && p.agents.contains(&1), true);
    let crowd: Vec<AgentState> = (0..6).map(|i| agent(i, i as f64 * 0.6, 0.0, 0.0, 0.0)).collect();
    let fast = window(&[1.0; 10], 1.0);
    let ws = [still(), still(), fast.clone(), still(), fast, still()];
    let p = build_participants(&seed(0, TriggerKind::Spd, None), &crowd, &ws, &[true; 6], &wcfg, &cfg);
    add("participants: seed plus three slow of five sensed", p.agents.iter().copied().eq([0, 1, 3, 5]), true);
    add("participants: lock spans T_lock", p.lock_until == 100 + cfg.t_lock && p.is_locked_at(199) && !p.is_locked_at(200), true);
    v
}

pub fn value_snapshots() -> Vec<Value> {
    let e = DetectorConfig::default().eps;
    let inf = f64::INFINITY;
    let v2 = Vec2::new;
    let mut v = Vec::new();
    let mut add = |name, expected, actual| v.push(Value { name, expected, actual });
    add("ttc head-on from 2 m at 1 m/s", 2.0, ttc_pair(v2(2.0, 0.0), v2(-1.0, 0.0), e));
    add("ttc receding", inf, ttc_pair(v2(2.0, 0.0), v2(1.0, 0.0), e));
    add("ttc oblique, <r,u> = -2.5, |u|^2 = 1.25", 2.0, ttc_pair(v2(2.0, 1.0), v2(-1.0, -0.5), e));
    add("ttc zero relative velocity", inf, ttc_pair(v2(2.0, 0.0), Vec2::ZERO, e));
    add("ttc perpendicular motion", inf, ttc_pair(v2(2.0, 0.0), v2(0.0, 1.0), e));
    add("ttc below eps", inf, ttc_pair(v2(2.0, 0.0), v2(-1e-5, 0.0), e));
    add("ttc r = (1,1), u = (-1,0)", 1.0, ttc_pair(v2(1.0, 1.0), v2(-1.0, 0.0), e));
    add("dmin exact collision course", 0.0, dmin_pair(v2(2.0, 0.0), v2(-1.0, 0.0), 2.0));
    add("dmin receding is current distance", 2.0, dmin_pair(v2(2.0, 0.0), v2(1.0, 0.0), inf));
    add("dmin r = (3,1), u = (-1,0)", 1.0, dmin_pair(v2(3.0, 1.0), v2(-1.0, 0.0), 3.0));
    add("dmin r = (1,1), u = (-1,0)", 1.0, dmin_pair(v2(1.0, 1.0), v2(-1.0, 0.0), 1.0));
    // r = (3,-2), u = (-1.5,1): ttc = 6.5 / 3.25 = 2, r + 2u = 0.
    let (t, d) = pair_risk(&agent(0, 1.0, 1.0, 0.5, 0.0), &agent(1, 4.0, -1.0, -1.0, 1.0), e);
    add("pair_risk ttc from states", 2.0, t);
    add("pair_risk dmin from states", 0.0, d);
    let (t, d) = pair_risk(&agent(0, 0.0, 0.0, 0.0, 0.0), &agent(1, 3.0, 4.0, 0.0, 0.0), e);
    add("pair_risk static ttc", inf, t);
    add("pair_risk static dmin is 3-4-5 distance", 5.0, d);
    v
}
