//! Deadlock triggers over trailing kinematic windows, gating, and locked
//! participant sets.

use crate::geom::Vec2;
use crate::global::WaypointList;
use crate::policy::{dmin_pair, ttc_pair};
use crate::world::{neighbor_query, AgentId, AgentState, ConfigError, Mode, WorldConfig};
use std::collections::{BTreeSet, VecDeque};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub v_low: f64,
    /// Window length K in steps.
    pub window: usize,
    pub t_wp: usize,
    pub tau_ttc: f64,
    pub delta_min: f64,
    pub eps: f64,
    pub eps_goal: f64,
    pub t_warm: usize,
    pub t_cool: usize,
    pub t_lock: usize,
    /// Progress floor: a neighbor counts as not progressing when prog ≤ eps_p.
    pub eps_p: f64,
    /// Number of stalled neighbors required by the speed trigger.
    pub eps_n: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            v_low: 0.1,
            window: 10,
            t_wp: 60,
            tau_ttc: 3.0,
            delta_min: 0.45,
            eps: 1e-9,
            eps_goal: 0.3,
            t_warm: 20,
            t_cool: 50,
            t_lock: 100,
            eps_p: 0.0,
            eps_n: 1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = [self.v_low, self.tau_ttc, self.delta_min, self.eps, self.eps_goal];
        if pos.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(ConfigError::Detector("thresholds must be positive and finite"));
        }
        if self.window == 0 || self.t_lock == 0 || self.eps_n == 0 {
            return Err(ConfigError::Detector("window, t_lock and eps_n must be at least 1"));
        }
        if !(self.eps_p.is_finite() && self.eps_p >= 0.0) {
            return Err(ConfigError::Detector("eps_p must be non-negative"));
        }
        Ok(())
    }
}

/// Ring buffer of the last K speeds and progress values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressWindow {
    capacity: usize,
    speeds: VecDeque<f64>,
    progress: VecDeque<f64>,
}

impl ProgressWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        ProgressWindow {
            capacity,
            speeds: VecDeque::with_capacity(capacity),
            progress: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, speed: f64, progress: f64) {
        if self.speeds.len() == self.capacity {
            self.speeds.pop_front();
            self.progress.pop_front();
        }
        self.speeds.push_back(speed);
        self.progress.push_back(progress);
    }

    /// Records the sample for `state` heading towards `target`; progress is
    /// the velocity component along the unit direction to the target.
    pub fn observe(&mut self, state: &AgentState, target: Option<Vec2>) {
        let prog = target
            .and_then(|w| (w - state.position).normalized())
            .map(|d| state.velocity.dot(d))
            .unwrap_or(0.0);
        self.push(state.speed(), prog);
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn clear(&mut self) {
        self.speeds.clear();
        self.progress.clear();
    }

    /// Trailing mean speed s̄; `None` before the first sample.
    pub fn mean_speed(&self) -> Option<f64> {
        mean(&self.speeds)
    }

    /// Trailing mean progress; `None` before the first sample.
    pub fn mean_progress(&self) -> Option<f64> {
        mean(&self.progress)
    }

    /// Most recent progress sample.
    pub fn last_progress(&self) -> Option<f64> {
        self.progress.back().copied()
    }
}

fn mean(v: &VecDeque<f64>) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerKind {
    Spd,
    Wp,
    Risk,
}

impl TriggerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TriggerKind::Spd => "spd",
            TriggerKind::Wp => "wp",
            TriggerKind::Risk => "risk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerEvent {
    pub agent: AgentId,
    pub step: usize,
    pub kind: TriggerKind,
    /// Mutual most-at-risk pair, ordered (smaller id first); set for Risk.
    pub core_pair: Option<(AgentId, AgentId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantSet {
    pub agents: BTreeSet<AgentId>,
    pub created_step: usize,
    pub lock_until: usize,
}

impl ParticipantSet {
    pub fn is_locked_at(&self, step: usize) -> bool {
        step >= self.created_step && step < self.lock_until
    }
}

/// Speed/non-progress trigger: the ego is slow and at least `eps_n`
/// neighbors are slow and not progressing.
pub fn trigger_spd(ego: AgentId, neighbors: &[AgentId], windows: &[ProgressWindow], cfg: &DetectorConfig) -> bool {
    let slow = |id: AgentId| windows[id].mean_speed().is_some_and(|s| s < cfg.v_low);
    if !slow(ego) {
        return false;
    }
    let stalled = neighbors
        .iter()
        .filter(|&&j| slow(j) && windows[j].last_progress().is_some_and(|p| p <= cfg.eps_p))
        .count();
    stalled >= cfg.eps_n
}

/// Waypoint-stuck trigger: the active index has not advanced for `t_wp`
/// steps and the active waypoint is farther than `eps_goal`.
pub fn trigger_wp(wl: &WaypointList, pos: Vec2, step: usize, cfg: &DetectorConfig) -> bool {
    match wl.active() {
        Some(w) => step.saturating_sub(wl.last_advance_step) >= cfg.t_wp && pos.distance(w) > cfg.eps_goal,
        None => false,
    }
}

/// Pairwise closest-approach time and distance from `a` to `b`.
pub fn pair_risk(a: &AgentState, b: &AgentState, eps: f64) -> (f64, f64) {
    let r = b.position - a.position;
    let u = b.velocity - a.velocity;
    let ttc = ttc_pair(r, u, eps);
    (ttc, dmin_pair(r, u, ttc))
}

fn risk_candidates<'a>(ego: &AgentState, agents: &'a [AgentState], wcfg: &WorldConfig) -> Vec<&'a AgentState> {
    neighbor_query(ego, agents, wcfg)
        .into_iter()
        .filter(|n| n.mode != Mode::Finished)
        .collect()
}

/// `b(i)`: the sensed, unfinished neighbor with the smallest ttc (lowest id
/// on ties), together with that ttc and dmin.
pub fn most_at_risk(ego: &AgentState, agents: &[AgentState], wcfg: &WorldConfig, cfg: &DetectorConfig) -> Option<(AgentId, f64, f64)> {
    risk_candidates(ego, agents, wcfg)
        .into_iter()
        .map(|n| {
            let (t, d) = pair_risk(ego, n, cfg.eps);
            (n.id, t, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Core-pair risk trigger; returns the pair (smaller id first) when the ego
/// and its most-at-risk neighbor choose each other and the encounter is
/// imminent (`ttc < tau_ttc` or `dmin < delta_min`). `agents` is indexed by id.
pub fn trigger_risk(ego: &AgentState, agents: &[AgentState], wcfg: &WorldConfig, cfg: &DetectorConfig) -> Option<(AgentId, AgentId)> {
    let (j, ttc, dmin) = most_at_risk(ego, agents, wcfg, cfg)?;
    let (back, _, _) = most_at_risk(&agents[j], agents, wcfg, cfg)?;
    if back != ego.id || !(ttc < cfg.tau_ttc || dmin < cfg.delta_min) {
        return None;
    }
    Some((ego.id.min(j), ego.id.max(j)))
}

/// Inputs to [`detect`] for one step. All slices are indexed by agent id.
pub struct DetectorInput<'a> {
    pub agents: &'a [AgentState],
    pub windows: &'a [ProgressWindow],
    /// Current reference list per agent (global or dense).
    pub waypoints: &'a [WaypointList],
    pub last_trigger: &'a [Option<usize>],
    /// Agents that may be flagged this step (not locked, not coordinated).
    pub eligible: &'a [bool],
    pub step: usize,
}

/// Evaluates all triggers for gate-passing agents, collapsing multiple kinds
/// per agent to one event with preference Risk > Wp > Spd. Events are in
/// ascending agent id.
pub fn detect(input: &DetectorInput, wcfg: &WorldConfig, cfg: &DetectorConfig) -> Vec<TriggerEvent> {
    let mut out = Vec::new();
    if input.step < cfg.t_warm {
        return out;
    }
    for ego in input.agents {
        let i = ego.id;
        if ego.mode == Mode::Finished || !input.eligible[i] {
            continue;
        }
        if input.last_trigger[i].is_some_and(|t| input.step < t + cfg.t_cool) {
            continue;
        }
        let wl = &input.waypoints[i];
        match wl.active() {
            Some(w) if ego.position.distance(w) > cfg.eps_goal => {}
            _ => continue,
        }
        if let Some(pair) = trigger_risk(ego, input.agents, wcfg, cfg) {
            out.push(TriggerEvent { agent: i, step: input.step, kind: TriggerKind::Risk, core_pair: Some(pair) });
            continue;
        }
        if trigger_wp(wl, ego.position, input.step, cfg) {
            out.push(TriggerEvent { agent: i, step: input.step, kind: TriggerKind::Wp, core_pair: None });
            continue;
        }
        let nbs: Vec<AgentId> = neighbor_query(ego, input.agents, wcfg)
            .into_iter()
            .filter(|n| n.mode != Mode::Finished)
            .map(|n| n.id)
            .collect();
        if trigger_spd(i, &nbs, input.windows, cfg) {
            out.push(TriggerEvent { agent: i, step: input.step, kind: TriggerKind::Spd, core_pair: None });
        }
    }
    out
}

/// Seed, core pair, and the sensed neighbors of the seed whose trailing
/// speed is below `v_low`. Finished agents and agents marked unavailable
/// (already locked) are left out.
pub fn build_participants(
    seed: &TriggerEvent,
    agents: &[AgentState],
    windows: &[ProgressWindow],
    available: &[bool],
    wcfg: &WorldConfig,
    cfg: &DetectorConfig,
) -> ParticipantSet {
    let usable = |id: AgentId| agents[id].mode != Mode::Finished && available[id];
    let mut set = BTreeSet::new();
    set.insert(seed.agent);
    if let Some((a, b)) = seed.core_pair {
        set.extend([a, b].into_iter().filter(|&x| usable(x)));
    }
    for n in neighbor_query(&agents[seed.agent], agents, wcfg) {
        if usable(n.id) && windows[n.id].mean_speed().is_some_and(|s| s < cfg.v_low) {
            set.insert(n.id);
        }
    }
    ParticipantSet {
        agents: set,
        created_step: seed.step,
        lock_until: seed.step + cfg.t_lock,
    }
}

/// Per-agent lock expiry; guarantees that no agent is in two live sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LockTable {
    until: Vec<usize>,
}

impl LockTable {
    pub fn new(n: usize) -> Self {
        LockTable { until: vec![0; n] }
    }

    pub fn is_locked(&self, id: AgentId, step: usize) -> bool {
        step < self.until[id]
    }

    /// Locks every member; fails without side effects if any is locked.
    pub fn try_lock(&mut self, set: &ParticipantSet) -> bool {
        if set.agents.iter().any(|&a| self.is_locked(a, set.created_step)) {
            return false;
        }
        for &a in &set.agents {
            self.until[a] = set.lock_until;
        }
        true
    }

    pub fn release(&mut self, id: AgentId) {
        self.until[id] = 0;
    }
}
