//! Per-step orchestration: local policy for every agent, deadlock detection,
//! local MAPF on triggers, dense tracking and handover back to the global
//! waypoints.

use crate::detector::{build_participants, detect, DetectorInput, LockTable, ParticipantSet, ProgressWindow, TriggerKind};
use crate::geom::{Rect, Vec2};
use crate::global::{plan_astar, resample_waypoints, PlanError, WaypointKind, WaypointList};
use crate::grid::{Cell, Grid};
use crate::mapf::{
    build_instance, crop_subgrid, plan_to_dense, pnr_solve_with, verify_plan, DenseSchedule, MapfError, SolverOptions,
};
use crate::policy::{build_observation, LocalPolicy, PolicyConfig, ReciprocalPolicy};
use crate::scenario::{Scenario, ScenarioError};
use crate::world::{collision_check, neighbor_query, step_kinematics, AgentId, AgentState, CollisionEvent, Mode, ObstacleMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Tolerance of the desired-velocity rule while heading for a dense point.
const DENSE_APPROACH_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Local policy only; detector and solver are off.
    BaseOnly,
    /// Local policy with deadlock detection and local MAPF.
    Hybrid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BaseOnly => "BaseOnly",
            Method::Hybrid => "Hybrid",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "baseonly" | "base" => Ok(Method::BaseOnly),
            "hybrid" => Ok(Method::Hybrid),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    pub method: Method,
    /// With `Hybrid`, whether the detector may fire at all.
    pub detector_enabled: bool,
    pub record_trajectory: bool,
    /// Evaluate solver invariants on every primitive (slow).
    pub check_invariants: bool,
}

impl ExecOptions {
    pub fn new(method: Method) -> Self {
        ExecOptions { method, detector_enabled: true, record_trajectory: false, check_invariants: false }
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("no global path for agent {agent}: {source}")]
    GlobalPlan { agent: AgentId, source: PlanError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Timeout,
    Collision,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "Success",
            Outcome::Timeout => "Timeout",
            Outcome::Collision => "Collision",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Trigger { agent: AgentId, kind: TriggerKind, core_pair: Option<(AgentId, AgentId)> },
    /// A trigger that did not get a solve this step.
    Suppressed { agent: AgentId },
    SolveOk { plan: usize, agents: Vec<AgentId>, primitives: usize, horizon: usize, margin: f64, bound: usize },
    SolveFailed { agents: Vec<AgentId>, reason: String },
    ModeChange { agent: AgentId, from: Mode, to: Mode },
    Collision(CollisionEvent),
    /// A participant's global index advanced `steps` after plan installation.
    Cleared { plan: usize, agent: AgentId, steps: usize, bound: usize },
    /// A plan dropped because no member advanced a dense point for `t_wp`
    /// steps, or still running after twice its clearance bound.
    PlanAborted { plan: usize },
    /// A running plan whose agents joined a new solve.
    PlanMerged { plan: usize, into: usize },
    Coordinated { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
}

fn ids(v: &[AgentId]) -> String {
    v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} ", self.step)?;
        match &self.kind {
            EventKind::Trigger { agent, kind, core_pair } => {
                write!(f, "trigger agent={agent} kind={}", kind.as_str())?;
                if let Some((a, b)) = core_pair {
                    write!(f, " pair={a},{b}")?;
                }
                Ok(())
            }
            EventKind::Suppressed { agent } => write!(f, "suppressed agent={agent}"),
            EventKind::SolveOk { plan, agents, primitives, horizon, margin, bound } => write!(
                f,
                "solve ok plan={plan} agents={} primitives={primitives} horizon={horizon} margin={margin} bound={bound}",
                ids(agents)
            ),
            EventKind::SolveFailed { agents, reason } => write!(f, "solve failed agents={} reason={reason}", ids(agents)),
            EventKind::ModeChange { agent, from, to } => {
                write!(f, "mode agent={agent} from={} to={}", from.as_str(), to.as_str())
            }
            EventKind::Collision(CollisionEvent::Pair(a, b)) => write!(f, "collision pair={a},{b}"),
            EventKind::Collision(CollisionEvent::Obstacle(a)) => write!(f, "collision obstacle={a}"),
            EventKind::Cleared { plan, agent, steps, bound } => {
                write!(f, "cleared plan={plan} agent={agent} steps={steps} bound={bound}")
            }
            EventKind::PlanAborted { plan } => write!(f, "aborted plan={plan}"),
            EventKind::PlanMerged { plan, into } => write!(f, "merged plan={plan} into={into}"),
            EventKind::Coordinated { count } => write!(f, "coordinated count={count}"),
        }
    }
}

/// Ordered episode events plus the coordinated-agent count of every step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub coordinated: Vec<usize>,
}

impl EventLog {
    fn push(&mut self, step: usize, kind: EventKind) {
        self.events.push(Event { step, kind });
    }

    /// One line per event.
    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn count(&self, pred: impl Fn(&EventKind) -> bool) -> usize {
        self.events.iter().filter(|e| pred(&e.kind)).count()
    }
}

/// Clearance measurement of one participant of one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceRecord {
    pub plan: usize,
    pub agent: AgentId,
    pub install_step: usize,
    pub bound: usize,
    pub global_index: usize,
    /// Steps after installation at which the global index advanced.
    pub advanced_after: Option<usize>,
    /// Step at which a merged re-solve replaced the plan before clearance.
    pub superseded_at: Option<usize>,
}

impl ClearanceRecord {
    /// `Some(true)` cleared within the bound, `Some(false)` missed it,
    /// `None` the episode ended, or the plan was superseded, before the
    /// bound elapsed.
    pub fn within_bound(&self, episode_end: usize) -> Option<bool> {
        let end = self.superseded_at.unwrap_or(episode_end);
        match self.advanced_after {
            Some(s) => Some(s <= self.bound),
            None if end - self.install_step > self.bound => Some(false),
            None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub agent: AgentId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub mode: Mode,
    pub target: Option<Vec2>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

/// Dense list of a coordinated agent.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrack {
    pub plan: usize,
    pub local: usize,
    pub list: WaypointList,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentController {
    pub global: WaypointList,
    pub dense: Option<DenseTrack>,
    pub goal: Vec2,
    /// Speed bound passed to the policy.
    pub speed_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct ActivePlan {
    agents: Vec<AgentId>,
    schedule: DenseSchedule,
    installed: usize,
    bound: usize,
    /// Last step at which a member advanced a dense point.
    progressed: usize,
    done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    /// Step at which the episode ended.
    pub steps: usize,
    pub log: EventLog,
    pub clearance: Vec<ClearanceRecord>,
    pub triggers: usize,
    pub solves_ok: usize,
    pub solves_failed: usize,
    /// Sum over steps of the number of coordinated agents.
    pub coordinated_steps: usize,
    pub collisions: usize,
    pub trajectory: Option<Trajectory>,
    pub final_states: Vec<AgentState>,
}

/// Builds the global waypoint list from `start` to `goal` on `grid`.
pub fn global_waypoints(
    grid: &Grid,
    start: Vec2,
    goal: Vec2,
    spacing: f64,
    reach: f64,
    goal_tolerance: f64,
) -> Result<WaypointList, PlanError> {
    let cell = |p: Vec2| -> Result<Cell, PlanError> {
        grid.world_to_cell(p)
            .filter(|&c| grid.is_free(c))
            .or_else(|| grid.nearest_free_cell(p))
            .ok_or(PlanError::NoPath)
    };
    let path = plan_astar(grid, cell(start)?, cell(goal)?)?;
    let mut wl = resample_waypoints(grid, &path, spacing, reach).with_final_threshold(goal_tolerance);
    *wl.points.last_mut().expect("non-empty waypoint list") = goal;
    Ok(wl)
}

/// Start positions with seeded per-axis jitter of at most `scenario.jitter`;
/// a jittered start that is blocked or overlaps another start keeps its
/// nominal position.
pub fn jittered_starts(scenario: &Scenario, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = scenario.jitter;
    let r = scenario.world.agent_radius;
    let mut out: Vec<Vec2> = Vec::with_capacity(scenario.n_agents());
    for &s in &scenario.starts {
        let d = if j > 0.0 { Vec2::new(rng.gen_range(-j..=j), rng.gen_range(-j..=j)) } else { Vec2::ZERO };
        let p = s + d;
        let ok = scenario.map.disc_free(p, r) && out.iter().all(|q| q.distance(p) > 2.0 * r);
        out.push(if ok { p } else { s });
    }
    out
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    opts: ExecOptions,
    policy: ReciprocalPolicy,
    pub agents: Vec<AgentState>,
    pub controllers: Vec<AgentController>,
    windows: Vec<ProgressWindow>,
    last_trigger: Vec<Option<usize>>,
    locks: LockTable,
    plans: Vec<ActivePlan>,
    pub step: usize,
    pub log: EventLog,
    pub clearance: Vec<ClearanceRecord>,
    trajectory: Option<Trajectory>,
    prev_collisions: BTreeSet<CollisionEvent>,
    collided: bool,
    collisions: usize,
    last_count: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, starts: &[Vec2], opts: ExecOptions) -> Result<Self, ExecError> {
        scenario.validate()?;
        let n = scenario.n_agents();
        let w = &scenario.world;
        let grid = scenario.map.occupancy(w.agent_radius);
        let mut controllers = Vec::with_capacity(n);
        for (i, (&s, &g)) in starts.iter().zip(&scenario.goals).enumerate() {
            let gl = &scenario.global;
            let global = global_waypoints(&grid, s, g, gl.spacing, gl.reach_threshold, scenario.policy.goal_tolerance)
                .map_err(|source| ExecError::GlobalPlan { agent: i, source })?;
            controllers.push(AgentController { global, dense: None, goal: g, speed_cap: w.v_max });
        }
        let agents = starts.iter().enumerate().map(|(i, &p)| AgentState::new(i, p, w.agent_radius)).collect();
        Ok(Simulation {
            scenario,
            policy: ReciprocalPolicy::new(&scenario.policy, w),
            agents,
            controllers,
            windows: vec![ProgressWindow::new(scenario.detector.window); n],
            last_trigger: vec![None; n],
            locks: LockTable::new(n),
            plans: Vec::new(),
            step: 0,
            log: EventLog::default(),
            clearance: Vec::new(),
            trajectory: opts.record_trajectory.then(Trajectory::default),
            prev_collisions: BTreeSet::new(),
            collided: false,
            collisions: 0,
            last_count: 0,
            opts,
        })
    }

    /// Points reached so far by each participant of plan `k`.
    fn plan_reached(&self, k: usize) -> Vec<usize> {
        let plan = &self.plans[k];
        plan.agents
            .iter()
            .enumerate()
            .map(|(local, &a)| match &self.controllers[a].dense {
                Some(d) if d.plan == k => d.list.active_index,
                _ => plan.schedule.points[local].len(),
            })
            .collect()
    }

    /// Target, speed bound and approach tolerance for agent `i`.
    pub fn target_of(&self, i: AgentId) -> (Option<Vec2>, f64, f64) {
        let ctrl = &self.controllers[i];
        if self.agents[i].mode == Mode::Finished {
            return (None, 0.0, 0.0);
        }
        if let Some(d) = &ctrl.dense {
            let plan = &self.plans[d.plan];
            let idx = d.list.active_index;
            if idx < d.list.len() {
                let reached = self.plan_reached(d.plan);
                if plan.schedule.may_enter(d.local, idx, &reached) {
                    return (Some(d.list.points[idx]), ctrl.speed_cap, DENSE_APPROACH_TOLERANCE);
                }
                let hold = 0.25 * self.scenario.solver.cell_size;
                return (Some(d.list.points[idx - 1]), ctrl.speed_cap, hold);
            }
        }
        let t = ctrl.global.active().unwrap_or(ctrl.goal);
        (Some(t), ctrl.speed_cap, self.scenario.policy.goal_tolerance)
    }

    fn hybrid_active(&self) -> bool {
        self.opts.method == Method::Hybrid && self.opts.detector_enabled
    }

    pub fn all_finished(&self) -> bool {
        self.agents.iter().all(|a| a.mode == Mode::Finished)
    }

    fn set_mode(&mut self, i: AgentId, to: Mode) {
        let from = self.agents[i].mode;
        if from != to {
            self.agents[i].mode = to;
            self.log.push(self.step, EventKind::ModeChange { agent: i, from, to });
        }
    }

    /// Advances the world by one step.
    pub fn step_once(&mut self) {
        let sc = self.scenario;
        let w = &sc.world;
        let n = self.agents.len();
        // (1) targets
        let targets: Vec<(Option<Vec2>, f64, f64)> = (0..n).map(|i| self.target_of(i)).collect();
        // (2) policy
        let agents = &self.agents;
        let policy = &self.policy;
        let dvs: Vec<Option<Vec2>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let ego = &agents[i];
                if ego.mode == Mode::Finished {
                    return None;
                }
                let (target, max_speed, tol) = targets[i];
                let pcfg = PolicyConfig { goal_tolerance: tol, ..sc.policy.clone() };
                let nbs = neighbor_query(ego, agents, w);
                let obs = build_observation(ego, &nbs, target, max_speed, Some(&sc.map), w, &pcfg);
                Some(policy.act(&obs).dv)
            })
            .collect();
        // (3) kinematics
        for (i, dv) in dvs.iter().enumerate() {
            if let Some(dv) = dv {
                self.agents[i] = step_kinematics(&self.agents[i], *dv, w);
            }
        }
        self.step += 1;
        let now = self.step;
        // (4) waypoint managers
        self.advance_waypoints(now);
        for i in 0..n {
            let a = &self.agents[i];
            if a.mode == Mode::Default && a.position.distance(self.controllers[i].goal) <= sc.policy.goal_tolerance {
                self.agents[i].velocity = Vec2::ZERO;
                let g = &mut self.controllers[i].global;
                g.active_index = g.len();
                self.set_mode(i, Mode::Finished);
            }
        }
        self.track_clearance(now);
        let hits: BTreeSet<CollisionEvent> = collision_check(&self.agents, &sc.map).into_iter().collect();
        for &c in hits.difference(&self.prev_collisions) {
            self.collisions += 1;
            self.log.push(now, EventKind::Collision(c));
        }
        self.collided |= !hits.is_empty();
        self.prev_collisions = hits;
        // (5) detector
        for i in 0..n {
            self.windows[i].observe(&self.agents[i], targets[i].0);
        }
        if self.hybrid_active() {
            self.detect_and_solve(now);
        }
        // (7) handover
        self.handover(now);
        let count = self.agents.iter().filter(|a| a.mode == Mode::Coordinated).count();
        self.log.coordinated.push(count);
        if count != self.last_count {
            self.log.push(now, EventKind::Coordinated { count });
            self.last_count = count;
        }
        if let Some(tr) = &mut self.trajectory {
            for (i, a) in self.agents.iter().enumerate() {
                tr.records.push(TrajectoryRecord {
                    step: now,
                    agent: i,
                    position: a.position,
                    velocity: a.velocity,
                    mode: a.mode,
                    target: targets[i].0,
                });
            }
        }
    }

    fn advance_waypoints(&mut self, now: usize) {
        let n = self.agents.len();
        let parked: Vec<(Vec2, f64)> = self
            .agents
            .iter()
            .filter(|a| a.mode == Mode::Finished)
            .map(|a| (a.position, a.radius))
            .collect();
        for i in 0..n {
            if self.agents[i].mode != Mode::Finished {
                let p = self.agents[i].position;
                let r = self.agents[i].radius;
                let g = &mut self.controllers[i].global;
                g.advance(p, now);
                // An intermediate waypoint under a parked agent is unreachable.
                while g.active_index + 1 < g.len() {
                    let w = g.points[g.active_index];
                    if !parked.iter().any(|&(q, rq)| q.distance(w) < r + rq) {
                        break;
                    }
                    g.active_index += 1;
                    g.last_advance_step = now;
                }
            }
        }
        for k in 0..self.plans.len() {
            if self.plans[k].done {
                continue;
            }
            let reached = self.plan_reached(k);
            let mut progressed = false;
            for (local, &a) in self.plans[k].agents.iter().enumerate() {
                let p = self.agents[a].position;
                let sched = &self.plans[k].schedule;
                if let Some(d) = &mut self.controllers[a].dense {
                    let idx = d.list.active_index;
                    if d.plan == k && idx < d.list.len() && sched.may_enter(local, idx, &reached) {
                        progressed |= d.list.advance(p, now);
                    }
                }
            }
            if progressed {
                self.plans[k].progressed = now;
            }
        }
    }

    fn track_clearance(&mut self, now: usize) {
        for rec in self.clearance.iter_mut().filter(|r| r.advanced_after.is_none() && r.superseded_at.is_none()) {
            let a = rec.agent;
            if self.controllers[a].global.active_index > rec.global_index || self.agents[a].mode == Mode::Finished {
                let steps = now - rec.install_step;
                rec.advanced_after = Some(steps);
                self.log.events.push(Event {
                    step: now,
                    kind: EventKind::Cleared { plan: rec.plan, agent: a, steps, bound: rec.bound },
                });
            }
        }
    }

    fn handover(&mut self, now: usize) {
        for k in 0..self.plans.len() {
            if self.plans[k].done {
                continue;
            }
            let plan = &self.plans[k];
            let stalled = now - plan.progressed > self.scenario.detector.t_wp;
            let abort = stalled || now - plan.installed > 2 * plan.bound;
            if abort {
                self.log.push(now, EventKind::PlanAborted { plan: k });
            }
            let mut all_done = true;
            for a in self.plans[k].agents.clone() {
                let exhausted = match &self.controllers[a].dense {
                    Some(d) if d.plan == k => abort || d.list.is_exhausted(),
                    _ => continue,
                };
                if exhausted {
                    if abort {
                        self.locks.release(a);
                    }
                    self.controllers[a].dense = None;
                    self.controllers[a].speed_cap = self.scenario.world.v_max;
                    self.set_mode(a, Mode::Default);
                } else {
                    all_done = false;
                }
            }
            self.plans[k].done = all_done;
        }
    }

    fn detect_and_solve(&mut self, now: usize) {
        let sc = self.scenario;
        let n = self.agents.len();
        let eligible: Vec<bool> =
            (0..n).map(|i| self.agents[i].mode == Mode::Default && !self.locks.is_locked(i, now)).collect();
        let globals: Vec<WaypointList> = self.controllers.iter().map(|c| c.global.clone()).collect();
        let input = DetectorInput {
            agents: &self.agents,
            windows: &self.windows,
            waypoints: &globals,
            last_trigger: &self.last_trigger,
            eligible: &eligible,
            step: now,
        };
        let events = detect(&input, &sc.world, &sc.detector);
        for ev in &events {
            self.last_trigger[ev.agent] = Some(now);
            self.log.push(now, EventKind::Trigger { agent: ev.agent, kind: ev.kind, core_pair: ev.core_pair });
        }
        let mut attempted = false;
        for ev in &events {
            let available: Vec<bool> =
                (0..n).map(|i| self.agents[i].mode == Mode::Default && !self.locks.is_locked(i, now)).collect();
            if attempted || !available[ev.agent] {
                self.log.push(now, EventKind::Suppressed { agent: ev.agent });
                continue;
            }
            let set = build_participants(ev, &self.agents, &self.windows, &available, &sc.world, &sc.detector);
            if !self.locks.try_lock(&set) {
                self.log.push(now, EventKind::Suppressed { agent: ev.agent });
                continue;
            }
            attempted = true;
            let fresh: Vec<AgentId> = set.agents.iter().copied().collect();
            let (merged, joint) = self.merge_overlapping(&set);
            let agents: Vec<AgentId> = joint.agents.iter().copied().collect();
            match self.solve(&joint) {
                Ok((schedule, primitives, horizon, margin)) => {
                    let into = self.plans.len();
                    for k in merged {
                        self.supersede(now, k, into);
                    }
                    self.install(now, agents, schedule, primitives, horizon, margin)
                }
                Err(e) => {
                    for &a in &fresh {
                        self.locks.release(a);
                    }
                    self.log.push(now, EventKind::SolveFailed { agents, reason: e.to_string() });
                }
            }
        }
    }

    /// Running plans with an agent inside the crop box of `set`, closed
    /// transitively, and `set` extended by their agents. Concurrent plans on
    /// overlapping crops would ignore each other's agents.
    fn merge_overlapping(&self, set: &ParticipantSet) -> (Vec<usize>, ParticipantSet) {
        let margin = self.scenario.solver.margin;
        let mut joint = set.clone();
        let mut merged: Vec<usize> = Vec::new();
        loop {
            let pts: Vec<Vec2> = joint.agents.iter().map(|&a| self.agents[a].position).collect();
            let lo = pts.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
            let hi = pts.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
            let inside = |p: Vec2| p.x >= lo.x - margin && p.x <= hi.x + margin && p.y >= lo.y - margin && p.y <= hi.y + margin;
            let hit: Vec<usize> = (0..self.plans.len())
                .filter(|&k| !self.plans[k].done && !merged.contains(&k))
                .filter(|&k| self.plan_members(k).any(|a| inside(self.agents[a].position)))
                .collect();
            if hit.is_empty() {
                break;
            }
            for k in hit {
                joint.agents.extend(self.plan_members(k));
                merged.push(k);
            }
        }
        merged.sort_unstable();
        (merged, joint)
    }

    /// Agents still tracking plan `k`.
    fn plan_members(&self, k: usize) -> impl Iterator<Item = AgentId> + '_ {
        self.plans[k]
            .agents
            .iter()
            .copied()
            .filter(move |&a| matches!(&self.controllers[a].dense, Some(d) if d.plan == k))
    }

    fn supersede(&mut self, now: usize, k: usize, into: usize) {
        self.log.push(now, EventKind::PlanMerged { plan: k, into });
        for rec in self.clearance.iter_mut().filter(|r| r.plan == k && r.advanced_after.is_none()) {
            rec.superseded_at = Some(now);
        }
        for a in self.plan_members(k).collect::<Vec<_>>() {
            self.controllers[a].dense = None;
        }
        self.plans[k].done = true;
    }

    /// Crop, instance, solve and verify; widens the crop once on failure.
    fn solve(&self, set: &ParticipantSet) -> Result<(DenseSchedule, usize, usize, f64), MapfError> {
        let sc = self.scenario;
        let ids: Vec<AgentId> = set.agents.iter().copied().collect();
        let positions: Vec<Vec2> = ids.iter().map(|&a| self.agents[a].position).collect();
        let waypoints: Vec<Vec2> =
            ids.iter().map(|&a| self.controllers[a].global.active().unwrap_or(self.controllers[a].goal)).collect();
        let r = sc.world.agent_radius;
        let mut obstacles = sc.map.obstacles.clone();
        for a in self.agents.iter().filter(|a| a.mode == Mode::Finished) {
            obstacles.push(Rect::new(a.position.x - r, a.position.y - r, a.position.x + r, a.position.y + r));
        }
        let map = ObstacleMap::new(sc.map.bounds, obstacles).with_resolution(sc.map.resolution);
        let opts = SolverOptions { exchange_budget: sc.solver.exchange_budget, check_invariants: self.opts.check_invariants };
        let mut margins = vec![sc.solver.margin];
        if sc.solver.widen_on_failure {
            margins.push(2.0 * sc.solver.margin);
        }
        let mut last = MapfError::Unsolvable;
        for margin in margins {
            let sub = crop_subgrid(&map, &positions, margin, sc.solver.cell_size, r);
            let attempt = build_instance(&sub, &ids, &positions, &waypoints).and_then(|li| {
                let (plan, stats) = pnr_solve_with(&li.instance, &opts)?;
                verify_plan(&li.instance, &plan).map_err(|v| MapfError::InvalidInstance(format!("plan check: {v}")))?;
                let centers: Vec<Vec2> = (0..li.subgrid.len()).map(|v| li.subgrid.center(v)).collect();
                Ok((plan_to_dense(&plan, &centers), stats.primitives, plan.horizon()))
            });
            match attempt {
                Ok((dense, prims, horizon)) => return Ok((dense, prims, horizon, margin)),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Clearance bound: dense length × ceil(h_g·√2 / (cap·Δt)) × 3, with the
    /// plan makespan + 1 as the dense length (it bounds every participant's
    /// list and every precedence chain).
    pub fn clearance_bound(&self, horizon: usize) -> usize {
        let sc = self.scenario;
        let cap = sc.solver.speed_cap(&sc.world);
        let per_cell = (sc.solver.cell_size * std::f64::consts::SQRT_2 / (cap * sc.world.dt)).ceil() as usize;
        (horizon + 1) * per_cell * 3
    }

    fn install(&mut self, now: usize, agents: Vec<AgentId>, schedule: DenseSchedule, primitives: usize, horizon: usize, margin: f64) {
        let plan = self.plans.len();
        let bound = self.clearance_bound(horizon);
        self.log.push(now, EventKind::SolveOk { plan, agents: agents.clone(), primitives, horizon, margin, bound });
        let cap = self.scenario.solver.speed_cap(&self.scenario.world);
        let reach = self.scenario.solver.dense_reach();
        for (local, &a) in agents.iter().enumerate() {
            let mut list = WaypointList::new(schedule.points[local].clone(), reach, WaypointKind::MapfDense);
            list.last_advance_step = now;
            self.controllers[a].dense = Some(DenseTrack { plan, local, list });
            self.controllers[a].speed_cap = cap;
            self.set_mode(a, Mode::Coordinated);
            self.clearance.push(ClearanceRecord {
                plan,
                agent: a,
                install_step: now,
                bound,
                global_index: self.controllers[a].global.active_index,
                advanced_after: None,
                superseded_at: None,
            });
        }
        self.plans.push(ActivePlan { agents, schedule, installed: now, bound, progressed: now, done: false });
    }

    /// Runs until every agent finished or `t_max` steps elapsed.
    pub fn run(mut self, t_max: usize) -> EpisodeResult {
        while self.step < t_max && !self.all_finished() {
            self.step_once();
        }
        let outcome = if self.collided {
            Outcome::Collision
        } else if self.all_finished() {
            Outcome::Success
        } else {
            Outcome::Timeout
        };
        let log = self.log;
        EpisodeResult {
            outcome,
            steps: self.step,
            triggers: log.count(|k| matches!(k, EventKind::Trigger { .. })),
            solves_ok: log.count(|k| matches!(k, EventKind::SolveOk { .. })),
            solves_failed: log.count(|k| matches!(k, EventKind::SolveFailed { .. })),
            coordinated_steps: log.coordinated.iter().sum(),
            collisions: self.collisions,
            log,
            clearance: self.clearance,
            trajectory: self.trajectory,
            final_states: self.agents,
        }
    }
}

/// One episode of `scenario` with seeded start jitter.
pub fn run_episode(scenario: &Scenario, opts: &ExecOptions, seed: u64, t_max: usize) -> Result<EpisodeResult, ExecError> {
    let starts = jittered_starts(scenario, seed);
    Ok(Simulation::new(scenario, &starts, opts.clone())?.run(t_max))
}

impl Trajectory {
    /// Per-step rows `step,agent,x,y,vx,vy,mode,tx,ty`; events are
    /// interleaved as `# ` lines after the rows of their step.
    pub fn to_text(&self, log: &EventLog) -> String {
        let mut out = String::from("step,agent,x,y,vx,vy,mode,tx,ty\n");
        let mut ev = log.events.iter().peekable();
        let mut i = 0;
        let recs = &self.records;
        while i < recs.len() {
            let step = recs[i].step;
            while ev.peek().is_some_and(|e| e.step < step) {
                out.push_str(&format!("# {}\n", ev.next().unwrap()));
            }
            while i < recs.len() && recs[i].step == step {
                let r = &recs[i];
                let (tx, ty) = r.target.map_or((String::new(), String::new()), |t| (format!("{:.6}", t.x), format!("{:.6}", t.y)));
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}\n",
                    r.step,
                    r.agent,
                    r.position.x,
                    r.position.y,
                    r.velocity.x,
                    r.velocity.y,
                    r.mode.as_str(),
                    tx,
                    ty
                ));
                i += 1;
            }
            while ev.peek().is_some_and(|e| e.step == step) {
                out.push_str(&format!("# {}\n", ev.next().unwrap()));
            }
        }
        for e in ev {
            out.push_str(&format!("# {e}\n"));
        }
        out
    }
}
