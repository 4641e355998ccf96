//! Discrete-time world: disc agents, static rectangular obstacles, kinematic
//! integration, collision checking and neighbor queries.

use crate::geom::{wrap_angle, Rect, Vec2};
use crate::grid::Grid;
use thiserror::Error;
use serde::{Deserialize, Serialize};

pub type AgentId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid world config: {0}")]
    World(&'static str),
    #[error("invalid detector config: {0}")]
    Detector(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Speed bound (m/s).
    pub v_max: f64,
    pub agent_radius: f64,
    /// Neighbor sensing range R (m).
    pub sense_radius: f64,
    pub neighbor_cap: usize,
    /// Gain applied to the velocity increment before clipping.
    pub control_gain: f64,
    /// Proportional gain of the heading-alignment controller (1/s).
    pub heading_gain: f64,
    /// Angular-rate cap of the heading-alignment controller (rad/s).
    pub max_turn_rate: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            dt: 0.1,
            v_max: 1.5,
            agent_radius: 0.2,
            sense_radius: 5.0,
            neighbor_cap: 10,
            control_gain: 1.0,
            heading_gain: 4.0,
            max_turn_rate: std::f64::consts::TAU,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError::World("dt must be positive"));
        }
        if !(self.v_max > 0.0) {
            return Err(ConfigError::World("v_max must be positive"));
        }
        if !(self.agent_radius > 0.0) {
            return Err(ConfigError::World("agent_radius must be positive"));
        }
        if !(self.sense_radius > self.agent_radius) {
            return Err(ConfigError::World("sense_radius must exceed agent_radius"));
        }
        if self.neighbor_cap < 1 {
            return Err(ConfigError::World("neighbor_cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Default,
    Coordinated,
    Finished,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Default => "default",
            Mode::Coordinated => "coordinated",
            Mode::Finished => "finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Heading in (-pi, pi].
    pub heading: f64,
    pub radius: f64,
    pub mode: Mode,
}

impl AgentState {
    pub fn new(id: AgentId, position: Vec2, radius: f64) -> Self {
        AgentState {
            id,
            position,
            velocity: Vec2::ZERO,
            heading: 0.0,
            radius,
            mode: Mode::Default,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Workspace bounds plus static axis-aligned rectangular obstacles. The
/// workspace boundary is treated as a wall.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    pub bounds: Rect,
    pub obstacles: Vec<Rect>,
    /// Resolution of the derived occupancy grid (m).
    pub resolution: f64,
}

impl ObstacleMap {
    pub fn new(bounds: Rect, obstacles: Vec<Rect>) -> Self {
        ObstacleMap {
            bounds,
            obstacles,
            resolution: 0.25,
        }
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    /// Distance from `p` to the nearest obstacle or workspace wall; negative
    /// when `p` lies inside an obstacle or outside the workspace.
    pub fn clearance(&self, p: Vec2) -> f64 {
        let b = &self.bounds;
        let mut c = (p.x - b.min.x)
            .min(b.max.x - p.x)
            .min(p.y - b.min.y)
            .min(b.max.y - p.y);
        for o in &self.obstacles {
            if o.contains(p) {
                let inside = (p.x - o.min.x)
                    .min(o.max.x - p.x)
                    .min(p.y - o.min.y)
                    .min(o.max.y - p.y);
                c = c.min(-inside);
            } else {
                c = c.min(o.distance_to(p));
            }
        }
        c
    }

    /// True when a disc of `radius` centered at `p` lies in free space.
    pub fn disc_free(&self, p: Vec2, radius: f64) -> bool {
        self.clearance(p) >= radius
    }

    /// True when the axis-aligned box intersects no obstacle and stays inside
    /// the workspace (both tested as open sets).
    pub fn rect_free(&self, r: &Rect) -> bool {
        let b = &self.bounds;
        if r.min.x < b.min.x || r.min.y < b.min.y || r.max.x > b.max.x || r.max.y > b.max.y {
            return false;
        }
        !self.obstacles.iter().any(|o| o.overlaps(r))
    }

    /// Occupancy grid over the whole workspace at `self.resolution`, with
    /// cells blocked when the cell inflated by `agent_radius` touches an
    /// obstacle or leaves the workspace.
    pub fn occupancy(&self, agent_radius: f64) -> Grid {
        Grid::from_map(self, self.bounds.min, self.bounds, self.resolution, agent_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollisionEvent {
    /// Agents `i < j` with overlapping discs.
    Pair(AgentId, AgentId),
    /// Agent overlapping an obstacle or the workspace wall.
    Obstacle(AgentId),
}

/// Advances one agent by one step: clipped velocity update, exact position
/// integration and heading relaxation towards the direction of motion.
pub fn step_kinematics(state: &AgentState, dv: Vec2, cfg: &WorldConfig) -> AgentState {
    debug_assert!(dv.is_finite(), "non-finite velocity increment");
    let velocity = (state.velocity + dv * cfg.control_gain).clamp_norm(cfg.v_max);
    let position = state.position + velocity * cfg.dt;
    let mut heading = state.heading;
    if velocity.norm() > 1e-6 {
        let err = wrap_angle(velocity.angle() - heading);
        let omega = (cfg.heading_gain * err).clamp(-cfg.max_turn_rate, cfg.max_turn_rate);
        heading = wrap_angle(heading + omega * cfg.dt);
    }
    AgentState {
        position,
        velocity,
        heading,
        ..state.clone()
    }
}

/// Every overlapping agent pair and every agent intersecting the static map.
/// An empty result means the snapshot is collision-free.
pub fn collision_check(states: &[AgentState], map: &ObstacleMap) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    for (a, si) in states.iter().enumerate() {
        for sj in &states[a + 1..] {
            if si.position.distance(sj.position) <= si.radius + sj.radius {
                let (i, j) = if si.id < sj.id { (si.id, sj.id) } else { (sj.id, si.id) };
                events.push(CollisionEvent::Pair(i, j));
            }
        }
        if !map.disc_free(si.position, si.radius) {
            events.push(CollisionEvent::Obstacle(si.id));
        }
    }
    events.sort();
    events
}

/// Agents within `sense_radius` of `ego`, nearest first (id breaks ties),
/// truncated to `neighbor_cap`. The ego agent is never returned.
pub fn neighbor_query<'a>(
    ego: &AgentState,
    states: &'a [AgentState],
    cfg: &WorldConfig,
) -> Vec<&'a AgentState> {
    let mut out: Vec<(f64, &AgentState)> = states
        .iter()
        .filter(|s| s.id != ego.id)
        .map(|s| (s.position.distance(ego.position), s))
        .filter(|(d, _)| *d <= cfg.sense_radius)
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    out.truncate(cfg.neighbor_cap);
    out.into_iter().map(|(_, s)| s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agent(id: usize, x: f64, y: f64) -> AgentState {
        AgentState::new(id, Vec2::new(x, y), 0.2)
    }

    fn open_map() -> ObstacleMap {
        ObstacleMap::new(Rect::new(-50.0, -50.0, 50.0, 50.0), vec![])
    }

    #[test]
    fn kinematics_clips_to_speed_bound() {
        let cfg = WorldConfig::default();
        let s = agent(0, 0.0, 0.0);
        let n = step_kinematics(&s, Vec2::new(2.0, 0.0), &cfg);
        assert_eq!(n.velocity, Vec2::new(1.5, 0.0));
    }

    #[test]
    fn kinematics_pure_integration() {
        let cfg = WorldConfig::default();
        let mut s = agent(0, 0.0, 0.0);
        s.velocity = Vec2::new(1.0, 0.0);
        let n = step_kinematics(&s, Vec2::ZERO, &cfg);
        assert_eq!(n.position, Vec2::new(0.1, 0.0));
    }

    #[test]
    fn kinematics_hand_evaluated_update() {
        let cfg = WorldConfig::default();
        let mut s = agent(0, 0.0, 0.0);
        s.velocity = Vec2::new(0.5, 0.5);
        let n = step_kinematics(&s, Vec2::new(0.2, -0.1), &cfg);
        assert!((n.velocity.x - 0.7).abs() < 1e-12);
        assert!((n.velocity.y - 0.4).abs() < 1e-12);
        assert!((n.velocity.norm() - 0.806_225_774_829_855).abs() < 1e-12);
    }

    #[test]
    fn heading_relaxes_towards_motion() {
        let cfg = WorldConfig::default();
        let mut s = agent(0, 0.0, 0.0);
        s.velocity = Vec2::new(0.0, 1.0);
        let mut h = s.heading;
        for _ in 0..50 {
            s = step_kinematics(&s, Vec2::ZERO, &cfg);
            assert!((s.heading - std::f64::consts::FRAC_PI_2).abs() <= (h - std::f64::consts::FRAC_PI_2).abs());
            h = s.heading;
        }
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 0.05);
    }

    #[test]
    fn collision_pairs_by_distance() {
        let map = open_map();
        assert!(collision_check(&[agent(0, 0.0, 0.0), agent(1, 0.5, 0.0)], &map).is_empty());
        assert_eq!(
            collision_check(&[agent(0, 0.0, 0.0), agent(1, 0.39, 0.0)], &map),
            vec![CollisionEvent::Pair(0, 1)]
        );
    }

    #[test]
    fn collision_with_obstacle() {
        let map = ObstacleMap::new(Rect::new(-5.0, -5.0, 5.0, 5.0), vec![Rect::new(1.0, 1.0, 2.0, 2.0)]);
        assert_eq!(collision_check(&[agent(3, 1.5, 1.5)], &map), vec![CollisionEvent::Obstacle(3)]);
        assert!(collision_check(&[agent(3, 0.5, 0.5)], &map).is_empty());
    }

    #[test]
    fn neighbor_query_cases() {
        let cfg = WorldConfig::default();
        let solo = [agent(0, 0.0, 0.0)];
        assert!(neighbor_query(&solo[0], &solo, &cfg).is_empty());

        let far = [agent(0, 0.0, 0.0), agent(1, 5.1, 0.0)];
        assert!(neighbor_query(&far[0], &far, &cfg).is_empty());

        let mut many = vec![agent(0, 0.0, 0.0)];
        for k in 1..=12 {
            many.push(agent(k, 0.3 * k as f64, 0.0));
        }
        let n = neighbor_query(&many[0], &many, &cfg);
        assert_eq!(n.len(), 10);
        assert_eq!(n.iter().map(|s| s.id).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        assert!(WorldConfig::default().validate().is_ok());
        let bad = WorldConfig { sense_radius: 0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WorldConfig { neighbor_cap: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn speed_bound_holds(dvs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..60)) {
            let cfg = WorldConfig::default();
            let mut s = agent(0, 0.0, 0.0);
            for (x, y) in dvs {
                s = step_kinematics(&s, Vec2::new(x, y), &cfg);
                prop_assert!(s.velocity.norm() <= cfg.v_max + 1e-12);
            }
        }

        #[test]
        fn integration_is_deterministic(vx in -2.0f64..2.0, vy in -2.0f64..2.0, dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
            let cfg = WorldConfig::default();
            let mut s = agent(0, 1.0, -1.0);
            s.velocity = Vec2::new(vx, vy);
            let a = step_kinematics(&s, Vec2::new(dx, dy), &cfg);
            let b = step_kinematics(&s, Vec2::new(dx, dy), &cfg);
            prop_assert_eq!(a.position.x.to_bits(), b.position.x.to_bits());
            prop_assert_eq!(a.position.y.to_bits(), b.position.y.to_bits());
            prop_assert_eq!(a.heading.to_bits(), b.heading.to_bits());
        }

        #[test]
        fn collision_check_symmetric(pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..8)) {
            let map = open_map();
            let states: Vec<_> = pts.iter().enumerate().map(|(i, (x, y))| agent(i, *x, *y)).collect();
            let mut rev = states.clone();
            rev.reverse();
            prop_assert_eq!(collision_check(&states, &map), collision_check(&rev, &map));
        }

        #[test]
        fn neighbor_query_sorted_and_capped(pts in prop::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 1..30)) {
            let cfg = WorldConfig::default();
            let states: Vec<_> = pts.iter().enumerate().map(|(i, (x, y))| agent(i, *x, *y)).collect();
            let n = neighbor_query(&states[0], &states, &cfg);
            prop_assert!(n.len() <= cfg.neighbor_cap);
            let d: Vec<f64> = n.iter().map(|s| s.position.distance(states[0].position)).collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(d.iter().all(|x| *x <= cfg.sense_radius));
            prop_assert!(n.iter().all(|s| s.id != 0));
        }
    }
}
