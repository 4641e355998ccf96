//! Scenario description and its TOML file format.
//!
//! ```toml
//! name = "corridor"
//! bounds = [0.0, 0.0, 10.0, 6.0]
//! jitter = 0.05
//!
//! [[obstacle]]
//! rect = [2.5, 0.0, 7.5, 2.25]
//!
//! [[agent]]
//! start = [1.0, 3.0]
//! goal = [9.0, 3.0]
//!
//! [detector]
//! t_wp = 60
//! ```
//!
//! Sections `world`, `policy`, `detector`, `global` and `solver` override
//! individual defaults.

use crate::detector::DetectorConfig;
use crate::geom::{Rect, Vec2};
use crate::policy::PolicyConfig;
use crate::world::{ConfigError, ObstacleMap, WorldConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global guidance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    /// Occupancy resolution of the A* grid (m).
    pub resolution: f64,
    /// Arc-length spacing of global waypoints (m).
    pub spacing: f64,
    pub reach_threshold: f64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig { resolution: 0.25, spacing: 1.0, reach_threshold: 0.3 }
    }
}

/// Crop, solver and dense-tracking parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Crop margin around the participants (m).
    pub margin: f64,
    /// Subgrid cell size h_g (m).
    pub cell_size: f64,
    /// Speed cap of coordinated agents as a fraction of v_max.
    pub dense_speed_factor: f64,
    /// Retry once with a doubled margin when a solve fails.
    pub widen_on_failure: bool,
    pub exchange_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            margin: 1.5,
            cell_size: 0.5,
            dense_speed_factor: 0.6,
            widen_on_failure: true,
            exchange_budget: crate::mapf::primitives::EXCHANGE_BUDGET,
        }
    }
}

impl SolverConfig {
    pub fn speed_cap(&self, wcfg: &WorldConfig) -> f64 {
        self.dense_speed_factor * wcfg.v_max
    }

    /// Dense reach threshold h_g / 2.
    pub fn dense_reach(&self) -> f64 {
        0.5 * self.cell_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub map: ObstacleMap,
    pub starts: Vec<Vec2>,
    pub goals: Vec<Vec2>,
    /// Maximum start jitter per axis (m).
    pub jitter: f64,
    pub world: WorldConfig,
    pub policy: PolicyConfig,
    pub detector: DetectorConfig,
    pub global: GlobalConfig,
    pub solver: SolverConfig,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write scenario: {0}")]
    Write(#[from] toml::ser::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleEntry {
    rect: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    start: [f64; 2],
    goal: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    bounds: [f64; 4],
    #[serde(default)]
    jitter: f64,
    #[serde(default)]
    world: WorldConfig,
    #[serde(default)]
    policy: PolicyConfig,
    #[serde(default)]
    detector: DetectorConfig,
    #[serde(default)]
    global: GlobalConfig,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    obstacle: Vec<ObstacleEntry>,
    #[serde(default)]
    agent: Vec<AgentEntry>,
}

fn rect(a: [f64; 4]) -> Rect {
    Rect::new(a[0], a[1], a[2], a[3])
}

impl Scenario {
    /// Scenario with default configuration sections.
    pub fn new(name: impl Into<String>, map: ObstacleMap, starts: Vec<Vec2>, goals: Vec<Vec2>) -> Self {
        Scenario {
            name: name.into(),
            map,
            starts,
            goals,
            jitter: 0.0,
            world: WorldConfig::default(),
            policy: PolicyConfig::default(),
            detector: DetectorConfig::default(),
            global: GlobalConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    /// Checks configurations and that starts and goals are free and
    /// pairwise non-overlapping.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.world.validate()?;
        self.detector.validate()?;
        if self.starts.len() != self.goals.len() || self.starts.is_empty() {
            return Err(ScenarioError::Invalid("need matching, non-empty start and goal lists".into()));
        }
        let r = self.world.agent_radius;
        for (what, pts) in [("start", &self.starts), ("goal", &self.goals)] {
            for (i, p) in pts.iter().enumerate() {
                if !self.map.disc_free(*p, r) {
                    return Err(ScenarioError::Invalid(format!("{what} of agent {i} is not in free space")));
                }
                for (j, q) in pts.iter().enumerate().skip(i + 1) {
                    if p.distance(*q) <= 2.0 * r {
                        return Err(ScenarioError::Invalid(format!("{what}s of agents {i} and {j} overlap")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let f: ScenarioFile = toml::from_str(text)?;
        let map = ObstacleMap::new(rect(f.bounds), f.obstacle.iter().map(|o| rect(o.rect)).collect())
            .with_resolution(f.global.resolution);
        let s = Scenario {
            name: f.name,
            map,
            starts: f.agent.iter().map(|a| Vec2::new(a.start[0], a.start[1])).collect(),
            goals: f.agent.iter().map(|a| Vec2::new(a.goal[0], a.goal[1])).collect(),
            jitter: f.jitter,
            world: f.world,
            policy: f.policy,
            detector: f.detector,
            global: f.global,
            solver: f.solver,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        let b = self.map.bounds;
        let f = ScenarioFile {
            name: self.name.clone(),
            bounds: [b.min.x, b.min.y, b.max.x, b.max.y],
            jitter: self.jitter,
            world: self.world.clone(),
            policy: self.policy.clone(),
            detector: self.detector.clone(),
            global: self.global.clone(),
            solver: self.solver.clone(),
            obstacle: self
                .map
                .obstacles
                .iter()
                .map(|r| ObstacleEntry { rect: [r.min.x, r.min.y, r.max.x, r.max.y] })
                .collect(),
            agent: self
                .starts
                .iter()
                .zip(&self.goals)
                .map(|(s, g)| AgentEntry { start: [s.x, s.y], goal: [g.x, g.y] })
                .collect(),
        };
        Ok(toml::to_string(&f)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
name = "tiny"
bounds = [0, 0, 4.0, 2.0]

[[obstacle]]
rect = [1.8, 0.0, 2.2, 0.6]

[[agent]]
start = [0.5, 1.0]
goal = [3.5, 1.0]

[detector]
t_wp = 40

[solver]
margin = 2.0
"#;

    #[test]
    fn parses_sections_and_defaults() {
        let s = Scenario::from_toml(TEXT).unwrap();
        assert_eq!(s.name, "tiny");
        assert_eq!(s.map.bounds, Rect::new(0.0, 0.0, 4.0, 2.0));
        assert_eq!(s.map.obstacles.len(), 1);
        assert_eq!(s.detector.t_wp, 40);
        assert_eq!(s.detector.t_cool, DetectorConfig::default().t_cool);
        assert_eq!(s.solver.margin, 2.0);
        assert_eq!(s.goals, vec![Vec2::new(3.5, 1.0)]);
    }

    #[test]
    fn round_trips_through_text() {
        let s = Scenario::from_toml(TEXT).unwrap();
        assert_eq!(Scenario::from_toml(&s.to_toml().unwrap()).unwrap(), s);
    }

    #[test]
    fn rejects_unknown_keys_and_blocked_starts() {
        assert!(Scenario::from_toml(&TEXT.replace("t_wp", "t_wq")).is_err());
        let blocked = TEXT.replace("start = [0.5, 1.0]", "start = [2.0, 0.3]");
        assert!(matches!(Scenario::from_toml(&blocked), Err(ScenarioError::Invalid(_))));
    }
}
