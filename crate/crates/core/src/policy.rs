//! Reactive local navigation: velocity-obstacle observation features, time
//! to collision, the goal-directed desired velocity, a deterministic
//! reciprocal-avoidance rule and the shaped step reward.

use crate::geom::Vec2;
use crate::world::{AgentId, AgentState, Mode, ObstacleMap, WorldConfig};
use thiserror::Error;
use serde::{Deserialize, Serialize};

/// Default numeric floor for `‖u‖²` in the time-to-collision formula.
pub const TTC_EPS: f64 = 1e-9;
/// Risk assigned to overlapping discs, `1 / (0 + 0.2)`.
pub const MAX_RISK: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("target within tolerance of the current position")]
    DegenerateTarget,
    #[error("discs overlap; velocity-obstacle rays are undefined")]
    OverlapDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Desired-velocity gain k_p (m/s).
    pub k_p: f64,
    /// Distance under which the target counts as reached (m).
    pub goal_tolerance: f64,
    /// Velocity-obstacle truncation horizon for agents (s).
    pub time_horizon: f64,
    /// Truncation horizon for static obstacles (s).
    pub obstacle_time_horizon: f64,
    /// Only obstacles closer than this contribute constraints (m).
    pub obstacle_range: f64,
    /// Radius inflation used by the avoidance constraints (m).
    pub safety_margin: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            k_p: 1.0,
            goal_tolerance: 0.3,
            time_horizon: 2.0,
            obstacle_time_horizon: 1.0,
            obstacle_range: 1.5,
            safety_margin: 0.04,
        }
    }
}

/// `v_des = k_p · (w − p) / ‖w − p‖`, capped at `v_max`.
pub fn desired_velocity(pos: Vec2, waypoint: Vec2, k_p: f64, v_max: f64, tolerance: f64) -> Result<Vec2, PolicyError> {
    let d = waypoint - pos;
    let n = d.norm();
    if n <= tolerance {
        return Err(PolicyError::DegenerateTarget);
    }
    Ok(d / n * k_p.min(v_max))
}

/// Time of closest approach for relative position `r = p_j − p_i` and
/// relative velocity `u = v_j − v_i`; `+∞` when not closing.
pub fn ttc_pair(r: Vec2, u: Vec2, eps: f64) -> f64 {
    let uu = u.norm_sq();
    let ru = r.dot(u);
    if uu <= eps || ru >= 0.0 {
        f64::INFINITY
    } else {
        -ru / uu
    }
}

/// Distance at closest approach; the current distance when not closing.
pub fn dmin_pair(r: Vec2, u: Vec2, ttc: f64) -> f64 {
    if ttc.is_infinite() {
        r.norm()
    } else {
        (r + u * ttc).norm()
    }
}

/// Smallest `τ ≥ 0` with `‖r + τu‖ = combined_radius`, i.e. first contact of
/// the two discs under constant velocities. Zero when already overlapping.
pub fn ttc_contact(r: Vec2, u: Vec2, combined_radius: f64, eps: f64) -> f64 {
    let c = r.norm_sq() - combined_radius * combined_radius;
    if c <= 0.0 {
        return 0.0;
    }
    let a = u.norm_sq();
    let b = r.dot(u);
    if a <= eps || b >= 0.0 {
        return f64::INFINITY;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    // Numerically stable smaller root of a τ² + 2bτ + c = 0 with b < 0.
    c / (-b + disc.sqrt())
}

/// `1 / (ttc + 0.2)`, with `+∞ ↦ 0`.
pub fn risk_from_ttc(ttc: f64) -> f64 {
    if ttc.is_finite() {
        1.0 / (ttc + 0.2)
    } else {
        0.0
    }
}

/// Ego features fed to the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfObservation {
    pub velocity: Vec2,
    pub heading: f64,
    pub desired_velocity: Vec2,
    /// R_c, the sum of ego and neighbor radii.
    pub combined_radius: f64,
    pub radius: f64,
    /// Speed bound of the avoidance solve, v_max; a tracking cap only
    /// limits `desired_velocity`.
    pub max_speed: f64,
    pub dt: f64,
}

/// Per-neighbor velocity-obstacle descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDescriptor {
    pub id: AgentId,
    /// VO apex, the neighbor's velocity.
    pub apex: Vec2,
    pub left_ray: Vec2,
    pub right_ray: Vec2,
    pub distance: f64,
    pub ttc: f64,
    pub risk: f64,
    /// `p_j − p_i`.
    pub offset: Vec2,
    pub radius: f64,
    /// The neighbor will not react (finished agents).
    pub passive: bool,
}

/// Nearest point of a static obstacle or wall, relative to the ego.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleDescriptor {
    pub offset: Vec2,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub ego: SelfObservation,
    pub neighbors: Vec<NeighborDescriptor>,
    pub obstacles: Vec<ObstacleDescriptor>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyAction {
    pub dv: Vec2,
}

/// Tangent rays of the cone spanned by a disc of `combined_radius` around
/// `offset`, seen from the origin: `(left, right)`.
pub fn vo_rays(offset: Vec2, combined_radius: f64) -> Result<(Vec2, Vec2), PolicyError> {
    let d = offset.norm();
    if d <= combined_radius {
        return Err(PolicyError::OverlapDegenerate);
    }
    let dir = offset / d;
    let half = (combined_radius / d).asin();
    Ok((dir.rotate(half), dir.rotate(-half)))
}

/// Descriptor for one neighbor. Overlapping discs fall back to the half-plane
/// perpendicular to the offset with maximal risk.
pub fn describe_neighbor(ego: &AgentState, nb: &AgentState) -> NeighborDescriptor {
    let offset = nb.position - ego.position;
    let combined = ego.radius + nb.radius;
    let distance = offset.norm();
    let u = nb.velocity - ego.velocity;
    let (left_ray, right_ray, ttc) = match vo_rays(offset, combined) {
        Ok((l, r)) => (l, r, ttc_contact(offset, u, combined, TTC_EPS)),
        Err(_) => {
            let dir = offset.normalized().unwrap_or(Vec2::new(1.0, 0.0));
            (dir.perp(), -dir.perp(), 0.0)
        }
    };
    let risk = if distance <= combined { MAX_RISK } else { risk_from_ttc(ttc) };
    NeighborDescriptor {
        id: nb.id,
        apex: nb.velocity,
        left_ray,
        right_ray,
        distance,
        ttc,
        risk,
        offset,
        radius: nb.radius,
        passive: nb.mode == Mode::Finished,
    }
}

/// Nearest points of obstacles and walls within `range` of `p`.
pub fn describe_obstacles(map: &ObstacleMap, p: Vec2, range: f64) -> Vec<ObstacleDescriptor> {
    let mut out = Vec::new();
    let b = &map.bounds;
    let walls = [
        Vec2::new(b.min.x, p.y),
        Vec2::new(b.max.x, p.y),
        Vec2::new(p.x, b.min.y),
        Vec2::new(p.x, b.max.y),
    ];
    for q in walls {
        let d = q.distance(p);
        if d <= range {
            out.push(ObstacleDescriptor { offset: q - p, distance: d });
        }
    }
    for o in &map.obstacles {
        let q = o.closest_point(p);
        let d = q.distance(p);
        if d <= range {
            out.push(ObstacleDescriptor { offset: q - p, distance: d });
        }
    }
    out
}

/// Builds the ego observation. `target` is the active waypoint; `None` or a
/// target within tolerance gives a zero desired velocity, whose speed is
/// otherwise capped at `tracking_speed`.
pub fn build_observation(
    ego: &AgentState,
    neighbors: &[&AgentState],
    target: Option<Vec2>,
    tracking_speed: f64,
    map: Option<&ObstacleMap>,
    cfg: &WorldConfig,
    pcfg: &PolicyConfig,
) -> Observation {
    let desired = target
        .and_then(|w| desired_velocity(ego.position, w, pcfg.k_p, tracking_speed, pcfg.goal_tolerance).ok())
        .unwrap_or(Vec2::ZERO);
    let ego_obs = SelfObservation {
        velocity: ego.velocity,
        heading: ego.heading,
        desired_velocity: desired,
        combined_radius: 2.0 * cfg.agent_radius,
        radius: ego.radius,
        max_speed: cfg.v_max,
        dt: cfg.dt,
    };
    Observation {
        ego: ego_obs,
        neighbors: neighbors.iter().map(|nb| describe_neighbor(ego, nb)).collect(),
        obstacles: map
            .map(|m| describe_obstacles(m, ego.position, pcfg.obstacle_range))
            .unwrap_or_default(),
    }
}

/// Directed line bounding a half-plane of admissible velocities; the
/// admissible side is to the left of `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    pub direction: Vec2,
}

impl HalfPlane {
    /// Signed distance by which `v` violates the half-plane (≤ 0 inside).
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.cross(self.point - v)
    }
}

/// Reciprocal half-plane for one neighbor with truncation horizon `tau`.
/// `share` is the fraction of the avoidance effort taken by the ego.
pub fn orca_half_plane(ego: &SelfObservation, nb: &NeighborDescriptor, tau: f64, share: f64) -> HalfPlane {
    let rel_pos = nb.offset;
    let rel_vel = ego.velocity - nb.apex;
    let dist_sq = rel_pos.norm_sq();
    let r = ego.radius + nb.radius;
    let r_sq = r * r;
    let inv_tau = 1.0 / tau;
    let (direction, u);
    if dist_sq > r_sq {
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (r * inv_tau - w_len);
        } else {
            let leg = (dist_sq - r_sq).sqrt();
            if rel_pos.cross(w) > 0.0 {
                direction = Vec2::new(rel_pos.x * leg - rel_pos.y * r, rel_pos.x * r + rel_pos.y * leg) / dist_sq;
            } else {
                direction = -Vec2::new(rel_pos.x * leg + rel_pos.y * r, -rel_pos.x * r + rel_pos.y * leg) / dist_sq;
            }
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        let inv_dt = 1.0 / ego.dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = w.normalized().unwrap_or_else(|| (-rel_pos).normalized().unwrap_or(Vec2::new(-1.0, 0.0)));
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (r * inv_dt - w_len);
    }
    HalfPlane {
        point: ego.velocity + u * share,
        direction,
    }
}

/// Half-plane keeping the ego from reaching a static obstacle point within
/// `tau`: the velocity component towards it is at most `(d − r) / tau`.
pub fn obstacle_half_plane(ego: &SelfObservation, ob: &ObstacleDescriptor, tau: f64) -> Option<HalfPlane> {
    let n = (-ob.offset).normalized()?;
    let slack = (ob.distance - ego.radius).max(0.0) / tau;
    Some(HalfPlane {
        point: n * -slack,
        direction: Vec2::new(n.y, -n.x),
    })
}

/// One-step contact guard: the ego's approach speed towards the neighbor is
/// at most its share of `(d − r) / Δt`, so the pair cannot touch within one
/// step even if the neighbor brakes, while braking itself always satisfies it.
pub fn contact_guard(ego: &SelfObservation, nb: &NeighborDescriptor, share: f64) -> Option<HalfPlane> {
    let n = (-nb.offset).normalized()?;
    let gap = (nb.distance - ego.radius - nb.radius).max(0.0);
    Some(HalfPlane {
        point: n * -(share * gap / ego.dt),
        direction: Vec2::new(n.y, -n.x),
    })
}

fn lp1(lines: &[HalfPlane], line_no: usize, radius: f64, opt: Vec2, direction_opt: bool) -> Option<Vec2> {
    const EPS: f64 = 1e-9;
    let l = lines[line_no];
    let dot = l.point.dot(l.direction);
    let disc = dot * dot + radius * radius - l.point.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut t_left = -dot - sq;
    let mut t_right = -dot + sq;
    for other in &lines[..line_no] {
        let denom = l.direction.cross(other.direction);
        let numer = other.direction.cross(l.point - other.point);
        if denom.abs() <= EPS {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }
    let t = if direction_opt {
        if opt.dot(l.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        l.direction.dot(opt - l.point).clamp(t_left, t_right)
    };
    Some(l.point + l.direction * t)
}

fn lp2(lines: &[HalfPlane], radius: f64, opt: Vec2, direction_opt: bool) -> Result<Vec2, (usize, Vec2)> {
    let mut result = if direction_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        opt.normalized().unwrap_or(Vec2::ZERO) * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].violation(result) > 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(v) => result = v,
                None => return Err((i, result)),
            }
        }
    }
    Ok(result)
}

/// Velocity closest to `opt` inside the disc of `radius` and all half-planes;
/// `None` when the feasible set is empty.
pub fn solve_velocity_lp(lines: &[HalfPlane], radius: f64, opt: Vec2) -> Option<Vec2> {
    lp2(lines, radius, opt, false).ok()
}

/// Like [`solve_velocity_lp`], but when the set is empty returns the velocity
/// minimising the largest violation of `lines[hard..]` while the first
/// `hard` lines stay satisfied (these must admit the zero velocity).
pub fn solve_velocity_relaxed(lines: &[HalfPlane], hard: usize, radius: f64, opt: Vec2) -> Vec2 {
    const EPS: f64 = 1e-9;
    let (fail, mut result) = match lp2(lines, radius, opt, false) {
        Ok(v) => return v,
        Err(e) => e,
    };
    let mut distance = 0.0;
    for i in fail.max(hard)..lines.len() {
        let li = lines[i];
        if li.violation(result) <= distance {
            continue;
        }
        let mut proj: Vec<HalfPlane> = lines[..hard].to_vec();
        for lj in &lines[hard..i] {
            let det = li.direction.cross(lj.direction);
            let point = if det.abs() <= EPS {
                if li.direction.dot(lj.direction) > 0.0 {
                    continue;
                }
                (li.point + lj.point) * 0.5
            } else {
                li.point + li.direction * (lj.direction.cross(li.point - lj.point) / det)
            };
            let Some(direction) = (lj.direction - li.direction).normalized() else {
                continue;
            };
            proj.push(HalfPlane { point, direction });
        }
        let towards = Vec2::new(-li.direction.y, li.direction.x);
        if let Ok(v) = lp2(&proj, radius, towards, true) {
            result = v;
        }
        distance = li.violation(result);
    }
    result
}

/// Pluggable local navigation policy.
pub trait LocalPolicy: Send + Sync {
    fn act(&self, obs: &Observation) -> PolicyAction;
}

/// Deterministic reciprocal avoidance: the new velocity is the admissible
/// velocity nearest to the desired one, where each neighbor contributes a
/// half-plane carrying half of the avoidance effort (all of it for passive
/// neighbors) plus a one-step contact guard, and obstacles contribute hard
/// half-planes. An empty admissible set yields the braking action.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalPolicy {
    pub time_horizon: f64,
    pub obstacle_time_horizon: f64,
    pub safety_margin: f64,
    /// Velocity gain applied by the integrator, used to invert the update.
    pub control_gain: f64,
}

impl ReciprocalPolicy {
    pub fn new(pcfg: &PolicyConfig, wcfg: &WorldConfig) -> Self {
        ReciprocalPolicy {
            time_horizon: pcfg.time_horizon,
            obstacle_time_horizon: pcfg.obstacle_time_horizon,
            safety_margin: pcfg.safety_margin,
            control_gain: wcfg.control_gain,
        }
    }

    /// Obstacle half-planes, contact guards and reciprocal half-planes, with
    /// the number of lines before the reciprocal ones.
    pub fn constraints(&self, obs: &Observation) -> (Vec<HalfPlane>, usize) {
        // Constraints converge onto contact, so keep a margin above it.
        let ego = SelfObservation { radius: obs.ego.radius + self.safety_margin, ..obs.ego.clone() };
        let mut lines: Vec<HalfPlane> = obs
            .obstacles
            .iter()
            .filter_map(|o| obstacle_half_plane(&ego, o, self.obstacle_time_horizon))
            .collect();
        let share = |nb: &NeighborDescriptor| if nb.passive { 1.0 } else { 0.5 };
        lines.extend(obs.neighbors.iter().filter_map(|nb| contact_guard(&ego, nb, share(nb))));
        let hard = lines.len();
        lines.extend(obs.neighbors.iter().map(|nb| orca_half_plane(&ego, nb, self.time_horizon, share(nb))));
        (lines, hard)
    }
}

impl LocalPolicy for ReciprocalPolicy {
    fn act(&self, obs: &Observation) -> PolicyAction {
        reactive_policy(self, obs)
    }
}

/// One evaluation of [`ReciprocalPolicy`].
pub fn reactive_policy(policy: &ReciprocalPolicy, obs: &Observation) -> PolicyAction {
    let v = obs.ego.velocity;
    let (lines, _) = policy.constraints(obs);
    let new_v = solve_velocity_lp(&lines, obs.ego.max_speed, obs.ego.desired_velocity).unwrap_or(Vec2::ZERO);
    PolicyAction {
        dv: (new_v - v) / policy.control_gain,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Horizon of the half-planes used by the penetration measure (s).
    pub orca_horizon: f64,
    /// TTC hinge of `ψ(x) = max(0, 1/x − 1/x_hinge)` (s).
    pub ttc_hinge: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
            eta: 10.0,
            orca_horizon: 2.0,
            ttc_hinge: 4.0,
        }
    }
}

/// Sum of hinge distances of the ego velocity to the reciprocal half-planes.
pub fn rvo_penetration(obs: &Observation, horizon: f64) -> f64 {
    obs.neighbors
        .iter()
        .map(|nb| orca_half_plane(&obs.ego, nb, horizon, 0.5).violation(obs.ego.velocity).max(0.0))
        .sum()
}

pub fn ttc_penalty(min_ttc: f64, hinge: f64) -> f64 {
    if min_ttc.is_infinite() {
        return 0.0;
    }
    (1.0 / min_ttc.max(1e-6) - 1.0 / hinge).max(0.0)
}

/// Shaped per-step reward; used as a diagnostic of the local policy.
pub fn step_reward(
    prev: &AgentState,
    next: &AgentState,
    goal: Vec2,
    obs: &Observation,
    collision: bool,
    w: &RewardWeights,
) -> f64 {
    let progress = prev.position.distance(goal) - next.position.distance(goal);
    let min_ttc = obs.neighbors.iter().map(|n| n.ttc).fold(f64::INFINITY, f64::min);
    w.alpha * progress
        - w.beta * rvo_penetration(obs, w.orca_horizon)
        - w.gamma * ttc_penalty(min_ttc, w.ttc_hinge)
        - if collision { w.eta } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(id: usize, p: Vec2, v: Vec2) -> AgentState {
        let mut a = AgentState::new(id, p, 0.2);
        a.velocity = v;
        a
    }

    #[test]
    fn desired_velocity_cases() {
        let v = desired_velocity(Vec2::ZERO, Vec2::new(3.0, 4.0), 1.0, 1.5, 0.3).unwrap();
        assert!((v.x - 0.6).abs() < 1e-12 && (v.y - 0.8).abs() < 1e-12);
        assert_eq!(
            desired_velocity(Vec2::ZERO, Vec2::new(0.15, 0.0), 1.0, 1.5, 0.3),
            Err(PolicyError::DegenerateTarget)
        );
        let v = desired_velocity(Vec2::ZERO, Vec2::new(10.0, 0.0), 2.0, 1.5, 0.3).unwrap();
        assert!((v.norm() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ttc_and_dmin_cases() {
        assert_eq!(ttc_pair(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), TTC_EPS), 2.0);
        assert!(ttc_pair(Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0), TTC_EPS).is_infinite());
        assert!((ttc_pair(Vec2::new(2.0, 1.0), Vec2::new(-1.0, -0.5), TTC_EPS) - 2.0).abs() < 1e-12);
        assert_eq!(dmin_pair(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), 2.0), 0.0);
        assert_eq!(dmin_pair(Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0), f64::INFINITY), 2.0);
        assert!((dmin_pair(Vec2::new(3.0, 1.0), Vec2::new(-1.0, 0.0), 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contact_time_head_on() {
        // 2 m apart, closing at 1 m/s, combined radius 0.4 -> contact at 1.6 s.
        let t = ttc_contact(Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), 0.4, TTC_EPS);
        assert!((t - 1.6).abs() < 1e-12);
        assert_eq!(ttc_contact(Vec2::new(0.3, 0.0), Vec2::new(1.0, 0.0), 0.4, TTC_EPS), 0.0);
        assert!(ttc_contact(Vec2::new(2.0, 1.0), Vec2::new(-1.0, 0.0), 0.4, TTC_EPS).is_infinite());
    }

    #[test]
    fn rays_of_a_neighbor_on_the_x_axis() {
        let (l, r) = vo_rays(Vec2::new(2.0, 0.0), 0.4).unwrap();
        let half = (0.2f64).asin();
        assert!((half - 0.201_357_920_790_330_8).abs() < 1e-12);
        assert!((l.angle() - half).abs() < 1e-12);
        assert!((r.angle() + half).abs() < 1e-12);
        assert!((l.norm() - 1.0).abs() < 1e-12);
        assert_eq!(vo_rays(Vec2::new(0.3, 0.0), 0.4), Err(PolicyError::OverlapDegenerate));
    }

    #[test]
    fn risk_mapping() {
        assert!((risk_from_ttc(0.8) - 1.0).abs() < 1e-12);
        assert_eq!(risk_from_ttc(0.0), 5.0);
        assert_eq!(risk_from_ttc(f64::INFINITY), 0.0);
    }

    #[test]
    fn overlapping_neighbor_gets_max_risk() {
        let a = agent(0, Vec2::ZERO, Vec2::ZERO);
        let b = agent(1, Vec2::new(0.3, 0.0), Vec2::ZERO);
        let d = describe_neighbor(&a, &b);
        assert_eq!(d.risk, MAX_RISK);
        assert!((d.left_ray - Vec2::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_observation_is_well_formed() {
        let cfg = WorldConfig::default();
        let a = agent(0, Vec2::ZERO, Vec2::ZERO);
        let obs = build_observation(&a, &[], Some(Vec2::new(5.0, 0.0)), cfg.v_max, None, &cfg, &PolicyConfig::default());
        assert!(obs.neighbors.is_empty());
        assert!((obs.ego.combined_radius - 0.4).abs() < 1e-12);
        assert!((obs.ego.desired_velocity - Vec2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pure_tracking_without_neighbors() {
        let cfg = WorldConfig::default();
        let pol = ReciprocalPolicy::new(&PolicyConfig::default(), &cfg);
        let a = agent(0, Vec2::ZERO, Vec2::ZERO);
        let obs = build_observation(&a, &[], Some(Vec2::new(5.0, 0.0)), cfg.v_max, None, &cfg, &PolicyConfig::default());
        assert_eq!(reactive_policy(&pol, &obs).dv, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn head_on_pair_sidesteps_symmetrically() {
        let cfg = WorldConfig::default();
        let pcfg = PolicyConfig::default();
        let pol = ReciprocalPolicy::new(&pcfg, &cfg);
        let a = agent(0, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let b = agent(1, Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0));
        let oa = build_observation(&a, &[&b], Some(Vec2::new(5.0, 0.0)), cfg.v_max, None, &cfg, &pcfg);
        let ob = build_observation(&b, &[&a], Some(Vec2::new(-5.0, 0.0)), cfg.v_max, None, &cfg, &pcfg);
        let da = reactive_policy(&pol, &oa).dv;
        let db = reactive_policy(&pol, &ob).dv;
        assert!(da.y.abs() > 1e-3, "expected a lateral component, got {da:?}");
        assert!((da + db).norm() < 1e-12);
    }

    #[test]
    fn boxed_in_agent_brakes() {
        let cfg = WorldConfig::default();
        let pcfg = PolicyConfig::default();
        let pol = ReciprocalPolicy::new(&pcfg, &cfg);
        let ego = agent(0, Vec2::ZERO, Vec2::new(0.5, 0.2));
        let ring: Vec<AgentState> = (0..8)
            .map(|k| {
                let dir = Vec2::new(1.0, 0.0).rotate(k as f64 * std::f64::consts::FRAC_PI_4);
                agent(k + 1, dir * 0.45, -dir * 1.5)
            })
            .collect();
        let refs: Vec<&AgentState> = ring.iter().collect();
        let obs = build_observation(&ego, &refs, Some(Vec2::new(5.0, 0.0)), cfg.v_max, None, &cfg, &pcfg);
        assert_eq!(reactive_policy(&pol, &obs).dv, -ego.velocity);
    }

    #[test]
    fn relaxed_solution_keeps_obstacle_lines() {
        // Wall ahead (hard) and a neighbor line demanding forward motion.
        let wall = HalfPlane { point: Vec2::new(0.1, 0.0), direction: Vec2::new(0.0, -1.0) };
        let push = HalfPlane { point: Vec2::new(0.5, 0.0), direction: Vec2::new(0.0, 1.0) };
        let v = solve_velocity_relaxed(&[wall, push], 1, 1.5, Vec2::ZERO);
        assert!(wall.violation(v) <= 1e-9);
        assert!((v.x - 0.1).abs() < 1e-9);
    }

    #[test]
    fn reward_terms() {
        let w = RewardWeights::default();
        let prev = agent(0, Vec2::ZERO, Vec2::new(1.0, 0.0));
        let next = agent(0, Vec2::new(0.1, 0.0), Vec2::new(1.0, 0.0));
        let cfg = WorldConfig::default();
        let obs = build_observation(&prev, &[], None, cfg.v_max, None, &cfg, &PolicyConfig::default());
        let goal = Vec2::new(5.0, 0.0);
        assert!((step_reward(&prev, &next, goal, &obs, false, &w) - 0.1).abs() < 1e-12);
        let still = prev.clone();
        assert_eq!(step_reward(&prev, &still, goal, &obs, true, &w), -10.0);
        assert_eq!(ttc_penalty(f64::INFINITY, 4.0), 0.0);
    }
}
