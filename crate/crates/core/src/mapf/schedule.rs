//! Time-indexed joint plans, compaction of sequential moves and plan
//! verification.

use super::config::Move;
use super::graph::Vertex;
use super::instance::MapfInstance;
use super::solver::PrimitiveRecord;
use thiserror::Error;

/// `paths[a][t]` is the vertex of agent `a` at step `t`; all paths share the
/// same length `horizon + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPlan {
    pub paths: Vec<Vec<Vertex>>,
    pub records: Vec<PrimitiveRecord>,
}

impl JointPlan {
    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len().saturating_sub(1))
    }

    pub fn n_agents(&self) -> usize {
        self.paths.len()
    }

    /// Number of steps in which some agent changes vertex, summed over agents.
    pub fn move_count(&self) -> usize {
        self.paths.iter().map(|p| p.windows(2).filter(|w| w[0] != w[1]).count()).sum()
    }
}

/// Schedules sequential unit moves into parallel time steps. A move starts
/// after the agent's previous move and strictly after its target vertex was
/// last vacated, which rules out both following and edge swaps.
pub fn compact(starts: &[Vertex], moves: &[Move]) -> Vec<Vec<Vertex>> {
    let k = starts.len();
    let n = moves.iter().flat_map(|m| [m.from, m.to]).chain(starts.iter().copied()).max().map_or(0, |m| m + 1);
    let mut agent_last = vec![0usize; k];
    let mut vacated = vec![0usize; n];
    let mut arrivals: Vec<Vec<(usize, Vertex)>> = starts.iter().map(|&s| vec![(0, s)]).collect();
    for m in moves {
        let s = agent_last[m.agent].max(vacated[m.to]) + 1;
        agent_last[m.agent] = s;
        vacated[m.from] = s;
        arrivals[m.agent].push((s, m.to));
    }
    let horizon = agent_last.iter().copied().max().unwrap_or(0);
    arrivals
        .into_iter()
        .map(|arr| {
            let mut path = Vec::with_capacity(horizon + 1);
            let mut it = arr.into_iter().peekable();
            let mut cur = it.next().map(|(_, v)| v).unwrap_or(0);
            for t in 0..=horizon {
                while let Some(&(s, v)) = it.peek() {
                    if s > t {
                        break;
                    }
                    cur = v;
                    it.next();
                }
                path.push(cur);
            }
            path
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    WrongLength,
    WrongStart,
    WrongGoal,
    NonAdjacentMove,
    VertexConflict,
    EdgeSwap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind:?} at step {step}")]
pub struct PlanViolation {
    pub step: usize,
    pub kind: ViolationKind,
}

/// Checks a joint plan against an instance.
pub fn verify_plan(inst: &MapfInstance, plan: &JointPlan) -> Result<(), PlanViolation> {
    let err = |step, kind| Err(PlanViolation { step, kind });
    let k = inst.n_agents();
    let h = plan.horizon();
    if plan.paths.len() != k || plan.paths.iter().any(|p| p.len() != h + 1) {
        return err(0, ViolationKind::WrongLength);
    }
    let n = inst.graph.len();
    if plan.paths.iter().flatten().any(|&v| v >= n) {
        return err(0, ViolationKind::WrongLength);
    }
    for a in 0..k {
        if plan.paths[a][0] != inst.starts[a] {
            return err(0, ViolationKind::WrongStart);
        }
    }
    let mut holder = vec![usize::MAX; n];
    for t in 0..=h {
        for a in 0..k {
            let v = plan.paths[a][t];
            if holder[v] != usize::MAX && holder[v] != t * k + a && holder[v] / k == t {
                return err(t, ViolationKind::VertexConflict);
            }
            holder[v] = t * k + a;
            if t == 0 {
                continue;
            }
            let u = plan.paths[a][t - 1];
            if u != v && !inst.graph.has_edge(u, v) {
                return err(t, ViolationKind::NonAdjacentMove);
            }
        }
        if t > 0 {
            for a in 0..k {
                let (u, v) = (plan.paths[a][t - 1], plan.paths[a][t]);
                if u == v {
                    continue;
                }
                for b in a + 1..k {
                    if plan.paths[b][t - 1] == v && plan.paths[b][t] == u {
                        return err(t, ViolationKind::EdgeSwap);
                    }
                }
            }
        }
    }
    for a in 0..k {
        if plan.paths[a][h] != inst.targets[a] {
            return err(h, ViolationKind::WrongGoal);
        }
    }
    Ok(())
}
