//! Local multi-agent path finding on a cropped grid: instance construction,
//! Push-and-Rotate solving, plan verification and dense waypoint export.

pub mod config;
pub mod dense;
pub mod graph;
pub mod instance;
pub mod io;
pub mod movingai;
pub mod oracle;
pub mod primitives;
pub mod schedule;
pub mod solver;

pub use config::{Agent, Configuration, Move, Potential};
pub use dense::{plan_to_dense, DenseSchedule};
pub use graph::{Graph, Vertex};
pub use instance::{build_instance, crop_subgrid, LocalInstance, MapfInstance, Subgrid};
pub use schedule::{verify_plan, JointPlan, PlanViolation};
pub use solver::{pnr_solve, pnr_solve_with, PrimitiveKind, SolveStats, SolverOptions};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapfError {
    #[error("component {component} has fewer than two blanks")]
    PreconditionBlanks { component: usize },
    #[error("instance is unsolvable")]
    Unsolvable,
    #[error("illegal move {from} -> {to}")]
    IllegalMove { from: Vertex, to: Vertex },
    #[error("vertex {0} holds a finished agent")]
    FinishedVertex(Vertex),
    #[error("no blank reachable")]
    NoBlankReachable,
    #[error("no cycle with a blank for the swap")]
    NoCycleWithBlank,
    #[error("no blank on the rotation cycle")]
    NoBlankOnCycle,
    #[error("two agents project to the same cell and no free alternative exists")]
    ProjectionConflict,
    #[error("agent {0} cannot reach its target inside the crop")]
    Disconnected(usize),
    #[error("target of agent {0} lies outside the crop")]
    TargetOutsideCrop(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}
