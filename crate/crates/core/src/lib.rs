//! Deterministic 2D multi-agent navigation in which a reactive local policy
//! drives every agent by default, and detected deadlocks are resolved by a
//! locally confined Push-and-Rotate solve on a cropped grid whose dense
//! waypoints the same local policy then tracks.

pub mod bench;
pub mod detector;
pub mod executive;
pub mod geom;
pub mod global;
pub mod mapf;
pub mod grid;
pub mod policy;
pub mod scenario;
pub mod world;
