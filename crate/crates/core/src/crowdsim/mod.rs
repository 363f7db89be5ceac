//! Deterministic social-force crowd simulator.
//!
//! Agents are discs driven toward an exit and pushed apart by exponential
//! repulsion, body compression and sliding friction. Each step evaluates
//! forces on an immutable snapshot, so serial and parallel runs agree bit for
//! bit. Agents above the crush pressure threshold for long enough become
//! static obstacles.

pub mod force;
pub mod geometry;
pub mod grid;
pub mod params;
pub mod scenario;
pub mod sim;
pub mod spatial;

pub use force::{force_parts, social_force, ForceParts};
pub use geometry::{Rect, Segment, Vec2};
pub use grid::{density_grid, detect_breach, BreachEvent, DensityGrid};
pub use params::{RitualSchedule, RitualWindow, SimParams};
pub use scenario::{build_scenario, preset, Exit, Scenario, ScenarioConfig, Target};
pub use sim::{
    run, run_from, run_with, step, Agent, AgentStatus, SimOutcome, SimState, StepReport,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid ritual schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario has no open exit")]
    NoOpenExit,
    #[error("target is not reachable from the spawn area")]
    UnreachableTarget,
    #[error("spawn area overlaps a wall")]
    SpawnOverlapsWall,
    #[error("could only place {placed} of {requested} agents without overlap")]
    SpawnFailed { placed: usize, requested: usize },
    #[error("no venue geometry for year {0}")]
    UnknownPreset(i32),
}

impl SimError {
    /// Stable variant tag for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::InvalidParams(_) => "InvalidParams",
            SimError::InvalidSchedule(_) => "InvalidSchedule",
            SimError::InvalidScenario(_) => "InvalidScenario",
            SimError::NoOpenExit => "NoOpenExit",
            SimError::UnreachableTarget => "UnreachableTarget",
            SimError::SpawnOverlapsWall => "SpawnOverlapsWall",
            SimError::SpawnFailed { .. } => "SpawnFailed",
            SimError::UnknownPreset(_) => "UnknownPreset",
        }
    }
}
