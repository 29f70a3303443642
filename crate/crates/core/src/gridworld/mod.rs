//! Robot case study: maps, the movement controller, model emission and
//! transition estimation from recorded traces.

mod controller;
mod emit;
mod map;
mod traces;

pub use controller::{dijkstra_controller, step_cost, Move, MovementPolicy};
pub use emit::{emit_model, emit_text, robot_augment_spec, robot_objectives, RobotModelCfg};
pub use map::{draw_obstacles, generate_map, Cell, GridMap};
pub use traces::{estimate_transitions_from_traces, parse_traces, TraceRecord, TransitionTable};

/// Default penalty for entering a cell next to an obstacle.
pub const DEFAULT_OBSTACLE_PENALTY: f64 = 2.0;
/// Default obstacle threshold in standard deviations.
pub const DEFAULT_SIGMA: f64 = 1.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("no solvable map after {0} attempts")]
    Exhausted(usize),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("no observations for action `{action}` in state {state}")]
    EmptyCell { state: String, action: String },
}
