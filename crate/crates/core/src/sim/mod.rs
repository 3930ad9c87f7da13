//! Engagement simulator: agents, obstacles, kinematics, perception, combat
//! and the world step function.

pub mod agent;
pub mod combat;
pub mod kinematics;
pub mod obstacles;
pub mod perception;
pub mod world;

pub use agent::{AgentState, TaskKind, Team};
pub use combat::{advantage, detect_collisions, in_attack_sector, resolve_attacks, Kill};
pub use kinematics::{step_kinematics, LowerAction, MoveOutcome};
pub use obstacles::{cover_rectangle, line_of_sight, CircleObstacle, ObstacleSet, RectObstacle};
pub use perception::{
    apply_uncertainty_lower, apply_uncertainty_upper, build_lower_observation,
    build_upper_observation, in_sensing_rect, neighbor_sets, LowerObservation, NeighborSets,
    ObsSlot, UncertaintyModel, UpperAllySlot, UpperEnemySlot, UpperObservation,
};
pub use world::{step_world, StepEvents, Winner, WorldState};
