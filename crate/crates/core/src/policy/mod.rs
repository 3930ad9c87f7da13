//! Both decision layers and their shared plumbing: feature construction,
//! replay storage, the movement-level actor-critic ensemble, and the
//! task-level Q-learners.

pub mod buffer;
pub mod features;
pub mod lower;
pub mod upper;

pub use buffer::ReplayBuffer;
pub use lower::{
    avoidance_reward, intrinsic_reward, lower_reward, select_action, ActionValue, LowerHyper,
    LowerNets, LowerPolicy, LowerTransition, NoiseSchedule, UpdateReport,
};
pub use upper::{
    feasibility_mask, resolve_subgoal, select_task, upper_reward, EpsSchedule, FeasibilityMask,
    MetaAction, UpperHyper, UpperNets, UpperPolicy, UpperTransition, META_ACTIONS,
};
