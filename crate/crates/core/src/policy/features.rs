//! Feature vectors fed to the networks. All scaling happens here, when a
//! transition or decision input is built, so the network modules stay plain
//! numeric maps that tests can drive with hand-picked values.
//!
//! Scale conventions: positions shrink by 10x, velocities divide by `v_max`,
//! task codes divide by 3, masks and flags pass through.

use crate::config::SlotCaps;
use crate::geom::Vec2;
use crate::sim::agent::{AgentState, Team};
use crate::sim::kinematics::LowerAction;
use crate::sim::perception::{LowerObservation, UpperObservation};

pub const POS_SCALE: f64 = 0.1;
pub const TASK_SCALE: f64 = 1.0 / 3.0;

/// Actor input: the scaled movement-level observation followed by the
/// subgoal relative to the agent.
pub fn lower_actor_input(obs: &LowerObservation, subgoal: Vec2, v_max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lower_actor_input_dim_for(obs));
    out.extend_from_slice(&[
        obs.self_pos.x * POS_SCALE,
        obs.self_pos.y * POS_SCALE,
        obs.self_vel.x / v_max,
        obs.self_vel.y / v_max,
    ]);
    for s in obs.allies.iter().chain(&obs.enemies).chain(&obs.obstacles) {
        out.extend_from_slice(&[
            s.rel_pos.x * POS_SCALE,
            s.rel_pos.y * POS_SCALE,
            s.rel_vel.x / v_max,
            s.rel_vel.y / v_max,
            s.mask,
        ]);
    }
    let rel = subgoal - obs.self_pos;
    out.extend_from_slice(&[rel.x * POS_SCALE, rel.y * POS_SCALE]);
    out
}

fn lower_actor_input_dim_for(obs: &LowerObservation) -> usize {
    4 + 5 * (obs.allies.len() + obs.enemies.len() + obs.obstacles.len()) + 2
}

pub fn lower_actor_input_dim(caps: &SlotCaps) -> usize {
    LowerObservation::dim(caps) + 2
}

/// Task-level network input: the scaled upper observation.
pub fn upper_input(obs: &UpperObservation, v_max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(5 + 6 * obs.allies.len() + 5 * obs.enemies.len());
    out.extend_from_slice(&[
        obs.self_pos.x * POS_SCALE,
        obs.self_pos.y * POS_SCALE,
        obs.self_vel.x / v_max,
        obs.self_vel.y / v_max,
        obs.self_task * TASK_SCALE,
    ]);
    for s in &obs.allies {
        out.extend_from_slice(&[
            s.rel_pos.x * POS_SCALE,
            s.rel_pos.y * POS_SCALE,
            s.vel.x / v_max,
            s.vel.y / v_max,
            s.task_code * TASK_SCALE,
            s.mask,
        ]);
    }
    for s in &obs.enemies {
        out.extend_from_slice(&[
            s.rel_pos.x * POS_SCALE,
            s.rel_pos.y * POS_SCALE,
            s.vel.x / v_max,
            s.vel.y / v_max,
            s.mask,
        ]);
    }
    out
}

pub fn upper_input_dim(caps: &SlotCaps) -> usize {
    UpperObservation::dim(caps)
}

/// Action as the critic sees it: speed fraction and heading fraction of a
/// half turn, both in [-1, 1] territory.
pub fn action_features(a: &LowerAction, v_max: f64) -> [f64; 2] {
    [a.speed / v_max, a.heading / std::f64::consts::PI]
}

/// Bounds for an actor head that emits `(speed, heading)` directly.
pub fn actor_head_bounds(v_max: f64) -> (Vec<f64>, Vec<f64>) {
    (
        vec![0.0, -std::f64::consts::PI],
        vec![v_max, std::f64::consts::PI],
    )
}

/// An actor output is already a bounded `(speed, heading)` pair.
pub fn action_from_output(y: &[f64]) -> LowerAction {
    debug_assert_eq!(y.len(), 2);
    LowerAction {
        speed: y[0],
        heading: y[1],
    }
}

/// Critic action features of a raw actor output; identical to
/// [`action_features`] of the corresponding action.
pub fn output_to_features(y: &[f64], v_max: f64) -> [f64; 2] {
    debug_assert_eq!(y.len(), 2);
    [y[0] / v_max, y[1] / std::f64::consts::PI]
}

/// Chains a gradient in action-feature space back onto the actor output:
/// d(features)/d(output) is diagonal (1/v_max, 1/pi).
pub fn feature_grad_to_output(dfeat: [f64; 2], v_max: f64) -> [f64; 2] {
    [dfeat[0] / v_max, dfeat[1] / std::f64::consts::PI]
}

/// Joint-state block of a centralized critic input, built from one team's
/// perspective: that team's agents in id order, then the opposing agents in
/// id order (6 entries each: position, velocity, task code, alive flag),
/// then the team's subgoals (2 entries each). Dead agents contribute zeroed
/// slots with the alive flag down; `subgoals` is indexed by the team's
/// agents in id order.
pub fn team_state_features(
    agents: &[AgentState],
    team: Team,
    subgoals: &[Vec2],
    v_max: f64,
) -> Vec<f64> {
    let mut out = Vec::new();
    let mut write = |a: &AgentState| {
        if a.alive {
            out.extend_from_slice(&[
                a.position.x * POS_SCALE,
                a.position.y * POS_SCALE,
                a.velocity.x / v_max,
                a.velocity.y / v_max,
                f64::from(a.task.code()) * TASK_SCALE,
                1.0,
            ]);
        } else {
            out.extend_from_slice(&[0.0; 6]);
        }
    };
    let allies: Vec<&AgentState> = agents.iter().filter(|a| a.team == team).collect();
    debug_assert_eq!(allies.len(), subgoals.len(), "one subgoal per team agent");
    for a in &allies {
        write(a);
    }
    for a in agents.iter().filter(|a| a.team != team) {
        write(a);
    }
    for (a, q) in allies.iter().zip(subgoals) {
        if a.alive {
            out.extend_from_slice(&[q.x * POS_SCALE, q.y * POS_SCALE]);
        } else {
            out.extend_from_slice(&[0.0; 2]);
        }
    }
    out
}

pub fn team_state_dim(n_allies: usize, n_enemies: usize) -> usize {
    6 * (n_allies + n_enemies) + 2 * n_allies
}

/// Full critic input: the joint-state block followed by every team agent's
/// action features in id order.
pub fn critic_input(state: &[f64], actions: &[[f64; 2]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(state.len() + 2 * actions.len());
    out.extend_from_slice(state);
    for a in actions {
        out.extend_from_slice(a);
    }
    out
}

pub fn critic_input_dim(n_allies: usize, n_enemies: usize) -> usize {
    team_state_dim(n_allies, n_enemies) + 2 * n_allies
}

/// Index of agent `i`'s first action entry inside a critic input.
pub fn action_offset(state_len: usize, i: usize) -> usize {
    state_len + 2 * i
}
