//! Attack resolution, situational advantage, and collision flags.

use crate::config::EngagementConfig;
use crate::geom::{wrap_angle, Vec2};
use crate::sim::agent::AgentState;
use crate::sim::obstacles::ObstacleSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One successful attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kill {
    pub attacker: usize,
    pub victim: usize,
}

/// Situational advantage of `agent` over `enemy`: the cosine of the angle
/// between the agent's velocity and the bearing to the enemy. Positive means
/// closing in head-on, negative means the enemy sits behind. Zero velocity or
/// coincident positions give the neutral value 0.
pub fn advantage(agent: &AgentState, enemy: &AgentState) -> f64 {
    let to_enemy = enemy.position - agent.position;
    let speed = agent.velocity.norm();
    let dist = to_enemy.norm();
    if speed == 0.0 || dist == 0.0 {
        return 0.0;
    }
    agent.velocity.dot(to_enemy) / (speed * dist)
}

/// True when `target` lies inside the attacker's engagement sector: within
/// `attack_radius` of the attacker and within `attack_angle / 2` of its
/// stored heading.
pub fn in_attack_sector(attacker: &AgentState, target: Vec2, cfg: &EngagementConfig) -> bool {
    let rel = target - attacker.position;
    let dist = rel.norm();
    if dist > cfg.attack_radius || dist == 0.0 {
        return false;
    }
    let bearing = wrap_angle(rel.heading() - attacker.heading);
    bearing.abs() <= 0.5 * cfg.attack_angle
}

/// Resolves all attacks for one step simultaneously.
///
/// Every agent alive at entry fires at every live opponent inside its sector
/// with an independent hit probability, in ascending (attacker, victim) id
/// order so the RNG stream is reproducible. Deaths are reported, not applied;
/// an agent killed this step still fires this step.
pub fn resolve_attacks<R: Rng>(
    agents: &[AgentState],
    cfg: &EngagementConfig,
    rng: &mut R,
) -> Vec<Kill> {
    let mut kills = Vec::new();
    for attacker in agents.iter().filter(|a| a.alive) {
        for victim in agents.iter().filter(|v| v.alive) {
            if victim.team == attacker.team {
                continue;
            }
            if !in_attack_sector(attacker, victim.position, cfg) {
                continue;
            }
            if rng.gen_bool(cfg.hit_prob) {
                kills.push(Kill {
                    attacker: attacker.id,
                    victim: victim.id,
                });
            }
        }
    }
    kills
}

/// Per-agent collision flags: true when a live agent stands closer than
/// `2 * avoid_radius` to another live agent, or closer than
/// `avoid_radius + circle radius` to an obstacle circle. Collisions carry no
/// physics; they only feed the avoidance reward.
pub fn detect_collisions(
    agents: &[AgentState],
    obstacles: &ObstacleSet,
    cfg: &EngagementConfig,
) -> Vec<bool> {
    let mut flags = vec![false; agents.len()];
    for (i, a) in agents.iter().enumerate() {
        if !a.alive {
            continue;
        }
        for b in agents.iter() {
            if b.id == a.id || !b.alive {
                continue;
            }
            if a.position.distance(b.position) < 2.0 * cfg.avoid_radius {
                flags[i] = true;
                break;
            }
        }
        if !flags[i] {
            for c in &obstacles.circles {
                if a.position.distance(c.center) < cfg.avoid_radius + c.radius {
                    flags[i] = true;
                    break;
                }
            }
        }
    }
    flags
}
