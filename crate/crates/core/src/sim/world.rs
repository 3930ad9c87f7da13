//! The world container and its step function.

use crate::config::{EngagementConfig, SlotCaps};
use crate::error::{Error, Result};
use crate::sim::agent::{AgentState, Team};
use crate::sim::combat::{detect_collisions, resolve_attacks, Kill};
use crate::sim::kinematics::{step_kinematics, LowerAction};
use crate::sim::obstacles::ObstacleSet;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of a finished engagement from blue's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Blue,
    Red,
    /// Simultaneous elimination of both teams.
    Draw,
}

/// Everything that happened during one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub kills: Vec<Kill>,
    /// Per-agent (indexed by id) collision flags for this step, including
    /// arena-boundary contact.
    pub collisions: Vec<bool>,
    pub blue_survivors: usize,
    pub red_survivors: usize,
    /// Set when at least one team was eliminated this step.
    pub winner: Option<Winner>,
}

impl StepEvents {
    pub fn terminal(&self) -> bool {
        self.winner.is_some()
    }
}

/// Full simulation state. The RNG drives attack resolution only, so a world
/// cloned from the same seed replays bit-identically under equal actions.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub agents: Vec<AgentState>,
    pub obstacles: ObstacleSet,
    pub cfg: EngagementConfig,
    pub caps: SlotCaps,
    pub step_index: u64,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// Builds a world after checking that agent ids equal their indices
    /// (joint actions are id-indexed) and that the configs are sane. The
    /// seed drives attack resolution.
    pub fn new(
        agents: Vec<AgentState>,
        obstacles: ObstacleSet,
        cfg: EngagementConfig,
        caps: SlotCaps,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        caps.validate()?;
        for (i, a) in agents.iter().enumerate() {
            if a.id != i {
                return Err(Error::Config(format!(
                    "agent id {} at index {i}: ids must equal indices",
                    a.id
                )));
            }
        }
        Ok(WorldState {
            agents,
            obstacles,
            cfg,
            caps,
            step_index: 0,
            rng: rand::SeedableRng::seed_from_u64(seed),
        })
    }

    pub fn team_ids(&self, team: Team) -> Vec<usize> {
        self.agents
            .iter()
            .filter(|a| a.team == team)
            .map(|a| a.id)
            .collect()
    }

    pub fn survivors(&self, team: Team) -> usize {
        self.agents
            .iter()
            .filter(|a| a.team == team && a.alive)
            .count()
    }

    pub fn live_ids(&self) -> Vec<usize> {
        self.agents
            .iter()
            .filter(|a| a.alive)
            .map(|a| a.id)
            .collect()
    }
}

/// Advances the world one step under a joint action.
///
/// `actions[id]` must be `Some` exactly for agents alive at entry. Order of
/// operations: kinematics for every live agent, simultaneous attack
/// resolution on the moved state, collision detection, then deaths and the
/// step counter. Kills land at end of step, so an agent shot this step still
/// moves, fires and registers collisions first.
pub fn step_world(world: &mut WorldState, actions: &[Option<LowerAction>]) -> Result<StepEvents> {
    if actions.len() != world.agents.len() {
        return Err(Error::ActionMismatch(format!(
            "expected {} action slots, got {}",
            world.agents.len(),
            actions.len()
        )));
    }
    for (agent, action) in world.agents.iter().zip(actions) {
        match (agent.alive, action) {
            (true, None) => {
                return Err(Error::ActionMismatch(format!(
                    "live agent {} has no action",
                    agent.id
                )))
            }
            (false, Some(_)) => {
                return Err(Error::ActionMismatch(format!(
                    "dead agent {} was given an action",
                    agent.id
                )))
            }
            _ => {}
        }
    }

    let mut boundary = vec![false; world.agents.len()];
    for i in 0..world.agents.len() {
        if let Some(action) = actions[i] {
            let out = step_kinematics(&world.agents[i], action, &world.cfg)?;
            world.agents[i] = out.agent;
            boundary[i] = out.clamped;
        }
    }

    let kills = resolve_attacks(&world.agents, &world.cfg, &mut world.rng);
    let mut collisions = detect_collisions(&world.agents, &world.obstacles, &world.cfg);
    for (flag, clamped) in collisions.iter_mut().zip(&boundary) {
        *flag = *flag || *clamped;
    }

    for kill in &kills {
        let victim = &mut world.agents[kill.victim];
        victim.alive = false;
        victim.velocity = crate::geom::Vec2::ZERO;
    }

    world.step_index += 1;
    let blue_survivors = world.survivors(Team::Blue);
    let red_survivors = world.survivors(Team::Red);
    let winner = match (blue_survivors, red_survivors) {
        (0, 0) => Some(Winner::Draw),
        (0, _) => Some(Winner::Red),
        (_, 0) => Some(Winner::Blue),
        _ => None,
    };

    Ok(StepEvents {
        kills,
        collisions,
        blue_survivors,
        red_survivors,
        winner,
    })
}
