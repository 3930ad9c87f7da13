//! Team controllers: the common stepping interface plus the trained
//! two-layer controller used for evaluation and mirror matches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::nn::Mlp;
use crate::policy::features::{lower_actor_input, lower_actor_input_dim, upper_input, upper_input_dim};
use crate::policy::lower::select_action;
use crate::policy::upper::{feasibility_mask, resolve_subgoal, select_task};
use crate::predict::{Planner, PredictorParams};
use crate::sim::agent::Team;
use crate::sim::kinematics::LowerAction;
use crate::sim::perception::{
    apply_uncertainty_lower, apply_uncertainty_upper, build_lower_observation,
    build_upper_observation, UncertaintyModel,
};
use crate::sim::world::WorldState;

/// One team's decision maker: called once per step, returns an action per
/// live team agent, and may rewrite its own agents' task flags.
pub trait TeamPolicy {
    fn begin_episode(&mut self, world: &WorldState) -> Result<()>;
    fn decide(&mut self, world: &mut WorldState) -> Result<Vec<(usize, LowerAction)>>;

    /// Current subgoals and matching subtask-start anchors, one per team
    /// slot, for policies that steer through explicit movement subgoals.
    /// Evaluation reads these to report the movement return; scripted
    /// policies report nothing.
    fn movement_goals(&self) -> Option<(&[Vec2], &[Vec2])> {
        None
    }
}

/// Merges per-team action lists into the id-indexed joint action vector the
/// world step expects.
pub fn joint_actions(
    n_agents: usize,
    parts: &[Vec<(usize, LowerAction)>],
) -> Vec<Option<LowerAction>> {
    let mut out = vec![None; n_agents];
    for part in parts {
        for &(id, action) in part {
            out[id] = Some(action);
        }
    }
    out
}

/// Frozen two-layer controller for one team: task networks pick a meta-action
/// at every subtask boundary, the planner converts abstract choices into
/// subgoals, and the movement actors emit bounded actions every step.
///
/// Net slots are assigned round-robin over the team (slot k uses net
/// k mod n), so a controller trained at one team size can drive larger
/// teams; the fixed-slot observations keep every input dimension unchanged.
#[derive(Debug, Clone)]
pub struct HrlController {
    pub team: Team,
    pub uppers: Vec<Mlp>,
    pub actors: Vec<Mlp>,
    pub h: usize,
    /// Exploration rate for the task layer; zero for greedy evaluation.
    pub epsilon: f64,
    /// Pre-squash noise for the movement layer; zero for greedy evaluation.
    pub noise_sigma: f64,
    /// Observation degradation applied at decision time.
    pub uncertainty: UncertaintyModel,
    predictor_params: PredictorParams,
    planner: Planner,
    subgoals: Vec<Vec2>,
    /// Where each agent stood when its current subgoal was assigned.
    subtask_starts: Vec<Vec2>,
    seed: u64,
    episodes: u64,
    rng: ChaCha8Rng,
}

impl HrlController {
    pub fn new(
        team: Team,
        uppers: Vec<Mlp>,
        actors: Vec<Mlp>,
        h: usize,
        predictor_params: PredictorParams,
        seed: u64,
    ) -> Result<HrlController> {
        if uppers.is_empty() || actors.is_empty() {
            return Err(Error::Config("a controller needs at least one net per layer".into()));
        }
        if h == 0 {
            return Err(Error::Config("subtask length must be positive".into()));
        }
        let planner = Planner::new(team, predictor_params.clone(), seed)?;
        Ok(HrlController {
            team,
            uppers,
            actors,
            h,
            epsilon: 0.0,
            noise_sigma: 0.0,
            uncertainty: UncertaintyModel::NONE,
            predictor_params,
            planner,
            subgoals: Vec::new(),
            subtask_starts: Vec::new(),
            seed,
            episodes: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Net index for team slot `k`.
    fn net_for(&self, slot: usize, n_nets: usize) -> usize {
        slot % n_nets
    }

    pub fn subgoals(&self) -> &[Vec2] {
        &self.subgoals
    }
}

impl TeamPolicy for HrlController {
    fn begin_episode(&mut self, world: &WorldState) -> Result<()> {
        // nets sized for different slot capacities cannot read this world
        let want_upper = upper_input_dim(&world.caps);
        let want_actor = lower_actor_input_dim(&world.caps);
        if self.uppers.iter().any(|n| n.layers[0].in_dim != want_upper)
            || self.actors.iter().any(|n| n.layers[0].in_dim != want_actor)
        {
            return Err(Error::CheckpointMismatch(format!(
                "nets expect inputs {}/{}, world needs {}/{}",
                self.uppers[0].layers[0].in_dim,
                self.actors[0].layers[0].in_dim,
                want_upper,
                want_actor
            )));
        }
        self.episodes += 1;
        // distinct deterministic stream per episode
        let ep_seed = self.seed.wrapping_add(self.episodes.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.planner = Planner::new(self.team, self.predictor_params.clone(), ep_seed)?;
        self.rng = ChaCha8Rng::seed_from_u64(ep_seed ^ 0x5DEE_CE66);
        let ids = world.team_ids(self.team);
        self.subgoals = ids.iter().map(|&id| world.agents[id].position).collect();
        self.subtask_starts = self.subgoals.clone();
        Ok(())
    }

    fn decide(&mut self, world: &mut WorldState) -> Result<Vec<(usize, LowerAction)>> {
        let ids = world.team_ids(self.team);
        if self.subgoals.len() != ids.len() {
            return Err(Error::Config(
                "controller not initialized for this team size (call begin_episode)".into(),
            ));
        }
        self.planner.observe(world);
        let caps = world.caps;
        let v_max = world.cfg.v_max;

        if world.step_index % self.h as u64 == 0 {
            self.planner.refresh(&world.obstacles, &world.cfg)?;
            for (slot, &id) in ids.iter().enumerate() {
                if !world.agents[id].alive {
                    continue;
                }
                let mask = feasibility_mask(world, id);
                let mut obs =
                    build_upper_observation(&world.agents, &world.obstacles, id, &world.cfg, &caps);
                if !self.uncertainty.is_none() {
                    apply_uncertainty_upper(&mut obs, self.uncertainty, &mut self.rng);
                }
                let input = upper_input(&obs, v_max);
                let net = &self.uppers[self.net_for(slot, self.uppers.len())];
                let q = net.forward(&input)?;
                let action = select_task(&q, &mask, self.epsilon, &mut self.rng);
                let (task, subgoal) = resolve_subgoal(world, id, action, &self.planner)?;
                world.agents[id].task = task;
                self.subgoals[slot] = subgoal;
                self.subtask_starts[slot] = world.agents[id].position;
            }
        }

        let mut out = Vec::new();
        for (slot, &id) in ids.iter().enumerate() {
            if !world.agents[id].alive {
                continue;
            }
            let mut obs =
                build_lower_observation(&world.agents, &world.obstacles, id, &world.cfg, &caps);
            if !self.uncertainty.is_none() {
                apply_uncertainty_lower(&mut obs, self.uncertainty, &mut self.rng);
            }
            let input = lower_actor_input(&obs, self.subgoals[slot], v_max);
            let actor = &self.actors[self.net_for(slot, self.actors.len())];
            let action = select_action(actor, &input, self.noise_sigma, &mut self.rng)?;
            out.push((id, action));
        }
        Ok(out)
    }

    fn movement_goals(&self) -> Option<(&[Vec2], &[Vec2])> {
        Some((&self.subgoals, &self.subtask_starts))
    }
}
