//! Task layer: a per-agent Q-network over three meta-actions, chosen once
//! per subtask, with deterministic resolution into a concrete task and
//! subgoal. Infeasible meta-actions are masked out of both selection and
//! bootstrapping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SlotCaps;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::nn::{sync_target, AdamState, Gradients, Mlp, OutputHead, SyncMode};
use crate::policy::buffer::ReplayBuffer;
use crate::policy::features::upper_input_dim;
use crate::policy::lower::apply_step;
use crate::predict::Planner;
use crate::sim::agent::TaskKind;
use crate::sim::combat::advantage;
use crate::sim::perception::neighbor_sets;
use crate::sim::world::WorldState;

/// The three meta-actions available at a subtask boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaAction {
    Chase,
    Support,
    SearchOrEscape,
}

pub const META_ACTIONS: usize = 3;

impl MetaAction {
    pub const ALL: [MetaAction; META_ACTIONS] =
        [MetaAction::Chase, MetaAction::Support, MetaAction::SearchOrEscape];

    pub fn index(self) -> usize {
        match self {
            MetaAction::Chase => 0,
            MetaAction::Support => 1,
            MetaAction::SearchOrEscape => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<MetaAction> {
        MetaAction::ALL.get(i).copied()
    }
}

/// Which meta-actions agent `i` may take right now. SearchOrEscape is always
/// available, so the mask never empties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityMask {
    pub chase: bool,
    pub support: bool,
}

impl FeasibilityMask {
    pub fn allows(&self, action: MetaAction) -> bool {
        match action {
            MetaAction::Chase => self.chase,
            MetaAction::Support => self.support,
            MetaAction::SearchOrEscape => true,
        }
    }

    pub fn as_array(&self) -> [bool; META_ACTIONS] {
        [self.chase, self.support, true]
    }

    pub fn feasible_count(&self) -> usize {
        1 + usize::from(self.chase) + usize::from(self.support)
    }
}

/// Chase needs a visible enemy the agent holds an advantage over; Support
/// needs a communicable ally that is escaping or chasing.
pub fn feasibility_mask(world: &WorldState, i: usize) -> FeasibilityMask {
    let sets = neighbor_sets(&world.agents, &world.obstacles, i, &world.cfg);
    let me = &world.agents[i];
    let chase = sets
        .enemies
        .iter()
        .any(|&j| advantage(me, &world.agents[j]) > 0.0);
    let support = sets.allies.iter().any(|&j| {
        matches!(
            world.agents[j].task,
            TaskKind::Escaping | TaskKind::Chasing
        )
    });
    FeasibilityMask { chase, support }
}

/// Index of the best feasible action; ties break toward the lowest index.
/// `q` must cover all meta-actions.
pub fn masked_argmax(q: &[f64], mask: &[bool; META_ACTIONS]) -> usize {
    debug_assert_eq!(q.len(), META_ACTIONS);
    let mut best: Option<(f64, usize)> = None;
    for (a, (&v, &ok)) in q.iter().zip(mask).enumerate() {
        if ok && best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, a));
        }
    }
    best.expect("SearchOrEscape is always feasible").1
}

/// Epsilon-greedy over the feasible actions only.
pub fn select_task(
    q: &[f64],
    mask: &FeasibilityMask,
    epsilon: f64,
    rng: &mut impl Rng,
) -> MetaAction {
    let arr = mask.as_array();
    if epsilon > 0.0 && rng.gen_range(0.0..1.0) < epsilon {
        let feasible: Vec<usize> = (0..META_ACTIONS).filter(|&a| arr[a]).collect();
        let pick = feasible[rng.gen_range(0..feasible.len())];
        return MetaAction::from_index(pick).unwrap();
    }
    MetaAction::from_index(masked_argmax(q, &arr)).unwrap()
}

/// Turns a chosen meta-action into a concrete task and subgoal.
///
/// Chase locks onto the nearest visible enemy the agent has an advantage
/// over; Support onto the nearest communicable ally that is escaping or
/// chasing (ties toward the lower id, since neighbor sets are id-ordered and
/// comparisons are strict). SearchOrEscape becomes Escaping toward the
/// planner's escape subgoal when some visible enemy holds the advantage,
/// otherwise Searching toward the planner's search subgoal.
pub fn resolve_subgoal(
    world: &WorldState,
    i: usize,
    action: MetaAction,
    planner: &Planner,
) -> Result<(TaskKind, Vec2)> {
    let sets = neighbor_sets(&world.agents, &world.obstacles, i, &world.cfg);
    let me = &world.agents[i];
    match action {
        MetaAction::Chase => {
            let mut best: Option<(f64, usize)> = None;
            for &j in &sets.enemies {
                if advantage(me, &world.agents[j]) > 0.0 {
                    let d = me.position.distance(world.agents[j].position);
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, j));
                    }
                }
            }
            let (_, j) = best.ok_or_else(|| {
                Error::Infeasible("chase chosen with no advantaged visible enemy".into())
            })?;
            Ok((TaskKind::Chasing, world.agents[j].position))
        }
        MetaAction::Support => {
            let mut best: Option<(f64, usize)> = None;
            for &j in &sets.allies {
                if matches!(
                    world.agents[j].task,
                    TaskKind::Escaping | TaskKind::Chasing
                ) {
                    let d = me.position.distance(world.agents[j].position);
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, j));
                    }
                }
            }
            let (_, j) = best.ok_or_else(|| {
                Error::Infeasible("support chosen with no escaping or chasing ally".into())
            })?;
            Ok((TaskKind::Supporting, world.agents[j].position))
        }
        MetaAction::SearchOrEscape => {
            let threatened = sets
                .enemies
                .iter()
                .any(|&j| advantage(me, &world.agents[j]) < 0.0);
            if threatened {
                Ok((
                    TaskKind::Escaping,
                    planner.escape_subgoal(me.position, &world.cfg.arena),
                ))
            } else {
                Ok((
                    TaskKind::Searching,
                    planner.search_subgoal(me.position, &world.cfg.arena),
                ))
            }
        }
    }
}

/// Subtask reward: survivors at subtask end plus kills scored during it,
/// plus the accumulated movement rewards when feedback is enabled.
pub fn upper_reward(kills: usize, survivors: usize, lower_sum: f64, feedback: bool) -> f64 {
    let r_env = (kills + survivors) as f64;
    if feedback {
        r_env + lower_sum
    } else {
        r_env
    }
}

/// Epsilon anneal: linear from `start` to `end` over the first `end_at`
/// fraction of training, flat afterwards.
#[derive(Debug, Clone, Copy)]
pub struct EpsSchedule {
    pub start: f64,
    pub end: f64,
    pub end_at: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            start: 1.0,
            end: 0.05,
            end_at: 0.5,
        }
    }
}

impl EpsSchedule {
    pub fn at(&self, progress: f64) -> f64 {
        let p = (progress / self.end_at).clamp(0.0, 1.0);
        self.start + (self.end - self.start) * p
    }
}

/// Training constants for the task layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct UpperHyper {
    pub gamma: f64,
    pub batch: usize,
    pub buffer_cap: usize,
    pub alpha: f64,
    /// Decouple action choice (online net) from evaluation (target net) in
    /// the bootstrap; `false` bootstraps on the target net's own max.
    pub double_dqn: bool,
    /// Steps per subtask.
    pub h: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub sync_period: u64,
}

impl Default for UpperHyper {
    fn default() -> Self {
        UpperHyper {
            gamma: 0.99,
            batch: 64,
            buffer_cap: 100_000,
            alpha: 0.001,
            double_dqn: true,
            h: 10,
            eps_start: 1.0,
            eps_end: 0.05,
            sync_period: 100,
        }
    }
}

impl UpperHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !self.gamma.is_finite() {
            return Err(Error::Config("gamma must lie in [0, 1]".into()));
        }
        if self.batch == 0 || self.buffer_cap == 0 || self.sync_period == 0 || self.h == 0 {
            return Err(Error::Config(
                "batch, buffer_cap, sync_period, and h must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        for eps in [self.eps_start, self.eps_end] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::Config("epsilon must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn eps_schedule(&self) -> EpsSchedule {
        EpsSchedule {
            start: self.eps_start,
            end: self.eps_end,
            ..EpsSchedule::default()
        }
    }
}

/// One stored subtask of one agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperTransition {
    pub input: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_input: Vec<f64>,
    /// Feasibility at the next decision point, applied to the bootstrap.
    pub next_mask: [bool; META_ACTIONS],
    pub done: bool,
}

/// Online/target pair of one agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperNets {
    pub online: Mlp,
    pub target: Mlp,
    pub opt: AdamState,
}

/// Task layer of one team.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperPolicy {
    pub nets: Vec<UpperNets>,
    pub hyper: UpperHyper,
    rounds: u64,
}

impl UpperPolicy {
    pub fn new(
        n_allies: usize,
        caps: &SlotCaps,
        hyper: UpperHyper,
        rng: &mut impl Rng,
    ) -> Result<UpperPolicy> {
        hyper.validate()?;
        if n_allies == 0 {
            return Err(Error::Config("a team needs at least one agent".into()));
        }
        let in_dim = upper_input_dim(caps);
        let mut nets = Vec::with_capacity(n_allies);
        for _ in 0..n_allies {
            let online = Mlp::new(
                &Mlp::policy_dims(in_dim, META_ACTIONS),
                OutputHead::Linear,
                rng,
            )?;
            let opt = AdamState::new(&online, hyper.alpha);
            nets.push(UpperNets {
                target: online.clone(),
                online,
                opt,
            });
        }
        Ok(UpperPolicy {
            nets,
            hyper,
            rounds: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.nets.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Epsilon-greedy meta-action for agent `i`.
    pub fn select(
        &self,
        i: usize,
        input: &[f64],
        mask: &FeasibilityMask,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> Result<MetaAction> {
        let q = self.nets[i].online.forward(input)?;
        Ok(select_task(&q, mask, epsilon, rng))
    }

    /// One TD step per agent on its own buffer. Empty buffers are no-ops.
    pub fn dqn_update(
        &mut self,
        buffers: &[ReplayBuffer<UpperTransition>],
        rng: &mut impl Rng,
    ) -> Result<crate::policy::lower::UpdateReport> {
        debug_assert_eq!(buffers.len(), self.nets.len());
        let gamma = self.hyper.gamma;
        let double = self.hyper.double_dqn;
        let batch_size = self.hyper.batch;
        let mut report = crate::policy::lower::UpdateReport::default();
        for (nets, buffer) in self.nets.iter_mut().zip(buffers) {
            let batch = buffer.sample_indices(batch_size, rng);
            if batch.is_empty() {
                report.losses.push(Some(0.0));
                continue;
            }
            let scale = 1.0 / batch.len() as f64;
            let mut grads = Gradients::zeros_like(&nets.online);
            let mut loss = 0.0;
            for &b in &batch {
                let tr = buffer.get(b);
                let (q, cache) = nets.online.forward_cached(&tr.input)?;
                let y = if tr.done {
                    tr.reward
                } else {
                    let target_q = nets.target.forward(&tr.next_input)?;
                    let boot = if double {
                        let online_q = nets.online.forward(&tr.next_input)?;
                        target_q[masked_argmax(&online_q, &tr.next_mask)]
                    } else {
                        target_q[masked_argmax(&target_q, &tr.next_mask)]
                    };
                    tr.reward + gamma * boot
                };
                let e = q[tr.action] - y;
                loss += e * e * scale;
                let mut dy = vec![0.0; META_ACTIONS];
                dy[tr.action] = 2.0 * e * scale;
                let (g, _) = nets.online.backward(&cache, &dy)?;
                grads.add_scaled(&g, 1.0);
            }
            report
                .losses
                .push(apply_step(&mut nets.online, &mut nets.opt, &grads, loss)?);
        }
        self.rounds += 1;
        if self.rounds % self.hyper.sync_period == 0 {
            self.sync_targets()?;
        }
        Ok(report)
    }

    pub fn sync_targets(&mut self) -> Result<()> {
        for nets in &mut self.nets {
            sync_target(&nets.online, &mut nets.target, SyncMode::Hard)?;
        }
        Ok(())
    }
}
