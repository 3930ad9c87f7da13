//! Movement layer: per-agent actors on (observation, subgoal), centralized
//! critics on the joint state and joint action, and their update rules.
//!
//! Actors never see more than their own observation and subgoal; critics see
//! the team-joint state. The split is enforced by the input builders in
//! [`super::features`], not by convention.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::nn::{adam_step, sync_target, AdamState, Gradients, Mlp, OutputHead, SyncMode};
use crate::policy::buffer::ReplayBuffer;
use crate::policy::features::{
    action_from_output, action_offset, actor_head_bounds, critic_input, critic_input_dim,
    feature_grad_to_output, lower_actor_input_dim, output_to_features, team_state_dim,
};
use crate::sim::kinematics::LowerAction;
use crate::config::SlotCaps;

/// Training constants for the movement layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LowerHyper {
    pub gamma: f64,
    pub batch: usize,
    pub buffer_cap: usize,
    pub alpha: f64,
    /// Weight of the avoidance term in the per-agent reward; the intrinsic
    /// term gets the complement.
    pub eps1: f64,
    /// Exploration noise std-dev at the start and end of training, applied
    /// to the pre-squash actor output and annealed linearly.
    pub noise_start: f64,
    pub noise_end: f64,
    /// Hard target sync every this many update rounds.
    pub sync_period: u64,
}

impl Default for LowerHyper {
    fn default() -> Self {
        LowerHyper {
            gamma: 0.99,
            batch: 64,
            buffer_cap: 100_000,
            alpha: 0.001,
            eps1: 0.5,
            noise_start: 0.3,
            noise_end: 0.05,
            sync_period: 100,
        }
    }
}

impl LowerHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !self.gamma.is_finite() {
            return Err(Error::Config("gamma must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.eps1) {
            return Err(Error::Config("eps1 must lie in [0, 1]".into()));
        }
        if self.batch == 0 || self.buffer_cap == 0 || self.sync_period == 0 {
            return Err(Error::Config(
                "batch, buffer_cap, and sync_period must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0) || !(self.noise_start >= 0.0) || !(self.noise_end >= 0.0) {
            return Err(Error::Config(
                "alpha must be positive and noise levels nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Linear anneal between two noise levels over training progress in [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct NoiseSchedule {
    pub start: f64,
    pub end: f64,
}

impl NoiseSchedule {
    pub fn at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.start + (self.end - self.start) * p
    }
}

/// -1 on any collision this step, 0 otherwise.
pub fn avoidance_reward(collided: bool) -> f64 {
    if collided {
        -1.0
    } else {
        0.0
    }
}

/// Progress toward the subgoal, normalized by the distance at subtask start:
/// -1 when no progress has been made, 0 at the subgoal.
pub fn intrinsic_reward(p_now: Vec2, p_subtask_start: Vec2, subgoal: Vec2) -> f64 {
    let denom = subgoal.distance(p_subtask_start).max(1e-6);
    -subgoal.distance(p_now) / denom
}

/// Team movement reward: the weighted avoidance and intrinsic terms summed
/// over the live agents that contributed entries.
pub fn lower_reward(per_agent: &[(f64, f64)], eps1: f64) -> f64 {
    per_agent
        .iter()
        .map(|&(r_a, r_b)| eps1 * r_a + (1.0 - eps1) * r_b)
        .sum()
}

/// Bounded action from an actor. Exploration noise perturbs the pre-squash
/// output so the bounds survive any noise magnitude; zero noise is exact
/// greedy inference.
pub fn select_action(
    actor: &Mlp,
    input: &[f64],
    noise_sigma: f64,
    rng: &mut impl Rng,
) -> Result<LowerAction> {
    let mut z = actor.forward_raw(input)?;
    if noise_sigma > 0.0 {
        let noise = Normal::new(0.0, noise_sigma)
            .map_err(|_| Error::Config("noise sigma must be finite".into()))?;
        for v in z.iter_mut() {
            *v += noise.sample(rng);
        }
    }
    Ok(action_from_output(&actor.apply_head(&z)))
}

/// One stored step of the whole team. Feature vectors are finished at push
/// time; `next_*` fields describe the step after, under the subgoals active
/// then (a fresh subtask's subgoals when the step crossed a boundary).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerTransition {
    pub actor_inputs: Vec<Vec<f64>>,
    pub next_actor_inputs: Vec<Vec<f64>>,
    pub state: Vec<f64>,
    pub next_state: Vec<f64>,
    /// Action features actually taken, zeros for dead agents.
    pub actions: Vec<[f64; 2]>,
    pub reward: f64,
    pub done: bool,
    pub alive: Vec<bool>,
    pub next_alive: Vec<bool>,
}

/// Anything a policy-gradient step can query for a state-action value and
/// its gradient with respect to the input. Lets tests drive the actor update
/// with an analytic critic.
pub trait ActionValue {
    fn value(&self, input: &[f64]) -> Result<f64>;
    fn value_with_input_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl ActionValue for Mlp {
    fn value(&self, input: &[f64]) -> Result<f64> {
        Ok(self.forward(input)?[0])
    }

    fn value_with_input_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (y, cache) = self.forward_cached(input)?;
        let (_, dx) = self.backward(&cache, &[1.0])?;
        Ok((y[0], dx))
    }
}

/// All networks of one agent slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerNets {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub actor_opt: AdamState,
    pub critic: Mlp,
    pub critic_target: Mlp,
    pub critic_opt: AdamState,
}

/// Per-agent result of one update call.
#[derive(Debug, Clone, Default)]
pub struct UpdateReport {
    /// Loss per agent; `None` when that agent's step was skipped because the
    /// loss or gradients were non-finite.
    pub losses: Vec<Option<f64>>,
}

impl UpdateReport {
    pub fn skipped(&self) -> usize {
        self.losses.iter().filter(|l| l.is_none()).count()
    }
}

/// Movement layer of one team: per-agent actor/critic pairs plus targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerPolicy {
    pub nets: Vec<LowerNets>,
    pub hyper: LowerHyper,
    state_len: usize,
    v_max: f64,
    rounds: u64,
}

impl LowerPolicy {
    pub fn new(
        n_allies: usize,
        n_enemies: usize,
        caps: &SlotCaps,
        v_max: f64,
        hyper: LowerHyper,
        rng: &mut impl Rng,
    ) -> Result<LowerPolicy> {
        hyper.validate()?;
        if n_allies == 0 {
            return Err(Error::Config("a team needs at least one agent".into()));
        }
        let actor_in = lower_actor_input_dim(caps);
        let critic_in = critic_input_dim(n_allies, n_enemies);
        let (lo, hi) = actor_head_bounds(v_max);
        let mut nets = Vec::with_capacity(n_allies);
        for _ in 0..n_allies {
            let actor = Mlp::new(
                &Mlp::policy_dims(actor_in, 2),
                OutputHead::Bounded {
                    lo: lo.clone(),
                    hi: hi.clone(),
                },
                rng,
            )?;
            let critic = Mlp::new(&Mlp::policy_dims(critic_in, 1), OutputHead::Linear, rng)?;
            let actor_opt = AdamState::new(&actor, hyper.alpha);
            let critic_opt = AdamState::new(&critic, hyper.alpha);
            nets.push(LowerNets {
                actor_target: actor.clone(),
                critic_target: critic.clone(),
                actor,
                actor_opt,
                critic,
                critic_opt,
            });
        }
        Ok(LowerPolicy {
            nets,
            hyper,
            state_len: team_state_dim(n_allies, n_enemies),
            v_max,
            rounds: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.nets.len()
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Next-step action features per agent, from the target actors; zeros
    /// for agents dead at the next step.
    fn target_action_features(&self, tr: &LowerTransition) -> Result<Vec<[f64; 2]>> {
        let mut out = Vec::with_capacity(self.nets.len());
        for (j, nets) in self.nets.iter().enumerate() {
            if tr.next_alive[j] {
                let y = nets.actor_target.forward(&tr.next_actor_inputs[j])?;
                out.push(output_to_features(&y, self.v_max));
            } else {
                out.push([0.0, 0.0]);
            }
        }
        Ok(out)
    }

    /// One TD regression step for every agent's critic on a shared batch.
    pub fn critic_update(
        &mut self,
        buffer: &ReplayBuffer<LowerTransition>,
        batch: &[usize],
    ) -> Result<UpdateReport> {
        let next_feats: Vec<Vec<[f64; 2]>> = batch
            .iter()
            .map(|&b| self.target_action_features(buffer.get(b)))
            .collect::<Result<_>>()?;
        let scale = 1.0 / batch.len() as f64;
        let gamma = self.hyper.gamma;
        let mut report = UpdateReport::default();
        for nets in self.nets.iter_mut() {
            let mut grads = Gradients::zeros_like(&nets.critic);
            let mut loss = 0.0;
            for (&b, feats) in batch.iter().zip(&next_feats) {
                let tr = buffer.get(b);
                let input = critic_input(&tr.state, &tr.actions);
                let (q, cache) = nets.critic.forward_cached(&input)?;
                let y = if tr.done {
                    tr.reward
                } else {
                    let next_input = critic_input(&tr.next_state, feats);
                    tr.reward + gamma * nets.critic_target.forward(&next_input)?[0]
                };
                let e = q[0] - y;
                loss += e * e * scale;
                let (g, _) = nets.critic.backward(&cache, &[2.0 * e * scale])?;
                grads.add_scaled(&g, 1.0);
            }
            report
                .losses
                .push(apply_step(&mut nets.critic, &mut nets.critic_opt, &grads, loss)?);
        }
        Ok(report)
    }

    /// One policy-gradient ascent step for every agent's actor against its
    /// own critic, over the same shared batch.
    pub fn actor_update(
        &mut self,
        buffer: &ReplayBuffer<LowerTransition>,
        batch: &[usize],
    ) -> Result<UpdateReport> {
        let mut report = UpdateReport::default();
        for i in 0..self.nets.len() {
            let nets = &mut self.nets[i];
            let loss = actor_update_agent(
                &mut nets.actor,
                &mut nets.actor_opt,
                &nets.critic,
                buffer,
                batch,
                i,
                self.state_len,
                self.v_max,
            )?;
            report.losses.push(loss);
        }
        Ok(report)
    }

    /// Full update round: critics then actors on one shared batch, then a
    /// hard target sync at the configured cadence.
    pub fn update(
        &mut self,
        buffer: &ReplayBuffer<LowerTransition>,
        rng: &mut impl Rng,
    ) -> Result<(UpdateReport, UpdateReport)> {
        let batch = buffer.sample_indices(self.hyper.batch, rng);
        if batch.is_empty() {
            return Ok((UpdateReport::default(), UpdateReport::default()));
        }
        let critics = self.critic_update(buffer, &batch)?;
        let actors = self.actor_update(buffer, &batch)?;
        self.rounds += 1;
        if self.rounds % self.hyper.sync_period == 0 {
            self.sync_targets()?;
        }
        Ok((critics, actors))
    }

    pub fn sync_targets(&mut self) -> Result<()> {
        for nets in &mut self.nets {
            sync_target(&nets.actor, &mut nets.actor_target, SyncMode::Hard)?;
            sync_target(&nets.critic, &mut nets.critic_target, SyncMode::Hard)?;
        }
        Ok(())
    }
}

/// Ascends agent `i`'s actor on `critic`'s value with that agent's action
/// replaced by the actor output. Only transitions where the agent acted
/// contribute. Returns the loss (minus the mean value), or `None` when the
/// step was skipped as non-finite.
#[allow(clippy::too_many_arguments)]
pub fn actor_update_agent<C: ActionValue>(
    actor: &mut Mlp,
    opt: &mut AdamState,
    critic: &C,
    buffer: &ReplayBuffer<LowerTransition>,
    batch: &[usize],
    i: usize,
    state_len: usize,
    v_max: f64,
) -> Result<Option<f64>> {
    let n = batch
        .iter()
        .filter(|&&b| buffer.get(b).alive[i])
        .count();
    if n == 0 {
        return Ok(Some(0.0));
    }
    let scale = 1.0 / n as f64;
    let mut grads = Gradients::zeros_like(actor);
    let mut loss = 0.0;
    for &b in batch {
        let tr = buffer.get(b);
        if !tr.alive[i] {
            continue;
        }
        let (y, cache) = actor.forward_cached(&tr.actor_inputs[i])?;
        let mut actions = tr.actions.clone();
        actions[i] = output_to_features(&y, v_max);
        let input = critic_input(&tr.state, &actions);
        let (q, dq_dinput) = critic.value_with_input_grad(&input)?;
        loss -= q * scale;
        let off = action_offset(state_len, i);
        // d(loss)/d(features) of agent i, chained onto the actor output
        let dfeat = [-dq_dinput[off] * scale, -dq_dinput[off + 1] * scale];
        let dy = feature_grad_to_output(dfeat, v_max);
        let (g, _) = actor.backward(&cache, &dy)?;
        grads.add_scaled(&g, 1.0);
    }
    apply_step(actor, opt, &grads, loss)
}

/// Applies one optimizer step, converting a non-finite loss or gradient into
/// a skip (`None`) that leaves the network untouched.
pub(crate) fn apply_step(
    net: &mut Mlp,
    opt: &mut AdamState,
    grads: &Gradients,
    loss: f64,
) -> Result<Option<f64>> {
    if !loss.is_finite() {
        return Ok(None);
    }
    match adam_step(net, grads, opt) {
        Ok(()) => Ok(Some(loss)),
        Err(Error::NonFinite(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn avoidance_reward_is_a_flag() {
        assert_eq!(avoidance_reward(true), -1.0);
        assert_eq!(avoidance_reward(false), 0.0);
    }

    #[test]
    fn intrinsic_reward_normalizes_progress() {
        let start = Vec2::new(0.0, 0.0);
        let goal = Vec2::new(4.0, 0.0);
        assert_relative_eq!(intrinsic_reward(start, start, goal), -1.0);
        assert_relative_eq!(intrinsic_reward(goal, start, goal), 0.0);
        assert_relative_eq!(intrinsic_reward(Vec2::new(2.0, 0.0), start, goal), -0.5);
        // starting on the subgoal is guarded, not a division blowup
        assert_eq!(intrinsic_reward(goal, goal, goal), 0.0);
    }

    #[test]
    fn team_reward_blends_the_two_terms() {
        let per_agent = [(-1.0, -0.25), (0.0, -0.5)];
        assert_relative_eq!(lower_reward(&per_agent, 1.0), -1.0);
        assert_relative_eq!(lower_reward(&per_agent, 0.0), -0.75);
        let all_bad = [(-1.0, -1.0); 4];
        assert_relative_eq!(lower_reward(&all_bad, 0.5), -4.0);
    }

    #[test]
    fn noise_schedule_is_linear() {
        let sched = NoiseSchedule {
            start: 0.3,
            end: 0.05,
        };
        assert_relative_eq!(sched.at(0.0), 0.3);
        assert_relative_eq!(sched.at(1.0), 0.05);
        assert_relative_eq!(sched.at(0.5), 0.175);
        assert_relative_eq!(sched.at(7.0), 0.05);
    }

    fn tiny_actor(rng: &mut ChaCha8Rng) -> Mlp {
        let (lo, hi) = actor_head_bounds(2.0);
        Mlp::new(&[4, 2], OutputHead::Bounded { lo, hi }, rng).unwrap()
    }

    #[test]
    fn zero_noise_actions_are_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actor = tiny_actor(&mut rng);
        let input = [0.3, -0.1, 0.7, 0.2];
        let a = select_action(&actor, &input, 0.0, &mut rng).unwrap();
        let b = select_action(&actor, &input, 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=2.0).contains(&a.speed));
        assert!(a.heading.abs() <= std::f64::consts::PI);
    }

    #[test]
    fn bounds_survive_any_noise_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let actor = tiny_actor(&mut rng);
        for k in 0..1_000_000usize {
            let input = [
                (k % 17) as f64 - 8.0,
                (k % 5) as f64,
                -((k % 3) as f64),
                0.25,
            ];
            let sigma = if k % 2 == 0 { 50.0 } else { 0.7 };
            let a = select_action(&actor, &input, sigma, &mut rng).unwrap();
            assert!((0.0..=2.0).contains(&a.speed), "speed {}", a.speed);
            assert!(a.heading.abs() <= std::f64::consts::PI, "heading {}", a.heading);
        }
    }

    /// One-ally zero-enemy transition in a 10-entry critic input space:
    /// state block of 8, one action pair.
    fn toy_transition(reward: f64, done: bool) -> LowerTransition {
        LowerTransition {
            actor_inputs: vec![vec![0.1, 0.2, 0.3, 0.4]],
            next_actor_inputs: vec![vec![0.5, 0.6, 0.7, 0.8]],
            state: vec![0.1; 8],
            next_state: vec![0.2; 8],
            actions: vec![[0.5, -0.25]],
            reward,
            done,
            alive: vec![true],
            next_alive: vec![true],
        }
    }

    /// Linear single-layer net with every weight 0.1 and zero bias.
    fn flat_linear(in_dim: usize, out_dim: usize) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[in_dim, out_dim], OutputHead::Linear, &mut rng).unwrap();
        for l in net.layers.iter_mut() {
            for w in l.w.iter_mut() {
                *w = 0.1;
            }
            for b in l.b.iter_mut() {
                *b = 0.0;
            }
        }
        net
    }

    fn toy_policy(hyper: LowerHyper) -> LowerPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lo, hi) = actor_head_bounds(2.0);
        let actor = Mlp::new(&[4, 2], OutputHead::Bounded { lo, hi }, &mut rng).unwrap();
        let critic = flat_linear(10, 1);
        let alpha = hyper.alpha;
        let nets = LowerNets {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: AdamState::new(&actor, alpha),
            critic_opt: AdamState::new(&critic, alpha),
            actor,
            critic,
        };
        LowerPolicy {
            nets: vec![nets],
            hyper,
            state_len: 8,
            v_max: 2.0,
            rounds: 0,
        }
    }

    #[test]
    fn critic_loss_matches_hand_arithmetic() {
        // all critic weights are 0.1, bias 0, single linear layer:
        // q = 0.1 * sum(input)
        let mut policy = toy_policy(LowerHyper {
            gamma: 0.5,
            ..LowerHyper::default()
        });
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(toy_transition(2.0, false));

        // the target actor output for next input [0.5 .. 0.8]:
        let y = policy.nets[0]
            .actor_target
            .forward(&[0.5, 0.6, 0.7, 0.8])
            .unwrap();
        let feats = output_to_features(&y, 2.0);
        // hand-computed values, all flat-0.1 linear critic arithmetic
        let q = 0.1 * (8.0 * 0.1 + 0.5 + -0.25);
        let q_next = 0.1 * (8.0 * 0.2 + feats[0] + feats[1]);
        let y_target = 2.0 + 0.5 * q_next;
        let expected = (q - y_target) * (q - y_target);

        let report = policy.critic_update(&buffer, &[0]).unwrap();
        assert_relative_eq!(report.losses[0].unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn terminal_and_discount_free_targets_drop_the_bootstrap() {
        for (gamma, done) in [(0.0, false), (0.9, true)] {
            let mut policy = toy_policy(LowerHyper {
                gamma,
                ..LowerHyper::default()
            });
            let mut buffer = ReplayBuffer::new(4);
            buffer.push(toy_transition(2.0, done));
            let q = 0.1 * (8.0 * 0.1 + 0.5 + -0.25);
            let expected = (q - 2.0) * (q - 2.0);
            let report = policy.critic_update(&buffer, &[0]).unwrap();
            assert_relative_eq!(report.losses[0].unwrap(), expected, max_relative = 1e-12);
        }
    }

    /// Analytic critic: value = -(f0^2 + f1^2) over agent 0's action
    /// features, ignoring the state block entirely.
    struct QuadraticPenalty {
        state_len: usize,
    }

    impl ActionValue for QuadraticPenalty {
        fn value(&self, input: &[f64]) -> Result<f64> {
            let f = &input[self.state_len..];
            Ok(-(f[0] * f[0] + f[1] * f[1]))
        }

        fn value_with_input_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
            let mut grad = vec![0.0; input.len()];
            let f = &input[self.state_len..];
            grad[self.state_len] = -2.0 * f[0];
            grad[self.state_len + 1] = -2.0 * f[1];
            Ok((-(f[0] * f[0] + f[1] * f[1]), grad))
        }
    }

    struct Constant;

    impl ActionValue for Constant {
        fn value(&self, _input: &[f64]) -> Result<f64> {
            Ok(7.0)
        }

        fn value_with_input_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((7.0, vec![0.0; input.len()]))
        }
    }

    #[test]
    fn flat_critic_leaves_the_actor_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut actor = tiny_actor(&mut rng);
        let before = actor.clone();
        let mut opt = AdamState::new(&actor, 0.001);
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(toy_transition(0.0, false));
        let loss = actor_update_agent(
            &mut actor,
            &mut opt,
            &Constant,
            &buffer,
            &[0],
            0,
            8,
            2.0,
        )
        .unwrap();
        // loss = -(mean q) for frozen nets
        assert_relative_eq!(loss.unwrap(), -7.0, max_relative = 1e-12);
        assert_eq!(actor.layers[0].w, before.layers[0].w);
        assert_eq!(actor.layers[0].b, before.layers[0].b);
    }

    #[test]
    fn quadratic_critic_drives_the_action_toward_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut actor = tiny_actor(&mut rng);
        let mut opt = AdamState::new(&actor, 0.01);
        let critic = QuadraticPenalty { state_len: 8 };
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(toy_transition(0.0, false));
        let initial = {
            let y = actor.forward(&buffer.get(0).actor_inputs[0]).unwrap();
            let f = output_to_features(&y, 2.0);
            f[0] * f[0] + f[1] * f[1]
        };
        for _ in 0..400 {
            actor_update_agent(&mut actor, &mut opt, &critic, &buffer, &[0], 0, 8, 2.0)
                .unwrap()
                .unwrap();
        }
        let y = actor.forward(&buffer.get(0).actor_inputs[0]).unwrap();
        let f = output_to_features(&y, 2.0);
        let norm2 = f[0] * f[0] + f[1] * f[1];
        assert!(
            norm2 < 0.01 && norm2 < initial,
            "action feature norm^2 {norm2} did not shrink from {initial}"
        );
    }

    #[test]
    fn dead_agent_batches_are_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut actor = tiny_actor(&mut rng);
        let before = actor.clone();
        let mut opt = AdamState::new(&actor, 0.001);
        let mut tr = toy_transition(0.0, false);
        tr.alive = vec![false];
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(tr);
        let loss = actor_update_agent(
            &mut actor,
            &mut opt,
            &QuadraticPenalty { state_len: 8 },
            &buffer,
            &[0],
            0,
            8,
            2.0,
        )
        .unwrap();
        assert_eq!(loss, Some(0.0));
        assert_eq!(actor.layers[0].w, before.layers[0].w);
    }

    #[test]
    fn non_finite_rewards_skip_the_step_and_keep_params() {
        let mut policy = toy_policy(LowerHyper::default());
        let before = policy.nets[0].critic.clone();
        let mut buffer = ReplayBuffer::new(4);
        buffer.push(toy_transition(f64::NAN, false));
        let report = policy.critic_update(&buffer, &[0]).unwrap();
        assert_eq!(report.losses[0], None);
        assert_eq!(report.skipped(), 1);
        assert_eq!(policy.nets[0].critic.layers[0].w, before.layers[0].w);
    }

    #[test]
    fn full_policy_round_trains_and_syncs_on_schedule() {
        let caps = SlotCaps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let hyper = LowerHyper {
            batch: 4,
            sync_period: 2,
            ..LowerHyper::default()
        };
        let mut policy = LowerPolicy::new(2, 2, &caps, 2.0, hyper, &mut rng).unwrap();
        let actor_in = lower_actor_input_dim(&caps);
        let state_len = team_state_dim(2, 2);
        let mut buffer = ReplayBuffer::new(16);
        for k in 0..6 {
            buffer.push(LowerTransition {
                actor_inputs: vec![vec![0.1 * k as f64; actor_in]; 2],
                next_actor_inputs: vec![vec![0.1 * k as f64 + 0.05; actor_in]; 2],
                state: vec![0.05 * k as f64; state_len],
                next_state: vec![0.05 * k as f64 + 0.01; state_len],
                actions: vec![[0.4, 0.1], [0.6, -0.2]],
                reward: -0.5,
                done: k == 5,
                alive: vec![true, true],
                next_alive: vec![true, k != 5],
            });
        }
        // after one round targets still differ from online nets
        let (critics, actors) = policy.update(&buffer, &mut rng).unwrap();
        assert_eq!(critics.skipped(), 0);
        assert_eq!(actors.skipped(), 0);
        assert!(critics.losses.iter().all(|l| l.unwrap().is_finite()));
        let drifted = policy.nets[0].critic.layers[0].w != policy.nets[0].critic_target.layers[0].w;
        assert!(drifted, "online critic should move away from its target");
        // second round crosses sync_period = 2, so targets snap back
        policy.update(&buffer, &mut rng).unwrap();
        for nets in &policy.nets {
            assert_eq!(nets.critic.layers[0].w, nets.critic_target.layers[0].w);
            assert_eq!(nets.actor.layers[0].w, nets.actor_target.layers[0].w);
        }
        assert_eq!(policy.rounds(), 2);
    }

    #[test]
    fn hyper_validation_rejects_bad_weights() {
        let bad = LowerHyper {
            eps1: 1.5,
            ..LowerHyper::default()
        };
        assert!(bad.validate().is_err());
        let bad = LowerHyper {
            gamma: -0.1,
            ..LowerHyper::default()
        };
        assert!(bad.validate().is_err());
        assert!(LowerHyper::default().validate().is_ok());
    }

    #[test]
    fn intrinsic_reward_is_never_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let p = Vec2::new(rng.gen_range(0.0..30.0), rng.gen_range(0.0..20.0));
            let s = Vec2::new(rng.gen_range(0.0..30.0), rng.gen_range(0.0..20.0));
            let q = Vec2::new(rng.gen_range(0.0..30.0), rng.gen_range(0.0..20.0));
            let r = intrinsic_reward(p, s, q);
            assert!(r <= 0.0);
            assert_eq!(r == 0.0, p == q);
        }
        assert_abs_diff_eq!(
            intrinsic_reward(Vec2::new(1.0, 1.0), Vec2::ZERO, Vec2::new(1.0, 1.0)),
            0.0
        );
    }
}
