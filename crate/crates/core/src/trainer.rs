//! Cross-training of the two decision layers against a scripted or frozen
//! opponent, frozen-policy evaluation, and team-size sweeps.
//!
//! One training step works through both layers at once: at every subtask
//! boundary the task networks re-decide and the finished subtask becomes one
//! stored task-level transition per agent; every step the movement actors
//! act and the whole team's step becomes one stored movement transition.
//! Movement updates run once per executed step, task updates once per
//! boundary, both sampling with replacement, so the update counts follow
//! the episode schedule exactly.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, CheckpointManifest, load_checkpoint, CHECKPOINT_SCHEMA};
use crate::control::{joint_actions, TeamPolicy};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::metrics::{eval_table, sweep_table, timing_table, train_table, Cell, MetricTable};
use crate::opponents::{OpponentKind, ScriptedOpponent};
use crate::policy::features::{
    action_features, lower_actor_input, lower_actor_input_dim, team_state_features, upper_input,
};
use crate::policy::lower::select_action;
use crate::policy::upper::{feasibility_mask, resolve_subgoal, upper_reward, META_ACTIONS};
use crate::policy::{
    avoidance_reward, intrinsic_reward, lower_reward, LowerHyper, LowerPolicy, LowerTransition,
    NoiseSchedule, ReplayBuffer, UpperHyper, UpperPolicy, UpperTransition,
};
use crate::predict::{Planner, PredictorParams};
use crate::scenario::{generate_scenario, instance_seed, ScenarioSpec};
use crate::sim::agent::Team;
use crate::sim::perception::{build_lower_observation, build_upper_observation};
use crate::sim::world::{step_world, Winner};

/// Training aborts once this many per-network update steps have been thrown
/// away as non-finite; a healthy run skips none.
pub const DIVERGENCE_SKIP_LIMIT: u64 = 100;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Full specification of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Steps per episode before the engagement counts as a timeout.
    pub max_steps: u64,
    /// Distinct spawn layouts visited round-robin over the episodes.
    pub instances: usize,
    pub seed: u64,
    pub scenario: ScenarioSpec,
    pub opponent: OpponentKind,
    /// Feed the accumulated movement rewards of each subtask into the task
    /// layer's reward; without it the task layer learns from engagement
    /// outcomes alone.
    pub feedback: bool,
    pub lower: LowerHyper,
    pub upper: UpperHyper,
    pub predictor: PredictorParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 60,
            max_steps: 300,
            instances: 100,
            seed: 0,
            scenario: ScenarioSpec::default(),
            opponent: OpponentKind::Random,
            feedback: true,
            lower: LowerHyper::default(),
            upper: UpperHyper::default(),
            predictor: PredictorParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.max_steps == 0 || self.instances == 0 {
            return Err(Error::Config(
                "episodes, max_steps, and instances must be positive".into(),
            ));
        }
        self.scenario.validate()?;
        self.lower.validate()?;
        self.upper.validate()?;
        self.predictor.validate()?;
        Ok(())
    }
}

/// Everything a finished training run hands back.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub checkpoint: Checkpoint,
    /// One row per episode.
    pub table: MetricTable,
    pub wins: usize,
    pub episodes: usize,
    pub lower_updates: u64,
    pub upper_updates: u64,
    pub skipped_updates: u64,
}

/// A task-level transition waiting for its subtask to finish.
struct PendingUpper {
    input: Vec<f64>,
    action: usize,
}

/// A movement transition waiting for the next step's inputs.
struct PendingLower {
    actor_inputs: Vec<Vec<f64>>,
    state: Vec<f64>,
    actions: Vec<[f64; 2]>,
    alive: Vec<bool>,
    reward: f64,
    done: bool,
}

struct EpisodeStats {
    world_seed: u64,
    steps: u64,
    episode_return: f64,
    winner: Option<Winner>,
    blue_alive: usize,
    red_alive: usize,
    lower_updates: u64,
    upper_updates: u64,
    skipped: u64,
}

struct Trainer {
    cfg: TrainConfig,
    lower: LowerPolicy,
    upper: UpperPolicy,
    lower_buffer: ReplayBuffer<LowerTransition>,
    upper_buffers: Vec<ReplayBuffer<UpperTransition>>,
    opponent: Box<dyn TeamPolicy>,
    rng: ChaCha8Rng,
    skipped_total: u64,
}

impl Trainer {
    fn new(cfg: &TrainConfig) -> Result<Trainer> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7EA4);
        let caps = cfg.scenario.caps;
        let v_max = cfg.scenario.engagement.v_max;
        let lower = LowerPolicy::new(
            cfg.scenario.blue,
            cfg.scenario.red,
            &caps,
            v_max,
            cfg.lower.clone(),
            &mut rng,
        )?;
        let upper = UpperPolicy::new(cfg.scenario.blue, &caps, cfg.upper.clone(), &mut rng)?;
        let upper_buffers = (0..cfg.scenario.blue)
            .map(|_| ReplayBuffer::new(cfg.upper.buffer_cap))
            .collect();
        let opponent = opponent_policy(&cfg.opponent, Team::Red, cfg.seed ^ 0x0DD5_EED0)?;
        Ok(Trainer {
            cfg: cfg.clone(),
            lower_buffer: ReplayBuffer::new(cfg.lower.buffer_cap),
            upper_buffers,
            lower,
            upper,
            opponent,
            rng,
            skipped_total: 0,
        })
    }

    fn check_divergence(&self) -> Result<()> {
        if self.skipped_total >= DIVERGENCE_SKIP_LIMIT {
            return Err(Error::Diverged(format!(
                "{} update steps skipped as non-finite",
                self.skipped_total
            )));
        }
        Ok(())
    }

    /// Finishes the pending task-level transitions of every slot listed in
    /// `slots`, sharing the team's subtask statistics.
    #[allow(clippy::too_many_arguments)]
    fn finalize_uppers(
        pending: &mut [Option<PendingUpper>],
        slots: &[usize],
        kills: usize,
        survivors: usize,
        lower_sum: f64,
        feedback: bool,
        nexts: &[Option<(Vec<f64>, [bool; META_ACTIONS])>],
        buffers: &mut [ReplayBuffer<UpperTransition>],
    ) {
        for &s in slots {
            let Some(p) = pending[s].take() else { continue };
            let reward = upper_reward(kills, survivors, lower_sum, feedback);
            let (next_input, next_mask, done) = match &nexts[s] {
                Some((input, mask)) => (input.clone(), *mask, false),
                None => (p.input.clone(), [true; META_ACTIONS], true),
            };
            buffers[s].push(UpperTransition {
                input: p.input,
                action: p.action,
                reward,
                next_input,
                next_mask,
                done,
            });
        }
    }

    fn run_episode(&mut self, episode: usize) -> Result<EpisodeStats> {
        let cfg = self.cfg.clone();
        let h = cfg.upper.h as u64;
        let v_max = cfg.scenario.engagement.v_max;
        let caps = cfg.scenario.caps;
        let eps1 = cfg.lower.eps1;
        let actor_dim = lower_actor_input_dim(&caps);
        let state_len = self.lower.state_len();

        let denom = (cfg.episodes.max(2) - 1) as f64;
        let progress = episode as f64 / denom;
        let epsilon = cfg.upper.eps_schedule().at(progress);
        let noise = NoiseSchedule {
            start: cfg.lower.noise_start,
            end: cfg.lower.noise_end,
        }
        .at(progress);

        let world_seed = instance_seed(cfg.seed, episode % cfg.instances);
        let mut world = generate_scenario(&cfg.scenario, world_seed)?;
        let ep_seed = cfg.seed.wrapping_add(((episode + 1) as u64).wrapping_mul(GOLDEN));
        let mut planner = Planner::new(Team::Blue, cfg.predictor.clone(), ep_seed)?;
        self.opponent.begin_episode(&world)?;

        let ids = world.team_ids(Team::Blue);
        let n = ids.len();
        let mut subgoals: Vec<Vec2> = ids.iter().map(|&id| world.agents[id].position).collect();
        let mut starts = subgoals.clone();
        let mut pending_upper: Vec<Option<PendingUpper>> = (0..n).map(|_| None).collect();
        let mut pending_lower: Option<PendingLower> = None;
        let mut kills_subtask = 0usize;
        let mut lower_sum_subtask = 0.0;

        let mut stats = EpisodeStats {
            world_seed,
            steps: 0,
            episode_return: 0.0,
            winner: None,
            blue_alive: 0,
            red_alive: 0,
            lower_updates: 0,
            upper_updates: 0,
            skipped: 0,
        };

        let update_lower = |this: &mut Self, stats: &mut EpisodeStats| -> Result<()> {
            let (critics, actors) = this.lower.update(&this.lower_buffer, &mut this.rng)?;
            let skipped = (critics.skipped() + actors.skipped()) as u64;
            this.skipped_total += skipped;
            stats.skipped += skipped;
            stats.lower_updates += 1;
            this.check_divergence()
        };

        for t in 0..cfg.max_steps {
            planner.observe(&world);

            if t % h == 0 {
                planner.refresh(&world.obstacles, &world.cfg)?;
                let survivors = ids.iter().filter(|&&id| world.agents[id].alive).count();
                for (s, &id) in ids.iter().enumerate() {
                    if !world.agents[id].alive {
                        // died during the subtask: no further decisions
                        Self::finalize_uppers(
                            &mut pending_upper,
                            &[s],
                            kills_subtask,
                            survivors,
                            lower_sum_subtask,
                            cfg.feedback,
                            &vec![None; n],
                            &mut self.upper_buffers,
                        );
                        continue;
                    }
                    let mask = feasibility_mask(&world, id);
                    let obs =
                        build_upper_observation(&world.agents, &world.obstacles, id, &world.cfg, &caps);
                    let input = upper_input(&obs, v_max);
                    if pending_upper[s].is_some() {
                        let mut nexts: Vec<Option<(Vec<f64>, [bool; META_ACTIONS])>> =
                            (0..n).map(|_| None).collect();
                        nexts[s] = Some((input.clone(), mask.as_array()));
                        Self::finalize_uppers(
                            &mut pending_upper,
                            &[s],
                            kills_subtask,
                            survivors,
                            lower_sum_subtask,
                            cfg.feedback,
                            &nexts,
                            &mut self.upper_buffers,
                        );
                    }
                    let action = self.upper.select(s, &input, &mask, epsilon, &mut self.rng)?;
                    let (task, subgoal) = resolve_subgoal(&world, id, action, &planner)?;
                    world.agents[id].task = task;
                    subgoals[s] = subgoal;
                    starts[s] = world.agents[id].position;
                    pending_upper[s] = Some(PendingUpper {
                        input,
                        action: action.index(),
                    });
                }
                kills_subtask = 0;
                lower_sum_subtask = 0.0;
                let report = self.upper.dqn_update(&self.upper_buffers, &mut self.rng)?;
                let skipped = report.skipped() as u64;
                self.skipped_total += skipped;
                stats.skipped += skipped;
                stats.upper_updates += 1;
                self.check_divergence()?;
            }

            let state = team_state_features(&world.agents, Team::Blue, &subgoals, v_max);
            let mut actor_inputs = Vec::with_capacity(n);
            let mut action_feats = vec![[0.0, 0.0]; n];
            let mut alive = Vec::with_capacity(n);
            let mut blue_actions = Vec::new();
            for (s, &id) in ids.iter().enumerate() {
                alive.push(world.agents[id].alive);
                if !world.agents[id].alive {
                    actor_inputs.push(vec![0.0; actor_dim]);
                    continue;
                }
                let obs =
                    build_lower_observation(&world.agents, &world.obstacles, id, &world.cfg, &caps);
                let input = lower_actor_input(&obs, subgoals[s], v_max);
                let action = select_action(&self.lower.nets[s].actor, &input, noise, &mut self.rng)?;
                action_feats[s] = action_features(&action, v_max);
                actor_inputs.push(input);
                blue_actions.push((id, action));
            }

            if let Some(p) = pending_lower.take() {
                self.lower_buffer.push(LowerTransition {
                    actor_inputs: p.actor_inputs,
                    next_actor_inputs: actor_inputs.clone(),
                    state: p.state,
                    next_state: state.clone(),
                    actions: p.actions,
                    reward: p.reward,
                    done: p.done,
                    alive: p.alive,
                    next_alive: alive.clone(),
                });
                update_lower(self, &mut stats)?;
            }

            let red_actions = self.opponent.decide(&mut world)?;
            let joint = joint_actions(world.agents.len(), &[blue_actions, red_actions]);
            let events = step_world(&mut world, &joint)?;
            stats.steps += 1;

            let mut per_agent = Vec::new();
            for (s, &id) in ids.iter().enumerate() {
                if alive[s] {
                    per_agent.push((
                        avoidance_reward(events.collisions[id]),
                        intrinsic_reward(world.agents[id].position, starts[s], subgoals[s]),
                    ));
                }
            }
            let reward = lower_reward(&per_agent, eps1);
            stats.episode_return += reward;
            lower_sum_subtask += reward;
            kills_subtask += events
                .kills
                .iter()
                .filter(|k| world.agents[k.victim].team == Team::Red)
                .count();

            pending_lower = Some(PendingLower {
                actor_inputs,
                state,
                actions: action_feats,
                alive,
                reward,
                done: events.terminal(),
            });

            if events.terminal() {
                stats.winner = events.winner;
                break;
            }
        }

        // finish the last movement transition: terminal steps need no next
        // inputs, a timeout bootstraps from the state after the final step
        let terminal = stats.winner.is_some();
        if let Some(p) = pending_lower.take() {
            let (next_actor_inputs, next_state, next_alive) = if terminal {
                (vec![vec![0.0; actor_dim]; n], vec![0.0; state_len], vec![false; n])
            } else {
                let state = team_state_features(&world.agents, Team::Blue, &subgoals, v_max);
                let mut inputs = Vec::with_capacity(n);
                let mut alive = Vec::with_capacity(n);
                for (s, &id) in ids.iter().enumerate() {
                    alive.push(world.agents[id].alive);
                    if world.agents[id].alive {
                        let obs = build_lower_observation(
                            &world.agents,
                            &world.obstacles,
                            id,
                            &world.cfg,
                            &caps,
                        );
                        inputs.push(lower_actor_input(&obs, subgoals[s], v_max));
                    } else {
                        inputs.push(vec![0.0; actor_dim]);
                    }
                }
                (inputs, state, alive)
            };
            self.lower_buffer.push(LowerTransition {
                actor_inputs: p.actor_inputs,
                next_actor_inputs,
                state: p.state,
                next_state,
                actions: p.actions,
                reward: p.reward,
                done: p.done,
                alive: p.alive,
                next_alive,
            });
            update_lower(self, &mut stats)?;
        }

        // finish every open subtask at the episode edge
        let survivors = ids.iter().filter(|&&id| world.agents[id].alive).count();
        let mut nexts: Vec<Option<(Vec<f64>, [bool; META_ACTIONS])>> = (0..n).map(|_| None).collect();
        if !terminal {
            for (s, &id) in ids.iter().enumerate() {
                if world.agents[id].alive && pending_upper[s].is_some() {
                    let mask = feasibility_mask(&world, id);
                    let obs =
                        build_upper_observation(&world.agents, &world.obstacles, id, &world.cfg, &caps);
                    nexts[s] = Some((upper_input(&obs, v_max), mask.as_array()));
                }
            }
        }
        let all: Vec<usize> = (0..n).collect();
        Self::finalize_uppers(
            &mut pending_upper,
            &all,
            kills_subtask,
            survivors,
            lower_sum_subtask,
            cfg.feedback,
            &nexts,
            &mut self.upper_buffers,
        );

        stats.blue_alive = survivors;
        stats.red_alive = world
            .agents
            .iter()
            .filter(|a| a.team == Team::Red && a.alive)
            .count();
        Ok(stats)
    }

    fn into_checkpoint(self) -> Checkpoint {
        let cfg = &self.cfg;
        Checkpoint {
            manifest: CheckpointManifest {
                schema: CHECKPOINT_SCHEMA,
                caps: cfg.scenario.caps,
                v_max: cfg.scenario.engagement.v_max,
                h: cfg.upper.h,
                n_allies: cfg.scenario.blue,
                n_enemies: cfg.scenario.red,
                predictor: cfg.predictor.clone(),
                feedback: cfg.feedback,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            lower: self.lower,
            upper: self.upper,
        }
    }
}

/// Runs one full training run and returns the trained checkpoint plus the
/// per-episode metric table.
pub fn train(cfg: &TrainConfig) -> Result<TrainResult> {
    let mut trainer = Trainer::new(cfg)?;
    let mut table = train_table();
    let mut wins = 0usize;
    let mut lower_updates = 0;
    let mut upper_updates = 0;
    for episode in 0..cfg.episodes {
        let stats = trainer.run_episode(episode)?;
        let win = stats.winner == Some(Winner::Blue);
        wins += usize::from(win);
        lower_updates += stats.lower_updates;
        upper_updates += stats.upper_updates;
        table.push(vec![
            Cell::UInt(episode as u64),
            Cell::UInt(stats.world_seed),
            Cell::UInt(stats.steps),
            Cell::Float(stats.episode_return),
            Cell::Bool(win),
            Cell::UInt(stats.blue_alive as u64),
            Cell::UInt(stats.red_alive as u64),
            Cell::UInt(stats.lower_updates),
            Cell::UInt(stats.upper_updates),
            Cell::UInt(stats.skipped),
        ]);
    }
    let skipped_updates = trainer.skipped_total;
    Ok(TrainResult {
        checkpoint: trainer.into_checkpoint(),
        table,
        wins,
        episodes: cfg.episodes,
        lower_updates,
        upper_updates,
        skipped_updates,
    })
}

/// Builds the red-side controller an opponent flag names. Mirror opponents
/// load the checkpoint directory and play it frozen.
pub fn opponent_policy(kind: &OpponentKind, team: Team, seed: u64) -> Result<Box<dyn TeamPolicy>> {
    Ok(match kind {
        OpponentKind::Expert => Box::new(ScriptedOpponent::expert(team, seed)),
        OpponentKind::Heuristic => Box::new(ScriptedOpponent::heuristic(team, seed)),
        OpponentKind::Random => Box::new(ScriptedOpponent::random(team, seed)),
        OpponentKind::Mirror(path) => Box::new(load_checkpoint(path)?.controller(team, seed)?),
    })
}

/// Frozen-match evaluation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub instances: usize,
    pub max_steps: u64,
    pub seed: u64,
    pub scenario: ScenarioSpec,
    /// Avoidance weight used when reporting movement returns.
    pub eps1: f64,
    /// When set, every instance's frames are logged to
    /// `replay_NNN.jsonl` inside this directory.
    pub replay_dir: Option<std::path::PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            instances: 100,
            max_steps: 300,
            seed: 0,
            scenario: ScenarioSpec::default(),
            eps1: LowerHyper::default().eps1,
            replay_dir: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 || self.max_steps == 0 {
            return Err(Error::Config("instances and max_steps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.eps1) {
            return Err(Error::Config("eps1 must lie in [0, 1]".into()));
        }
        self.scenario.validate()
    }
}

/// Outcome counts and tables of one evaluation run. Timeouts are tracked
/// separately; [`EvalStats::win_rate`] counts only outright wins, so a
/// timeout scores like a loss.
#[derive(Debug, Clone)]
pub struct EvalStats {
    pub instances: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub timeouts: usize,
    pub mean_steps: f64,
    /// Mean movement return per instance; zero when the blue policy does not
    /// report movement subgoals.
    pub mean_return: f64,
    /// One row per instance, fully deterministic.
    pub table: MetricTable,
    /// Wall-clock decision latencies, kept apart from the result table.
    pub timings: MetricTable,
    /// Mean blue decision latency across every step of every instance.
    pub mean_decision_ms: f64,
    /// Slowest single blue decision seen anywhere in the run.
    pub max_decision_ms: f64,
}

impl EvalStats {
    pub fn win_rate(&self) -> f64 {
        self.wins as f64 / self.instances as f64
    }

    /// Wins over decided engagements only (draws and timeouts excluded).
    pub fn decisive_win_rate(&self) -> f64 {
        let decided = self.wins + self.losses;
        if decided == 0 {
            return 0.0;
        }
        self.wins as f64 / decided as f64
    }
}

/// Plays `blue` against `red` over freshly generated instances and tallies
/// outcomes. Only blue's decision time is measured; it lands in the separate
/// timing table.
pub fn evaluate(
    blue: &mut dyn TeamPolicy,
    red: &mut dyn TeamPolicy,
    cfg: &EvalConfig,
) -> Result<EvalStats> {
    cfg.validate()?;
    if let Some(dir) = &cfg.replay_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut table = eval_table();
    let mut timings = timing_table();
    let (mut wins, mut losses, mut draws, mut timeouts) = (0usize, 0usize, 0usize, 0usize);
    let mut sum_steps = 0u64;
    let mut sum_return = 0.0;
    let mut all_decisions = 0u64;
    let mut all_total_s = 0.0f64;
    let mut all_max_s = 0.0f64;

    for k in 0..cfg.instances {
        let seed = instance_seed(cfg.seed, k);
        let mut world = generate_scenario(&cfg.scenario, seed)?;
        blue.begin_episode(&world)?;
        red.begin_episode(&world)?;
        let blue_ids = world.team_ids(Team::Blue);
        let mut replay = match &cfg.replay_dir {
            Some(dir) => {
                let mut w = crate::replay::ReplayWriter::create(&dir.join(format!("replay_{k:03}.jsonl")))?;
                w.record(&world)?;
                Some(w)
            }
            None => None,
        };

        let mut ret = 0.0;
        let mut steps = 0u64;
        let mut winner = None;
        let mut decisions = 0u64;
        let mut total_s = 0.0f64;
        let mut max_s = 0.0f64;

        for _ in 0..cfg.max_steps {
            let started = Instant::now();
            let blue_actions = blue.decide(&mut world)?;
            let spent = started.elapsed().as_secs_f64();
            decisions += 1;
            total_s += spent;
            max_s = max_s.max(spent);

            let goals = blue
                .movement_goals()
                .map(|(g, s)| (g.to_vec(), s.to_vec()));
            let alive_before: Vec<bool> =
                blue_ids.iter().map(|&id| world.agents[id].alive).collect();

            let red_actions = red.decide(&mut world)?;
            let joint = joint_actions(world.agents.len(), &[blue_actions, red_actions]);
            let events = step_world(&mut world, &joint)?;
            steps += 1;
            if let Some(w) = replay.as_mut() {
                w.record(&world)?;
            }

            if let Some((subgoals, starts)) = &goals {
                let mut per_agent = Vec::new();
                for (s, &id) in blue_ids.iter().enumerate() {
                    if alive_before[s] {
                        per_agent.push((
                            avoidance_reward(events.collisions[id]),
                            intrinsic_reward(world.agents[id].position, starts[s], subgoals[s]),
                        ));
                    }
                }
                ret += lower_reward(&per_agent, cfg.eps1);
            }

            if events.terminal() {
                winner = events.winner;
                break;
            }
        }

        if let Some(w) = replay.take() {
            w.finish()?;
        }
        let outcome = match winner {
            Some(Winner::Blue) => {
                wins += 1;
                "win"
            }
            Some(Winner::Red) => {
                losses += 1;
                "loss"
            }
            Some(Winner::Draw) => {
                draws += 1;
                "draw"
            }
            None => {
                timeouts += 1;
                "timeout"
            }
        };
        let blue_alive = world
            .agents
            .iter()
            .filter(|a| a.team == Team::Blue && a.alive)
            .count();
        let red_alive = world
            .agents
            .iter()
            .filter(|a| a.team == Team::Red && a.alive)
            .count();
        sum_steps += steps;
        sum_return += ret;

        table.push(vec![
            Cell::UInt(k as u64),
            Cell::UInt(seed),
            Cell::UInt(steps),
            Cell::Text(outcome.to_string()),
            Cell::Bool(winner == Some(Winner::Blue)),
            Cell::UInt(blue_alive as u64),
            Cell::UInt(red_alive as u64),
            Cell::Float(ret),
        ]);
        timings.push(vec![
            Cell::UInt(k as u64),
            Cell::UInt(decisions),
            Cell::Float(total_s / decisions.max(1) as f64 * 1e3),
            Cell::Float(max_s * 1e3),
        ]);
        all_decisions += decisions;
        all_total_s += total_s;
        all_max_s = all_max_s.max(max_s);
    }

    Ok(EvalStats {
        instances: cfg.instances,
        wins,
        losses,
        draws,
        timeouts,
        mean_steps: sum_steps as f64 / cfg.instances as f64,
        mean_return: sum_return / cfg.instances as f64,
        table,
        timings,
        mean_decision_ms: all_total_s / all_decisions.max(1) as f64 * 1e3,
        max_decision_ms: all_max_s * 1e3,
    })
}

/// Team-size sweep settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    /// Instances per team size.
    pub instances: usize,
    pub max_steps: u64,
    pub seed: u64,
    pub opponent: OpponentKind,
    pub eps1: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: (10..=20).collect(),
            instances: 20,
            max_steps: 300,
            seed: 0,
            opponent: OpponentKind::Expert,
            eps1: LowerHyper::default().eps1,
        }
    }
}

/// Runs the checkpoint on growing team sizes under the standard spawn bands.
/// Nets are assigned round-robin, so a checkpoint trained small drives any
/// larger team. In the summary table timeouts fold into the loss column;
/// the per-size stats keep them separate.
pub fn generalization_sweep(
    ck: &Checkpoint,
    cfg: &SweepConfig,
) -> Result<(MetricTable, Vec<EvalStats>)> {
    if cfg.sizes.is_empty() {
        return Err(Error::Config("a sweep needs at least one team size".into()));
    }
    let mut table = sweep_table();
    let mut all = Vec::with_capacity(cfg.sizes.len());
    for &size in &cfg.sizes {
        let mut spec = ScenarioSpec::versus(size);
        spec.caps = ck.manifest.caps;
        spec.engagement.v_max = ck.manifest.v_max;
        let size_seed = instance_seed(cfg.seed, size);
        let mut blue = ck.controller(Team::Blue, size_seed ^ 0xB1)?;
        let mut red = opponent_policy(&cfg.opponent, Team::Red, size_seed ^ 0x12ED)?;
        let stats = evaluate(
            &mut blue,
            red.as_mut(),
            &EvalConfig {
                instances: cfg.instances,
                max_steps: cfg.max_steps,
                seed: size_seed,
                scenario: spec,
                eps1: cfg.eps1,
                replay_dir: None,
            },
        )?;
        table.push(vec![
            Cell::UInt(size as u64),
            Cell::UInt(stats.instances as u64),
            Cell::UInt(stats.wins as u64),
            Cell::UInt((stats.losses + stats.timeouts) as u64),
            Cell::UInt(stats.draws as u64),
            Cell::Float(stats.win_rate()),
        ]);
        all.push(stats);
    }
    Ok((table, all))
}
