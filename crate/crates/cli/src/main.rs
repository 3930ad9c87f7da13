//! Command-line front end: scenario generation, cross-training, frozen-policy
//! evaluation, and team-size sweeps.
//!
//! Every run writes a `manifest.json` into the output directory before any
//! stochastic work starts, so a crashed or diverged run still leaves a record
//! of what was attempted. Log verbosity comes from `RUST_LOG`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when
//! training aborts on divergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skirmish_core::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use skirmish_core::metrics::RunManifest;
use skirmish_core::opponents::OpponentKind;
use skirmish_core::replay::ReplayWriter;
use skirmish_core::scenario::{generate_scenario, ScenarioSpec};
use skirmish_core::sim::perception::UncertaintyModel;
use skirmish_core::sim::agent::Team;
use skirmish_core::trainer::{
    evaluate, generalization_sweep, opponent_policy, train, EvalConfig, SweepConfig, TrainConfig,
};
use skirmish_core::{Error, Result};

#[derive(Parser)]
#[command(name = "skirmish", version, about = "Swarm engagement trainer and evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scenario file plus a one-shot spawn preview
    GenScenario(GenScenarioArgs),
    /// Cross-train both decision layers against a scripted or frozen opponent
    Train(TrainArgs),
    /// Run a frozen checkpoint against an opponent and collect statistics
    Eval(EvalArgs),
    /// Evaluate one checkpoint across a range of team sizes
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenScenarioArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Validate and re-emit this scenario file instead of building one
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Agents per side when building a fresh scenario
    #[arg(long, default_value_t = 3)]
    team_size: usize,
    /// Mirror spawns and obstacles through the arena center
    #[arg(long)]
    symmetric: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Scenario file; defaults to a 3v3 band layout
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Red controller: expert, heuristic, random, or mirror:DIR
    #[arg(long, default_value = "random", value_parser = parse_opponent)]
    opponent: OpponentKind,
    /// Train the task layer from engagement outcomes alone
    #[arg(long)]
    no_feedback: bool,
    /// Steps per subtask
    #[arg(long, default_value_t = 10)]
    h: usize,
    /// Avoidance weight in the movement reward
    #[arg(long, default_value_t = 0.5)]
    eps1: f64,
    #[arg(long, default_value_t = 60)]
    episodes: usize,
    /// Steps per episode before timeout
    #[arg(long, default_value_t = 300)]
    steps: u64,
    /// Distinct spawn layouts cycled over the episodes
    #[arg(long, default_value_t = 100)]
    instances: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint directory to load
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Scenario file; defaults to the layout the checkpoint was trained for
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Red controller: expert, heuristic, random, or mirror:DIR
    #[arg(long, default_value = "expert", value_parser = parse_opponent)]
    opponent: OpponentKind,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Steps per instance before timeout
    #[arg(long, default_value_t = 300)]
    steps: u64,
    /// Probability that an observation channel drops out each step
    #[arg(long, default_value_t = 0.0)]
    loss_rate: f64,
    /// Std-dev of gaussian noise on observed positions and velocities
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Avoidance weight when reporting movement returns
    #[arg(long, default_value_t = 0.5)]
    eps1: f64,
    /// Log every instance to replays/replay_NNN.jsonl
    #[arg(long)]
    record_replays: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Checkpoint directory to load
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Team sizes: a range like 10-20 or a list like 5,8,12
    #[arg(long, default_value = "10-20", value_parser = parse_sizes)]
    sizes: Sizes,
    /// Instances per team size
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Steps per instance before timeout
    #[arg(long, default_value_t = 300)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Red controller: expert, heuristic, random, or mirror:DIR
    #[arg(long, default_value = "expert", value_parser = parse_opponent)]
    opponent: OpponentKind,
}

#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

fn parse_opponent(s: &str) -> std::result::Result<OpponentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let text = s.trim();
    let sizes: Vec<usize> = if let Some((lo, hi)) = text.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad size range: {text}"))?;
        let hi: usize = hi.trim().parse().map_err(|_| format!("bad size range: {text}"))?;
        if lo == 0 || hi < lo {
            return Err(format!("bad size range: {text}"));
        }
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("bad size list: {text}")))
            .collect::<std::result::Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(format!("bad size list: {text}"));
    }
    Ok(Sizes(sizes))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenScenario(args) => run_gen_scenario(&args),
        Command::Train(args) => run_train(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Sweep(args) => run_sweep(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 3 means training diverged, 2 means the inputs were unusable, 1 is
/// anything unexpected.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged(_) => 3,
        Error::Config(_)
        | Error::Infeasible(_)
        | Error::CheckpointMismatch(_)
        | Error::TomlParse(_)
        | Error::TomlEmit(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    ScenarioSpec::from_toml(&fs::read_to_string(path)?)
}

/// Loads a checkpoint, naming the directory in any I/O failure.
fn open_checkpoint(dir: &Path) -> Result<Checkpoint> {
    load_checkpoint(dir).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot load checkpoint {}: {io}", dir.display())),
        other => other,
    })
}

fn run_gen_scenario(args: &GenScenarioArgs) -> Result<()> {
    let spec = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => {
            let mut spec = ScenarioSpec::versus(args.team_size);
            spec.symmetric = args.symmetric;
            spec.validate()?;
            spec
        }
    };

    let config = serde_json::to_vec(&spec)?;
    RunManifest::new(
        command_line(),
        &config,
        args.seed,
        vec!["scenario.toml".into(), "preview.jsonl".into()],
    )
    .write(&args.out)?;

    fs::write(args.out.join("scenario.toml"), spec.to_toml()?)?;
    let world = generate_scenario(&spec, args.seed)?;
    let mut preview = ReplayWriter::create(&args.out.join("preview.jsonl"))?;
    preview.record(&world)?;
    preview.finish()?;

    println!(
        "wrote scenario: {} blue vs {} red, {} obstacles, preview seed {}",
        spec.blue,
        spec.red,
        world.obstacles.rects.len(),
        args.seed
    );
    Ok(())
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = TrainConfig {
        episodes: args.episodes,
        max_steps: args.steps,
        instances: args.instances,
        seed: args.seed,
        opponent: args.opponent.clone(),
        feedback: !args.no_feedback,
        ..TrainConfig::default()
    };
    if let Some(path) = &args.scenario {
        cfg.scenario = load_scenario(path)?;
    }
    cfg.lower.eps1 = args.eps1;
    cfg.upper.h = args.h;
    cfg.validate()?;

    let config = serde_json::to_vec(&cfg)?;
    RunManifest::new(
        command_line(),
        &config,
        args.seed,
        vec!["train_metrics.csv".into(), "checkpoint".into()],
    )
    .write(&args.out)?;

    let result = train(&cfg)?;
    result.table.write_to(&args.out.join("train_metrics.csv"))?;
    save_checkpoint(
        &args.out.join("checkpoint"),
        &result.checkpoint.manifest,
        &result.checkpoint.lower,
        &result.checkpoint.upper,
    )?;

    println!(
        "trained {} episodes: {} wins ({:.1}%), {} movement updates, {} task updates, {} skipped",
        result.episodes,
        result.wins,
        100.0 * result.wins as f64 / result.episodes.max(1) as f64,
        result.lower_updates,
        result.upper_updates,
        result.skipped_updates
    );
    Ok(())
}

/// Scenario matching what the checkpoint was trained for, so `eval` works
/// without a scenario file.
fn checkpoint_scenario(ck: &Checkpoint) -> ScenarioSpec {
    let mut spec = ScenarioSpec::versus(ck.manifest.n_allies);
    spec.red = ck.manifest.n_enemies;
    spec.caps = ck.manifest.caps;
    spec.engagement.v_max = ck.manifest.v_max;
    spec
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let ck = open_checkpoint(&args.checkpoint)?;
    let scenario = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => checkpoint_scenario(&ck),
    };
    let cfg = EvalConfig {
        instances: args.instances,
        max_steps: args.steps,
        seed: args.seed,
        scenario,
        eps1: args.eps1,
        replay_dir: args.record_replays.then(|| args.out.join("replays")),
    };
    cfg.validate()?;
    let uncertainty = UncertaintyModel {
        loss_rate: args.loss_rate,
        noise_sigma: args.noise_sigma,
    };
    if !(0.0..=1.0).contains(&args.loss_rate) || args.noise_sigma < 0.0 {
        return Err(Error::Config(format!(
            "loss rate must lie in [0, 1] and noise sigma must be non-negative, got {} / {}",
            args.loss_rate, args.noise_sigma
        )));
    }

    let config = serde_json::to_vec(&serde_json::json!({
        "checkpoint": args.checkpoint,
        "opponent": args.opponent,
        "uncertainty": { "loss_rate": args.loss_rate, "noise_sigma": args.noise_sigma },
        "eval": cfg,
    }))?;
    let mut outputs = vec!["eval_metrics.csv".into(), "decision_timings.csv".into()];
    if args.record_replays {
        outputs.push("replays".into());
    }
    RunManifest::new(command_line(), &config, args.seed, outputs).write(&args.out)?;

    let mut blue = ck.controller(Team::Blue, args.seed.wrapping_add(1))?;
    blue.uncertainty = uncertainty;
    let mut red = opponent_policy(&args.opponent, Team::Red, args.seed.wrapping_add(2))?;
    let stats = evaluate(&mut blue, red.as_mut(), &cfg)?;

    stats.table.write_to(&args.out.join("eval_metrics.csv"))?;
    stats
        .timings
        .write_to(&args.out.join("decision_timings.csv"))?;

    println!(
        "evaluated {} instances vs {}: {} wins / {} losses / {} draws / {} timeouts (win rate {:.1}%)",
        stats.instances,
        args.opponent,
        stats.wins,
        stats.losses,
        stats.draws,
        stats.timeouts,
        100.0 * stats.win_rate()
    );
    println!(
        "mean steps {:.1}, mean movement return {:.3}, decision time mean {:.3} ms / max {:.3} ms",
        stats.mean_steps, stats.mean_return, stats.mean_decision_ms, stats.max_decision_ms
    );
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let ck = open_checkpoint(&args.checkpoint)?;
    let cfg = SweepConfig {
        sizes: args.sizes.0.clone(),
        instances: args.instances,
        max_steps: args.steps,
        seed: args.seed,
        opponent: args.opponent.clone(),
        ..SweepConfig::default()
    };

    let config = serde_json::to_vec(&serde_json::json!({
        "checkpoint": args.checkpoint,
        "sweep": cfg,
    }))?;
    RunManifest::new(
        command_line(),
        &config,
        args.seed,
        vec!["sweep_metrics.csv".into()],
    )
    .write(&args.out)?;

    let (table, stats) = generalization_sweep(&ck, &cfg)?;
    table.write_to(&args.out.join("sweep_metrics.csv"))?;

    for (size, s) in cfg.sizes.iter().zip(&stats) {
        println!(
            "size {:>3}: win rate {:.1}% ({} wins / {} losses / {} draws / {} timeouts)",
            size,
            100.0 * s.win_rate(),
            s.wins,
            s.losses,
            s.draws,
            s.timeouts
        );
    }
    Ok(())
}
