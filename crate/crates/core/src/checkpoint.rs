//! Checkpoint persistence: a directory holding both policy layers as JSON
//! plus a manifest that pins the shapes they were trained for.
//!
//! Layout: `manifest.json`, `lower.json`, `upper.json`. Loading validates
//! the manifest against the stored networks, and
//! [`Checkpoint::controller`] refuses worlds whose slot capacities disagree
//! with the nets.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SlotCaps;
use crate::control::HrlController;
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::policy::features::{lower_actor_input_dim, upper_input_dim};
use crate::policy::{LowerPolicy, UpperPolicy};
use crate::predict::PredictorParams;
use crate::sim::agent::Team;

pub const CHECKPOINT_SCHEMA: u32 = 1;

/// Shape and training provenance of a stored checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub schema: u32,
    pub caps: SlotCaps,
    pub v_max: f64,
    /// Subtask length the upper layer was trained with.
    pub h: usize,
    /// Nets per layer (the team size trained for).
    pub n_allies: usize,
    /// Opposing team size the critics were built for.
    pub n_enemies: usize,
    pub predictor: PredictorParams,
    /// Whether upper targets included the movement-layer feedback term.
    pub feedback: bool,
    pub code_version: String,
}

/// Both trained layers plus their manifest.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub lower: LowerPolicy,
    pub upper: UpperPolicy,
}

impl Checkpoint {
    /// Frozen evaluation controller for `team`, built from the online nets.
    pub fn controller(&self, team: Team, seed: u64) -> Result<HrlController> {
        let uppers: Vec<Mlp> = self.upper.nets.iter().map(|n| n.online.clone()).collect();
        let actors: Vec<Mlp> = self.lower.nets.iter().map(|n| n.actor.clone()).collect();
        HrlController::new(
            team,
            uppers,
            actors,
            self.manifest.h,
            self.manifest.predictor.clone(),
            seed,
        )
    }
}

fn validate(manifest: &CheckpointManifest, lower: &LowerPolicy, upper: &UpperPolicy) -> Result<()> {
    if manifest.schema != CHECKPOINT_SCHEMA {
        return Err(Error::CheckpointMismatch(format!(
            "schema {} unsupported (expected {CHECKPOINT_SCHEMA})",
            manifest.schema
        )));
    }
    if lower.n_agents() != manifest.n_allies || upper.n_agents() != manifest.n_allies {
        return Err(Error::CheckpointMismatch(format!(
            "manifest claims {} agents, nets hold {}/{}",
            manifest.n_allies,
            lower.n_agents(),
            upper.n_agents()
        )));
    }
    let want_actor = lower_actor_input_dim(&manifest.caps);
    let want_upper = upper_input_dim(&manifest.caps);
    if lower.nets.iter().any(|n| n.actor.layers[0].in_dim != want_actor) {
        return Err(Error::CheckpointMismatch(
            "actor input width disagrees with the manifest slot caps".into(),
        ));
    }
    if upper.nets.iter().any(|n| n.online.layers[0].in_dim != want_upper) {
        return Err(Error::CheckpointMismatch(
            "task-net input width disagrees with the manifest slot caps".into(),
        ));
    }
    if manifest.h == 0 || !(manifest.v_max > 0.0) {
        return Err(Error::CheckpointMismatch(
            "manifest carries degenerate h or v_max".into(),
        ));
    }
    Ok(())
}

/// Writes a checkpoint directory, creating it if needed.
pub fn save_checkpoint(
    dir: &Path,
    manifest: &CheckpointManifest,
    lower: &LowerPolicy,
    upper: &UpperPolicy,
) -> Result<()> {
    validate(manifest, lower, upper)?;
    fs::create_dir_all(dir)?;
    let write_json = |name: &str, text: String| -> Result<()> {
        let mut text = text;
        text.push('\n');
        fs::write(dir.join(name), text).map_err(Error::from)
    };
    write_json("manifest.json", serde_json::to_string_pretty(manifest)?)?;
    write_json("lower.json", serde_json::to_string(lower)?)?;
    write_json("upper.json", serde_json::to_string(upper)?)?;
    Ok(())
}

/// Loads and validates a checkpoint directory.
pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let manifest: CheckpointManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let lower: LowerPolicy = serde_json::from_str(&fs::read_to_string(dir.join("lower.json"))?)?;
    let upper: UpperPolicy = serde_json::from_str(&fs::read_to_string(dir.join("upper.json"))?)?;
    validate(&manifest, &lower, &upper)?;
    Ok(Checkpoint {
        manifest,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::TeamPolicy;
    use crate::policy::{LowerHyper, UpperHyper};
    use crate::scenario::{generate_scenario, ScenarioSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_checkpoint(n: usize) -> Checkpoint {
        let caps = SlotCaps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lower =
            LowerPolicy::new(n, n, &caps, 2.0, LowerHyper::default(), &mut rng).unwrap();
        let upper = UpperPolicy::new(n, &caps, UpperHyper::default(), &mut rng).unwrap();
        let manifest = CheckpointManifest {
            schema: CHECKPOINT_SCHEMA,
            caps,
            v_max: 2.0,
            h: 10,
            n_allies: n,
            n_enemies: n,
            predictor: PredictorParams::default(),
            feedback: true,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        Checkpoint {
            manifest,
            lower,
            upper,
        }
    }

    #[test]
    fn save_then_load_restores_every_parameter() {
        let ck = sample_checkpoint(3);
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &ck.manifest, &ck.lower, &ck.upper).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();
        assert_eq!(back.manifest, ck.manifest);
        for (a, b) in back.lower.nets.iter().zip(&ck.lower.nets) {
            assert_eq!(a.actor, b.actor);
            assert_eq!(a.critic, b.critic);
            assert_eq!(a.actor_target, b.actor_target);
            assert_eq!(a.critic_target, b.critic_target);
            assert_eq!(a.actor_opt, b.actor_opt);
            assert_eq!(a.critic_opt, b.critic_opt);
        }
        for (a, b) in back.upper.nets.iter().zip(&ck.upper.nets) {
            assert_eq!(a.online, b.online);
            assert_eq!(a.target, b.target);
            assert_eq!(a.opt, b.opt);
        }
    }

    #[test]
    fn tampered_manifest_is_rejected() {
        let ck = sample_checkpoint(2);
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &ck.manifest, &ck.lower, &ck.upper).unwrap();

        let mut wrong = ck.manifest.clone();
        wrong.caps = SlotCaps {
            allies: 9,
            enemies: 9,
            obstacles: 9,
        };
        let text = serde_json::to_string_pretty(&wrong).unwrap();
        fs::write(dir.path().join("manifest.json"), text).unwrap();
        assert!(matches!(
            load_checkpoint(dir.path()),
            Err(Error::CheckpointMismatch(_))
        ));

        let mut wrong = ck.manifest.clone();
        wrong.schema = CHECKPOINT_SCHEMA + 1;
        let text = serde_json::to_string_pretty(&wrong).unwrap();
        fs::write(dir.path().join("manifest.json"), text).unwrap();
        assert!(matches!(
            load_checkpoint(dir.path()),
            Err(Error::CheckpointMismatch(_))
        ));
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        assert!(matches!(load_checkpoint(&missing), Err(Error::Io(_))));
    }

    #[test]
    fn loaded_controller_drives_an_episode() {
        let ck = sample_checkpoint(3);
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &ck.manifest, &ck.lower, &ck.upper).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();

        let mut world = generate_scenario(&ScenarioSpec::versus(3), 3).unwrap();
        let mut blue = back.controller(Team::Blue, 1).unwrap();
        let mut red = back.controller(Team::Red, 2).unwrap();
        blue.begin_episode(&world).unwrap();
        red.begin_episode(&world).unwrap();
        for _ in 0..20 {
            let b = blue.decide(&mut world).unwrap();
            let r = red.decide(&mut world).unwrap();
            let joint = crate::control::joint_actions(world.agents.len(), &[b, r]);
            if crate::sim::world::step_world(&mut world, &joint)
                .unwrap()
                .terminal()
            {
                break;
            }
        }
        assert!(world.step_index > 0);
    }
}
