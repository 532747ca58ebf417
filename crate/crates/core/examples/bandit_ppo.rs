//! PPO on a three-armed bandit whose middle arm pays 1. The policy should
//! put almost all of its mass on that arm within a few hundred updates.
//!
//! cargo run --release --example bandit_ppo

use racecraft::agent::{train, BanditEnv, PpoConfig, RolloutEnv, TrainConfig};
use racecraft::planner::{Mode, WeightLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TrainConfig {
        ppo: PpoConfig {
            n_envs: 4,
            rollout_len: 16,
            minibatch_size: 32,
            total_steps: 200 * 64,
            reward_scale: 1.0,
            ..Default::default()
        },
        checkpoint_every: 20,
        seed: 6,
        ..Default::default()
    };
    let out = train(
        &cfg,
        WeightLibrary::default(),
        |_| Ok(BanditEnv::new([0.0, 1.0, 0.0], &cfg.observation)),
        None,
        &mut |_, curve| {
            let r = curve.last().unwrap();
            println!(
                "update {:4}  entropy {:.3}  mean reward {:.3}",
                r.update, r.entropy, r.mean_reward
            );
            Ok(())
        },
    )?;
    let obs = BanditEnv::new([0.0; 3], &cfg.observation).observe();
    let probs = out.model.policy_forward(&obs)?.dist.probs;
    for m in Mode::ALL {
        println!("P({m}) = {:.4}", probs[m.index()]);
    }
    Ok(())
}
