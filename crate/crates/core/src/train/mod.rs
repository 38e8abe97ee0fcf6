//! Hierarchical training loop: episode rollouts, the 60/40 reward split,
//! periodic PPO updates, checkpointing and resume.

pub mod checkpoint;
pub mod metrics;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, GridEnv, Observation};
use crate::error::{Error, Result};
use crate::feeder::NUM_SWITCHES;
use crate::ppo::{
    ppo_update, tactical_input, Agent, Batch, ExperienceBuffer, PpoHyperparams, Transition,
};

pub use checkpoint::{
    cleanup_checkpoints, list_checkpoints, load_checkpoint, read_checkpoint, save_checkpoint,
    write_checkpoint, BestTracker, CheckpointMeta, CrashPoint,
};
pub use metrics::{TrainingMetrics, UpdateRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub update_every: usize,
    pub checkpoint_interval: usize,
    pub save_best: bool,
    pub keep_checkpoints: usize,
    pub resume: Option<PathBuf>,
    pub seed: u64,
    /// Root for `ckpt_<episode>` directories; `None` disables checkpoints.
    pub checkpoint_dir: Option<PathBuf>,
    /// Where `rewards.csv` and `updates.csv` go; `None` keeps them in memory.
    pub metrics_dir: Option<PathBuf>,
    pub ppo: PpoHyperparams,
    /// Progress is logged every this many episodes (0 disables).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 1200,
            update_every: 25,
            checkpoint_interval: 100,
            save_best: false,
            keep_checkpoints: 5,
            resume: None,
            seed: 0,
            checkpoint_dir: None,
            metrics_dir: None,
            ppo: PpoHyperparams::default(),
            log_every: 25,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("episodes", self.episodes),
            ("update_every", self.update_every),
            ("checkpoint_interval", self.checkpoint_interval),
            ("keep_checkpoints", self.keep_checkpoints),
            ("minibatch", self.ppo.minibatch),
            ("epochs", self.ppo.epochs),
        ] {
            if v == 0 {
                return Err(Error::domain(format!("{name} must be at least 1")));
            }
        }
        let share = self.ppo.strategic_share;
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::domain(format!(
                "strategic share {share} not in [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Splits a normalized reward into the strategic and tactical shares;
/// the two always sum back to `reward`.
pub fn split_reward(reward: f64, strategic_share: f64) -> (f64, f64) {
    let s = strategic_share * reward;
    (s, reward - s)
}

/// Seed of the environment's weather process for a given episode.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed ^ (episode as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agents {
    pub strategic: Agent,
    pub tactical: Agent,
}

/// One joint decision with everything the buffers need.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub weather: f64,
    pub strategic_action: Vec<u8>,
    pub strategic_log_prob: f64,
    pub strategic_value: f64,
    pub tactical_state: Vec<f64>,
    pub tactical_action: Vec<u8>,
    pub tactical_log_prob: f64,
    pub tactical_value: f64,
}

impl Agents {
    /// Freshly initialized agents; initialization is a function of `seed`.
    pub fn new(hp: &PpoHyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Agents {
            strategic: Agent::strategic(hp.lr_strategic, &mut rng),
            tactical: Agent::tactical(hp.lr_tactical, &mut rng),
        }
    }

    fn decide<R: Rng>(&self, obs: &Observation, rng: Option<&mut R>) -> Result<Decision> {
        let w = obs[0];
        let (s_dist, s_value) = self.strategic.forward(obs, w)?;
        let mut rng = rng;
        let (s_act, s_lp) = match rng.as_deref_mut() {
            Some(r) => s_dist.sample(r),
            None => {
                let a = s_dist.mode();
                let lp = s_dist.log_prob(&a);
                (a, lp)
            }
        };
        let config = usize::from(s_act[0]);
        let x = tactical_input(obs, config);
        let (t_dist, t_value) = self.tactical.forward(&x, w)?;
        let (t_act, t_lp) = match rng {
            Some(r) => t_dist.sample(r),
            None => {
                let a = t_dist.mode();
                let lp = t_dist.log_prob(&a);
                (a, lp)
            }
        };
        let action = Action::new(config, &t_act[..NUM_SWITCHES], t_act[NUM_SWITCHES])?;
        Ok(Decision {
            action,
            weather: w,
            strategic_action: s_act,
            strategic_log_prob: s_lp,
            strategic_value: s_value,
            tactical_state: x,
            tactical_action: t_act,
            tactical_log_prob: t_lp,
            tactical_value: t_value,
        })
    }

    /// Sampled decision for training.
    pub fn act<R: Rng>(&self, obs: &Observation, rng: &mut R) -> Result<Decision> {
        self.decide(obs, Some(rng))
    }

    /// Deterministic decision: argmax configuration, switches and grid
    /// preference thresholded at 0.5.
    pub fn greedy(&self, obs: &Observation) -> Result<Decision> {
        self.decide::<ChaCha8Rng>(obs, None)
    }
}

/// What a training run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub metrics: TrainingMetrics,
    pub update_rounds: usize,
    /// Last completed episode (1-based).
    pub last_episode: usize,
    pub resumed_from: Option<usize>,
    /// Checkpoints written, in order (later cleanup may remove some).
    pub checkpoints: Vec<PathBuf>,
}

struct Buffers {
    strategic: ExperienceBuffer,
    tactical: ExperienceBuffer,
}

/// Runs episodes `start..=cfg.episodes` (1-based), where `start` follows a
/// successfully resumed checkpoint. Both agents are updated and the
/// buffers cleared after every `update_every`-th episode; checkpoints are
/// written every `checkpoint_interval` episodes and once at the end.
pub fn train(cfg: &TrainConfig, env: &mut GridEnv, agents: &mut Agents) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut resumed_from = None;
    if let Some(path) = &cfg.resume {
        match load_checkpoint(agents, path) {
            (true, Some(meta)) => {
                env.set_reward_stats(meta.reward_stats);
                resumed_from = Some(meta.episode);
            }
            (true, None) => resumed_from = Some(0),
            (false, _) => log::warn!(
                "could not resume from {}; starting from scratch",
                path.display()
            ),
        }
    }
    let start = resumed_from.map_or(1, |e| e + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_ac71_0115);
    let mut metrics = TrainingMetrics::default();
    let mut buffers = Buffers {
        strategic: ExperienceBuffer::default(),
        tactical: ExperienceBuffer::default(),
    };
    let mut tracker = BestTracker::default();
    let mut checkpoints = Vec::new();
    let mut update_rounds = 0;
    let mut last_episode = resumed_from.unwrap_or(0);

    for episode in start..=cfg.episodes {
        let reward = run_episode(
            env,
            agents,
            &mut buffers,
            cfg.ppo.strategic_share,
            episode_seed(cfg.seed, episode),
            &mut rng,
        )?;
        metrics.record_episode(episode, reward);
        last_episode = episode;

        if episode % cfg.update_every == 0
            && !buffers.strategic.is_empty()
            && !buffers.tactical.is_empty()
        {
            update_rounds += 1;
            for (agent, buf) in [
                (&mut agents.strategic, &buffers.strategic),
                (&mut agents.tactical, &buffers.tactical),
            ] {
                let batch = Batch::from_buffer(buf, &cfg.ppo)?;
                let stats = ppo_update(agent, &batch, &cfg.ppo, &mut rng)?;
                metrics.record_update(
                    update_rounds,
                    agent.kind.name(),
                    stats.approx_kl,
                    stats.entropy,
                );
                log::debug!(
                    "update {update_rounds} {}: kl {:.5} entropy {:.4} epochs {} steps {}{}",
                    agent.kind.name(),
                    stats.approx_kl,
                    stats.entropy,
                    stats.epochs_run,
                    stats.minibatch_steps,
                    if stats.early_stopped {
                        " (early stop)"
                    } else {
                        ""
                    }
                );
            }
            buffers.strategic.clear();
            buffers.tactical.clear();
        }

        if cfg.log_every > 0 && episode % cfg.log_every == 0 {
            log::info!(
                "episode {episode}/{}: reward {reward:.1}, trailing average {:.1}, {update_rounds} updates",
                cfg.episodes,
                metrics.trailing_average().unwrap_or(reward)
            );
        }

        if episode % cfg.checkpoint_interval == 0 {
            if let Some(root) = &cfg.checkpoint_dir {
                let saved = save_checkpoint(
                    agents,
                    episode,
                    &metrics,
                    env.reward_stats(),
                    root,
                    cfg.save_best,
                    &mut tracker,
                )?;
                checkpoints.extend(saved);
                cleanup_checkpoints(root, cfg.keep_checkpoints)?;
            }
            if let Some(dir) = &cfg.metrics_dir {
                metrics.write(dir)?;
            }
        }
    }

    if let Some(root) = &cfg.checkpoint_dir {
        let saved = save_checkpoint(
            agents,
            last_episode,
            &metrics,
            env.reward_stats(),
            root,
            false,
            &mut tracker,
        )?;
        checkpoints.extend(saved);
        cleanup_checkpoints(root, cfg.keep_checkpoints)?;
    }
    if let Some(dir) = &cfg.metrics_dir {
        metrics.write(dir)?;
    }
    Ok(TrainOutcome {
        metrics,
        update_rounds,
        last_episode,
        resumed_from,
        checkpoints,
    })
}

/// One episode with sampled actions; returns the summed raw reward.
fn run_episode(
    env: &mut GridEnv,
    agents: &mut Agents,
    buffers: &mut Buffers,
    share: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut obs = env.reset(seed);
    let mut total = 0.0;
    loop {
        let d = agents.act(&obs, rng)?;
        let out = env.step(&d.action)?;
        total += out.reward;
        let (rs, rt) = split_reward(out.normalized_reward, share);
        agents.strategic.stats.push(rs);
        agents.tactical.stats.push(rt);
        buffers.strategic.push(Transition {
            state: obs.to_vec(),
            weather: d.weather,
            action: d.strategic_action,
            log_prob: d.strategic_log_prob,
            reward: rs,
            value: d.strategic_value,
            done: out.done,
        });
        buffers.tactical.push(Transition {
            state: d.tactical_state,
            weather: d.weather,
            action: d.tactical_action,
            log_prob: d.tactical_log_prob,
            reward: rt,
            value: d.tactical_value,
            done: out.done,
        });
        obs = out.observation;
        if out.done {
            return Ok(total);
        }
    }
}
