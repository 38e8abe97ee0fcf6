//! Experience buffers, generalized advantage estimation and the clipped
//! PPO update.

use rand::seq::SliceRandom;
use rand::Rng;

use super::policy::Agent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoHyperparams {
    pub lr_strategic: f64,
    pub lr_tactical: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub c1: f64,
    pub c2: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub grad_clip_norm: f64,
    pub kl_stop_factor: f64,
    pub target_kl: f64,
    /// Share of the normalized reward credited to the strategic agent.
    pub strategic_share: f64,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        PpoHyperparams {
            lr_strategic: 3e-4,
            lr_tactical: 3e-5,
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            c1: 0.5,
            c2: 0.01,
            minibatch: 64,
            epochs: 4,
            grad_clip_norm: 0.5,
            kl_stop_factor: 1.5,
            target_kl: 0.01,
            strategic_share: 0.6,
        }
    }
}

/// One stored decision of an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub weather: f64,
    pub action: Vec<u8>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Episode ended after this step (time limits included).
    pub done: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperienceBuffer {
    pub records: Vec<Transition>,
}

impl ExperienceBuffer {
    pub fn push(&mut self, t: Transition) {
        self.records.push(t);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }
}

/// Generalized advantage estimation with episode-boundary masking.
/// `values` carries one bootstrap entry past the last reward.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n + 1 || dones.len() != n {
        return Err(Error::domain(format!(
            "gae needs values of length {} and dones of length {n}, got {} and {}",
            n + 1,
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Everything the loss needs for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Vec<Vec<f64>>,
    pub weathers: Vec<f64>,
    pub actions: Vec<Vec<u8>>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    /// GAE on the buffer's rewards (bootstrap 0 after the final record),
    /// with advantages normalized to zero mean and unit variance.
    pub fn from_buffer(buf: &ExperienceBuffer, hp: &PpoHyperparams) -> Result<Batch> {
        if buf.is_empty() {
            return Err(Error::domain("empty experience buffer"));
        }
        let rewards: Vec<f64> = buf.records.iter().map(|r| r.reward).collect();
        let mut values: Vec<f64> = buf.records.iter().map(|r| r.value).collect();
        values.push(0.0);
        let dones: Vec<bool> = buf.records.iter().map(|r| r.done).collect();
        let (mut adv, returns) = gae(&rewards, &values, &dones, hp.gamma, hp.lambda)?;
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
        Ok(Batch {
            states: buf.records.iter().map(|r| r.state.clone()).collect(),
            weathers: buf.records.iter().map(|r| r.weather).collect(),
            actions: buf.records.iter().map(|r| r.action.clone()).collect(),
            old_log_probs: buf.records.iter().map(|r| r.log_prob).collect(),
            advantages: adv,
            returns,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    /// Negated clipped surrogate (lower is better).
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    /// `mean(old_log_prob − new_log_prob)`.
    pub approx_kl: f64,
}

/// Total loss `−L_CLIP + c₁·L_VF − c₂·H` over the samples `idx`, with its
/// gradients for the actor and critic parameters.
pub fn loss_and_grad(
    agent: &Agent,
    batch: &Batch,
    idx: &[usize],
    hp: &PpoHyperparams,
) -> (LossParts, Vec<f64>, Vec<f64>) {
    let mut g_actor = vec![0.0; agent.actor.len()];
    let mut g_critic = vec![0.0; agent.critic.len()];
    let n = idx.len() as f64;
    let mut parts = LossParts::default();
    for &i in idx {
        let x = &batch.states[i];
        let acts = agent.actor_cached(x);
        let logits = acts.output();
        let (lp, d_lp) = agent.log_prob_grad(logits, batch.weathers[i], &batch.actions[i]);
        let (h, d_h) = agent.base_entropy_grad(logits);
        let ratio = (lp - batch.old_log_probs[i]).exp();
        let a = batch.advantages[i];
        let unclipped = ratio * a;
        let clipped = ratio.clamp(1.0 - hp.clip, 1.0 + hp.clip) * a;
        let objective = unclipped.min(clipped);
        let d_obj_d_lp = if unclipped <= clipped { unclipped } else { 0.0 };
        let d_logits: Vec<f64> = d_lp
            .iter()
            .zip(&d_h)
            .map(|(dl, dh)| (-d_obj_d_lp * dl - hp.c2 * dh) / n)
            .collect();
        agent.actor.backward(&acts, &d_logits, &mut g_actor);

        let cacts = agent.critic_cached(x);
        let v = cacts.output()[0];
        let err = v - agent.normalize_value(batch.returns[i]);
        agent
            .critic
            .backward(&cacts, &[hp.c1 * 2.0 * err / n], &mut g_critic);

        parts.policy -= objective / n;
        parts.value += err * err / n;
        parts.entropy += h / n;
        parts.approx_kl += (batch.old_log_probs[i] - lp) / n;
    }
    parts.total = parts.policy + hp.c1 * parts.value - hp.c2 * parts.entropy;
    (parts, g_actor, g_critic)
}

/// Loss only, for finite-difference checks.
pub fn loss(agent: &Agent, batch: &Batch, idx: &[usize], hp: &PpoHyperparams) -> f64 {
    loss_and_grad(agent, batch, idx, hp).0.total
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Mean unbiased-policy entropy over the batch before the update.
    pub entropy: f64,
    /// `mean(old − new log-prob)` of the final policy over the whole batch.
    pub approx_kl: f64,
    /// Epochs started (the last one may have been cut short).
    pub epochs_run: usize,
    pub minibatch_steps: usize,
    pub early_stopped: bool,
}

/// Batch-wide entropy and approximate KL of the current policy.
pub fn policy_stats(agent: &Agent, batch: &Batch) -> (f64, f64) {
    let n = batch.len() as f64;
    let mut entropy = 0.0;
    let mut kl = 0.0;
    for i in 0..batch.len() {
        let logits = agent.actor.forward(&batch.states[i]);
        entropy += agent.base_distribution(&logits).entropy() / n;
        let lp = agent
            .distribution_from_logits(&logits, batch.weathers[i])
            .log_prob(&batch.actions[i]);
        kl += (batch.old_log_probs[i] - lp) / n;
    }
    (entropy, kl)
}

/// Clipped PPO: up to `epochs` passes over shuffled minibatches, joint
/// gradient-norm clipping, and an early stop once a minibatch's approximate
/// KL exceeds `kl_stop_factor · target_kl` (checked before its step).
/// The batch returns are folded into the agent's value normalization first.
pub fn ppo_update<R: Rng>(
    agent: &mut Agent,
    batch: &Batch,
    hp: &PpoHyperparams,
    rng: &mut R,
) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Err(Error::domain("ppo update on an empty batch"));
    }
    let (entropy_before, _) = policy_stats(agent, batch);
    batch.returns.iter().for_each(|&r| agent.value_norm.push(r));
    let mut stats = UpdateStats {
        entropy: entropy_before,
        ..Default::default()
    };
    let kl_limit = hp.kl_stop_factor * hp.target_kl;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    'epochs: for _ in 0..hp.epochs {
        stats.epochs_run += 1;
        order.shuffle(rng);
        for idx in order.chunks(hp.minibatch.max(1)) {
            let (parts, mut g_actor, mut g_critic) = loss_and_grad(agent, batch, idx, hp);
            if !parts.total.is_finite() {
                return Err(Error::Numeric(format!(
                    "{} loss is not finite (policy {}, value {}, entropy {})",
                    agent.kind.name(),
                    parts.policy,
                    parts.value,
                    parts.entropy
                )));
            }
            if parts.approx_kl > kl_limit {
                stats.early_stopped = true;
                break 'epochs;
            }
            let norm = g_actor
                .iter()
                .chain(&g_critic)
                .map(|g| g * g)
                .sum::<f64>()
                .sqrt();
            if norm > hp.grad_clip_norm {
                let scale = hp.grad_clip_norm / norm;
                g_actor
                    .iter_mut()
                    .chain(g_critic.iter_mut())
                    .for_each(|g| *g *= scale);
            }
            agent.actor_opt.step(&mut agent.actor.params, &g_actor);
            agent.critic_opt.step(&mut agent.critic.params, &g_critic);
            stats.minibatch_steps += 1;
            stats.policy_loss = parts.policy;
            stats.value_loss = parts.value;
        }
    }
    stats.approx_kl = policy_stats(agent, batch).1;
    Ok(stats)
}
