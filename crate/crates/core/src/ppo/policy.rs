//! Strategic (configuration) and tactical (switch + grid) actor-critics.

use rand::Rng;

use super::net::{Activations, Adam, Mlp};
use crate::env::{RunningStats, OBS_DIM};
use crate::error::{Error, Result};
use crate::feeder::NUM_SWITCHES;

pub const NUM_CONFIGS: usize = 6;
pub const TACTICAL_DIM: usize = OBS_DIM + 1;
pub const TACTICAL_OUT: usize = NUM_SWITCHES + 1;
pub const HIDDEN: usize = 64;

/// Probabilities are clamped to `[P_MIN, 1 − P_MIN]` before taking logs
/// (categorical probabilities only from below, so a certain action has log 0).
pub const P_MIN: f64 = 1e-8;

/// Smallest value-normalization scale.
pub const VALUE_SCALE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmergencyBias {
    pub alpha: [f64; NUM_CONFIGS],
    pub switch_bias: f64,
}

impl Default for EmergencyBias {
    fn default() -> Self {
        EmergencyBias {
            alpha: [0.0, 0.5, 1.0, 2.0, 4.0, 5.0],
            switch_bias: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Strategic,
    Tactical,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Strategic => "strategic",
            AgentKind::Tactical => "tactical",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            AgentKind::Strategic => OBS_DIM,
            AgentKind::Tactical => TACTICAL_DIM,
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            AgentKind::Strategic => NUM_CONFIGS,
            AgentKind::Tactical => TACTICAL_OUT,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(P_MIN, 1.0 - P_MIN)
}

/// `−Σ p ln p`.
pub fn entropy_strategic(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

pub fn bernoulli_entropy(p: f64) -> f64 {
    let p = clamp_p(p);
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// `Σᵢ H(sᵢ) + H(g)`.
pub fn entropy_tactical(switch_probs: &[f64], grid_prob: f64) -> f64 {
    switch_probs
        .iter()
        .map(|&p| bernoulli_entropy(p))
        .sum::<f64>()
        + bernoulli_entropy(grid_prob)
}

fn bernoulli_log_prob(p: f64, bit: u8) -> f64 {
    let p = clamp_p(p);
    if bit == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

/// `Σᵢ log Bernoulli(sᵢ; pᵢ) + log Bernoulli(g; p_g)`.
pub fn joint_log_prob(switch_probs: &[f64], grid_prob: f64, switches: &[u8], grid: u8) -> f64 {
    switch_probs
        .iter()
        .zip(switches)
        .map(|(&p, &s)| bernoulli_log_prob(p, s))
        .sum::<f64>()
        + bernoulli_log_prob(grid_prob, grid)
}

/// Inverse-CDF draw; returns the index and its clamped log-probability.
pub fn sample_strategic<R: Rng>(probs: &[f64], rng: &mut R) -> (usize, f64) {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut pick = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = i;
            break;
        }
    }
    (pick, probs[pick].max(P_MIN).ln())
}

/// Independent Bernoulli draws for every switch and the grid preference.
pub fn sample_tactical<R: Rng>(
    switch_probs: &[f64],
    grid_prob: f64,
    rng: &mut R,
) -> (Vec<u8>, u8, f64) {
    let switches: Vec<u8> = switch_probs
        .iter()
        .map(|&p| u8::from(rng.gen::<f64>() < p))
        .collect();
    let grid = u8::from(rng.gen::<f64>() < grid_prob);
    let lp = joint_log_prob(switch_probs, grid_prob, &switches, grid);
    (switches, grid, lp)
}

/// Action distribution of either agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Categorical(Vec<f64>),
    Bernoulli { switches: Vec<f64>, grid: f64 },
}

impl Distribution {
    pub fn entropy(&self) -> f64 {
        match self {
            Distribution::Categorical(p) => entropy_strategic(p),
            Distribution::Bernoulli { switches, grid } => entropy_tactical(switches, *grid),
        }
    }

    /// Encoded action: `[c]` for the strategic agent, ten switch bits then
    /// the grid bit for the tactical agent.
    pub fn log_prob(&self, action: &[u8]) -> f64 {
        match self {
            Distribution::Categorical(p) => p[action[0] as usize].max(P_MIN).ln(),
            Distribution::Bernoulli { switches, grid } => joint_log_prob(
                switches,
                *grid,
                &action[..NUM_SWITCHES],
                action[NUM_SWITCHES],
            ),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Vec<u8>, f64) {
        match self {
            Distribution::Categorical(p) => {
                let (c, lp) = sample_strategic(p, rng);
                (vec![c as u8], lp)
            }
            Distribution::Bernoulli { switches, grid } => {
                let (mut bits, g, lp) = sample_tactical(switches, *grid, rng);
                bits.push(g);
                (bits, lp)
            }
        }
    }

    /// Most likely action (ties to the lowest index; probabilities ≥ 0.5 round up).
    pub fn mode(&self) -> Vec<u8> {
        match self {
            Distribution::Categorical(p) => {
                let best = p
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &x)| if x > p[b] { i } else { b });
                vec![best as u8]
            }
            Distribution::Bernoulli { switches, grid } => switches
                .iter()
                .chain(std::iter::once(grid))
                .map(|&p| u8::from(p >= 0.5))
                .collect(),
        }
    }
}

/// Actor-critic pair with its optimizers, reward-share statistics and
/// value-target normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub kind: AgentKind,
    pub actor: Mlp,
    pub critic: Mlp,
    pub bias: EmergencyBias,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    /// Running statistics of the reward share this agent receives.
    pub stats: RunningStats,
    /// Running statistics of value targets; the critic predicts targets
    /// standardized by these.
    pub value_norm: RunningStats,
}

impl Agent {
    pub fn new<R: Rng>(kind: AgentKind, lr: f64, rng: &mut R) -> Self {
        let actor = Mlp::orthogonal(
            &[kind.input_dim(), HIDDEN, HIDDEN, kind.output_dim()],
            0.01,
            rng,
        );
        let critic = Mlp::orthogonal(&[kind.input_dim(), HIDDEN, HIDDEN, 1], 1.0, rng);
        Agent {
            kind,
            actor_opt: Adam::new(actor.len(), lr),
            critic_opt: Adam::new(critic.len(), lr),
            actor,
            critic,
            bias: EmergencyBias::default(),
            stats: RunningStats::default(),
            value_norm: RunningStats::default(),
        }
    }

    /// `(mean, scale)` mapping critic outputs to values; identity until
    /// two targets have been seen.
    pub fn value_affine(&self) -> (f64, f64) {
        if self.value_norm.count < 2 {
            (0.0, 1.0)
        } else {
            (
                self.value_norm.mean,
                self.value_norm.std().max(VALUE_SCALE_FLOOR),
            )
        }
    }

    /// Value target expressed in critic-output units.
    pub fn normalize_value(&self, v: f64) -> f64 {
        let (mean, scale) = self.value_affine();
        (v - mean) / scale
    }

    pub fn strategic<R: Rng>(lr: f64, rng: &mut R) -> Self {
        Self::new(AgentKind::Strategic, lr, rng)
    }

    pub fn tactical<R: Rng>(lr: f64, rng: &mut R) -> Self {
        Self::new(AgentKind::Tactical, lr, rng)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.kind.input_dim() {
            return Err(Error::domain(format!(
                "{} input has {} entries, expected {}",
                self.kind.name(),
                x.len(),
                self.kind.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite {} input",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Distribution from raw actor outputs with the emergency bias for `w`.
    pub fn distribution_from_logits(&self, logits: &[f64], w: f64) -> Distribution {
        match self.kind {
            AgentKind::Strategic => {
                let biased: Vec<f64> = logits
                    .iter()
                    .zip(&self.bias.alpha)
                    .map(|(h, a)| h + w * a)
                    .collect();
                Distribution::Categorical(softmax(&biased))
            }
            AgentKind::Tactical => Distribution::Bernoulli {
                switches: logits[..NUM_SWITCHES]
                    .iter()
                    .map(|h| sigmoid(h + w * self.bias.switch_bias))
                    .collect(),
                grid: sigmoid(logits[NUM_SWITCHES]),
            },
        }
    }

    /// Distribution without the emergency bias.
    pub fn base_distribution(&self, logits: &[f64]) -> Distribution {
        self.distribution_from_logits(logits, 0.0)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let out = self.actor.forward(x);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite {} logits",
                self.kind.name()
            )));
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let (mean, scale) = self.value_affine();
        let v = mean + scale * self.critic.forward(x)[0];
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite {} value",
                self.kind.name()
            )));
        }
        Ok(v)
    }

    /// `(distribution, value)` for input `x` under weather `w`.
    pub fn forward(&self, x: &[f64], w: f64) -> Result<(Distribution, f64)> {
        let logits = self.logits(x)?;
        Ok((self.distribution_from_logits(&logits, w), self.value(x)?))
    }

    /// Log-probability of `action` and its gradient with respect to the logits.
    pub(crate) fn log_prob_grad(&self, logits: &[f64], w: f64, action: &[u8]) -> (f64, Vec<f64>) {
        let dist = self.distribution_from_logits(logits, w);
        let lp = dist.log_prob(action);
        let grad = match &dist {
            Distribution::Categorical(p) => {
                let a = action[0] as usize;
                if p[a] <= P_MIN {
                    vec![0.0; p.len()]
                } else {
                    p.iter()
                        .enumerate()
                        .map(|(i, &pi)| f64::from(u8::from(i == a)) - pi)
                        .collect()
                }
            }
            Distribution::Bernoulli { switches, grid } => switches
                .iter()
                .chain(std::iter::once(grid))
                .zip(action)
                .map(|(&p, &bit)| {
                    if p <= P_MIN || p >= 1.0 - P_MIN {
                        0.0
                    } else {
                        f64::from(bit) - p
                    }
                })
                .collect(),
        };
        (lp, grad)
    }

    /// Entropy of the unbiased distribution and its gradient with respect to the logits.
    pub(crate) fn base_entropy_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        let dist = self.base_distribution(logits);
        let h = dist.entropy();
        let grad = match &dist {
            Distribution::Categorical(p) => p.iter().map(|&pi| -pi * (pi.ln() + h)).collect(),
            Distribution::Bernoulli { .. } => logits
                .iter()
                .map(|&z| {
                    let p = sigmoid(z);
                    if p <= P_MIN || p >= 1.0 - P_MIN {
                        0.0
                    } else {
                        -z * p * (1.0 - p)
                    }
                })
                .collect(),
        };
        (h, grad)
    }

    pub(crate) fn actor_cached(&self, x: &[f64]) -> Activations {
        self.actor.forward_cached(x)
    }

    pub(crate) fn critic_cached(&self, x: &[f64]) -> Activations {
        self.critic.forward_cached(x)
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.actor_opt.lr = lr;
        self.critic_opt.lr = lr;
    }
}

/// Tactical input: the observation followed by the chosen configuration scaled to [0, 1].
pub fn tactical_input(obs: &[f64], config: usize) -> Vec<f64> {
    let mut x = obs.to_vec();
    x.push(config as f64 / (NUM_CONFIGS - 1) as f64);
    x
}
