//! Hierarchical PPO: a strategic agent choosing the configuration and a
//! tactical agent choosing switch states and grid preference.

pub mod net;
pub mod policy;
pub mod update;

pub use net::{Adam, Mlp};
pub use policy::{
    bernoulli_entropy, entropy_strategic, entropy_tactical, joint_log_prob, sample_strategic,
    sample_tactical, sigmoid, softmax, tactical_input, Agent, AgentKind, Distribution,
    EmergencyBias,
};
pub use update::{
    gae, loss, loss_and_grad, policy_stats, ppo_update, Batch, ExperienceBuffer, LossParts,
    PpoHyperparams, Transition, UpdateStats,
};
