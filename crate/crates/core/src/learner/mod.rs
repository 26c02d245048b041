//! Independent soft actor-critic learners with offline conservative
//! distillation and online adaptation.

pub mod agent;
pub mod buffer;
pub mod checkpoint;
pub mod losses;
pub mod net;

pub use agent::{
    conservative_gap, distill, greedy_agreement, make_agents, online_adapt, Agent, EpisodeMetrics, LearnerConfig, OnlineConfig,
    UpdateStats,
};
pub use buffer::{Batch, BufferMode, Experience, ReplayBuffer, ReplayStore};
pub use checkpoint::{load_agents, read_agents, save_agents, write_agents, CHECKPOINT_VERSION};
pub use losses::{
    actor_loss, critic_loss, critic_target, cql_penalty, cql_penalty_batch, gradient_check, log_softmax_rows, logsumexp,
    policy_entropy, policy_probs, temperature_loss,
};
pub use net::{clip_grad_norm, soft_update, Adam, Mlp};
