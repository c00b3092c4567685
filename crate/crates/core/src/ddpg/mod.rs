//! Actor-critic placement agent: replay buffer, updates, training loop and
//! the inference-time rollout.

pub mod agent;
pub mod replay;
pub mod train;

pub use agent::{Agent, AgentConfig, Batch};
pub use replay::{ReplayBuffer, Transition};
pub use train::{decide, train, Decision, EpisodeLog, EpisodeSampler, TrainingLog};
