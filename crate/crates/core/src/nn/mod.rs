//! Minimal dense-network core used by the actor and the critic.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod normalize;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{sync_hard, Activation, Dense, ForwardCache, Gradients, Mlp, MlpSpec};
pub use normalize::Normalizer;
