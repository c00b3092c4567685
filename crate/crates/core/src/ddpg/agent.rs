use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::replay::Transition;
use crate::env::{EnvAction, EnvState};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{Decoder, Encoder};
use crate::nn::{adam_step, sync_hard, Activation, AdamConfig, AdamState, Mlp, MlpSpec, Normalizer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    pub batch_size: usize,
    /// Hard target sync every this many epochs (environment steps).
    pub sync_period: usize,
    pub episodes: usize,
    /// Leading episodes that use the interference-free reward.
    pub pretrain_episodes: usize,
    /// Exploration std as a fraction of `a_max`, first episode.
    pub noise_initial: f64,
    /// Exploration std as a fraction of `a_max`, last episode.
    pub noise_final: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden_layers: Vec<usize>,
    pub buffer_capacity: usize,
    pub normalize_states: bool,
    /// Multiplier applied to rewards before they reach the critic.
    pub reward_scale: f64,
    /// Critic and actor updates per environment step.
    pub updates_per_step: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.9,
            batch_size: 64,
            sync_period: 200,
            episodes: 5000,
            pretrain_episodes: 0,
            noise_initial: 0.3,
            noise_final: 0.02,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            hidden_layers: vec![256, 128, 64, 16],
            buffer_capacity: 10_000_000,
            normalize_states: true,
            reward_scale: 1.0,
            updates_per_step: 1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("agent.gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("agent.batch_size", "must be >= 1"));
        }
        if self.sync_period == 0 {
            return Err(Error::invalid("agent.sync_period", "must be >= 1"));
        }
        if self.updates_per_step == 0 {
            return Err(Error::invalid("agent.updates_per_step", "must be >= 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::invalid("agent.buffer_capacity", "must be >= 1"));
        }
        if self.pretrain_episodes > self.episodes {
            return Err(Error::invalid("agent.pretrain_episodes", "cannot exceed agent.episodes"));
        }
        for (name, v) in [("agent.noise_initial", self.noise_initial), ("agent.noise_final", self.noise_final)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("agent.actor_lr", self.actor_lr), ("agent.critic_lr", self.critic_lr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::invalid("agent.hidden_layers", "every layer needs at least one unit"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::invalid("agent.reward_scale", "must be > 0"));
        }
        Ok(())
    }

    /// Exploration std (fraction of `a_max`) for `episode`, decaying
    /// geometrically from `noise_initial` to `noise_final`.
    pub fn noise_fraction(&self, episode: usize) -> f64 {
        if self.episodes <= 1 || self.noise_initial == 0.0 || self.noise_final == 0.0 {
            return if episode == 0 { self.noise_initial } else { self.noise_final };
        }
        let frac = episode.min(self.episodes - 1) as f64 / (self.episodes - 1) as f64;
        self.noise_initial * (self.noise_final / self.noise_initial).powf(frac)
    }
}

/// A sampled minibatch with normalized states and actions in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"UAVBSAGT";
const CHECKPOINT_VERSION: u32 = 1;

/// Actor, critic, their target copies, both optimizers and the state
/// normalizer. The actor is one joint network emitting `2P` deltas.
#[derive(Clone, Debug)]
pub struct Agent {
    pub users: usize,
    pub uavs: usize,
    pub a_max: f64,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub normalizer: Normalizer,
    pub normalize_states: bool,
}

impl PartialEq for Agent {
    fn eq(&self, o: &Self) -> bool {
        self.users == o.users
            && self.uavs == o.uavs
            && self.a_max.to_bits() == o.a_max.to_bits()
            && self.actor == o.actor
            && self.critic == o.critic
            && self.actor_target == o.actor_target
            && self.critic_target == o.critic_target
            && self.actor_opt == o.actor_opt
            && self.critic_opt == o.critic_opt
            && self.normalizer == o.normalizer
            && self.normalize_states == o.normalize_states
    }
}

impl Agent {
    /// Fresh agent: hidden layers ReLU, actor output tanh with the last layer
    /// scaled by 0.01, critic output linear. Targets start as exact copies.
    pub fn new<R: Rng + ?Sized>(users: usize, uavs: usize, a_max: f64, cfg: &AgentConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let sdim = EnvState::dim(users, uavs);
        let adim = 2 * uavs;
        let mut actor_sizes = vec![sdim];
        actor_sizes.extend(&cfg.hidden_layers);
        actor_sizes.push(adim);
        let mut critic_sizes = vec![sdim + adim];
        critic_sizes.extend(&cfg.hidden_layers);
        critic_sizes.push(1);
        let actor = Mlp::new(MlpSpec::new(actor_sizes, Activation::Relu, Activation::Tanh)?, 0.01, rng)?;
        let critic = Mlp::new(MlpSpec::new(critic_sizes, Activation::Relu, Activation::Linear)?, 1.0, rng)?;
        let adam = |lr| AdamConfig {
            learning_rate: lr,
            ..AdamConfig::default()
        };
        Ok(Agent {
            users,
            uavs,
            a_max,
            actor_opt: AdamState::new(adam(cfg.actor_lr), &actor),
            critic_opt: AdamState::new(adam(cfg.critic_lr), &critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            normalizer: Normalizer::new(sdim),
            normalize_states: cfg.normalize_states,
        })
    }

    pub fn state_dim(&self) -> usize {
        EnvState::dim(self.users, self.uavs)
    }

    pub fn action_dim(&self) -> usize {
        2 * self.uavs
    }

    pub fn observe_state(&mut self, s: &EnvState) {
        if self.normalize_states {
            self.normalizer.update(s.as_slice());
        }
    }

    fn norm(&self, s: &[f64]) -> Vec<f64> {
        if self.normalize_states {
            self.normalizer.normalize(s)
        } else {
            s.to_vec()
        }
    }

    /// Deterministic policy output scaled to meters.
    pub fn policy(&self, state: &EnvState) -> EnvAction {
        assert_eq!(state.0.len(), self.state_dim(), "state width mismatch");
        let out = self.actor.predict_one(&self.norm(state.as_slice()));
        EnvAction(out.iter().map(|v| v * self.a_max).collect())
    }

    /// [`policy`](Self::policy) plus optional Gaussian noise with std
    /// `noise_fraction * a_max`, clamped to `+-a_max`.
    pub fn act<R: Rng + ?Sized>(&self, state: &EnvState, noise_fraction: Option<f64>, rng: &mut R) -> EnvAction {
        let mut a = self.policy(state).0;
        if let Some(f) = noise_fraction {
            let std = f * self.a_max;
            if std > 0.0 {
                let n = Normal::new(0.0, std).expect("finite std");
                for v in &mut a {
                    *v = (*v + n.sample(rng)).clamp(-self.a_max, self.a_max);
                }
            }
        }
        EnvAction(a)
    }

    pub fn make_batch(&self, samples: &[&Transition]) -> Batch {
        let n = samples.len();
        let (sd, ad) = (self.state_dim(), self.action_dim());
        let mut states = Array2::zeros((n, sd));
        let mut next_states = Array2::zeros((n, sd));
        let mut actions = Array2::zeros((n, ad));
        let mut rewards = Array1::zeros(n);
        for (i, t) in samples.iter().enumerate() {
            assert_eq!(t.state.0.len(), sd, "transition state width");
            assert_eq!(t.action.0.len(), ad, "transition action width");
            states.row_mut(i).assign(&Array1::from(self.norm(t.state.as_slice())));
            next_states.row_mut(i).assign(&Array1::from(self.norm(t.next_state.as_slice())));
            for (j, a) in t.action.0.iter().enumerate() {
                actions[[i, j]] = a / self.a_max;
            }
            rewards[i] = t.reward;
        }
        Batch {
            states,
            actions,
            rewards,
            next_states,
        }
    }

    fn critic_input(states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
        concatenate(Axis(1), &[states, actions]).expect("same row count")
    }

    /// `Q(s, a)` of the online critic for each row.
    pub fn q_values(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array1<f64> {
        self.critic.predict(Self::critic_input(states, actions).view()).column(0).to_owned()
    }

    /// `y = reward_scale * r + gamma * Q'(s', pi'(s'))` from the target networks.
    /// Episodes have fixed length, so every transition bootstraps.
    pub fn td_target(&self, batch: &Batch, gamma: f64, reward_scale: f64) -> Array1<f64> {
        let next_actions = self.actor_target.predict(batch.next_states.view());
        let q_next = self
            .critic_target
            .predict(Self::critic_input(batch.next_states.view(), next_actions.view()).view());
        &batch.rewards * reward_scale + &(q_next.column(0).to_owned() * gamma)
    }

    /// One Adam step on `mean (Q(s, a) - y)^2`; returns the loss before the step.
    pub fn train_critic(&mut self, batch: &Batch, targets: &Array1<f64>) -> Result<f64> {
        if batch.is_empty() || targets.len() != batch.len() {
            return Err(Error::contract("critic batch empty or target count mismatch"));
        }
        let n = batch.len() as f64;
        let cache = self.critic.forward(Self::critic_input(batch.states.view(), batch.actions.view()).view());
        let diff = &cache.output().column(0) - targets;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: "critic loss".into(),
            });
        }
        let grad_out = (diff * (2.0 / n)).insert_axis(Axis(1));
        let (grads, _) = self.critic.backward(&cache, grad_out.view())?;
        adam_step(&mut self.critic, &grads, &mut self.critic_opt)?;
        Ok(loss)
    }

    /// Gradient of `mean_j Q(s_j, pi(s_j))` with respect to the actor's
    /// parameters, chained through the critic's action inputs. Returns the
    /// objective and the ascent gradient.
    pub fn actor_objective_gradient(&self, states: ArrayView2<f64>) -> Result<(f64, crate::nn::Gradients)> {
        let n = states.nrows() as f64;
        let sd = self.state_dim();
        let actor_cache = self.actor.forward(states);
        let actions = actor_cache.output();
        let critic_cache = self.critic.forward(Self::critic_input(states, actions.view()).view());
        let objective = critic_cache.output().sum() / n;
        let dq = Array2::from_elem((states.nrows(), 1), 1.0 / n);
        let din = self.critic.input_gradient(&critic_cache, dq.view())?;
        let da = din.slice(s![.., sd..]);
        let (grads, _) = self.actor.backward(&actor_cache, da)?;
        Ok((objective, grads))
    }

    /// One ascent step on the actor; the critic is only read. A non-finite
    /// gradient skips the update.
    pub fn train_actor(&mut self, batch: &Batch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::contract("actor batch is empty"));
        }
        let (objective, mut grads) = self.actor_objective_gradient(batch.states.view())?;
        if !grads.is_finite() {
            log::warn!("non-finite actor gradient, update skipped");
            return Ok(objective);
        }
        grads.scale(-1.0);
        adam_step(&mut self.actor, &grads, &mut self.actor_opt)?;
        Ok(objective)
    }

    pub fn sync_targets(&mut self) {
        sync_hard(&mut self.actor_target, &self.actor);
        sync_hard(&mut self.critic_target, &self.critic);
    }

    /// Checkpoint layout: `b"UAVBSAGT"`, u32 version, u32 K, u32 P, u8
    /// normalize flag, f64 a_max, then actor, critic, target actor, target
    /// critic, actor Adam, critic Adam and the normalizer as encoded by
    /// [`crate::nn::checkpoint`].
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(CHECKPOINT_MAGIC);
        e.u32(CHECKPOINT_VERSION);
        e.u32(self.users as u32);
        e.u32(self.uavs as u32);
        e.u8(self.normalize_states as u8);
        e.f64(self.a_max);
        for net in [&self.actor, &self.critic, &self.actor_target, &self.critic_target] {
            e.mlp(net);
        }
        e.adam(&self.actor_opt);
        e.adam(&self.critic_opt);
        e.normalizer(&self.normalizer);
        e.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut d = Decoder::new(bytes);
        if d.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = d.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let users = d.u32()? as usize;
        let uavs = d.u32()? as usize;
        let normalize_states = d.u8()? != 0;
        let a_max = d.f64()?;
        let agent = Agent {
            users,
            uavs,
            a_max,
            actor: d.mlp()?,
            critic: d.mlp()?,
            actor_target: d.mlp()?,
            critic_target: d.mlp()?,
            actor_opt: d.adam()?,
            critic_opt: d.adam()?,
            normalizer: d.normalizer()?,
            normalize_states,
        };
        if !d.is_done() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let sdim = EnvState::dim(users, uavs);
        let shapes_ok = agent.actor.spec().input_dim() == sdim
            && agent.actor.spec().output_dim() == 2 * uavs
            && agent.critic.spec().input_dim() == sdim + 2 * uavs
            && agent.critic.spec().output_dim() == 1
            && agent.normalizer.dim() == sdim
            && agent.actor_opt.m.len() == agent.actor.num_params()
            && agent.critic_opt.m.len() == agent.critic.num_params();
        if !shapes_ok {
            return Err(Error::Checkpoint("network shapes do not match K and P".into()));
        }
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
