use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::agent::{Agent, AgentConfig};
use super::replay::{ReplayBuffer, Transition};
use crate::env::{best_state, EnvAction, EpisodeTrace, TraceRecord, UavEnv};
use crate::error::{Error, Result};
use crate::scenario::{sample_users, AreaConfig, Point, Snapshot, UserDistribution};

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub cumulative_reward: f64,
    pub final_throughput: f64,
    pub best_throughput: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    /// Copy with the wall-clock column zeroed, for byte-stable output.
    pub fn without_timing(&self) -> TrainingLog {
        TrainingLog {
            episodes: self
                .episodes
                .iter()
                .map(|e| EpisodeLog {
                    wall_ms: 0.0,
                    ..e.clone()
                })
                .collect(),
        }
    }
}

/// Draws the starting snapshot of each training episode: fresh users from
/// the configured distribution and uniformly random UAV positions.
#[derive(Clone, Debug)]
pub struct EpisodeSampler {
    pub area: AreaConfig,
    pub users: usize,
    pub uavs: usize,
    pub distribution: UserDistribution,
}

impl EpisodeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, episode: usize, rng: &mut R) -> Snapshot {
        let user_xy = sample_users(&self.distribution, self.users, &self.area, rng);
        let uav_xy = (0..self.uavs)
            .map(|_| {
                Point::new(
                    rng.random_range(0.0..=self.area.width_m),
                    rng.random_range(0.0..=self.area.height_m),
                )
            })
            .collect();
        Snapshot {
            time_slot: episode,
            user_xy,
            uav_xy,
        }
    }
}

/// Runs `cfg.episodes` episodes of `env.config().epochs` steps each. Every
/// step stores a transition and, once the buffer holds a full batch, does
/// `cfg.updates_per_step` critic and actor updates. Targets are hard-synced
/// every `cfg.sync_period` steps counted across episodes.
///
/// The log is filled as episodes complete. When `checkpoint` is given the
/// agent is written there whether or not training succeeded.
pub fn train(
    agent: &mut Agent,
    env: &mut UavEnv,
    sampler: &EpisodeSampler,
    cfg: &AgentConfig,
    seed: u64,
    checkpoint: Option<&Path>,
    log: &mut TrainingLog,
) -> Result<()> {
    let result = train_inner(agent, env, sampler, cfg, seed, log);
    if let Some(path) = checkpoint {
        if let Err(e) = agent.save(path) {
            log::error!("could not write checkpoint {}: {e}", path.display());
            return result.and(Err(e));
        }
    }
    result
}

fn train_inner(
    agent: &mut Agent,
    env: &mut UavEnv,
    sampler: &EpisodeSampler,
    cfg: &AgentConfig,
    seed: u64,
    log: &mut TrainingLog,
) -> Result<()> {
    cfg.validate()?;
    if sampler.users != agent.users || sampler.uavs != agent.uavs {
        return Err(Error::contract(format!(
            "agent built for K={} P={} but episodes have K={} P={}",
            agent.users, agent.uavs, sampler.users, sampler.uavs
        )));
    }
    if (env.config().a_max_m - agent.a_max).abs() > 0.0 {
        return Err(Error::contract("agent and environment disagree on a_max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let epochs = env.config().epochs;
    let pretrain_episodes = if env.config().pretrain { cfg.pretrain_episodes } else { 0 };
    let mut total_steps = 0usize;

    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let snap = sampler.sample(episode, &mut rng);
        let mut state = env.reset(snap)?;
        agent.observe_state(&state);
        let noise = cfg.noise_fraction(episode);
        let pretrain = episode < pretrain_episodes;
        let mut cumulative = 0.0;
        let mut final_tp = env.observe()?.1;
        let mut best_tp = final_tp;

        for _ in 0..epochs {
            let action = agent.act(&state, Some(noise), &mut rng);
            let step = if pretrain {
                env.step_pretrain(&action)?
            } else {
                env.step(&action)?
            };
            agent.observe_state(&step.next_state);
            cumulative += step.reward;
            final_tp = step.throughput_now;
            best_tp = best_tp.max(final_tp);
            buffer.push(Transition {
                state: std::mem::replace(&mut state, step.next_state.clone()),
                action,
                reward: step.reward,
                next_state: step.next_state,
            });

            for _ in 0..cfg.updates_per_step {
                if buffer.len() < cfg.batch_size {
                    break;
                }
                let samples = buffer.sample(cfg.batch_size, &mut rng);
                let batch = agent.make_batch(&samples);
                let targets = agent.td_target(&batch, cfg.gamma, cfg.reward_scale);
                agent.train_critic(&batch, &targets).map_err(|e| {
                    log::error!("episode {episode}: critic update failed after {total_steps} steps: {e}");
                    e
                })?;
                agent.train_actor(&batch)?;
            }
            total_steps += 1;
            if total_steps.is_multiple_of(cfg.sync_period) {
                agent.sync_targets();
            }
        }

        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        log::debug!("episode {episode}: reward {cumulative:.4} final {final_tp:.4} best {best_tp:.4}");
        log.episodes.push(EpisodeLog {
            episode,
            cumulative_reward: cumulative,
            final_throughput: final_tp,
            best_throughput: best_tp,
            wall_ms,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub placement: Vec<Point>,
    pub throughput: f64,
    pub trace: EpisodeTrace,
}

/// Rolls out `epochs` noise-free policy steps from `snap` and returns the
/// best placement visited, the starting one included.
pub fn decide(agent: &Agent, env: &mut UavEnv, snap: Snapshot, epochs: usize) -> Result<Decision> {
    if snap.num_users() != agent.users || snap.num_uavs() != agent.uavs {
        return Err(Error::contract(format!(
            "agent built for K={} P={} but snapshot has K={} P={}",
            agent.users,
            agent.uavs,
            snap.num_users(),
            snap.num_uavs()
        )));
    }
    let mut state = env.reset(snap)?;
    let (_, t0) = env.observe()?;
    let mut trace = EpisodeTrace::default();
    trace.push(TraceRecord {
        state: state.clone(),
        action: None,
        reward: 0.0,
        throughput: t0,
        uav_xy: env.snapshot().expect("reset").uav_xy.clone(),
    });
    for _ in 0..epochs {
        let action: EnvAction = agent.policy(&state);
        let step = env.step(&action)?;
        state = step.next_state.clone();
        trace.push(TraceRecord {
            state: step.next_state,
            action: Some(action),
            reward: step.reward,
            throughput: step.throughput_now,
            uav_xy: env.snapshot().expect("reset").uav_xy.clone(),
        });
    }
    let best = best_state(&trace)?;
    Ok(Decision {
        placement: best.uav_xy.clone(),
        throughput: best.throughput,
        trace,
    })
}
