//! Per-slot placement search as an episodic MDP.
//!
//! The state is `[user xy (2K) | UAV xy (2P) | association code (K)]` with
//! positions divided by the area extent and the association code equal to
//! `(serving + 1) / P`, or 0 when unserved. An action is a per-UAV
//! `(dx, dy)` in meters bounded by `a_max`. The reward is the change in
//! throughput between consecutive epochs, so rewards telescope to the final
//! throughput minus the baseline stored at reset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Association, Evaluator, Interference};
use crate::scenario::{AreaConfig, Point, Snapshot};

/// What counts as the throughput "before" the first action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardBaseline {
    /// Initial throughput treated as zero; the first reward carries the full
    /// throughput of the first placement.
    #[default]
    Zero,
    /// Initial throughput of the reset placement.
    Initial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Largest per-axis move of one UAV in one epoch, meters.
    pub a_max_m: f64,
    /// Epochs per episode.
    pub epochs: usize,
    pub reward_baseline: RewardBaseline,
    /// Use interference-free rewards during the pretraining episodes.
    pub pretrain: bool,
    /// Start each slot from the previous slot's placement.
    pub warm_start: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            a_max_m: 5.0,
            epochs: 800,
            reward_baseline: RewardBaseline::Zero,
            pretrain: true,
            warm_start: true,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_max_m.is_finite() && self.a_max_m > 0.0) {
            return Err(Error::invalid("environment.a_max_m", format!("must be > 0, got {}", self.a_max_m)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("environment.epochs", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState(pub Vec<f64>);

impl EnvState {
    pub fn dim(k: usize, p: usize) -> usize {
        3 * k + 2 * p
    }

    pub fn encode(snap: &Snapshot, assoc: &Association, area: &AreaConfig) -> EnvState {
        let (k, p) = (snap.num_users(), snap.num_uavs());
        let mut v = Vec::with_capacity(Self::dim(k, p));
        for pt in snap.user_xy.iter().chain(&snap.uav_xy) {
            v.push(pt.x / area.width_m);
            v.push(pt.y / area.height_m);
        }
        v.extend(
            assoc
                .serving
                .iter()
                .map(|s| s.map_or(0.0, |i| (i + 1) as f64 / p as f64)),
        );
        EnvState(v)
    }

    /// Positions and association back from the encoding.
    pub fn decode(&self, k: usize, p: usize, area: &AreaConfig) -> Result<(Vec<Point>, Vec<Point>, Association)> {
        if self.0.len() != Self::dim(k, p) {
            return Err(Error::contract(format!(
                "state length {} does not match K={k}, P={p}",
                self.0.len()
            )));
        }
        let pt = |i: usize| Point::new(self.0[2 * i] * area.width_m, self.0[2 * i + 1] * area.height_m);
        let users = (0..k).map(pt).collect();
        let uavs = (k..k + p).map(pt).collect();
        let serving = self.0[2 * (k + p)..]
            .iter()
            .map(|&c| {
                let code = (c * p as f64).round() as usize;
                code.checked_sub(1)
            })
            .collect();
        Ok((users, uavs, Association { serving }))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-UAV `(dx, dy)` in meters, interleaved: `[dx0, dy0, dx1, dy1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvAction(pub Vec<f64>);

impl EnvAction {
    pub fn zeros(p: usize) -> Self {
        EnvAction(vec![0.0; 2 * p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    pub reward: f64,
    /// True (interference-aware) throughput after the move.
    pub throughput_now: f64,
    /// The quantity the reward telescopes against: the true throughput, or
    /// the interference-free one for a pretraining step.
    pub objective_now: f64,
    pub epoch: usize,
}

/// One visited placement. The first record of an episode has no action and
/// zero reward; it is the reset placement.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub state: EnvState,
    pub action: Option<EnvAction>,
    pub reward: f64,
    pub throughput: f64,
    pub uav_xy: Vec<Point>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<TraceRecord>,
}

impl EpisodeTrace {
    pub fn push(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn total_reward(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Highest-throughput record of a trace; ties resolve to the earliest.
pub fn best_state(trace: &EpisodeTrace) -> Result<&TraceRecord> {
    let mut it = trace.records.iter();
    let first = it.next().ok_or_else(|| Error::contract("best_state on an empty trace"))?;
    Ok(it.fold(first, |best, r| if r.throughput > best.throughput { r } else { best }))
}

/// A single-owner environment instance. `Clone` snapshots the whole thing,
/// including the previous-throughput accumulators.
#[derive(Clone, Debug)]
pub struct UavEnv {
    area: AreaConfig,
    eval: Evaluator,
    cfg: EnvConfig,
    snap: Option<Snapshot>,
    prev_true: f64,
    prev_free: f64,
    epoch: usize,
}

impl UavEnv {
    pub fn new(area: AreaConfig, eval: Evaluator, cfg: EnvConfig) -> Result<Self> {
        area.validate()?;
        cfg.validate()?;
        Ok(UavEnv {
            area,
            eval,
            cfg,
            snap: None,
            prev_true: 0.0,
            prev_free: 0.0,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn area(&self) -> &AreaConfig {
        &self.area
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }

    pub fn snapshot(&self) -> Option<&Snapshot> {
        self.snap.as_ref()
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn reset(&mut self, snap: Snapshot) -> Result<EnvState> {
        snap.validate(&self.area)?;
        let (t, assoc) = self.eval.evaluate(&snap, Interference::On);
        let (prev_true, prev_free) = match self.cfg.reward_baseline {
            RewardBaseline::Zero => (0.0, 0.0),
            RewardBaseline::Initial => (t, self.eval.throughput_no_interference(&snap)),
        };
        let state = EnvState::encode(&snap, &assoc, &self.area);
        self.snap = Some(snap);
        self.prev_true = prev_true;
        self.prev_free = prev_free;
        self.epoch = 0;
        Ok(state)
    }

    /// Current state plus the true throughput of the current placement.
    pub fn observe(&self) -> Result<(EnvState, f64)> {
        let snap = self.snap.as_ref().ok_or_else(|| Error::contract("environment used before reset"))?;
        let (t, assoc) = self.eval.evaluate(snap, Interference::On);
        Ok((EnvState::encode(snap, &assoc, &self.area), t))
    }

    pub fn step(&mut self, action: &EnvAction) -> Result<StepResult> {
        self.advance(action, false)
    }

    /// As [`step`](Self::step), but the reward is the change of the
    /// interference-free throughput.
    pub fn step_pretrain(&mut self, action: &EnvAction) -> Result<StepResult> {
        self.advance(action, true)
    }

    fn advance(&mut self, action: &EnvAction, pretrain: bool) -> Result<StepResult> {
        let snap = self.snap.as_mut().ok_or_else(|| Error::contract("step before reset"))?;
        let p = snap.num_uavs();
        if action.0.len() != 2 * p {
            return Err(Error::contract(format!(
                "action length {} but {} UAVs need {}",
                action.0.len(),
                p,
                2 * p
            )));
        }
        for (q, d) in snap.uav_xy.iter_mut().zip(action.0.chunks_exact(2)) {
            *q = self.area.clamp(Point::new(q.x + d[0], q.y + d[1]));
        }
        let (t_true, assoc) = self.eval.evaluate(snap, Interference::On);
        let t_free = self.eval.throughput_no_interference(snap);
        let (reward, objective_now) = if pretrain {
            (t_free - self.prev_free, t_free)
        } else {
            (t_true - self.prev_true, t_true)
        };
        self.prev_true = t_true;
        self.prev_free = t_free;
        self.epoch += 1;
        Ok(StepResult {
            next_state: EnvState::encode(snap, &assoc, &self.area),
            reward,
            throughput_now: t_true,
            objective_now,
            epoch: self.epoch,
        })
    }
}
