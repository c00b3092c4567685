use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{AreaConfig, Point, Snapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// Starting temperature in bps/Hz. `None` picks 10% of the initial
    /// throughput with a floor of 1.0.
    pub initial_temperature: Option<f64>,
    /// Geometric cooling factor applied after every iteration.
    pub cooling: f64,
    pub iterations: usize,
    /// Std of the Gaussian move applied to every coordinate, meters.
    pub step_sigma_m: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: None,
            cooling: 0.995,
            iterations: 5000,
            step_sigma_m: 20.0,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("baseline.anneal.initial_temperature", format!("must be > 0, got {t}")));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::invalid("baseline.anneal.cooling", format!("must lie in (0, 1), got {}", self.cooling)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("baseline.anneal.iterations", "must be >= 1"));
        }
        if !(self.step_sigma_m > 0.0 && self.step_sigma_m.is_finite()) {
            return Err(Error::invalid("baseline.anneal.step_sigma_m", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealResult {
    pub placement: Vec<Point>,
    pub throughput: f64,
    /// Best objective seen after each iteration (entry 0 is the start).
    pub best_trace: Vec<f64>,
    /// Objective of the current (accepted) state after each iteration.
    pub current_trace: Vec<f64>,
}

/// Metropolis search over joint Gaussian moves of all UAV coordinates,
/// clamped into the area. Maximizes `objective`; a worse neighbor is taken
/// with probability `exp(delta / T)`.
pub fn simulated_annealing(
    snap: &Snapshot,
    area: &AreaConfig,
    cfg: &AnnealConfig,
    mut objective: impl FnMut(&Snapshot) -> f64,
) -> Result<AnnealResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let step = Normal::new(0.0, cfg.step_sigma_m).expect("validated sigma");
    let mut current = snap.clone();
    let mut f_cur = objective(&current);
    let mut best = current.uav_xy.clone();
    let mut f_best = f_cur;
    let mut temp = cfg.initial_temperature.unwrap_or_else(|| (0.1 * f_cur).max(1.0));
    let mut best_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut current_trace = Vec::with_capacity(cfg.iterations + 1);
    best_trace.push(f_best);
    current_trace.push(f_cur);

    let mut cand = current.clone();
    for _ in 0..cfg.iterations {
        for (c, q) in cand.uav_xy.iter_mut().zip(&current.uav_xy) {
            *c = area.clamp(Point::new(q.x + step.sample(&mut rng), q.y + step.sample(&mut rng)));
        }
        let f_new = objective(&cand);
        let delta = f_new - f_cur;
        // draw unconditionally so the random stream does not depend on delta
        let u: f64 = rng.random();
        if delta >= 0.0 || u < (delta / temp).exp() {
            std::mem::swap(&mut current, &mut cand);
            f_cur = f_new;
            if f_cur > f_best {
                f_best = f_cur;
                best.clone_from(&current.uav_xy);
            }
        }
        temp *= cfg.cooling;
        best_trace.push(f_best);
        current_trace.push(f_cur);
    }
    Ok(AnnealResult {
        placement: best,
        throughput: f_best,
        best_trace,
        current_trace,
    })
}
