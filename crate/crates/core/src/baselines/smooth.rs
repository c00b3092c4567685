use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Solution;
use crate::error::{Error, Result};
use crate::network::Evaluator;
use crate::scenario::{link_distance, AreaConfig, Point, Snapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothOptConfig {
    /// Sigmoid slope of the rate-threshold indicator and softmax slope of
    /// the serving choice, per bps/Hz.
    pub rate_sharpness: f64,
    /// Sigmoid slope of the radius indicator, per meter.
    pub distance_sharpness: f64,
    /// Initial step length per stage, meters.
    pub step_m: f64,
    /// Ascent iterations per continuation stage.
    pub iterations: usize,
    /// Sharpness multipliers applied in turn; each stage starts where the
    /// previous one stopped. Small multipliers let distant users pull.
    pub continuation: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SmoothOptConfig {
    fn default() -> Self {
        SmoothOptConfig {
            rate_sharpness: 10.0,
            distance_sharpness: 10.0,
            step_m: 20.0,
            iterations: 150,
            continuation: vec![1e-3, 1e-2, 1e-1, 1.0],
            restarts: 8,
            seed: 0,
        }
    }
}

impl SmoothOptConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("baseline.smooth.rate_sharpness", self.rate_sharpness),
            ("baseline.smooth.distance_sharpness", self.distance_sharpness),
            ("baseline.smooth.step_m", self.step_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.continuation.is_empty() || self.continuation.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::invalid("baseline.smooth.continuation", "needs at least one positive multiplier"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("baseline.smooth.restarts", "must be >= 1"));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smoothed throughput: per user, `sum_p w_p * sig(a (se_p - G)) *
/// sig(b (delta - r_p)) * se_p` with `w = softmax(a * se)`. Since `se_p` is
/// increasing in the received power of link `p`, the softmax tends to the
/// strongest-link choice as `a` grows.
pub fn relaxed_objective(snap: &Snapshot, eval: &Evaluator, rate_sharpness: f64, distance_sharpness: f64) -> f64 {
    let h = eval.altitude_m();
    let noise = eval.channel().noise_power_w();
    let qos = eval.qos();
    let p = snap.num_uavs();
    let mut r = vec![0.0; p];
    let mut w = vec![0.0; p];
    let mut se = vec![0.0; p];
    let mut total = 0.0;
    for u in &snap.user_xy {
        for (i, q) in snap.uav_xy.iter().enumerate() {
            r[i] = link_distance(u, q, h);
            w[i] = eval.channel().avg_received_power(r[i], h).expect("link distance >= altitude");
        }
        let sum_w: f64 = w.iter().sum();
        for i in 0..p {
            se[i] = (1.0 + w[i] / (sum_w - w[i] + noise)).log2();
        }
        let top = se.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = se.iter().map(|s| (rate_sharpness * (s - top)).exp()).sum();
        for i in 0..p {
            let weight = (rate_sharpness * (se[i] - top)).exp() / z;
            let rate_ok = sigmoid(rate_sharpness * (se[i] - qos.rate_threshold_bpshz));
            let near = sigmoid(distance_sharpness * (qos.comm_radius_m - r[i]));
            total += weight * rate_ok * near * se[i];
        }
    }
    total
}

/// Multi-start projected ascent on [`relaxed_objective`] with numerical
/// gradients and backtracking. Restart 0 starts from the snapshot's
/// placement and runs every continuation stage. The other starts are
/// screened: a seeded pool of uniform placements is scored on the true
/// objective and the best ones that sit at least `0.4 * comm_radius` apart
/// are kept. They skip the first stage, which would otherwise pull them all
/// toward the same bulk of users. Every iterate is scored on the true
/// objective and the best one overall is returned.
pub fn smooth_opt(snap: &Snapshot, area: &AreaConfig, eval: &Evaluator, cfg: &SmoothOptConfig) -> Result<Solution> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = Solution {
        placement: snap.uav_xy.clone(),
        throughput: eval.throughput(snap),
    };
    let starts = screened_starts(snap, area, eval, cfg.restarts - 1, &mut rng);
    // a single-stage schedule has nothing to skip
    let later = &cfg.continuation[usize::from(cfg.continuation.len() > 1)..];
    let runs = std::iter::once((snap.uav_xy.clone(), &cfg.continuation[..]))
        .chain(starts.into_iter().map(|s| (s, later)));
    for (start, stages) in runs {
        let mut cur = snap.with_uavs(start);
        let mut consider = |s: &Snapshot| {
            let t = eval.throughput(s);
            if t > best.throughput {
                best = Solution {
                    placement: s.uav_xy.clone(),
                    throughput: t,
                };
            }
        };
        consider(&cur);
        for &m in stages {
            let (a, b) = (cfg.rate_sharpness * m, cfg.distance_sharpness * m);
            let f = |s: &Snapshot| relaxed_objective(s, eval, a, b);
            let mut f_cur = f(&cur);
            let mut step = cfg.step_m;
            for _ in 0..cfg.iterations {
                let g = numeric_gradient(&cur, &f);
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    break;
                }
                // backtrack until the relaxed objective improves
                let mut moved = false;
                while step > 1e-3 {
                    let cand = project(&cur, &g, step / norm, area);
                    let f_new = f(&cand);
                    if f_new > f_cur {
                        cur = cand;
                        f_cur = f_new;
                        step *= 1.5;
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !moved {
                    break;
                }
                consider(&cur);
            }
        }
    }
    Ok(best)
}

const FD_STEP_M: f64 = 1e-3;
const SCREEN_POOL_PER_START: usize = 8;

fn screened_starts(
    snap: &Snapshot,
    area: &AreaConfig,
    eval: &Evaluator,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Point>> {
    let mut pool: Vec<(f64, Vec<Point>)> = (0..count * SCREEN_POOL_PER_START)
        .map(|_| {
            let uavs: Vec<Point> = (0..snap.num_uavs())
                .map(|_| Point::new(rng.random_range(0.0..=area.width_m), rng.random_range(0.0..=area.height_m)))
                .collect();
            (eval.throughput(&snap.with_uavs(uavs.clone())), uavs)
        })
        .collect();
    // stable sort keeps draw order among ties
    pool.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sep = 0.4 * eval.qos().comm_radius_m;
    let mut chosen: Vec<Vec<Point>> = Vec::with_capacity(count);
    for (_, c) in pool {
        if chosen.len() == count {
            break;
        }
        let apart = chosen
            .iter()
            .all(|o| o.iter().zip(&c).any(|(a, b)| a.horizontal_distance(b) >= sep));
        if apart {
            chosen.push(c);
        }
    }
    chosen
}

fn numeric_gradient(s: &Snapshot, f: &impl Fn(&Snapshot) -> f64) -> Vec<f64> {
    let mut g = vec![0.0; 2 * s.num_uavs()];
    let mut probe = s.clone();
    for (i, gi) in g.iter_mut().enumerate() {
        let (p, axis) = (i / 2, i % 2);
        let orig = probe.uav_xy[p];
        let shift = |d: f64| {
            if axis == 0 {
                Point::new(orig.x + d, orig.y)
            } else {
                Point::new(orig.x, orig.y + d)
            }
        };
        probe.uav_xy[p] = shift(FD_STEP_M);
        let up = f(&probe);
        probe.uav_xy[p] = shift(-FD_STEP_M);
        let down = f(&probe);
        probe.uav_xy[p] = orig;
        *gi = (up - down) / (2.0 * FD_STEP_M);
    }
    g
}

fn project(s: &Snapshot, g: &[f64], scale: f64, area: &AreaConfig) -> Snapshot {
    let uavs = s
        .uav_xy
        .iter()
        .enumerate()
        .map(|(p, q)| area.clamp(Point::new(q.x + scale * g[2 * p], q.y + scale * g[2 * p + 1])))
        .collect();
    s.with_uavs(uavs)
}
