//! SINR, user association and the per-slot throughput objective.
//!
//! All rates are spectral efficiencies in bps/Hz. A user is a candidate for
//! UAV `p` when it is within the communication radius and its spectral
//! efficiency on that link reaches the rate threshold (both closed
//! conditions); among candidates the strongest average received power
//! serves, ties going to the lowest UAV index.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelParams};
use crate::error::{Error, Result};
use crate::scenario::{link_distance, AreaConfig, Point, Snapshot};

/// Rate threshold and communication radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosParams {
    pub rate_threshold_bpshz: f64,
    pub comm_radius_m: f64,
}

impl Default for QosParams {
    fn default() -> Self {
        QosParams {
            rate_threshold_bpshz: 2.5,
            comm_radius_m: 250.0,
        }
    }
}

impl QosParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_threshold_bpshz >= 0.0) || !self.rate_threshold_bpshz.is_finite() {
            return Err(Error::invalid(
                "qos.rate_threshold_bpshz",
                format!("must be >= 0, got {}", self.rate_threshold_bpshz),
            ));
        }
        if !(self.comm_radius_m > 0.0) {
            return Err(Error::invalid("qos.comm_radius_m", format!("must be > 0, got {}", self.comm_radius_m)));
        }
        Ok(())
    }
}

/// Per-link quantities, indexed `[user, uav]`.
#[derive(Clone, Debug)]
pub struct LinkReport {
    pub distance_m: Array2<f64>,
    pub rx_power_w: Array2<f64>,
    pub sinr: Array2<f64>,
    pub spectral_eff: Array2<f64>,
}

/// Serving UAV per user; `None` is unserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Association {
    pub serving: Vec<Option<usize>>,
}

impl Association {
    pub fn served_count(&self) -> usize {
        self.serving.iter().filter(|s| s.is_some()).count()
    }
}

/// Whether co-channel UAVs count as interference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interference {
    On,
    Off,
}

/// Everything needed to score a snapshot: channel, QoS and UAV altitude.
#[derive(Clone, Debug)]
pub struct Evaluator {
    channel: Channel,
    qos: QosParams,
    altitude_m: f64,
}

impl Evaluator {
    pub fn new(area: &AreaConfig, channel: &ChannelParams, qos: QosParams) -> Result<Self> {
        area.validate()?;
        qos.validate()?;
        Ok(Evaluator {
            channel: channel.compile()?,
            qos,
            altitude_m: area.uav_altitude_m,
        })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn qos(&self) -> &QosParams {
        &self.qos
    }

    pub fn altitude_m(&self) -> f64 {
        self.altitude_m
    }

    fn rx_power(&self, user: &Point, uav: &Point) -> (f64, f64) {
        let r = link_distance(user, uav, self.altitude_m);
        let p = self
            .channel
            .avg_received_power(r, self.altitude_m)
            .expect("3-D link distance never drops below the altitude");
        (r, p)
    }

    /// Full K x P link matrices.
    pub fn link_report(&self, snap: &Snapshot, mode: Interference) -> LinkReport {
        let (k, p) = (snap.num_users(), snap.num_uavs());
        let mut distance_m = Array2::zeros((k, p));
        let mut rx_power_w = Array2::zeros((k, p));
        for (ki, u) in snap.user_xy.iter().enumerate() {
            for (pi, q) in snap.uav_xy.iter().enumerate() {
                let (r, w) = self.rx_power(u, q);
                distance_m[[ki, pi]] = r;
                rx_power_w[[ki, pi]] = w;
            }
        }
        let noise = self.channel.noise_power_w();
        let mut sinr = Array2::zeros((k, p));
        for ki in 0..k {
            for pi in 0..p {
                let interference: f64 = match mode {
                    Interference::On => (0..p).filter(|&j| j != pi).map(|j| rx_power_w[[ki, j]]).sum(),
                    Interference::Off => 0.0,
                };
                sinr[[ki, pi]] = rx_power_w[[ki, pi]] / (interference + noise);
            }
        }
        let spectral_eff = sinr.mapv(|s: f64| (1.0 + s).log2());
        LinkReport {
            distance_m,
            rx_power_w,
            sinr,
            spectral_eff,
        }
    }

    pub fn associate(&self, report: &LinkReport) -> Association {
        let serving = report
            .rx_power_w
            .rows()
            .into_iter()
            .enumerate()
            .map(|(ki, rx)| {
                let mut best: Option<usize> = None;
                for pi in 0..rx.len() {
                    if !self.feasible(report.distance_m[[ki, pi]], report.spectral_eff[[ki, pi]]) {
                        continue;
                    }
                    if best.is_none_or(|b| rx[pi] > rx[b]) {
                        best = Some(pi);
                    }
                }
                best
            })
            .collect();
        Association { serving }
    }

    fn feasible(&self, distance: f64, spectral_eff: f64) -> bool {
        distance <= self.qos.comm_radius_m && spectral_eff >= self.qos.rate_threshold_bpshz
    }

    /// Sum of served users' spectral efficiency plus the association behind it.
    pub fn evaluate(&self, snap: &Snapshot, mode: Interference) -> (f64, Association) {
        let p = snap.num_uavs();
        let noise = self.channel.noise_power_w();
        let mut dist = vec![0.0; p];
        let mut rx = vec![0.0; p];
        let mut total = 0.0;
        let mut serving = Vec::with_capacity(snap.num_users());
        for u in &snap.user_xy {
            for (pi, q) in snap.uav_xy.iter().enumerate() {
                (dist[pi], rx[pi]) = self.rx_power(u, q);
            }
            let mut best: Option<(usize, f64)> = None;
            for pi in 0..p {
                let interference: f64 = match mode {
                    Interference::On => (0..p).filter(|&j| j != pi).map(|j| rx[j]).sum(),
                    Interference::Off => 0.0,
                };
                let se = (1.0 + rx[pi] / (interference + noise)).log2();
                if self.feasible(dist[pi], se) && best.is_none_or(|(b, _)| rx[pi] > rx[b]) {
                    best = Some((pi, se));
                }
            }
            if let Some((_, se)) = best {
                total += se;
            }
            serving.push(best.map(|(b, _)| b));
        }
        (total, Association { serving })
    }

    /// The placement objective, in bps/Hz.
    pub fn throughput(&self, snap: &Snapshot) -> f64 {
        self.evaluate(snap, Interference::On).0
    }

    /// The same objective with the interference term dropped from every SINR.
    pub fn throughput_no_interference(&self, snap: &Snapshot) -> f64 {
        self.evaluate(snap, Interference::Off).0
    }

    /// Reporting-only throughput in bit/s: each UAV's band is split equally
    /// among the users it serves.
    pub fn throughput_bps(&self, snap: &Snapshot) -> f64 {
        let report = self.link_report(snap, Interference::On);
        let assoc = self.associate(&report);
        let mut load = vec![0usize; snap.num_uavs()];
        for p in assoc.serving.iter().flatten() {
            load[*p] += 1;
        }
        let band = self.channel.params().bandwidth_hz;
        assoc
            .serving
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|p| report.spectral_eff[[k, p]] * band / load[p] as f64))
            .sum()
    }
}

/// Objective of the chosen association read back from a report.
pub fn served_sum(report: &LinkReport, assoc: &Association) -> f64 {
    assoc
        .serving
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.map(|p| report.spectral_eff[[k, p]]))
        .sum()
}
