//! Air-to-ground channel: elevation-dependent LOS probability, LOS/NLOS path
//! gain and the LOS-averaged received power.
//!
//! The path gain is the received-power gain `(v / (4 pi f))^2 / mu * r^-alpha`,
//! i.e. free-space spreading with an excess attenuation `mu` (entered in dB)
//! and a condition-specific exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation condition of a single link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkCondition {
    Los,
    Nlos,
}

/// Physical constants of the channel. dB quantities stay in dB here and are
/// converted once by [`ChannelParams::compile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub mu_los_db: f64,
    pub mu_nlos_db: f64,
    pub b_env: f64,
    pub c_env: f64,
    pub tx_power_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            carrier_hz: 2e9,
            light_speed: 3e8,
            alpha_los: 2.0,
            alpha_nlos: 3.0,
            mu_los_db: 1.0,
            mu_nlos_db: 0.0,
            b_env: 0.136,
            c_env: 11.95,
            tx_power_w: 1.0,
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 20e6,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channel.carrier_hz", self.carrier_hz),
            ("channel.light_speed", self.light_speed),
            ("channel.tx_power_w", self.tx_power_w),
            ("channel.bandwidth_hz", self.bandwidth_hz),
            ("channel.b_env", self.b_env),
            ("channel.c_env", self.c_env),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.alpha_los >= 2.0) {
            return Err(Error::invalid("channel.alpha_los", format!("must be >= 2, got {}", self.alpha_los)));
        }
        if !(self.alpha_nlos >= self.alpha_los) {
            return Err(Error::invalid(
                "channel.alpha_nlos",
                format!("must be >= alpha_los ({}), got {}", self.alpha_los, self.alpha_nlos),
            ));
        }
        if self.mu_los_db.is_nan() || self.mu_nlos_db.is_nan() || !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::invalid("channel", "attenuation and noise density must be numbers"));
        }
        Ok(())
    }

    /// Noise power over the whole band, in watts.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10();
        db_to_linear(dbm) * 1e-3
    }

    pub fn compile(&self) -> Result<Channel> {
        self.validate()?;
        let k = self.light_speed / (4.0 * std::f64::consts::PI * self.carrier_hz);
        Ok(Channel {
            params: self.clone(),
            free_space: k * k,
            inv_mu_los: db_to_linear(-self.mu_los_db),
            inv_mu_nlos: db_to_linear(-self.mu_nlos_db),
            noise_w: self.noise_power_w(),
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Elevation angle in degrees of a link of 3-D length `r` to a UAV at height `h`.
pub fn elevation_angle_deg(r: f64, h: f64) -> Result<f64> {
    // sqrt(h*h) can round a hair below h; anything within that is overhead
    if !(h > 0.0) || !(r >= h * (1.0 - 1e-12)) {
        return Err(Error::ElevationDomain {
            distance: r,
            altitude: h,
        });
    }
    Ok((h / r).min(1.0).asin().to_degrees())
}

/// A validated [`ChannelParams`] with the linear constants precomputed.
#[derive(Clone, Debug)]
pub struct Channel {
    params: ChannelParams,
    free_space: f64,
    inv_mu_los: f64,
    inv_mu_nlos: f64,
    noise_w: f64,
}

impl Channel {
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_w
    }

    pub fn los_probability(&self, theta_deg: f64) -> f64 {
        let (b, c) = (self.params.b_env, self.params.c_env);
        1.0 / (1.0 + c * (-b * (theta_deg - c)).exp())
    }

    pub fn nlos_probability(&self, theta_deg: f64) -> f64 {
        1.0 - self.los_probability(theta_deg)
    }

    pub fn path_gain(&self, r: f64, condition: LinkCondition) -> f64 {
        match condition {
            LinkCondition::Los => self.free_space * self.inv_mu_los * r.powf(-self.params.alpha_los),
            LinkCondition::Nlos => self.free_space * self.inv_mu_nlos * r.powf(-self.params.alpha_nlos),
        }
    }

    /// LOS-probability weighted received power in watts.
    pub fn avg_received_power(&self, r: f64, h: f64) -> Result<f64> {
        let p_los = self.los_probability(elevation_angle_deg(r, h)?);
        let gain = p_los * self.path_gain(r, LinkCondition::Los) + (1.0 - p_los) * self.path_gain(r, LinkCondition::Nlos);
        Ok(self.params.tx_power_w * gain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_one() -> Channel {
        ChannelParams::default().compile().unwrap()
    }

    fn free_space_params() -> ChannelParams {
        ChannelParams {
            mu_los_db: 0.0,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn elevation_examples() {
        assert_eq!(elevation_angle_deg(100.0, 100.0).unwrap(), 90.0);
        assert!((elevation_angle_deg(200.0, 100.0).unwrap() - 30.0).abs() < 1e-9);
        assert!((elevation_angle_deg(141.4214, 100.0).unwrap() - 45.0).abs() < 1e-3);
        assert!(matches!(elevation_angle_deg(50.0, 100.0), Err(Error::ElevationDomain { .. })));
    }

    #[test]
    fn los_probability_examples() {
        let ch = table_one();
        assert!((ch.los_probability(11.95) - 1.0 / 12.95).abs() < 1e-6);
        assert!((ch.los_probability(11.95) - 0.077220).abs() < 1e-6);
        // direct evaluation: 1 / (1 + 11.95 exp(-0.136 * 78.05))
        assert!((ch.los_probability(90.0) - 0.99971).abs() < 1e-4);
        // 1 / (1 + 11.95 exp(-0.136 * 33.05))
        assert!((ch.los_probability(45.0) - 0.89).abs() < 0.01);
        assert_eq!(ch.los_probability(30.0) + ch.nlos_probability(30.0), 1.0);
    }

    #[test]
    fn path_gain_examples() {
        let ch = free_space_params().compile().unwrap();
        let c0 = (3e8 / (4.0 * std::f64::consts::PI * 2e9)).powi(2);
        assert!((c0 - 1.4249e-4).abs() / 1.4249e-4 < 1e-4);
        let g1 = ch.path_gain(1.0, LinkCondition::Los);
        assert!((g1 - c0).abs() / c0 < 1e-12);
        let g100 = ch.path_gain(100.0, LinkCondition::Los);
        assert!((g100 - 1.4249e-8).abs() < 1e-12);

        let blocked = ChannelParams {
            mu_nlos_db: f64::INFINITY,
            ..ChannelParams::default()
        }
        .compile()
        .unwrap();
        assert_eq!(blocked.path_gain(10.0, LinkCondition::Nlos), 0.0);
    }

    #[test]
    fn overhead_power_composes() {
        let ch = table_one();
        let h = 100.0;
        let p_los = ch.los_probability(90.0);
        let expect = p_los * ch.path_gain(h, LinkCondition::Los) + (1.0 - p_los) * ch.path_gain(h, LinkCondition::Nlos);
        assert!((ch.avg_received_power(h, h).unwrap() - expect).abs() <= 1e-15 * expect);
        assert!((p_los - 0.99971).abs() < 1e-4);
    }

    #[test]
    fn identical_conditions_ignore_los_probability() {
        let ch = ChannelParams {
            alpha_nlos: 2.0,
            mu_nlos_db: 1.0,
            ..ChannelParams::default()
        }
        .compile()
        .unwrap();
        for r in [100.0, 150.0, 400.0] {
            let p = ch.avg_received_power(r, 100.0).unwrap();
            let g = ch.path_gain(r, LinkCondition::Los);
            assert!((p - g).abs() <= 1e-15 * g);
        }
    }

    #[test]
    fn power_is_linear_in_tx_power() {
        let one = table_one();
        let two = ChannelParams {
            tx_power_w: 2.0,
            ..ChannelParams::default()
        }
        .compile()
        .unwrap();
        for r in [100.0, 123.0, 700.0] {
            assert_eq!(two.avg_received_power(r, 100.0).unwrap(), 2.0 * one.avg_received_power(r, 100.0).unwrap());
        }
    }

    #[test]
    fn noise_over_band() {
        let n = ChannelParams::default().noise_power_w();
        assert!((n - 7.96e-14).abs() / 7.96e-14 < 1e-3, "{n}");
    }

    #[test]
    fn validation() {
        let bad = ChannelParams {
            alpha_nlos: 1.5,
            ..ChannelParams::default()
        };
        assert!(bad.compile().is_err());
        let bad = ChannelParams {
            carrier_hz: 0.0,
            ..ChannelParams::default()
        };
        assert!(bad.compile().is_err());
    }

    proptest! {
        #[test]
        fn gain_scales_with_exponent(r in 1.0..5000.0f64) {
            let ch = table_one();
            for (cond, alpha) in [(LinkCondition::Los, 2.0f64), (LinkCondition::Nlos, 3.0)] {
                let ratio = ch.path_gain(2.0 * r, cond) / ch.path_gain(r, cond);
                prop_assert!((ratio - 2f64.powf(-alpha)).abs() <= 1e-12 * 2f64.powf(-alpha));
            }
        }

        #[test]
        fn los_probability_increasing(a in 0.01..90.0f64, b in 0.01..90.0f64) {
            let ch = table_one();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let (plo, phi) = (ch.los_probability(lo), ch.los_probability(hi));
            prop_assert!(plo < phi);
            prop_assert!(plo > 0.0 && phi < 1.0);
        }
    }
}
