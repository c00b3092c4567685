//! World geometry, user placement and slot-to-slot mobility.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontal position in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn horizontal_distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

/// Rectangular service area and the common UAV altitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaConfig {
    pub width_m: f64,
    pub height_m: f64,
    pub uav_altitude_m: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig {
            width_m: 800.0,
            height_m: 800.0,
            uav_altitude_m: 100.0,
        }
    }
}

impl AreaConfig {
    pub fn new(width_m: f64, height_m: f64, uav_altitude_m: f64) -> Result<Self> {
        let area = AreaConfig {
            width_m,
            height_m,
            uav_altitude_m,
        };
        area.validate()?;
        Ok(area)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("scenario.width_m", self.width_m),
            ("scenario.height_m", self.height_m),
            ("scenario.uav_altitude_m", self.uav_altitude_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    /// Componentwise projection onto `[0, width] x [0, height]`.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width_m), p.y.clamp(0.0, self.height_m))
    }

    pub fn center(&self) -> Point {
        Point::new(self.width_m / 2.0, self.height_m / 2.0)
    }
}

/// Positions of every user and UAV at one time slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time_slot: usize,
    pub user_xy: Vec<Point>,
    pub uav_xy: Vec<Point>,
}

impl Snapshot {
    /// Builds a snapshot after checking that every point is inside `area`
    /// and that at least one UAV exists. An empty user set is allowed.
    pub fn new(time_slot: usize, user_xy: Vec<Point>, uav_xy: Vec<Point>, area: &AreaConfig) -> Result<Self> {
        let snap = Snapshot {
            time_slot,
            user_xy,
            uav_xy,
        };
        snap.validate(area)?;
        Ok(snap)
    }

    pub fn validate(&self, area: &AreaConfig) -> Result<()> {
        if self.uav_xy.is_empty() {
            return Err(Error::invalid("snapshot.uav_xy", "at least one UAV is required"));
        }
        if let Some(p) = self.user_xy.iter().find(|p| !area.contains(p)) {
            return Err(Error::invalid("snapshot.user_xy", format!("user at ({}, {}) is outside the area", p.x, p.y)));
        }
        if let Some(p) = self.uav_xy.iter().find(|p| !area.contains(p)) {
            return Err(Error::invalid("snapshot.uav_xy", format!("UAV at ({}, {}) is outside the area", p.x, p.y)));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.user_xy.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.uav_xy.len()
    }

    pub fn with_uavs(&self, uav_xy: Vec<Point>) -> Snapshot {
        Snapshot {
            time_slot: self.time_slot,
            user_xy: self.user_xy.clone(),
            uav_xy,
        }
    }
}

/// How users are scattered over the area in each slot.
#[derive(Clone, Debug, PartialEq)]
pub enum UserDistribution {
    Uniform,
    /// Equal-weight mixture of isotropic Gaussians.
    Gaussian { centers: Vec<Point>, sigma_m: f64 },
}

impl UserDistribution {
    /// One Gaussian at the area midpoint with sigma = width / 8.
    pub fn default_gaussian(area: &AreaConfig) -> Self {
        UserDistribution::Gaussian {
            centers: vec![area.center()],
            sigma_m: area.width_m / 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UserDistribution::Uniform => Ok(()),
            UserDistribution::Gaussian { centers, sigma_m } => {
                if centers.is_empty() {
                    return Err(Error::invalid("scenario.gaussian_centers", "at least one center is required"));
                }
                if !(sigma_m.is_finite() && *sigma_m > 0.0) {
                    return Err(Error::invalid("scenario.gaussian_sigma_m", format!("must be > 0, got {sigma_m}")));
                }
                Ok(())
            }
        }
    }
}

/// Draws `k` user positions. Gaussian draws that leave the area are clamped
/// onto its boundary so exactly `k` points come back.
pub fn sample_users<R: Rng + ?Sized>(dist: &UserDistribution, k: usize, area: &AreaConfig, rng: &mut R) -> Vec<Point> {
    match dist {
        UserDistribution::Uniform => (0..k)
            .map(|_| Point::new(rng.random_range(0.0..=area.width_m), rng.random_range(0.0..=area.height_m)))
            .collect(),
        UserDistribution::Gaussian { centers, sigma_m } => {
            let noise = Normal::new(0.0, *sigma_m).expect("sigma validated positive");
            (0..k)
                .map(|_| {
                    let c = centers[rng.random_range(0..centers.len())];
                    area.clamp(Point::new(c.x + noise.sample(rng), c.y + noise.sample(rng)))
                })
                .collect()
        }
    }
}

/// Moves to the next slot: users are redrawn i.i.d., UAVs stay put.
pub fn advance_slot<R: Rng + ?Sized>(prev: &Snapshot, dist: &UserDistribution, area: &AreaConfig, rng: &mut R) -> Snapshot {
    Snapshot {
        time_slot: prev.time_slot + 1,
        user_xy: sample_users(dist, prev.user_xy.len(), area, rng),
        uav_xy: prev.uav_xy.clone(),
    }
}

/// 3-D distance between a ground user and a UAV flying at height `h`.
pub fn link_distance(user: &Point, uav: &Point, h: f64) -> f64 {
    let dx = user.x - uav.x;
    let dy = user.y - uav.y;
    (dx * dx + dy * dy + h * h).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn area800() -> AreaConfig {
        AreaConfig::new(800.0, 800.0, 100.0).unwrap()
    }

    #[test]
    fn empty_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_users(&UserDistribution::Uniform, 0, &area800(), &mut rng).is_empty());
    }

    #[test]
    fn uniform_sample_stays_in_box_with_centered_mean() {
        let area = area800();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = sample_users(&UserDistribution::Uniform, 1000, &area, &mut rng);
        assert_eq!(pts.len(), 1000);
        assert!(pts.iter().all(|p| area.contains(p)));
        let mx = pts.iter().map(|p| p.x).sum::<f64>() / 1000.0;
        let my = pts.iter().map(|p| p.y).sum::<f64>() / 1000.0;
        assert!((360.0..=440.0).contains(&mx), "{mx}");
        assert!((360.0..=440.0).contains(&my), "{my}");
    }

    #[test]
    fn degenerate_gaussian_collapses_on_center() {
        let dist = UserDistribution::Gaussian {
            centers: vec![Point::new(400.0, 400.0)],
            sigma_m: 1e-9,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_users(&dist, 5, &area800(), &mut rng);
        assert_eq!(pts.len(), 5);
        for p in pts {
            assert!(p.horizontal_distance(&Point::new(400.0, 400.0)) < 1e-6);
        }
    }

    #[test]
    fn wide_gaussian_is_clamped() {
        let dist = UserDistribution::Gaussian {
            centers: vec![Point::new(0.0, 0.0)],
            sigma_m: 500.0,
        };
        let area = area800();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = sample_users(&dist, 500, &area, &mut rng);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|p| area.contains(p)));
        assert!(pts.iter().any(|p| p.x == 0.0 || p.y == 0.0));
    }

    #[test]
    fn advance_slot_contract() {
        let area = area800();
        let prev = Snapshot::new(
            0,
            vec![Point::new(1.0, 2.0); 4],
            vec![Point::new(100.0, 100.0), Point::new(700.0, 700.0)],
            &area,
        )
        .unwrap();
        let a = advance_slot(&prev, &UserDistribution::Uniform, &area, &mut ChaCha8Rng::seed_from_u64(5));
        let b = advance_slot(&prev, &UserDistribution::Uniform, &area, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.time_slot, 1);
        assert_eq!(a.user_xy, b.user_xy);
        assert_eq!(a.user_xy.len(), 4);
        assert_eq!(a.uav_xy, vec![Point::new(100.0, 100.0), Point::new(700.0, 700.0)]);
    }

    #[test]
    fn link_distance_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(link_distance(&o, &o, 100.0), 100.0);
        assert!((link_distance(&o, &Point::new(100.0, 0.0), 100.0) - 141.4214).abs() < 1e-3);
        assert!((link_distance(&Point::new(300.0, 400.0), &o, 1e-4) - 500.0).abs() < 1e-6);
    }

    #[test]
    fn snapshot_rejects_out_of_area() {
        let area = area800();
        assert!(Snapshot::new(0, vec![Point::new(801.0, 0.0)], vec![Point::new(0.0, 0.0)], &area).is_err());
        assert!(Snapshot::new(0, vec![], vec![], &area).is_err());
        assert!(AreaConfig::new(0.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn link_distance_symmetric_and_bounded(ux in 0.0..800.0f64, uy in 0.0..800.0f64,
                                               px in 0.0..800.0f64, py in 0.0..800.0f64, h in 1.0..300.0f64) {
            let u = Point::new(ux, uy);
            let p = Point::new(px, py);
            let d = link_distance(&u, &p, h);
            prop_assert_eq!(d, link_distance(&p, &u, h));
            prop_assert!(d >= h);
        }

        #[test]
        fn link_distance_monotone_in_separation(a in 0.0..500.0f64, b in 0.0..500.0f64, h in 1.0..300.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let o = Point::new(0.0, 0.0);
            prop_assert!(link_distance(&o, &Point::new(lo, 0.0), h) <= link_distance(&o, &Point::new(hi, 0.0), h));
        }
    }
}
