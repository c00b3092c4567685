use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{AreaConfig, Point};

/// Preset UAV positions that ignore where the users are.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Evenly spaced on the horizontal midline: `x_i = (i + 1) W / (P + 1)`.
    #[default]
    Center,
    /// The four quarter-inset corners `(W/4, H/4)`, `(3W/4, H/4)`,
    /// `(W/4, 3H/4)`, `(3W/4, 3H/4)`, reused cyclically when `P > 4`.
    Corners,
    Custom(Vec<Point>),
}

pub fn fixed_placement(layout: &Layout, uavs: usize, area: &AreaConfig) -> Result<Vec<Point>> {
    match layout {
        Layout::Center => Ok((0..uavs)
            .map(|i| Point::new((i + 1) as f64 * area.width_m / (uavs + 1) as f64, area.height_m / 2.0))
            .collect()),
        Layout::Corners => {
            let (w, h) = (area.width_m, area.height_m);
            let c = [
                Point::new(w / 4.0, h / 4.0),
                Point::new(3.0 * w / 4.0, h / 4.0),
                Point::new(w / 4.0, 3.0 * h / 4.0),
                Point::new(3.0 * w / 4.0, 3.0 * h / 4.0),
            ];
            Ok((0..uavs).map(|i| c[i % 4]).collect())
        }
        Layout::Custom(pts) => {
            if pts.len() != uavs {
                return Err(Error::invalid(
                    "baseline.fixed_layout",
                    format!("custom layout has {} points but there are {uavs} UAVs", pts.len()),
                ));
            }
            if let Some(p) = pts.iter().find(|p| !area.contains(p)) {
                return Err(Error::invalid(
                    "baseline.fixed_layout",
                    format!("point ({}, {}) lies outside the area", p.x, p.y),
                ));
            }
            Ok(pts.clone())
        }
    }
}
