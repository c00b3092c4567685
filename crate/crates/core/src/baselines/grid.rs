use super::Solution;
use crate::error::{Error, Result};
use crate::network::Evaluator;
use crate::scenario::{link_distance, AreaConfig, Point, Snapshot};

/// Largest number of joint placements the oracle will enumerate.
pub const GRID_EVAL_LIMIT: u64 = 10_000_000;

/// Lattice of candidate positions: `(i W / n, j H / n)` for `i, j` in
/// `0..n`, ordered by `i` then `j`. Doubling `n` gives a superset.
pub fn grid_points(area: &AreaConfig, resolution: usize) -> Vec<Point> {
    let n = resolution as f64;
    let mut pts = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            pts.push(Point::new(i as f64 * area.width_m / n, j as f64 * area.height_m / n));
        }
    }
    pts
}

/// Exhaustive search over the lattice for one or two UAVs (joint grid when
/// `P = 2`). Ties keep the lexicographically smallest grid index.
pub fn grid_oracle(snap: &Snapshot, area: &AreaConfig, eval: &Evaluator, resolution: usize) -> Result<Solution> {
    let p = snap.num_uavs();
    if p == 0 || p > 2 {
        return Err(Error::Intractable(format!("grid oracle supports 1 or 2 UAVs, got {p}")));
    }
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be >= 1"));
    }
    let evals = (resolution as u64).checked_pow(2 * p as u32).filter(|&n| n <= GRID_EVAL_LIMIT);
    if evals.is_none() {
        return Err(Error::Intractable(format!(
            "resolution {resolution} with {p} UAVs needs {resolution}^{} placements, limit {GRID_EVAL_LIMIT}",
            2 * p
        )));
    }
    let cells = grid_points(area, resolution);

    // per cell and user: (distance, received power)
    let h = eval.altitude_m();
    let k = snap.num_users();
    let table: Vec<(f64, f64)> = cells
        .iter()
        .flat_map(|c| {
            snap.user_xy.iter().map(move |u| {
                let r = link_distance(u, c, h);
                let w = eval.channel().avg_received_power(r, h).expect("link distance >= altitude");
                (r, w)
            })
        })
        .collect();
    let noise = eval.channel().noise_power_w();
    let qos = *eval.qos();
    let feasible = |r: f64, se: f64| r <= qos.comm_radius_m && se >= qos.rate_threshold_bpshz;

    let best_idx: Vec<usize> = if p == 1 {
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..cells.len() {
            let mut total = 0.0;
            for &(r, w) in &table[c * k..(c + 1) * k] {
                let se = (1.0 + w / noise).log2();
                if feasible(r, se) {
                    total += se;
                }
            }
            if total > best.1 {
                best = (c, total);
            }
        }
        vec![best.0]
    } else {
        let mut best = ((0usize, 0usize), f64::NEG_INFINITY);
        for a in 0..cells.len() {
            let ta = &table[a * k..(a + 1) * k];
            for b in 0..cells.len() {
                let tb = &table[b * k..(b + 1) * k];
                let mut total = 0.0;
                for (&(ra, wa), &(rb, wb)) in ta.iter().zip(tb) {
                    let sa = (1.0 + wa / (wb + noise)).log2();
                    let sb = (1.0 + wb / (wa + noise)).log2();
                    let fa = feasible(ra, sa);
                    let fb = feasible(rb, sb);
                    // strongest feasible link serves, ties to UAV 0
                    if fa && (!fb || wa >= wb) {
                        total += sa;
                    } else if fb {
                        total += sb;
                    }
                }
                if total > best.1 {
                    best = ((a, b), total);
                }
            }
        }
        vec![best.0 .0, best.0 .1]
    };
    let placement: Vec<Point> = best_idx.iter().map(|&i| cells[i]).collect();
    let throughput = eval.throughput(&snap.with_uavs(placement.clone()));
    Ok(Solution { placement, throughput })
}
