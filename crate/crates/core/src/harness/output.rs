//! CSV files written by the experiments, and readers for them.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical values. Empty cells stand for missing values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DistributionKind, Solver};
use super::run::{Pairwise, SlotResult, SolverCell, SolverSummary, Summary, SweepRow};
use crate::ddpg::{EpisodeLog, TrainingLog};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub slot: usize,
    pub solver: Solver,
    pub throughput_bpshz: Option<f64>,
    pub wall_ms: f64,
    pub served: Option<usize>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: Solver,
    pub mean_throughput_bpshz: Option<f64>,
    pub total_wall_ms: f64,
    pub slots: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub solver_a: Solver,
    pub solver_b: Solver,
    pub fraction_better: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub episode: usize,
    pub cumulative_reward: f64,
    pub final_throughput_bpshz: f64,
    pub best_throughput_bpshz: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub users: usize,
    pub solver: Solver,
    pub mean_throughput_bpshz: Option<f64>,
    pub total_wall_ms: f64,
    pub slots: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub distribution: DistributionKind,
    pub solver: Solver,
    pub mean_throughput_bpshz: Option<f64>,
    pub total_wall_ms: f64,
    pub slots: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckRow {
    pub slot: usize,
    pub solver: Solver,
    pub throughput_bpshz: Option<f64>,
    pub oracle_bpshz: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn slot_rows(results: &[SlotResult]) -> Vec<SlotRow> {
    results
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(move |c| SlotRow {
                slot: r.time_slot,
                solver: c.solver,
                throughput_bpshz: c.throughput,
                wall_ms: c.wall_ms,
                served: c.served,
                error: c.error.clone().unwrap_or_default(),
            })
        })
        .collect()
}

/// Inverse of [`slot_rows`]; rows of one slot must be contiguous.
pub fn slots_from_rows(rows: &[SlotRow]) -> Vec<SlotResult> {
    let mut out: Vec<SlotResult> = Vec::new();
    for r in rows {
        let cell = SolverCell {
            solver: r.solver,
            throughput: r.throughput_bpshz,
            wall_ms: r.wall_ms,
            served: r.served,
            error: (!r.error.is_empty()).then(|| r.error.clone()),
        };
        match out.last_mut() {
            Some(last) if last.time_slot == r.slot => last.cells.push(cell),
            _ => out.push(SlotResult {
                time_slot: r.slot,
                cells: vec![cell],
            }),
        }
    }
    out
}

pub fn summary_rows(s: &Summary) -> Vec<SummaryRow> {
    s.solvers
        .iter()
        .map(|v| SummaryRow {
            solver: v.solver,
            mean_throughput_bpshz: v.mean_throughput,
            total_wall_ms: v.total_wall_ms,
            slots: v.slots,
            failures: v.failures,
        })
        .collect()
}

pub fn pairwise_rows(s: &Summary) -> Vec<PairwiseRow> {
    s.pairwise
        .iter()
        .map(|p| PairwiseRow {
            solver_a: p.a,
            solver_b: p.b,
            fraction_better: p.fraction_better,
        })
        .collect()
}

pub fn summary_from_rows(solvers: &[SummaryRow], pairs: &[PairwiseRow]) -> Summary {
    Summary {
        solvers: solvers
            .iter()
            .map(|r| SolverSummary {
                solver: r.solver,
                mean_throughput: r.mean_throughput_bpshz,
                total_wall_ms: r.total_wall_ms,
                slots: r.slots,
                failures: r.failures,
            })
            .collect(),
        pairwise: pairs
            .iter()
            .map(|r| Pairwise {
                a: r.solver_a,
                b: r.solver_b,
                fraction_better: r.fraction_better,
            })
            .collect(),
    }
}

pub fn training_rows(log: &TrainingLog) -> Vec<TrainingRow> {
    log.episodes
        .iter()
        .map(|e| TrainingRow {
            episode: e.episode,
            cumulative_reward: e.cumulative_reward,
            final_throughput_bpshz: e.final_throughput,
            best_throughput_bpshz: e.best_throughput,
            wall_ms: e.wall_ms,
        })
        .collect()
}

pub fn training_from_rows(rows: &[TrainingRow]) -> TrainingLog {
    TrainingLog {
        episodes: rows
            .iter()
            .map(|r| EpisodeLog {
                episode: r.episode,
                cumulative_reward: r.cumulative_reward,
                final_throughput: r.final_throughput_bpshz,
                best_throughput: r.best_throughput_bpshz,
                wall_ms: r.wall_ms,
            })
            .collect(),
    }
}

pub fn sweep_rows(rows: &[SweepRow]) -> Vec<SweepCsvRow> {
    rows.iter()
        .flat_map(|r| {
            r.summary.solvers.iter().map(move |s| SweepCsvRow {
                users: r.users,
                solver: s.solver,
                mean_throughput_bpshz: s.mean_throughput,
                total_wall_ms: s.total_wall_ms,
                slots: s.slots,
                failures: s.failures,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_results() -> Vec<SlotResult> {
        (0..4)
            .map(|i| SlotResult {
                time_slot: i,
                cells: vec![
                    SolverCell {
                        solver: Solver::Fixed,
                        throughput: Some(0.1 * i as f64 + 1.0 / 3.0),
                        wall_ms: 0.25,
                        served: Some(i),
                        error: None,
                    },
                    SolverCell {
                        solver: Solver::Drl,
                        throughput: (i % 2 == 0).then_some(std::f64::consts::PI * i as f64),
                        wall_ms: 1e-7,
                        served: (i % 2 == 0).then_some(3),
                        error: (i % 2 == 1).then(|| "contract violation: no agent, \"quoted\"".to_string()),
                    },
                ],
            })
            .collect()
    }

    #[test]
    fn slots_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slots.csv");
        let results = sample_results();
        write_rows(&path, &slot_rows(&results)).unwrap();
        let back: Vec<SlotRow> = read_rows(&path).unwrap();
        assert_eq!(slots_from_rows(&back), results);
    }

    #[test]
    fn summary_round_trip_and_consistency() {
        let dir = tempfile::tempdir().unwrap();
        let results = sample_results();
        let s = super::super::run::summarize(&results).unwrap();
        write_rows(&dir.path().join("summary.csv"), &summary_rows(&s)).unwrap();
        write_rows(&dir.path().join("pairwise.csv"), &pairwise_rows(&s)).unwrap();
        write_rows(&dir.path().join("slots.csv"), &slot_rows(&results)).unwrap();
        let sr: Vec<SummaryRow> = read_rows(&dir.path().join("summary.csv")).unwrap();
        let pr: Vec<PairwiseRow> = read_rows(&dir.path().join("pairwise.csv")).unwrap();
        assert_eq!(summary_from_rows(&sr, &pr), s);
        // recomputing from the per-slot file agrees with the stored summary
        let slots: Vec<SlotRow> = read_rows(&dir.path().join("slots.csv")).unwrap();
        assert_eq!(super::super::run::summarize(&slots_from_rows(&slots)).unwrap(), s);
    }

    #[test]
    fn training_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("training_log.csv");
        let log = TrainingLog {
            episodes: (0..5)
                .map(|i| EpisodeLog {
                    episode: i,
                    cumulative_reward: -0.1 * i as f64,
                    final_throughput: 1e-300 * i as f64,
                    best_throughput: 12.345678901234567,
                    wall_ms: 0.0,
                })
                .collect(),
        };
        write_rows(&path, &training_rows(&log)).unwrap();
        let back: Vec<TrainingRow> = read_rows(&path).unwrap();
        assert_eq!(training_from_rows(&back), log);
    }
}
