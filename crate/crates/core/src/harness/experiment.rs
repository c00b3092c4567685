//! File-producing entry points behind the CLI subcommands.

use std::path::Path;

use super::config::{RunConfig, Solver};
use super::output::*;
use super::run::{
    compare_distributions, environment, init_rng, run_timeline, summarize, sweep_density, train_seed,
    training_sampler, Summary, SweepRow,
};
use crate::ddpg::{train, Agent, TrainingLog};
use crate::error::{Error, Result};

pub const CHECKPOINT_FILE: &str = "agent.ckpt";

/// Trains a fresh agent. `agent.ckpt` and `training_log.csv` are written to
/// `out` even when training stops on an error.
pub fn run_train(cfg: &RunConfig, out: &Path) -> Result<TrainingLog> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let mut env = environment(cfg)?;
    let mut agent = Agent::new(
        cfg.scenario.users,
        cfg.scenario.uavs,
        cfg.environment.a_max_m,
        &cfg.agent,
        &mut init_rng(cfg.seed),
    )?;
    let mut log = TrainingLog::default();
    let result = train(
        &mut agent,
        &mut env,
        &training_sampler(cfg),
        &cfg.agent,
        train_seed(cfg.seed),
        Some(&out.join(CHECKPOINT_FILE)),
        &mut log,
    );
    let log = if cfg.reproducible { log.without_timing() } else { log };
    write_rows(&out.join("training_log.csv"), &training_rows(&log))?;
    result.map(|_| log)
}

/// Loads the agent if `solvers` needs it and checks it fits the scenario.
pub fn load_agent_for(cfg: &RunConfig, solvers: &[Solver]) -> Result<Option<Agent>> {
    if !solvers.contains(&Solver::Drl) {
        return Ok(None);
    }
    let path = cfg.checkpoint_path();
    let agent = Agent::load(&path).map_err(|e| match e {
        Error::Io(io) => Error::Checkpoint(format!("{}: {io}", path.display())),
        other => other,
    })?;
    if agent.uavs != cfg.scenario.uavs || agent.a_max != cfg.environment.a_max_m {
        return Err(Error::Checkpoint(format!(
            "{} was trained for P={} a_max={} but the config has P={} a_max={}",
            path.display(),
            agent.uavs,
            agent.a_max,
            cfg.scenario.uavs,
            cfg.environment.a_max_m
        )));
    }
    Ok(Some(agent))
}

/// Timeline over `baseline.solvers`: writes `slots.csv`, `summary.csv` and
/// `pairwise.csv`. With `experiment = "compare_distributions"` it writes
/// `distributions.csv` instead.
pub fn run_evaluate(cfg: &RunConfig, out: &Path) -> Result<Vec<Summary>> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let solvers = &cfg.baseline.solvers;
    let agent = load_agent_for(cfg, solvers)?;
    if cfg.experiment == super::config::ExperimentKind::CompareDistributions {
        let per = compare_distributions(cfg, solvers, agent.as_ref())?;
        let rows: Vec<DistributionRow> = per
            .iter()
            .flat_map(|(kind, s)| {
                s.solvers.iter().map(move |v| DistributionRow {
                    distribution: *kind,
                    solver: v.solver,
                    mean_throughput_bpshz: v.mean_throughput,
                    total_wall_ms: v.total_wall_ms,
                    slots: v.slots,
                    failures: v.failures,
                })
            })
            .collect();
        write_rows(&out.join("distributions.csv"), &rows)?;
        return Ok(per.into_iter().map(|(_, s)| s).collect());
    }
    let results = run_timeline(cfg, solvers, agent.as_ref())?;
    let summary = summarize(&results)?;
    write_rows(&out.join("slots.csv"), &slot_rows(&results))?;
    write_rows(&out.join("summary.csv"), &summary_rows(&summary))?;
    write_rows(&out.join("pairwise.csv"), &pairwise_rows(&summary))?;
    Ok(vec![summary])
}

/// Density sweep over `sweep.k_values`; writes `sweep.csv`.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let solvers = cfg.sweep_solvers();
    let agent = load_agent_for(cfg, solvers)?;
    let rows = sweep_density(cfg, &cfg.sweep.k_values, solvers, agent.as_ref())?;
    write_rows(&out.join("sweep.csv"), &sweep_rows(&rows))?;
    Ok(rows)
}

/// Annealing and smoothed ascent against the grid oracle on every slot;
/// writes `oracle_check.csv` with each solver's ratio to the oracle.
pub fn run_oracle_check(cfg: &RunConfig, out: &Path) -> Result<Vec<OracleCheckRow>> {
    cfg.validate()?;
    if cfg.scenario.uavs > 2 {
        return Err(Error::Intractable(format!(
            "oracle check needs scenario.uavs <= 2, got {}",
            cfg.scenario.uavs
        )));
    }
    std::fs::create_dir_all(out)?;
    let mut cfg = cfg.clone();
    // every solver starts each slot from the fixed layout
    cfg.environment.warm_start = false;
    let solvers = [Solver::Oracle, Solver::Anneal, Solver::Smooth, Solver::Fixed];
    let results = run_timeline(&cfg, &solvers, None)?;
    let mut rows = Vec::new();
    for r in &results {
        let oracle = r.throughput(Solver::Oracle);
        for s in &solvers[1..] {
            let t = r.throughput(*s);
            rows.push(OracleCheckRow {
                slot: r.time_slot,
                solver: *s,
                throughput_bpshz: t,
                oracle_bpshz: oracle,
                ratio: match (t, oracle) {
                    (Some(t), Some(o)) if o > 0.0 => Some(t / o),
                    _ => None,
                },
            });
        }
    }
    write_rows(&out.join("oracle_check.csv"), &rows)?;
    Ok(rows)
}
