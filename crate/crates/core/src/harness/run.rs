use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DistributionKind, RunConfig, Solver};
use crate::baselines::{fixed_placement, grid_oracle, simulated_annealing, smooth_opt, AnnealConfig, SmoothOptConfig};
use crate::ddpg::{decide, Agent, EpisodeSampler};
use crate::env::UavEnv;
use crate::error::{Error, Result};
use crate::network::{Evaluator, Interference};
use crate::scenario::{sample_users, Point, Snapshot, UserDistribution};

/// Stream ids under the master seed.
const STREAM_USERS: u64 = 1;
const STREAM_ANNEAL: u64 = 2;
const STREAM_SMOOTH: u64 = 3;
const STREAM_TRAIN: u64 = 4;
const STREAM_INIT: u64 = 5;

/// Independent generator for `(stream, index)` under the master seed.
pub fn derived_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((stream << 40) | index);
    rng
}

fn derived_seed(master: u64, stream: u64, index: u64) -> u64 {
    use rand::Rng;
    derived_rng(master, stream, index).random()
}

pub fn init_rng(master: u64) -> ChaCha8Rng {
    derived_rng(master, STREAM_INIT, 0)
}

pub fn train_seed(master: u64) -> u64 {
    derived_seed(master, STREAM_TRAIN, 0)
}

/// Users of `slot`. Draws are sequential, so the first `k` users of a
/// larger draw equal a draw of `k` users.
pub fn slot_users(cfg: &RunConfig, dist: &UserDistribution, slot: usize, k: usize) -> Vec<Point> {
    let mut rng = derived_rng(cfg.seed, STREAM_USERS, slot as u64);
    sample_users(dist, k, &cfg.scenario.area(), &mut rng)
}

pub fn evaluator(cfg: &RunConfig) -> Result<Evaluator> {
    Evaluator::new(&cfg.scenario.area(), &cfg.channel, cfg.qos)
}

pub fn training_sampler(cfg: &RunConfig) -> EpisodeSampler {
    EpisodeSampler {
        area: cfg.scenario.area(),
        users: cfg.scenario.users,
        uavs: cfg.scenario.uavs,
        distribution: cfg.scenario.user_distribution(cfg.scenario.distribution),
    }
}

pub fn environment(cfg: &RunConfig) -> Result<UavEnv> {
    UavEnv::new(cfg.scenario.area(), evaluator(cfg)?, cfg.environment.clone())
}

/// One solver's outcome in one slot. A failed cell has no throughput and
/// carries the error text.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverCell {
    pub solver: Solver,
    pub throughput: Option<f64>,
    pub wall_ms: f64,
    pub served: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotResult {
    pub time_slot: usize,
    pub cells: Vec<SolverCell>,
}

impl SlotResult {
    pub fn throughput(&self, solver: Solver) -> Option<f64> {
        self.cells.iter().find(|c| c.solver == solver).and_then(|c| c.throughput)
    }
}

/// Runs every solver over `cfg.scenario.slots` slots with `cfg.scenario.users` users.
pub fn run_timeline(cfg: &RunConfig, solvers: &[Solver], agent: Option<&Agent>) -> Result<Vec<SlotResult>> {
    let dist = cfg.scenario.user_distribution(cfg.scenario.distribution);
    run_timeline_with(cfg, solvers, agent, &dist, cfg.scenario.users, cfg.scenario.users)
}

/// Timeline with `k` users per slot, taken as the prefix of a `k_draw`-user
/// draw. Each solver keeps its own placement from slot to slot when warm
/// starts are on; all of them start from the fixed layout.
pub fn run_timeline_with(
    cfg: &RunConfig,
    solvers: &[Solver],
    agent: Option<&Agent>,
    dist: &UserDistribution,
    k: usize,
    k_draw: usize,
) -> Result<Vec<SlotResult>> {
    cfg.validate()?;
    if k > k_draw {
        return Err(Error::contract("user prefix longer than the draw"));
    }
    let area = cfg.scenario.area();
    let eval = evaluator(cfg)?;
    let layout = fixed_placement(&cfg.baseline.layout(), cfg.scenario.uavs, &area)?;
    let mut env = environment(cfg)?;
    let mut warm: BTreeMap<Solver, Vec<Point>> = solvers.iter().map(|s| (*s, layout.clone())).collect();
    let mut out = Vec::with_capacity(cfg.scenario.slots);

    for slot in 0..cfg.scenario.slots {
        let mut users = slot_users(cfg, dist, slot, k_draw);
        users.truncate(k);
        let base = Snapshot {
            time_slot: slot,
            user_xy: users,
            uav_xy: layout.clone(),
        };
        let mut cells = Vec::with_capacity(solvers.len());
        for &solver in solvers {
            let start = if cfg.environment.warm_start {
                warm[&solver].clone()
            } else {
                layout.clone()
            };
            let snap = base.with_uavs(start);
            let t0 = Instant::now();
            let placed = solve(cfg, solver, &snap, &eval, &mut env, agent, slot);
            let wall_ms = if cfg.reproducible {
                0.0
            } else {
                t0.elapsed().as_secs_f64() * 1e3
            };
            let cell = match placed {
                Ok(placement) => {
                    let s = snap.with_uavs(placement.clone());
                    let (t, assoc) = eval.evaluate(&s, Interference::On);
                    warm.insert(solver, placement);
                    SolverCell {
                        solver,
                        throughput: Some(t),
                        wall_ms,
                        served: Some(assoc.served_count()),
                        error: None,
                    }
                }
                Err(e) => {
                    log::warn!("slot {slot}: {solver} failed: {e}");
                    SolverCell {
                        solver,
                        throughput: None,
                        wall_ms,
                        served: None,
                        error: Some(e.to_string()),
                    }
                }
            };
            cells.push(cell);
        }
        out.push(SlotResult { time_slot: slot, cells });
    }
    Ok(out)
}

fn solve(
    cfg: &RunConfig,
    solver: Solver,
    snap: &Snapshot,
    eval: &Evaluator,
    env: &mut UavEnv,
    agent: Option<&Agent>,
    slot: usize,
) -> Result<Vec<Point>> {
    let area = cfg.scenario.area();
    match solver {
        Solver::Fixed => fixed_placement(&cfg.baseline.layout(), snap.num_uavs(), &area),
        Solver::Oracle => grid_oracle(snap, &area, eval, cfg.baseline.grid_resolution).map(|s| s.placement),
        Solver::Anneal => {
            let acfg = AnnealConfig {
                seed: derived_seed(cfg.seed ^ cfg.baseline.anneal.seed, STREAM_ANNEAL, slot as u64),
                ..cfg.baseline.anneal.clone()
            };
            simulated_annealing(snap, &area, &acfg, |s| eval.throughput(s)).map(|r| r.placement)
        }
        Solver::Smooth => {
            let scfg = SmoothOptConfig {
                seed: derived_seed(cfg.seed ^ cfg.baseline.smooth.seed, STREAM_SMOOTH, slot as u64),
                ..cfg.baseline.smooth.clone()
            };
            smooth_opt(snap, &area, eval, &scfg).map(|s| s.placement)
        }
        Solver::Drl => {
            let agent = agent.ok_or_else(|| Error::contract("drl solver selected but no checkpoint loaded"))?;
            decide(agent, env, snap.clone(), cfg.environment.epochs).map(|d| d.placement)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSummary {
    pub solver: Solver,
    /// Mean over the slots where the solver succeeded.
    pub mean_throughput: Option<f64>,
    pub total_wall_ms: f64,
    pub slots: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pairwise {
    pub a: Solver,
    pub b: Solver,
    /// Share of all slots where `a` strictly beat `b`; ties and slots where
    /// either failed count for neither.
    pub fraction_better: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub solvers: Vec<SolverSummary>,
    pub pairwise: Vec<Pairwise>,
}

impl Summary {
    pub fn mean(&self, solver: Solver) -> Option<f64> {
        self.solvers.iter().find(|s| s.solver == solver).and_then(|s| s.mean_throughput)
    }

    pub fn fraction_better(&self, a: Solver, b: Solver) -> Option<f64> {
        self.pairwise.iter().find(|p| p.a == a && p.b == b).map(|p| p.fraction_better)
    }
}

pub fn summarize(results: &[SlotResult]) -> Result<Summary> {
    if results.is_empty() {
        return Err(Error::contract("summarize needs at least one slot"));
    }
    let mut order: Vec<Solver> = Vec::new();
    for c in results.iter().flat_map(|r| &r.cells) {
        if !order.contains(&c.solver) {
            order.push(c.solver);
        }
    }
    let solvers = order
        .iter()
        .map(|&s| {
            let cells: Vec<&SolverCell> = results.iter().flat_map(|r| &r.cells).filter(|c| c.solver == s).collect();
            let ok: Vec<f64> = cells.iter().filter_map(|c| c.throughput).collect();
            SolverSummary {
                solver: s,
                mean_throughput: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
                total_wall_ms: cells.iter().map(|c| c.wall_ms).sum(),
                slots: cells.len(),
                failures: cells.len() - ok.len(),
            }
        })
        .collect();
    let n = results.len() as f64;
    let mut pairwise = Vec::new();
    for &a in &order {
        for &b in &order {
            if a == b {
                continue;
            }
            let wins = results
                .iter()
                .filter(|r| matches!((r.throughput(a), r.throughput(b)), (Some(x), Some(y)) if x > y))
                .count();
            pairwise.push(Pairwise {
                a,
                b,
                fraction_better: wins as f64 / n,
            });
        }
    }
    Ok(Summary { solvers, pairwise })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub users: usize,
    pub summary: Summary,
}

/// One summary per entry of `k_values`. Users in every slot are the prefix
/// of one draw of `max(k_values)` users, so the user sets are nested.
pub fn sweep_density(cfg: &RunConfig, k_values: &[usize], solvers: &[Solver], agent: Option<&Agent>) -> Result<Vec<SweepRow>> {
    let k_draw = *k_values
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("sweep.k_values", "must not be empty"))?;
    let dist = cfg.scenario.user_distribution(cfg.scenario.distribution);
    k_values
        .iter()
        .map(|&k| {
            let results = run_timeline_with(cfg, solvers, agent, &dist, k, k_draw)?;
            Ok(SweepRow {
                users: k,
                summary: summarize(&results)?,
            })
        })
        .collect()
}

/// Same timeline under the uniform and the Gaussian user distribution.
pub fn compare_distributions(cfg: &RunConfig, solvers: &[Solver], agent: Option<&Agent>) -> Result<Vec<(DistributionKind, Summary)>> {
    [DistributionKind::Uniform, DistributionKind::Gaussian]
        .into_iter()
        .map(|kind| {
            let dist = cfg.scenario.user_distribution(kind);
            let r = run_timeline_with(cfg, solvers, agent, &dist, cfg.scenario.users, cfg.scenario.users)?;
            Ok((kind, summarize(&r)?))
        })
        .collect()
}
