//! Acceptance gate. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits nonzero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uavbs::baselines::{grid_oracle, simulated_annealing, smooth_opt, AnnealConfig, SmoothOptConfig};
use uavbs::channel::{elevation_angle_deg, ChannelParams, LinkCondition};
use uavbs::ddpg::{Agent, AgentConfig};
use uavbs::env::{EnvAction, EnvConfig, RewardBaseline, UavEnv};
use uavbs::harness::config::{DistributionKind, Solver};
use uavbs::harness::{self, load_config, run_timeline, summarize, sweep_density};
use uavbs::network::{Evaluator, Interference, QosParams};
use uavbs::nn::{Activation, Mlp, MlpSpec};
use uavbs::scenario::{sample_users, AreaConfig, Snapshot, UserDistribution};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn random_snapshot(rng: &mut ChaCha8Rng, area: &AreaConfig, k: usize, p: usize) -> Snapshot {
    let users = sample_users(&UserDistribution::Uniform, k, area, rng);
    let uavs = sample_users(&UserDistribution::Uniform, p, area, rng);
    Snapshot::new(0, users, uavs, area).unwrap()
}

fn telescoping() -> Outcome {
    let area = AreaConfig::default();
    let eval = Evaluator::new(&area, &ChannelParams::default(), QosParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for ep in 0..1000 {
        let baseline = if ep % 2 == 0 { RewardBaseline::Zero } else { RewardBaseline::Initial };
        let pretrain = (ep / 2) % 2 == 1;
        let k = rng.random_range(1..=10);
        let p = rng.random_range(1..=3);
        let epochs = rng.random_range(1..=40);
        let cfg = EnvConfig {
            a_max_m: 40.0,
            epochs,
            reward_baseline: baseline,
            ..EnvConfig::default()
        };
        let mut env = UavEnv::new(area, eval.clone(), cfg).unwrap();
        let snap = random_snapshot(&mut rng, &area, k, p);
        let objective = |s: &Snapshot| {
            if pretrain {
                eval.throughput_no_interference(s)
            } else {
                eval.throughput(s)
            }
        };
        let start = match baseline {
            RewardBaseline::Zero => 0.0,
            RewardBaseline::Initial => objective(&snap),
        };
        env.reset(snap).unwrap();
        let mut total = 0.0;
        // rounding in the sum scales with the throughputs it passed through,
        // so an episode that returns to zero is judged against its peak
        let mut scale = start.abs();
        for _ in 0..epochs {
            let a = EnvAction((0..2 * p).map(|_| rng.random_range(-40.0..=40.0)).collect());
            let r = if pretrain { env.step_pretrain(&a) } else { env.step(&a) }.unwrap();
            total += r.reward;
            scale = scale.max(r.objective_now.abs());
        }
        let end = objective(env.snapshot().unwrap());
        scale = scale.max(end.abs());
        let err = (total - (end - start)).abs();
        let rel = if err == 0.0 { 0.0 } else { err / scale };
        worst = worst.max(rel);
        if rel > 1e-9 {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 episodes, worst relative error {worst:.2e}"))
}

/// Relative error with a floor on the magnitude so gradients that are zero
/// up to rounding compare by absolute size.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut checked, mut good) = (0usize, 0usize);
    let h = 1e-6;
    for trial in 0..50 {
        // critic-style and actor-style nets alternate
        let (hidden, output) = if trial % 2 == 0 {
            (Activation::Relu, Activation::Linear)
        } else {
            (Activation::Relu, Activation::Tanh)
        };
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(2..=6)];
        for _ in 0..depth {
            sizes.push(rng.random_range(2..=8));
        }
        sizes.push(rng.random_range(1..=3));
        let spec = MlpSpec::new(sizes.clone(), hidden, output).unwrap();
        let net = Mlp::new(spec, 1.0, &mut rng).unwrap();
        let n = 4;
        let x = Array2::from_shape_fn((n, sizes[0]), |_| rng.random_range(-1.0..1.0));
        let c = Array2::from_shape_fn((n, *sizes.last().unwrap()), |_| rng.random_range(-1.0..1.0));
        let loss = |net: &Mlp, x: &Array2<f64>| (&net.predict(x.view()) * &c).sum();
        let cache = net.forward(x.view());
        let (grads, _) = net.backward(&cache, c.view()).unwrap();
        let analytic = grads.to_vec();
        let mut probe = net.clone();
        for (i, a) in analytic.iter().enumerate() {
            let w = probe.param(i);
            probe.set_param(i, w + h);
            let up = loss(&probe, &x);
            probe.set_param(i, w - h);
            let down = loss(&probe, &x);
            probe.set_param(i, w);
            checked += 1;
            if rel_err(*a, (up - down) / (2.0 * h)) <= 1e-4 {
                good += 1;
            }
        }
        let din = net.input_gradient(&cache, c.view()).unwrap();
        for ((r, j), a) in din.indexed_iter() {
            let mut xp = x.clone();
            xp[[r, j]] += h;
            let up = loss(&net, &xp);
            xp[[r, j]] -= 2.0 * h;
            let down = loss(&net, &xp);
            checked += 1;
            if rel_err(*a, (up - down) / (2.0 * h)) <= 1e-4 {
                good += 1;
            }
        }

        // actor parameters through the critic's action inputs
        let (k, p) = (rng.random_range(1..=3), rng.random_range(1..=2));
        let cfg = AgentConfig {
            hidden_layers: vec![rng.random_range(3..=6), rng.random_range(3..=6)],
            normalize_states: false,
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(k, p, 5.0, &cfg, &mut rng).unwrap();
        // larger output layer than the default init so the tanh is exercised
        for i in 0..agent.actor.num_params() {
            let v = agent.actor.param(i);
            agent.actor.set_param(i, v * 3.0);
        }
        let states = Array2::from_shape_fn((3, agent.state_dim()), |_| rng.random_range(0.0..1.0));
        let (_, g) = agent.actor_objective_gradient(states.view()).unwrap();
        let objective = |a: &Agent| {
            let acts = a.actor.predict(states.view());
            a.q_values(states.view(), acts.view()).mean().unwrap()
        };
        for (i, an) in g.to_vec().iter().enumerate() {
            let w = agent.actor.param(i);
            agent.actor.set_param(i, w + h);
            let up = objective(&agent);
            agent.actor.set_param(i, w - h);
            let down = objective(&agent);
            agent.actor.set_param(i, w);
            checked += 1;
            if rel_err(*an, (up - down) / (2.0 * h)) <= 1e-4 {
                good += 1;
            }
        }
    }
    let frac = good as f64 / checked as f64;
    outcome(frac >= 0.99, format!("{good}/{checked} entries within 1e-4 ({:.2}%)", 100.0 * frac))
}

fn channel_correctness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, cond: bool| {
        if !cond {
            ok = false;
            notes.push(name.to_string());
        }
    };
    let ch = ChannelParams::default().compile().unwrap();
    check("elevation 90", elevation_angle_deg(100.0, 100.0).unwrap() == 90.0);
    check("elevation 30", (elevation_angle_deg(200.0, 100.0).unwrap() - 30.0).abs() < 1e-9);
    check("elevation 45", (elevation_angle_deg(141.4214, 100.0).unwrap() - 45.0).abs() < 1e-3);
    check("elevation domain", elevation_angle_deg(99.0, 100.0).is_err());
    check("plos at C", (ch.los_probability(11.95) - 0.077220).abs() < 1e-6);
    check("plos 90", (ch.los_probability(90.0) - 0.99971).abs() < 1e-4);
    check("plos 90 oracle", (ch.los_probability(90.0) - 0.9997067139222499).abs() < 1e-12);
    check("plos 45", (ch.los_probability(45.0) - 0.89).abs() < 0.01);
    check("plos 45 oracle", (ch.los_probability(45.0) - 0.8822663081216426).abs() < 1e-12);
    let fs = ChannelParams {
        mu_los_db: 0.0,
        ..ChannelParams::default()
    }
    .compile()
    .unwrap();
    let c0 = 0.00014248291449703749;
    check("gain r=1", (fs.path_gain(1.0, LinkCondition::Los) - c0).abs() <= 1e-8 * c0);
    check("gain r=100", (fs.path_gain(100.0, LinkCondition::Los) - 1.4249e-8).abs() <= 1e-12);
    let blocked = ChannelParams {
        mu_nlos_db: f64::INFINITY,
        ..ChannelParams::default()
    }
    .compile()
    .unwrap();
    check("nlos blocked", blocked.path_gain(50.0, LinkCondition::Nlos) == 0.0);
    let overhead = ch.avg_received_power(100.0, 100.0).unwrap();
    check("overhead power", (overhead - 1.1314542624241696e-08).abs() <= 1e-9 * overhead);
    check("noise", (ch.noise_power_w() - 7.962143411069939e-14).abs() <= 1e-9 * 7.96e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 100.0;
    let mut mono_fail = 0;
    for _ in 0..10_000 {
        let (a, b) = (rng.random_range(0.01..90.0), rng.random_range(0.01..90.0));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo > 1e-9 && ch.los_probability(lo) >= ch.los_probability(hi) {
            mono_fail += 1;
        }
        if ch.los_probability(lo) + ch.nlos_probability(lo) != 1.0 {
            mono_fail += 1;
        }
        let (r1, r2) = (rng.random_range(1.0..2000.0), rng.random_range(1.0..2000.0));
        let (rlo, rhi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        for cond in [LinkCondition::Los, LinkCondition::Nlos] {
            if rhi > rlo && ch.path_gain(rlo, cond) <= ch.path_gain(rhi, cond) {
                mono_fail += 1;
            }
        }
        for (cond, alpha) in [(LinkCondition::Los, 2.0), (LinkCondition::Nlos, 3.0)] {
            let ratio = ch.path_gain(2.0 * rlo, cond) / ch.path_gain(rlo, cond);
            if (ratio / 2f64.powf(-alpha) - 1.0).abs() > 1e-12 {
                mono_fail += 1;
            }
        }
        let (d1, d2) = (rng.random_range(0.0..1500.0), rng.random_range(0.0..1500.0));
        let (dlo, dhi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let pw = |d: f64| ch.avg_received_power((d * d + h * h).sqrt(), h).unwrap();
        if pw(dlo) < pw(dhi) {
            mono_fail += 1;
        }
    }
    check("monotonicity", mono_fail == 0);
    let detail = if notes.is_empty() {
        "point values and 10^4-sample monotonicity hold".to_string()
    } else {
        format!("failed: {}", notes.join(", "))
    };
    outcome(ok, detail)
}

fn oracle_equivalence() -> Outcome {
    let area = AreaConfig::default();
    let eval = Evaluator::new(&area, &ChannelParams::default(), QosParams::default()).unwrap();
    let (mut sa_ok, mut sm_ok) = (0, 0);
    let (mut sa_min, mut sm_min) = (f64::INFINITY, f64::INFINITY);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = sample_users(&UserDistribution::Uniform, 8, &area, &mut rng);
        let snap = Snapshot::new(0, users, vec![area.center()], &area).unwrap();
        let best = grid_oracle(&snap, &area, &eval, 81).unwrap().throughput;
        let sa = simulated_annealing(
            &snap,
            &area,
            &AnnealConfig {
                seed,
                ..AnnealConfig::default()
            },
            |s| eval.throughput(s),
        )
        .unwrap()
        .throughput;
        let sm = smooth_opt(
            &snap,
            &area,
            &eval,
            &SmoothOptConfig {
                restarts: 8,
                seed,
                ..SmoothOptConfig::default()
            },
        )
        .unwrap()
        .throughput;
        let ratio = |t: f64| if best > 0.0 { t / best } else { 1.0 };
        sa_min = sa_min.min(ratio(sa));
        sm_min = sm_min.min(ratio(sm));
        sa_ok += (ratio(sa) >= 0.95) as usize;
        sm_ok += (ratio(sm) >= 0.95) as usize;
    }
    outcome(
        sa_ok >= 18 && sm_ok >= 18,
        format!("anneal {sa_ok}/20 (worst {sa_min:.3}), smooth {sm_ok}/20 (worst {sm_min:.3})"),
    )
}

fn learning_signal() -> Outcome {
    let mut cfg = load_config(&configs().join("desk.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.checkpoint = dir.path().join(harness::CHECKPOINT_FILE);
    assert_eq!((cfg.scenario.users, cfg.scenario.uavs), (8, 2));
    assert_eq!((cfg.scenario.width_m, cfg.scenario.height_m), (400.0, 400.0));
    assert_eq!((cfg.environment.epochs, cfg.agent.episodes, cfg.scenario.slots), (200, 300, 20));
    // equal budget: one annealing objective evaluation per agent step
    assert_eq!(cfg.baseline.anneal.iterations, cfg.environment.epochs);
    harness::run_train(&cfg, dir.path()).unwrap();
    let agent = Agent::load(&cfg.checkpoint_path()).unwrap();
    let solvers = [Solver::Drl, Solver::Anneal, Solver::Fixed];
    let results = run_timeline(&cfg, &solvers, Some(&agent)).unwrap();
    let s = summarize(&results).unwrap();
    let (drl, sa, fixed) = (
        s.mean(Solver::Drl).unwrap(),
        s.mean(Solver::Anneal).unwrap(),
        s.mean(Solver::Fixed).unwrap(),
    );
    outcome(
        drl >= 1.2 * fixed && drl >= 0.85 * sa,
        format!(
            "drl {drl:.3}, fixed {fixed:.3} (x{:.2}), anneal {sa:.3} ({:.1}%)",
            drl / fixed,
            100.0 * drl / sa
        ),
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let base = load_config(&configs().join("smoke.toml")).unwrap();
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base.clone();
        cfg.output_dir = dir.path().to_path_buf();
        cfg.checkpoint = Default::default();
        harness::run_train(&cfg, dir.path()).unwrap();
        harness::run_evaluate(&cfg, dir.path()).unwrap();
        (read_all(dir.path()), dir)
    };
    let (a, _da) = run();
    let (b, _db) = run();
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let same = a == b;
    let complete = ["agent.ckpt", "training_log.csv", "slots.csv", "summary.csv", "pairwise.csv"]
        .iter()
        .all(|f| names.contains(f));
    outcome(same && complete, format!("files {names:?} identical: {same}"))
}

fn density_monotonicity() -> Outcome {
    let mut cfg = harness::RunConfig::default();
    cfg.scenario.uavs = 2;
    cfg.scenario.slots = 10;
    cfg.scenario.distribution = DistributionKind::Gaussian;
    cfg.scenario.gaussian_centers = vec![[250.0, 250.0], [550.0, 500.0]];
    cfg.scenario.gaussian_sigma_m = 80.0;
    cfg.baseline.grid_resolution = 24;
    cfg.reproducible = true;
    cfg.seed = 11;
    let ks = [4, 8, 16, 24];
    let rows = sweep_density(&cfg, &ks, &[Solver::Oracle], None).unwrap();
    // per-instance values come from the per-slot results
    let dist = cfg.scenario.user_distribution(cfg.scenario.distribution);
    let mut per_k = Vec::new();
    for &k in &ks {
        let r = harness::run::run_timeline_with(&cfg, &[Solver::Oracle], None, &dist, k, 24).unwrap();
        per_k.push(r.iter().map(|s| s.throughput(Solver::Oracle).unwrap()).collect::<Vec<_>>());
    }
    let mut violations = 0;
    for inst in 0..10 {
        for w in per_k.windows(2) {
            if w[1][inst] < w[0][inst] {
                violations += 1;
            }
        }
    }
    let means: Vec<String> = rows.iter().map(|r| format!("{:.1}", r.summary.mean(Solver::Oracle).unwrap())).collect();
    outcome(violations == 0, format!("10 instances, {violations} decreases; means by K {}", means.join(" / ")))
}

fn scale_invariance() -> Outcome {
    let area = AreaConfig::default();
    let base = ChannelParams::default();
    let scaled = ChannelParams {
        tx_power_w: base.tx_power_w * 1e3,
        noise_psd_dbm_hz: base.noise_psd_dbm_hz + 30.0,
        ..base.clone()
    };
    let e1 = Evaluator::new(&area, &base, QosParams::default()).unwrap();
    let e2 = Evaluator::new(&area, &scaled, QosParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(1..=24);
        let p = rng.random_range(1..=3);
        let s = random_snapshot(&mut rng, &area, k, p);
        let pairs = [
            (e1.throughput(&s), e2.throughput(&s)),
            (e1.throughput_no_interference(&s), e2.throughput_no_interference(&s)),
            (e1.throughput_bps(&s), e2.throughput_bps(&s)),
        ];
        for (a, b) in pairs {
            let rel = if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
            worst = worst.max(rel);
        }
        let r1 = e1.link_report(&s, Interference::On);
        let r2 = e2.link_report(&s, Interference::On);
        for (a, b) in r1.spectral_eff.iter().zip(r2.spectral_eff.iter()) {
            let rel = if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-9, format!("100 snapshots, worst relative change {worst:.2e}"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 telescoping reward", telescoping, Duration::from_secs(10)),
        ("2 gradient oracle", gradient_oracle, Duration::from_secs(60)),
        ("3 channel correctness", channel_correctness, Duration::from_secs(5)),
        ("4 oracle equivalence", oracle_equivalence, Duration::from_secs(300)),
        ("5 learning signal", learning_signal, Duration::from_secs(1800)),
        ("6 determinism", determinism, Duration::from_secs(600)),
        ("7 density monotonicity", density_monotonicity, Duration::from_secs(600)),
        ("8 SINR scale invariance", scale_invariance, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all_pass = true;
    for (name, f, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        let took = t0.elapsed();
        let in_time = took <= limit;
        let pass = o.pass && in_time;
        all_pass &= pass;
        println!(
            "{} criterion {name}: {} [{:.1}s of {}s]{}",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { " over time limit" }
        );
    }
    if !all_pass {
        std::process::exit(1);
    }
}
