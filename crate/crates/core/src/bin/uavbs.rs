use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uavbs::harness::{self, RunConfig};
use uavbs::Error;

#[derive(Parser)]
#[command(name = "uavbs", version, about = "UAV base-station placement: training, evaluation and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agent; writes agent.ckpt and training_log.csv.
    Train(Common),
    /// Run the slot timeline; writes slots.csv, summary.csv and pairwise.csv.
    Evaluate(Common),
    /// User-density sweep; writes sweep.csv.
    Sweep(Common),
    /// Compare annealing and smoothed ascent with the grid oracle.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = harness::load_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            let log = harness::run_train(&cfg, &cfg.output_dir)?;
            let last = log.episodes.last().map_or(0.0, |e| e.final_throughput);
            Ok(format!(
                "trained {} episodes, last final throughput {last:.4} bps/Hz, output in {}",
                log.episodes.len(),
                cfg.output_dir.display()
            ))
        }
        Command::Evaluate(c) => {
            let cfg = c.load()?;
            let summaries = harness::run_evaluate(&cfg, &cfg.output_dir)?;
            let mut parts = Vec::new();
            for s in &summaries {
                for v in &s.solvers {
                    parts.push(match v.mean_throughput {
                        Some(m) => format!("{}={m:.4}", v.solver),
                        None => format!("{}=failed", v.solver),
                    });
                }
            }
            Ok(format!("mean bps/Hz: {}; output in {}", parts.join(" "), cfg.output_dir.display()))
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let rows = harness::run_sweep(&cfg, &cfg.output_dir)?;
            Ok(format!("swept {} user counts, output in {}", rows.len(), cfg.output_dir.display()))
        }
        Command::OracleCheck(c) => {
            let cfg = c.load()?;
            let rows = harness::run_oracle_check(&cfg, &cfg.output_dir)?;
            let worst = rows
                .iter()
                .filter_map(|r| r.ratio.map(|x| (r.solver, x)))
                .fold(None::<(harness::Solver, f64)>, |acc, (s, x)| match acc {
                    Some((_, m)) if m <= x => acc,
                    _ => Some((s, x)),
                });
            Ok(match worst {
                Some((s, x)) => format!("worst ratio to oracle {x:.4} ({s}), output in {}", cfg.output_dir.display()),
                None => format!("no comparable slots, output in {}", cfg.output_dir.display()),
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error kind={} message={msg:?}", e.kind());
            ExitCode::FAILURE
        }
    }
}
