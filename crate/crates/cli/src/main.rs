//! `hcplan`: train agents, evaluate controllers and emit curve data.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hcplan_core::bench::{cmd_eval, cmd_plot, cmd_train, Controller, ExperimentConfig};
use hcplan_core::contingency::Role;

#[derive(Parser)]
#[command(name = "hcplan", version, about = "Contingency-policy training and hierarchical evaluation")]
struct Cli {
    /// Print the default configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for checkpoints and CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the optimal and contingency agents.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train the contingency agent without hand-off initialization.
        #[arg(long)]
        no_buffer_init: bool,
    },
    /// Evaluate controllers from saved checkpoints.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of pi_star,pi1_noinit,pi1_init,h_noinit,h_init.
        #[arg(long, default_value = "pi_star,pi1_noinit,pi1_init,h_noinit,h_init")]
        controllers: String,
        /// Episodes per controller per repetition.
        #[arg(long)]
        m_eval: Option<usize>,
    },
    /// Smooth training logs into curve data.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Training logs; defaults to both logs in the output directory.
        logs: Vec<PathBuf>,
        /// Moving-average window; defaults to the configured one.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Print the effective configuration.
    PrintConfig {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.print_config {
        print!("{}", ExperimentConfig::default().to_text());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given; see --help");
    };
    match command {
        Command::Train { common, no_buffer_init } => {
            let cfg = common.load()?;
            let every = 500;
            let summary = cmd_train(&cfg, no_buffer_init, |r| {
                if r.episode % every == 0 {
                    log::info!(
                        "{} episode {} steps {} score {:.3} metric {}",
                        r.policy.id(),
                        r.episode,
                        r.total_steps,
                        r.raw_score,
                        r.metric.map_or("-".to_string(), |m| format!("{m:.3}")),
                    );
                }
            })?;
            for role in [Role::Optimal, Role::Contingency] {
                let n = summary.log.iter().filter(|r| r.policy == role).count();
                println!("{}: {n} episodes", role.id());
            }
            println!("wrote {}", summary.optimal_checkpoint.display());
            println!("wrote {}", summary.contingency_checkpoint.display());
            println!("wrote {}", summary.log_path.display());
            println!("wrote {}", summary.curves_path.display());
        }
        Command::Eval { common, controllers, m_eval } => {
            let mut cfg = common.load()?;
            if let Some(m) = m_eval {
                cfg.planner.m_eval = m;
            }
            let controllers = Controller::parse_list(&controllers)?;
            if controllers.is_empty() {
                bail!("no controllers selected");
            }
            let report = cmd_eval(&cfg, &controllers)?;
            println!("{:<12} {:>8} {:>10} {:>10} {:>10}", "controller", "episodes", "success", "avg_score", "collisions");
            for s in &report.summaries {
                println!(
                    "{:<12} {:>8} {:>10.3} {:>10.3} {:>10}",
                    s.controller, s.episodes, s.success_rate, s.avg_score, s.collisions
                );
            }
        }
        Command::Plot { common, logs, window } => {
            let cfg = common.load()?;
            let logs = if logs.is_empty() {
                ["train_log_init.csv", "train_log_noinit.csv"]
                    .iter()
                    .map(|f| cfg.out_dir.join(f))
                    .filter(|p| p.is_file())
                    .collect()
            } else {
                logs
            };
            if logs.is_empty() {
                bail!("no training logs found in {}", cfg.out_dir.display());
            }
            let written = cmd_plot(&logs, window.unwrap_or(cfg.plot_window), &cfg.out_dir)
                .context("building curve data")?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::PrintConfig { common } => print!("{}", common.load()?.to_text()),
    }
    Ok(())
}
