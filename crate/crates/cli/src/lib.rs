//! The `qrec` command line.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use commands::{Cold, Init, Preset};
use config::RunConfig;
use qrec::eval::SweepParam;

#[derive(Debug, Parser)]
#[command(name = "qrec", version, about = "Question-based interactive recommendation")]
pub struct Cli {
    /// `key=value` settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Weight of the answer-affinity term in online updates.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Latent dimension.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Question budgets, comma-separated.
    #[arg(long, global = true)]
    pub nq: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Any config key, e.g. `--set lambda=0.2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset, both as TSV files and ready to train.
    Generate {
        #[arg(long, value_enum, default_value = "benchmark")]
        preset: Preset,
    },
    /// Parse item, entity and rating files into a dataset.
    Ingest {
        #[arg(long)]
        items: Option<PathBuf>,
        #[arg(long)]
        entities: Option<PathBuf>,
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
    /// Train the latent factor model offline.
    Train {
        /// Train on every rating instead of the training split.
        #[arg(long)]
        full: bool,
    },
    /// Run one simulated session and print its trajectory.
    Simulate {
        #[arg(long)]
        target: String,
        /// Known user id; the session is cold without it.
        #[arg(long)]
        user: Option<String>,
        #[arg(long, value_parser = policy_name)]
        policy: Option<String>,
    },
    /// Simulated sessions over the test split.
    Experiment {
        /// A single policy, or `all`.
        #[arg(long, value_parser = policy_name)]
        policy: Option<String>,
        #[arg(long, value_enum)]
        cold: Option<Cold>,
        #[arg(long, value_enum, default_value = "trained")]
        init: Init,
    },
    /// Vary one hyperparameter over a grid.
    Sweep {
        /// `gamma` or `k`.
        #[arg(long, value_parser = sweep_param)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

fn policy_name(s: &str) -> Result<String, String> {
    if s == "all" {
        return Ok(s.into());
    }
    s.parse::<qrec::eval::Policy>().map(|p| p.name().into()).map_err(|e| e.to_string())
}

fn sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: qrec::QrecError| e.to_string())
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(v) = cli.seed {
        flags.push(("seed", v.to_string()));
    }
    if let Some(v) = cli.gamma {
        flags.push(("gamma", v.to_string()));
    }
    if let Some(v) = cli.k {
        flags.push(("k", v.to_string()));
    }
    if let Some(v) = &cli.nq {
        flags.push(("nq", v.clone()));
    }
    if let Some(v) = &cli.out {
        flags.push(("out", v.display().to_string()));
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        flags.push((k, v.to_string()));
    }
    match &cli.command {
        Command::Ingest { items, entities, ratings } => {
            for (key, path) in [("items", items), ("entities", entities), ("ratings", ratings)] {
                if let Some(p) = path {
                    flags.push((key, p.display().to_string()));
                }
            }
        }
        Command::Simulate { policy: Some(p), .. } | Command::Experiment { policy: Some(p), .. } => {
            flags.push(("policy", p.clone()));
        }
        Command::Serve { bind: Some(b) } => flags.push(("bind", b.clone())),
        _ => {}
    }
    for (k, v) in flags {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Generate { preset } => commands::generate(&cfg, preset),
        Command::Ingest { .. } => commands::ingest(&cfg),
        Command::Train { full } => commands::train(&cfg, full),
        Command::Simulate { target, user, .. } => commands::simulate(&cfg, &target, user.as_deref()),
        Command::Experiment { cold, init, .. } => commands::experiment(&cfg, cold, init),
        Command::Sweep { param, from, to, step } => commands::sweep_param(&cfg, param, &commands::grid(from, to, step)?),
        Command::Serve { .. } => commands::serve(&cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qrec").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.conf");
        std::fs::write(&file, "gamma=2\nk=4\nlambda=0.3\n").unwrap();
        let conf = file.to_str().unwrap();
        let cfg = resolve_config(&parse(&["train", "--config", conf, "--gamma", "1", "--set", "lambda_u=0.5"])).unwrap();
        assert_eq!(cfg.hp.gamma, 1.0);
        assert_eq!(cfg.hp.k, 4);
        assert_eq!((cfg.hp.lambda_u, cfg.hp.lambda_v), (0.5, 0.3));
    }

    #[test]
    fn subcommand_options_feed_the_config() {
        let cfg = resolve_config(&parse(&["experiment", "--policy", "uniform_prior_sbs", "--nq", "2,5"])).unwrap();
        assert_eq!(cfg.policy, Some(qrec::eval::Policy::UniformPriorSbs));
        assert_eq!(cfg.nq, vec![2, 5]);
        let cfg = resolve_config(&parse(&["serve", "--bind", "0.0.0.0:9000"])).unwrap();
        assert_eq!(cfg.bind, "0.0.0.0:9000");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(resolve_config(&parse(&["train", "--k", "0"])).is_err());
        assert!(resolve_config(&parse(&["train", "--set", "gamma"])).is_err());
        let usage = Cli::try_parse_from(["qrec", "experiment", "--policy", "oracle"]).unwrap_err();
        assert_eq!(usage.exit_code(), 2);
        assert!(usage.to_string().contains("unknown policy `oracle`"));
        let usage = Cli::try_parse_from(["qrec", "sweep", "--param", "lr", "--from", "0", "--to", "1", "--step", "1"]);
        assert_eq!(usage.unwrap_err().exit_code(), 2);
    }
}
