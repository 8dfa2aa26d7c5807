use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use log::info;

use qrec::checkpoint::Checkpoint;
use qrec::eval::{
    ablation_offline_init, hold_out_users, run_experiment, session_specs, split_dataset, sweep, Bench, MetricsReport,
    Policy, Split, SweepParam,
};
use qrec::factorization::train_offline_traced;
use qrec::session::run_session;
use qrec::synthetic::{benchmark, binary_code, BenchmarkConfig};
use qrec::{Dataset, HyperParams, Recommender, SessionUser};
use qrec_service::{AppState, ServiceConfig};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Retail-like benchmark with graded ratings.
    Benchmark,
    /// Benchmark layout with flat ratings.
    Separable,
    /// 64 items identified by 6 yes/no questions.
    BinaryCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Cold {
    /// Sessions whose user has no training ratings.
    User,
    /// Sessions whose target has no training ratings.
    Item,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Init {
    /// The offline-trained model.
    Trained,
    /// Compare the trained start against a seeded random one.
    Random,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes a synthetic dataset as TSV files plus a ready-to-train dataset.
/// The sparse-row filter of `ingest` is not applied.
pub fn generate(cfg: &RunConfig, preset: Preset) -> Result<()> {
    let dataset = match preset {
        Preset::Benchmark => benchmark(&BenchmarkConfig {
            seed: cfg.benchmark_seed,
            ..Default::default()
        })?,
        Preset::Separable => benchmark(&BenchmarkConfig {
            seed: cfg.benchmark_seed,
            ..BenchmarkConfig::separable()
        })?,
        Preset::BinaryCode => binary_code(8)?,
    };
    dataset.write_tsv(&cfg.out)?;
    let path = cfg.dataset_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    dataset.save(&path)?;
    println!("{}", dataset.summary());
    println!("wrote items.tsv, entities.tsv, ratings.tsv and {}", path.display());
    Ok(())
}

fn input(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(name))
}

/// Parses the raw files, filters sparse users and items, and saves the
/// indexed dataset.
pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let items = input(&cfg.items, &cfg.out, "items.tsv");
    let entities = input(&cfg.entities, &cfg.out, "entities.tsv");
    let ratings = input(&cfg.ratings, &cfg.out, "ratings.tsv");
    let dataset = Dataset::ingest(&items, &entities, &ratings, cfg.ingest)?;
    let path = cfg.dataset_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    dataset.save(&path)?;
    println!("{}", dataset.summary());
    println!("saved {}", path.display());
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.dataset_path();
    Dataset::load(&path).with_context(|| format!("loading dataset {} (run `qrec ingest` first)", path.display()))
}

/// The split described by the split settings of `cfg`.
pub fn make_split(dataset: &Dataset, cfg: &RunConfig) -> Result<Split> {
    Ok(if cfg.holdout_users > 0 {
        hold_out_users(&dataset.ratings, cfg.holdout_users, cfg.split.seed)?
    } else {
        split_dataset(&dataset.ratings, &cfg.split)?
    })
}

/// Trains offline and writes the checkpoint atomically.
pub fn train(cfg: &RunConfig, full: bool) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    let mut provenance = vec![("training".to_string(), if full { "full" } else { "split" }.to_string())];
    let ratings = if full {
        dataset.ratings.clone()
    } else {
        provenance.extend(cfg.split_echo());
        make_split(&dataset, cfg)?.train
    };
    info!("training on {} ratings", ratings.len());
    let (model, trace) = train_offline_traced(&ratings, &cfg.hp)?;
    let ckpt = Checkpoint::new(model, cfg.hp, &dataset.corpus).with_provenance(provenance);

    let path = cfg.checkpoint_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    ckpt.save(&tmp)?;
    fs::rename(&tmp, &path).with_context(|| format!("moving checkpoint into {}", path.display()))?;
    println!(
        "trained on {} ratings: loss {:.6} -> {:.6} after {} iterations",
        ratings.len(),
        trace.initial_loss(),
        trace.final_loss(),
        trace.losses.len() - 1
    );
    println!("saved {}", path.display());
    Ok(())
}

/// A recommender restored from disk, with the split it was trained on.
pub struct Loaded {
    pub dataset: Dataset,
    pub checkpoint: Checkpoint,
    /// `None` when the checkpoint was trained on every rating.
    pub split: Option<Split>,
    pub recommender: Arc<Recommender>,
}

pub fn load_trained(cfg: &RunConfig) -> Result<Loaded> {
    let dataset = load_dataset(cfg)?;
    let path = cfg.checkpoint_path();
    if !path.exists() {
        bail!("no checkpoint at {} (run `qrec train` first)", path.display());
    }
    let checkpoint = Checkpoint::load(&path)?;
    checkpoint
        .verify(&dataset.corpus, dataset.ratings.n_users())
        .with_context(|| format!("{} does not match {}", path.display(), cfg.dataset_path().display()))?;
    if checkpoint.hyper_params.k != cfg.hp.k {
        bail!(
            "checkpoint was trained with k={} but k={} is configured",
            checkpoint.hyper_params.k,
            cfg.hp.k
        );
    }

    let split = match checkpoint.provenance("training") {
        Some("full") => None,
        _ => {
            let mut recorded = RunConfig::default();
            for key in ["split", "split_seed", "holdout_users"] {
                if let Some(v) = checkpoint.provenance(key) {
                    let key = if key == "split_seed" { "seed" } else { key };
                    recorded.set(key, v)?;
                }
            }
            Some(make_split(&dataset, &recorded)?)
        }
    };
    let train = split.as_ref().map_or_else(|| dataset.ratings.clone(), |s| s.train.clone());
    let recommender = Recommender::new(checkpoint.model.clone(), Arc::new(dataset.corpus.clone()), Arc::new(train))?;
    Ok(Loaded {
        dataset,
        checkpoint,
        split,
        recommender,
    })
}

fn bench(cfg: &RunConfig, loaded: Loaded, cold: Option<Cold>) -> Result<Bench> {
    let split = loaded
        .split
        .ok_or_else(|| anyhow!("the checkpoint was trained on every rating; retrain without --full to evaluate"))?;
    let mut sessions = session_specs(&split.train, &split.test, cfg.seed);
    match cold {
        Some(Cold::User) => sessions.retain(|s| s.user == SessionUser::Cold),
        Some(Cold::Item) => sessions.retain(|s| split.train.item_ratings(s.target).is_empty()),
        None => {}
    }
    if sessions.is_empty() {
        bail!("no test sessions to run");
    }
    Ok(Bench {
        recommender: loaded.recommender,
        sessions,
        split,
    })
}

/// Pads every CSV column to a common width.
pub fn aligned(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let width = |c: usize| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..rows.first().map_or(0, Vec::len)).map(width).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  "));
    }
    out
}

fn finish(report: &MetricsReport, path: &Path) -> Result<()> {
    report.write(path)?;
    print!("{}", aligned(&report.to_csv()));
    println!("wrote {}", path.display());
    Ok(())
}

/// Runs the simulated sessions for each policy, or the initialisation
/// ablation, and writes `experiment.csv`.
pub fn experiment(cfg: &RunConfig, cold: Option<Cold>, init: Init) -> Result<()> {
    let bench = bench(cfg, load_trained(cfg)?, cold)?;
    let mut echo = cfg.echo();
    echo.push(("cold".into(), format!("{cold:?}").to_lowercase()));
    echo.push(("init".into(), format!("{init:?}").to_lowercase()));
    let mut report = MetricsReport::new(echo);
    match init {
        Init::Random => report.extend(ablation_offline_init(&bench, &cfg.hp, &cfg.nq)?),
        Init::Trained => {
            let policies = cfg.policy.map_or(Policy::ALL.to_vec(), |p| vec![p]);
            for p in policies {
                report.extend(run_experiment(&bench.recommender, &bench.sessions, p, &cfg.hp, &cfg.nq, p.name())?);
            }
        }
    }
    finish(&report, &cfg.out.join("experiment.csv"))
}

/// `from, from + step, …` up to `to` inclusive, rounded to absorb float drift.
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || to < from {
        bail!("grid needs finite from <= to and step > 0");
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9).collect())
}

pub fn sweep_param(cfg: &RunConfig, param: SweepParam, grid: &[f64]) -> Result<()> {
    let bench = bench(cfg, load_trained(cfg)?, None)?;
    let name = match param {
        SweepParam::Gamma => "gamma",
        SweepParam::K => "k",
    };
    let mut echo = cfg.echo();
    echo.push(("sweep".into(), name.into()));
    let mut report = MetricsReport::new(echo);
    report.extend(sweep(&bench, param, grid, &cfg.hp, &cfg.nq)?);
    finish(&report, &cfg.out.join(format!("sweep_{name}.csv")))
}

/// One truthful simulated session, printed as a log and saved as CSV.
pub fn simulate(cfg: &RunConfig, target: &str, user: Option<&str>) -> Result<()> {
    let loaded = load_trained(cfg)?;
    let corpus = &loaded.dataset.corpus;
    let target_idx = corpus
        .item_index(target)
        .ok_or_else(|| anyhow!("unknown item id `{target}`"))?;
    let session_user = match user {
        Some(id) => SessionUser::Known(
            loaded
                .dataset
                .ratings
                .users()
                .get(id)
                .ok_or_else(|| anyhow!("unknown user id `{id}`"))?,
        ),
        None => SessionUser::Cold,
    };
    let policy = cfg.policy.unwrap_or(Policy::Qrec);
    let n_q = cfg.nq.iter().copied().max().unwrap_or(0);
    let t = run_session(
        &loaded.recommender,
        session_user,
        target_idx,
        n_q,
        &cfg.hp,
        policy.options(cfg.seed),
    )?;

    let mut csv = String::from("l,entity,answer,candidates,target_rank\n");
    let _ = writeln!(csv, "0,,,{},{}", corpus.n_items(), t.initial_target_rank);
    for (l, s) in t.steps.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            l + 1,
            corpus.entity_name(s.entity).unwrap_or("?"),
            s.answer,
            s.candidates,
            s.target_rank
        );
    }
    create_dir(&cfg.out)?;
    let path = cfg.out.join("trajectory.csv");
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;

    println!("target {target} starts at rank {}", t.initial_target_rank);
    for line in t.log_lines(&format!("{target}-{}", user.unwrap_or("cold")), corpus) {
        println!("{line}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn service_config(cfg: &RunConfig, hp: HyperParams) -> ServiceConfig {
    ServiceConfig {
        hyper_params: hp,
        max_questions: cfg.max_questions,
        idle_ttl: cfg.session_ttl,
        cors_origin: cfg.cors_origin.clone(),
    }
}

/// Serves the HTTP API until interrupted.
pub fn serve(cfg: &RunConfig) -> Result<()> {
    let loaded = load_trained(cfg)?;
    let state = AppState::new(loaded.recommender, service_config(cfg, cfg.hp));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .with_context(|| format!("binding {}", cfg.bind))?;
        println!("serving on http://{}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        qrec_service::serve(listener, state, shutdown).await?;
        Ok(())
    })
}
