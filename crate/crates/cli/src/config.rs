//! Run configuration layered from built-in defaults, a `key=value` file and
//! command-line flags, in increasing precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};

use qrec::dataset::IngestOptions;
use qrec::eval::{Policy, SplitSpec};
use qrec::factorization::ScoreHead;
use qrec::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub items: Option<PathBuf>,
    pub entities: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub hp: HyperParams,
    pub split: SplitSpec,
    /// Hold out this many whole users instead of splitting ratings (0 = off).
    pub holdout_users: usize,
    pub nq: Vec<usize>,
    /// `None` runs every policy.
    pub policy: Option<Policy>,
    pub ingest: IngestOptions,
    pub benchmark_seed: u64,
    pub bind: String,
    pub max_questions: usize,
    pub session_ttl: Duration,
    pub cors_origin: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seed = 42;
        Self {
            items: None,
            entities: None,
            ratings: None,
            dataset: None,
            checkpoint: None,
            out: PathBuf::from("qrec-out"),
            seed,
            hp: HyperParams { seed, ..Default::default() },
            split: SplitSpec { seed, ..Default::default() },
            holdout_users: 0,
            nq: vec![10],
            policy: None,
            ingest: IngestOptions::default(),
            benchmark_seed: 7,
            bind: "127.0.0.1:8080".into(),
            max_questions: 20,
            session_ttl: Duration::from_secs(30 * 60),
            cors_origin: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow!("`{key}`: cannot parse `{value}`: {e}"))
}

pub fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key.trim() {
            "items" => self.items = path(),
            "entities" => self.entities = path(),
            "ratings" => self.ratings = path(),
            "dataset" => self.dataset = path(),
            "checkpoint" => self.checkpoint = path(),
            "out" => self.out = PathBuf::from(v),
            "seed" => {
                self.seed = parse(key, v)?;
                self.hp.seed = self.seed;
                self.split.seed = self.seed;
            }
            "k" => self.hp.k = parse(key, v)?,
            "gamma" => self.hp.gamma = parse(key, v)?,
            "lambda" => {
                let l = parse(key, v)?;
                self.hp.lambda_u = l;
                self.hp.lambda_v = l;
                self.hp.lambda_p = l;
                self.hp.lambda_q = l;
            }
            "lambda_u" => self.hp.lambda_u = parse(key, v)?,
            "lambda_v" => self.hp.lambda_v = parse(key, v)?,
            "lambda_p" => self.hp.lambda_p = parse(key, v)?,
            "lambda_q" => self.hp.lambda_q = parse(key, v)?,
            "max_iters" => self.hp.max_iters = parse(key, v)?,
            "learning_rate" => self.hp.adam.learning_rate = parse(key, v)?,
            "init_std" => self.hp.init_std = parse(key, v)?,
            "als_sweeps" => self.hp.als_sweeps = parse(key, v)?,
            "score_head" => {
                self.hp.score_head = match v {
                    "rating" => ScoreHead::Rating,
                    "affinity" => ScoreHead::Affinity,
                    _ => bail!("`score_head` must be rating or affinity, got `{v}`"),
                }
            }
            "split" => {
                let parts: Vec<f64> = parse_list(key, v)?;
                let [train, validation, test] = parts[..] else {
                    bail!("`split` needs three fractions, got `{v}`");
                };
                self.split = SplitSpec {
                    train,
                    validation,
                    test,
                    seed: self.split.seed,
                };
            }
            "holdout_users" => self.holdout_users = parse(key, v)?,
            "nq" => self.nq = parse_list(key, v)?,
            "policy" => {
                self.policy = match v {
                    "all" => None,
                    name => Some(name.parse().map_err(|e| anyhow!("{e}"))?),
                }
            }
            "entity_threshold" => self.ingest.entity_threshold = parse(key, v)?,
            "min_transactions" => self.ingest.min_transactions = parse(key, v)?,
            "benchmark_seed" => self.benchmark_seed = parse(key, v)?,
            "bind" => self.bind = v.to_string(),
            "max_questions" => self.max_questions = parse(key, v)?,
            "session_ttl_minutes" => self.session_ttl = Duration::from_secs(parse::<u64>(key, v)? * 60),
            "cors_origin" => self.cors_origin = Some(v.to_string()),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Applies every `key=value` line of a file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
            self.set(key, value)
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        self.split.validate()?;
        if self.nq.is_empty() {
            bail!("`nq` needs at least one question budget");
        }
        if self.max_questions == 0 {
            bail!("`max_questions` must be positive");
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.out.join("dataset.json"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out.join("checkpoint.json"))
    }

    /// Settings that determine which ratings the model was trained on.
    pub fn split_echo(&self) -> Vec<(String, String)> {
        let s = self.split;
        vec![
            ("split".into(), join(&[s.train, s.validation, s.test])),
            ("split_seed".into(), s.seed.to_string()),
            ("holdout_users".into(), self.holdout_users.to_string()),
        ]
    }

    /// The effective configuration as `key=value` pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        let hp = &self.hp;
        let mut out: Vec<(String, String)> = vec![
            ("dataset".into(), self.dataset_path().display().to_string()),
            ("checkpoint".into(), self.checkpoint_path().display().to_string()),
            ("seed".into(), self.seed.to_string()),
            ("k".into(), hp.k.to_string()),
            ("gamma".into(), hp.gamma.to_string()),
            ("lambda_u".into(), hp.lambda_u.to_string()),
            ("lambda_v".into(), hp.lambda_v.to_string()),
            ("lambda_p".into(), hp.lambda_p.to_string()),
            ("lambda_q".into(), hp.lambda_q.to_string()),
            ("max_iters".into(), hp.max_iters.to_string()),
            ("learning_rate".into(), hp.adam.learning_rate.to_string()),
            ("init_std".into(), hp.init_std.to_string()),
            ("als_sweeps".into(), hp.als_sweeps.to_string()),
            (
                "score_head".into(),
                match hp.score_head {
                    ScoreHead::Rating => "rating",
                    ScoreHead::Affinity => "affinity",
                }
                .into(),
            ),
        ];
        out.extend(self.split_echo());
        out.push(("nq".into(), join(&self.nq)));
        out.push((
            "policy".into(),
            self.policy.map_or("all".to_string(), |p| p.name().to_string()),
        ));
        out
    }
}
