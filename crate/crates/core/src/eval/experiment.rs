use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::metrics::{mean_metrics, metrics_for_rank, Metrics};
use super::report::MetricsRow;
use super::split::Split;
use crate::dataset::Dataset;
use crate::error::{QrecError, Result};
use crate::factorization::{train_offline, HyperParams, LatentModel};
use crate::ratings::RatingMatrix;
use crate::session::{simulate_target_ranks, Prior, QuestionPolicy, Recommender, SessionOptions, SessionUser};

/// Experiment arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// GBS questions, prior from the offline ranking.
    Qrec,
    /// Uniformly random questions from the remaining pool.
    RandomQuestion,
    /// GBS questions under a uniform prior.
    UniformPriorSbs,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Qrec, Policy::RandomQuestion, Policy::UniformPriorSbs];

    pub fn options(self, seed: u64) -> SessionOptions {
        match self {
            Policy::Qrec => SessionOptions::default(),
            Policy::RandomQuestion => SessionOptions {
                policy: QuestionPolicy::Random { seed },
                prior: Prior::Ranked,
            },
            Policy::UniformPriorSbs => SessionOptions {
                policy: QuestionPolicy::Gbs,
                prior: Prior::Uniform,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Qrec => "qrec",
            Policy::RandomQuestion => "random_question",
            Policy::UniformPriorSbs => "uniform_prior_sbs",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = QrecError;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| QrecError::Invalid(format!("unknown policy `{s}` (qrec, random_question, uniform_prior_sbs)")))
    }
}

/// One simulated session: who asks, what they want, and the seed for any
/// randomness in the arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSpec {
    pub user: SessionUser,
    pub target: usize,
    pub seed: u64,
}

/// One session per test triple. Users without training ratings are cold.
pub fn session_specs(train: &RatingMatrix, test: &RatingMatrix, seed: u64) -> Vec<SessionSpec> {
    test.entries()
        .iter()
        .enumerate()
        .map(|(n, r)| SessionSpec {
            user: if train.user_ratings(r.user).is_empty() {
                SessionUser::Cold
            } else {
                SessionUser::Known(r.user)
            },
            target: r.item,
            seed: seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        })
        .collect()
}

/// Runs every session to the largest budget and reports mean metrics at each
/// budget in `n_qs`. Sessions run in parallel; the reduction order is fixed.
pub fn run_experiment(
    rec: &Arc<Recommender>,
    sessions: &[SessionSpec],
    policy: Policy,
    hp: &HyperParams,
    n_qs: &[usize],
    label: &str,
) -> Result<Vec<MetricsRow>> {
    let max_q = n_qs.iter().copied().max().unwrap_or(0);
    let per_session: Vec<Vec<Metrics>> = sessions
        .par_iter()
        .map(|s| {
            let t = simulate_target_ranks(rec, s.user, s.target, max_q, hp, policy.options(s.seed))?;
            Ok(n_qs.iter().map(|&n| metrics_for_rank(t.target_rank_at(n))).collect())
        })
        .collect::<Result<_>>()?;
    let rows = n_qs
        .iter()
        .enumerate()
        .map(|(col, &n_q)| {
            let column: Vec<Metrics> = per_session.iter().map(|m| m[col]).collect();
            MetricsRow {
                policy: label.to_string(),
                n_q,
                metrics: mean_metrics(&column),
                sessions: sessions.len(),
            }
        })
        .collect();
    info!("{label}: {} sessions up to {max_q} questions", sessions.len());
    Ok(rows)
}

/// A trained recommender with its evaluation sessions.
pub struct Bench {
    pub recommender: Arc<Recommender>,
    pub sessions: Vec<SessionSpec>,
    pub split: Split,
}

/// Trains on the split's training part and builds one session per test triple.
pub fn prepare(dataset: &Dataset, split: Split, hp: &HyperParams, seed: u64) -> Result<Bench> {
    let model = train_offline(&split.train, hp)?;
    let recommender = Recommender::new(model, Arc::new(dataset.corpus.clone()), Arc::new(split.train.clone()))?;
    let sessions = session_specs(&split.train, &split.test, seed);
    Ok(Bench {
        recommender,
        sessions,
        split,
    })
}

/// Offline-trained start against a seeded random start, on identical sessions.
pub fn ablation_offline_init(bench: &Bench, hp: &HyperParams, n_qs: &[usize]) -> Result<Vec<MetricsRow>> {
    let trained = bench.recommender.model();
    let random = LatentModel::gaussian(trained.n_users(), trained.n_items(), hp.k, hp.init_std, hp.seed);
    let random_rec = Recommender::new(
        random,
        Arc::clone(bench.recommender.corpus()),
        Arc::clone(bench.recommender.ratings()),
    )?;
    let mut rows = run_experiment(&bench.recommender, &bench.sessions, Policy::Qrec, hp, n_qs, "offline_init")?;
    rows.extend(run_experiment(&random_rec, &bench.sessions, Policy::Qrec, hp, n_qs, "random_init")?);
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    K,
}

impl FromStr for SweepParam {
    type Err = QrecError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(SweepParam::Gamma),
            "k" => Ok(SweepParam::K),
            _ => Err(QrecError::Invalid(format!("unknown sweep parameter `{s}` (gamma, k)"))),
        }
    }
}

/// One Qrec run per grid point. Sweeping `K` retrains the model at each
/// point; sweeping `gamma` reuses the trained model since it only enters
/// the online updates. Rows are labelled `gamma=<x>` or `k=<x>`.
pub fn sweep(bench: &Bench, param: SweepParam, grid: &[f64], hp: &HyperParams, n_qs: &[usize]) -> Result<Vec<MetricsRow>> {
    if grid.is_empty() {
        return Err(QrecError::Invalid("empty sweep grid".into()));
    }
    let mut rows = Vec::new();
    for &x in grid {
        match param {
            SweepParam::Gamma => {
                let hp = HyperParams { gamma: x, ..*hp };
                rows.extend(run_experiment(&bench.recommender, &bench.sessions, Policy::Qrec, &hp, n_qs, &format!("gamma={x}"))?);
            }
            SweepParam::K => {
                if x.fract() != 0.0 || x < 1.0 {
                    return Err(QrecError::Invalid(format!("K grid point {x} is not a positive integer")));
                }
                let hp = HyperParams { k: x as usize, ..*hp };
                let model = train_offline(&bench.split.train, &hp)?;
                let rec = Recommender::new(
                    model,
                    Arc::clone(bench.recommender.corpus()),
                    Arc::clone(bench.recommender.ratings()),
                )?;
                rows.extend(run_experiment(&rec, &bench.sessions, Policy::Qrec, &hp, n_qs, &format!("k={x}"))?);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::Rating;

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("greedy".parse::<Policy>().is_err());
        assert_eq!("K".parse::<SweepParam>().unwrap(), SweepParam::K);
    }

    #[test]
    fn specs_mark_cold_users() {
        let e = |user, item| Rating { user, item, value: 1.0 };
        let all = RatingMatrix::from_triples(2, 2, vec![e(0, 0), e(0, 1), e(1, 1)]).unwrap();
        let train = all.subset(vec![e(0, 0)]).unwrap();
        let test = all.subset(vec![e(0, 1), e(1, 1)]).unwrap();
        let specs = session_specs(&train, &test, 5);
        assert_eq!(specs[0].user, SessionUser::Known(0));
        assert_eq!(specs[1].user, SessionUser::Cold);
        assert_eq!(specs[1].target, 1);
        assert_ne!(specs[0].seed, specs[1].seed);
    }
}
