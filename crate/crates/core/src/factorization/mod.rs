//! Matrix factorization scoring a user–item pair as `p·(u_i ∘ v_j)`,
//! with an affinity head `q·(u_i ∘ v_j)` fitted online to answer feedback.
//!
//! Offline, `U`, `V` and `p` are fitted by full-batch Adam on the rating
//! objective alone (`q` stays all-ones). Online, a session refines its own
//! copy of `u_i` and `V` with exact alternating least squares against the
//! session's accumulated affinity vector.

mod linalg;
mod objective;
mod offline;
mod online;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QrecError, Result};

pub use linalg::solve_spd;
pub use objective::{grad_loss, gradients, loss, Gradients, SessionFeedback};
pub use offline::{train_offline, train_offline_traced, TrainTrace};
pub use online::{
    als_sweep, solve_item_factors, solve_user_factor, update_item_factors, update_user_factor,
    ItemGrams,
};

/// Largest latent dimension accepted.
pub const MAX_LATENT_DIM: usize = 32;

/// Dense row-major `rows × k` matrix of latent factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl Factors {
    pub fn zeros(rows: usize, k: usize) -> Self {
        Self {
            rows,
            k,
            data: vec![0.0; rows * k],
        }
    }

    pub fn from_vec(rows: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * k {
            return Err(QrecError::Dimension(format!(
                "{} values for a {rows}x{k} factor matrix",
                data.len()
            )));
        }
        Ok(Self { rows, k, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Which weighting of `u ∘ v` ranks items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreHead {
    /// `p·(u∘v)`, the rating prediction.
    #[default]
    Rating,
    /// `q·(u∘v)`; with `q = 1` this is the plain inner product `u·v`.
    Affinity,
}

/// Model and optimisation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Latent dimension K.
    pub k: usize,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub lambda_p: f64,
    pub lambda_q: f64,
    /// Weight of the online affinity term.
    pub gamma: f64,
    /// Offline full-batch Adam iterations.
    pub max_iters: usize,
    pub adam: AdamConfig,
    /// Standard deviation of the Gaussian initialisation.
    pub init_std: f64,
    pub seed: u64,
    /// ALS alternations (user then items) after each answer.
    pub als_sweeps: usize,
    #[serde(default)]
    pub score_head: ScoreHead,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            k: 3,
            lambda_u: 0.1,
            lambda_v: 0.1,
            lambda_p: 0.1,
            lambda_q: 0.1,
            gamma: 0.5,
            max_iters: 100,
            adam: AdamConfig::default(),
            init_std: 0.1,
            seed: 42,
            als_sweeps: 1,
            score_head: ScoreHead::default(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_LATENT_DIM {
            return Err(QrecError::Invalid(format!(
                "latent dimension {} outside 1..={MAX_LATENT_DIM}",
                self.k
            )));
        }
        if [self.lambda_u, self.lambda_v].iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(QrecError::Invalid("lambda_u and lambda_v must be finite and > 0".into()));
        }
        if [self.lambda_p, self.lambda_q].iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(QrecError::Invalid("lambda_p and lambda_q must be finite and >= 0".into()));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(QrecError::Invalid(format!("gamma {} must be >= 0", self.gamma)));
        }
        if self.max_iters == 0 {
            return Err(QrecError::Invalid("max_iters must be positive".into()));
        }
        if self.als_sweeps == 0 {
            return Err(QrecError::Invalid("als_sweeps must be positive".into()));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(QrecError::Invalid("init_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// The factorization state: `U` (N×K), `V` (M×K), rating head `p`, affinity head `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub users: Factors,
    pub items: Factors,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LatentModel {
    /// All factors zero, `p = q = 1`.
    pub fn zeros(n_users: usize, n_items: usize, k: usize) -> Self {
        Self {
            users: Factors::zeros(n_users, k),
            items: Factors::zeros(n_items, k),
            p: vec![1.0; k],
            q: vec![1.0; k],
        }
    }

    /// `U`, `V`, `p` drawn from N(0, std²) in that order; `q = 1`.
    pub fn gaussian(n_users: usize, n_items: usize, k: usize, std: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).expect("std is finite and non-negative");
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| normal.sample(&mut rng)).collect() };
        let users = draw(n_users * k);
        let items = draw(n_items * k);
        let p = draw(k);
        Self {
            users: Factors { rows: n_users, k, data: users },
            items: Factors { rows: n_items, k, data: items },
            p,
            q: vec![1.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// Flips the sign of every latent coordinate where `p` is negative, in
    /// both `p` and `U`. Rating predictions and the regularisers are
    /// unchanged; afterwards `p ≥ 0`, so raising the affinity head
    /// `q·(u∘v)` with `q = 1` also raises the score.
    pub fn align_rating_head(&mut self) {
        let k = self.k();
        for c in 0..k {
            if self.p[c] < 0.0 {
                self.p[c] = -self.p[c];
                for row in self.users.data.chunks_exact_mut(k) {
                    row[c] = -row[c];
                }
            }
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.rows()
    }

    pub fn n_items(&self) -> usize {
        self.items.rows()
    }

    pub fn check(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.q.len() != k || self.users.k() != k || self.items.k() != k {
            return Err(QrecError::Dimension(format!(
                "inconsistent latent dimensions: p {}, q {}, U {}, V {}",
                k,
                self.q.len(),
                self.users.k(),
                self.items.k()
            )));
        }
        let all = self
            .users
            .as_slice()
            .iter()
            .chain(self.items.as_slice())
            .chain(&self.p)
            .chain(&self.q);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(QrecError::Invalid("model contains non-finite values".into()));
        }
        Ok(())
    }

    /// Weights for `head`.
    pub fn head(&self, head: ScoreHead) -> &[f64] {
        match head {
            ScoreHead::Rating => &self.p,
            ScoreHead::Affinity => &self.q,
        }
    }

    /// `p·(u_i ∘ v_j)`.
    pub fn score(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.n_users() {
            return Err(QrecError::OutOfRange {
                what: "user",
                index: user,
                len: self.n_users(),
            });
        }
        if item >= self.n_items() {
            return Err(QrecError::OutOfRange {
                what: "item",
                index: item,
                len: self.n_items(),
            });
        }
        Ok(weighted_dot(&self.p, self.users.row(user), self.items.row(item)))
    }

    /// Items by descending score for `user`.
    pub fn rank_items(&self, user: usize) -> Result<Vec<usize>> {
        if user >= self.n_users() {
            return Err(QrecError::OutOfRange {
                what: "user",
                index: user,
                len: self.n_users(),
            });
        }
        Ok(rank_by_scores(&item_scores(&self.p, self.users.row(user), &self.items)))
    }
}

/// `Σ_k w_k a_k b_k`.
#[inline]
pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// Scores of every item for a user factor `u`.
pub fn item_scores(p: &[f64], u: &[f64], items: &Factors) -> Vec<f64> {
    (0..items.rows())
        .map(|j| weighted_dot(p, u, items.row(j)))
        .collect()
}

/// Indices sorted by descending score, ties by ascending index. `-0.0`
/// and `0.0` tie.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_with(p: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> LatentModel {
        let k = p.len();
        LatentModel {
            users: Factors::from_vec(1, k, u).unwrap(),
            items: Factors::from_vec(1, k, v).unwrap(),
            q: vec![1.0; k],
            p,
        }
    }

    #[test]
    fn aligning_the_rating_head_keeps_scores() {
        let mut m = LatentModel::gaussian(3, 4, 5, 1.0, 11);
        m.p = vec![-1.0, 2.0, -0.5, 0.0, 3.0];
        let before: Vec<f64> = (0..3).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| m.score(i, j).unwrap()).collect();
        m.align_rating_head();
        assert!(m.p.iter().all(|&x| x >= 0.0));
        let after: Vec<f64> = (0..3).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| m.score(i, j).unwrap()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn score_examples() {
        assert_eq!(model_with(vec![1.0, 1.0], vec![1.0, 2.0], vec![3.0, 4.0]).score(0, 0).unwrap(), 11.0);
        assert_eq!(model_with(vec![1.0, 1.0], vec![0.0, 0.0], vec![3.0, 4.0]).score(0, 0).unwrap(), 0.0);
        assert_eq!(model_with(vec![2.0, 0.0], vec![1.0, 1.0], vec![5.0, 7.0]).score(0, 0).unwrap(), 10.0);
        assert!(model_with(vec![1.0], vec![1.0], vec![1.0]).score(1, 0).is_err());
        assert!(model_with(vec![1.0], vec![1.0], vec![1.0]).score(0, 1).is_err());
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_by_scores(&[0.1, 0.9, 0.5]), vec![1, 2, 0]);
        assert_eq!(rank_by_scores(&[0.3; 5]), vec![0, 1, 2, 3, 4]);
        assert_eq!(rank_by_scores(&[1.0, 2.0, 1.0, 2.0]), vec![1, 3, 0, 2]);
    }

    #[test]
    fn ranking_matches_reference_stable_sort() {
        let model = LatentModel::gaussian(3, 20, 3, 1.0, 11);
        for user in 0..3 {
            let scores: Vec<f64> = (0..20).map(|j| model.score(user, j).unwrap()).collect();
            // stable sort on descending score keeps index order within ties
            let mut reference: Vec<usize> = (0..20).collect();
            reference.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
            assert_eq!(model.rank_items(user).unwrap(), reference);
        }
    }

    #[test]
    fn validation() {
        assert!(HyperParams::default().validate().is_ok());
        assert!(HyperParams { lambda_p: 0.0, lambda_q: 0.0, ..Default::default() }.validate().is_ok());
        for bad in [
            HyperParams { k: 0, ..Default::default() },
            HyperParams { k: 33, ..Default::default() },
            HyperParams { gamma: -0.5, ..Default::default() },
            HyperParams { lambda_v: f64::NAN, ..Default::default() },
            HyperParams { lambda_u: 0.0, ..Default::default() },
            HyperParams { lambda_q: -1.0, ..Default::default() },
            HyperParams { max_iters: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn gaussian_init_is_seeded() {
        let a = LatentModel::gaussian(4, 5, 3, 0.1, 7);
        let b = LatentModel::gaussian(4, 5, 3, 0.1, 7);
        let c = LatentModel::gaussian(4, 5, 3, 0.1, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.q, vec![1.0; 3]);
        a.check().unwrap();
    }
}
