//! Closed-form alternating least squares against a session's affinity row.
//!
//! User step (ratings restricted to the user's observed items, affinity dense):
//!
//! `u_i = (Σ_obs (p∘v_j)(p∘v_j)ᵀ + γ Σ_j (q∘v_j)(q∘v_j)ᵀ + λ_u I)⁻¹
//!        (Σ_obs R_ij (p∘v_j) + γ Σ_j Y_j (q∘v_j))`
//!
//! Item step, for every item (only the session user carries affinity):
//!
//! `v_j = (Σ_{i'∈obs(j)} (p∘u_i')(p∘u_i')ᵀ + γ (q∘u_i)(q∘u_i)ᵀ + λ_v I)⁻¹
//!        (Σ_{i'∈obs(j)} R_i'j (p∘u_i') + γ Y_j (q∘u_i))`

use super::{solve_spd, Factors, HyperParams, LatentModel};
use crate::error::{QrecError, Result};
use crate::ratings::RatingMatrix;

/// Per-item rating Gram matrices `Σ (p∘u)(p∘u)ᵀ` and responses
/// `Σ R (p∘u)` over the users who rated each item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemGrams {
    k: usize,
    gram: Vec<f64>,
    resp: Vec<f64>,
}

impl ItemGrams {
    pub fn from_model(model: &LatentModel, ratings: &RatingMatrix) -> Self {
        let k = model.k();
        let m = model.n_items();
        let mut grams = Self {
            k,
            gram: vec![0.0; m * k * k],
            resp: vec![0.0; m * k],
        };
        let mut pu = vec![0.0; k];
        for j in 0..m {
            for &(i, r) in ratings.item_ratings(j) {
                hadamard(&model.p, model.users.row(i), &mut pu);
                grams.accumulate(j, &pu, r, 1.0);
            }
        }
        grams
    }

    pub fn n_items(&self) -> usize {
        self.resp.len() / self.k
    }

    pub fn gram(&self, item: usize) -> &[f64] {
        &self.gram[item * self.k * self.k..(item + 1) * self.k * self.k]
    }

    pub fn response(&self, item: usize) -> &[f64] {
        &self.resp[item * self.k..(item + 1) * self.k]
    }

    fn accumulate(&mut self, item: usize, pu: &[f64], rating: f64, sign: f64) {
        let k = self.k;
        let g = &mut self.gram[item * k * k..(item + 1) * k * k];
        for a in 0..k {
            for b in 0..k {
                g[a * k + b] += sign * pu[a] * pu[b];
            }
        }
        for (r, x) in self.resp[item * k..(item + 1) * k].iter_mut().zip(pu) {
            *r += sign * rating * x;
        }
    }

    /// Swaps one user's contribution from `old_u` to `new_u` on the items
    /// that user rated.
    pub fn replace_user(&mut self, user_ratings: &[(usize, f64)], p: &[f64], old_u: &[f64], new_u: &[f64]) {
        let mut old_pu = vec![0.0; self.k];
        let mut new_pu = vec![0.0; self.k];
        hadamard(p, old_u, &mut old_pu);
        hadamard(p, new_u, &mut new_pu);
        for &(j, r) in user_ratings {
            self.accumulate(j, &old_pu, r, -1.0);
            self.accumulate(j, &new_pu, r, 1.0);
        }
    }

    /// Largest absolute entry difference to another cache.
    pub fn max_abs_diff(&self, other: &ItemGrams) -> f64 {
        self.gram
            .iter()
            .zip(&other.gram)
            .chain(self.resp.iter().zip(&other.resp))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn hadamard(a: &[f64], b: &[f64], out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x * y;
    }
}

fn add_outer(acc: &mut [f64], x: &[f64], weight: f64) {
    let k = x.len();
    for a in 0..k {
        for b in 0..k {
            acc[a * k + b] += weight * x[a] * x[b];
        }
    }
}

fn add_ridge(acc: &mut [f64], k: usize, lambda: f64) {
    for a in 0..k {
        acc[a * k + a] += lambda;
    }
}

/// User step of ALS with the items held fixed.
pub fn solve_user_factor(
    items: &Factors,
    p: &[f64],
    q: &[f64],
    user_ratings: &[(usize, f64)],
    affinity: &[f64],
    gamma: f64,
    lambda_u: f64,
) -> Result<Vec<f64>> {
    let k = items.k();
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    let mut x = vec![0.0; k];
    for &(j, r) in user_ratings {
        hadamard(p, items.row(j), &mut x);
        add_outer(&mut a, &x, 1.0);
        for (b, x) in b.iter_mut().zip(&x) {
            *b += r * x;
        }
    }
    if gamma != 0.0 {
        for (j, &y) in affinity.iter().enumerate() {
            hadamard(q, items.row(j), &mut x);
            add_outer(&mut a, &x, gamma);
            if y != 0.0 {
                for (b, x) in b.iter_mut().zip(&x) {
                    *b += gamma * y * x;
                }
            }
        }
    }
    add_ridge(&mut a, k, lambda_u);
    solve_spd(&a, &b)
}

/// Item step of ALS with the users held fixed; `user_factor` is the session
/// user's (already updated) `u_i`.
pub fn solve_item_factors(
    grams: &ItemGrams,
    user_factor: &[f64],
    q: &[f64],
    affinity: &[f64],
    gamma: f64,
    lambda_v: f64,
) -> Result<Factors> {
    let k = user_factor.len();
    let m = grams.n_items();
    let mut qu = vec![0.0; k];
    hadamard(q, user_factor, &mut qu);
    let mut out = Factors::zeros(m, k);
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (j, &y) in affinity.iter().enumerate().take(m) {
        a.copy_from_slice(grams.gram(j));
        b.copy_from_slice(grams.response(j));
        if gamma != 0.0 {
            add_outer(&mut a, &qu, gamma);
            for (b, x) in b.iter_mut().zip(&qu) {
                *b += gamma * y * x;
            }
        }
        add_ridge(&mut a, k, lambda_v);
        out.row_mut(j).copy_from_slice(&solve_spd(&a, &b)?);
    }
    Ok(out)
}

fn check_online(model: &LatentModel, ratings: &RatingMatrix, affinity: &[f64], user: usize) -> Result<()> {
    model.check()?;
    if model.n_users() != ratings.n_users() || model.n_items() != ratings.n_items() {
        return Err(QrecError::Dimension("model and ratings disagree on N or M".into()));
    }
    if affinity.len() != model.n_items() {
        return Err(QrecError::Dimension(format!(
            "affinity row has {} entries for {} items",
            affinity.len(),
            model.n_items()
        )));
    }
    if user >= model.n_users() {
        return Err(QrecError::OutOfRange {
            what: "user",
            index: user,
            len: model.n_users(),
        });
    }
    Ok(())
}

/// Exact minimiser of the loss over `u_i` with everything else fixed.
pub fn update_user_factor(
    model: &LatentModel,
    ratings: &RatingMatrix,
    affinity: &[f64],
    user: usize,
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    check_online(model, ratings, affinity, user)?;
    if hp.lambda_u.is_nan() || hp.lambda_u <= 0.0 {
        return Err(QrecError::Invalid("online user update needs lambda_u > 0".into()));
    }
    solve_user_factor(
        &model.items,
        &model.p,
        &model.q,
        ratings.user_ratings(user),
        affinity,
        hp.gamma,
        hp.lambda_u,
    )
}

/// Exact minimiser of the loss over every `v_j` with `U` fixed. Item Grams
/// are recomputed from scratch.
pub fn update_item_factors(
    model: &LatentModel,
    ratings: &RatingMatrix,
    affinity: &[f64],
    user: usize,
    hp: &HyperParams,
) -> Result<Factors> {
    check_online(model, ratings, affinity, user)?;
    if hp.lambda_v.is_nan() || hp.lambda_v <= 0.0 {
        return Err(QrecError::Invalid("online item update needs lambda_v > 0".into()));
    }
    let grams = ItemGrams::from_model(model, ratings);
    solve_item_factors(&grams, model.users.row(user), &model.q, affinity, hp.gamma, hp.lambda_v)
}

/// `sweeps` alternations of the user step (row `user` only) and the item step.
pub fn als_sweep(
    model: &LatentModel,
    ratings: &RatingMatrix,
    affinity: &[f64],
    user: usize,
    hp: &HyperParams,
    sweeps: usize,
) -> Result<LatentModel> {
    if sweeps == 0 {
        return Err(QrecError::Invalid("sweeps must be >= 1".into()));
    }
    let mut model = model.clone();
    for _ in 0..sweeps {
        let u = update_user_factor(&model, ratings, affinity, user, hp)?;
        model.users.row_mut(user).copy_from_slice(&u);
        model.items = update_item_factors(&model, ratings, affinity, user, hp)?;
    }
    Ok(model)
}
