use super::{weighted_dot, Factors, HyperParams, LatentModel};
use crate::error::{QrecError, Result};
use crate::ratings::RatingMatrix;

/// The active session's affinity row `Y_i` (dense over all items).
#[derive(Debug, Clone, Copy)]
pub struct SessionFeedback<'a> {
    pub user: usize,
    pub affinity: &'a [f64],
}

/// Gradients of [`loss`] with respect to `U`, `V` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub users: Factors,
    pub items: Factors,
    pub p: Vec<f64>,
}

impl Gradients {
    pub fn squared_norm(&self) -> f64 {
        self.users.squared_norm() + self.items.squared_norm() + self.p.iter().map(|x| x * x).sum::<f64>()
    }
}

fn check_dims(model: &LatentModel, ratings: &RatingMatrix, feedback: Option<SessionFeedback<'_>>) -> Result<()> {
    model.check()?;
    if model.n_users() != ratings.n_users() || model.n_items() != ratings.n_items() {
        return Err(QrecError::Dimension(format!(
            "model is {}x{} but ratings are {}x{}",
            model.n_users(),
            model.n_items(),
            ratings.n_users(),
            ratings.n_items()
        )));
    }
    if let Some(fb) = feedback {
        if fb.user >= model.n_users() {
            return Err(QrecError::OutOfRange {
                what: "user",
                index: fb.user,
                len: model.n_users(),
            });
        }
        if fb.affinity.len() != model.n_items() {
            return Err(QrecError::Dimension(format!(
                "affinity row has {} entries for {} items",
                fb.affinity.len(),
                model.n_items()
            )));
        }
    }
    Ok(())
}

/// Negative log posterior of the factor model:
///
/// `½ Σ_R (R_ij − p·(u_i∘v_j))² + γ/2 Σ_j (Y_j − q·(u_i∘v_j))²
///  + λ_u/2 ‖U‖² + λ_v/2 ‖V‖² + λ_p/2 ‖p‖² + λ_q/2 ‖q‖²`
///
/// The affinity term covers only the session user's row and is skipped when
/// `feedback` is `None`.
pub fn loss(
    model: &LatentModel,
    ratings: &RatingMatrix,
    feedback: Option<SessionFeedback<'_>>,
    hp: &HyperParams,
) -> Result<f64> {
    check_dims(model, ratings, feedback)?;
    let mut rating_term = 0.0;
    for r in ratings.entries() {
        let e = r.value - weighted_dot(&model.p, model.users.row(r.user), model.items.row(r.item));
        rating_term += e * e;
    }
    let mut affinity_term = 0.0;
    if let Some(fb) = feedback {
        let u = model.users.row(fb.user);
        for (j, &y) in fb.affinity.iter().enumerate() {
            let e = y - weighted_dot(&model.q, u, model.items.row(j));
            affinity_term += e * e;
        }
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    Ok(0.5 * rating_term
        + 0.5 * hp.gamma * affinity_term
        + 0.5 * hp.lambda_u * model.users.squared_norm()
        + 0.5 * hp.lambda_v * model.items.squared_norm()
        + 0.5 * hp.lambda_p * sq(&model.p)
        + 0.5 * hp.lambda_q * sq(&model.q))
}

/// Analytic gradient of [`loss`] with respect to `U`, `V` and `p`.
pub fn gradients(
    model: &LatentModel,
    ratings: &RatingMatrix,
    feedback: Option<SessionFeedback<'_>>,
    hp: &HyperParams,
) -> Result<Gradients> {
    check_dims(model, ratings, feedback)?;
    let k = model.k();
    let mut g_users = Factors::zeros(model.n_users(), k);
    let mut g_items = Factors::zeros(model.n_items(), k);
    let mut g_p = vec![0.0; k];
    let p = &model.p;

    for r in ratings.entries() {
        let u = model.users.row(r.user);
        let v = model.items.row(r.item);
        let e = weighted_dot(p, u, v) - r.value;
        let gu = g_users.row_mut(r.user);
        for t in 0..k {
            gu[t] += e * p[t] * v[t];
        }
        let gv = g_items.row_mut(r.item);
        for t in 0..k {
            gv[t] += e * p[t] * u[t];
        }
        for t in 0..k {
            g_p[t] += e * u[t] * v[t];
        }
    }

    if let Some(fb) = feedback {
        let q = &model.q;
        let u = model.users.row(fb.user).to_vec();
        for (j, &y) in fb.affinity.iter().enumerate() {
            let v = model.items.row(j);
            let e = hp.gamma * (weighted_dot(q, &u, v) - y);
            let gu = g_users.row_mut(fb.user);
            for t in 0..k {
                gu[t] += e * q[t] * v[t];
            }
            let gv = g_items.row_mut(j);
            for t in 0..k {
                gv[t] += e * q[t] * u[t];
            }
        }
    }

    for (g, x) in g_users.as_mut_slice().iter_mut().zip(model.users.as_slice()) {
        *g += hp.lambda_u * x;
    }
    for (g, x) in g_items.as_mut_slice().iter_mut().zip(model.items.as_slice()) {
        *g += hp.lambda_v * x;
    }
    for (g, x) in g_p.iter_mut().zip(p) {
        *g += hp.lambda_p * x;
    }
    Ok(Gradients {
        users: g_users,
        items: g_items,
        p: g_p,
    })
}

/// Offline gradient: the rating objective without the affinity term.
pub fn grad_loss(model: &LatentModel, ratings: &RatingMatrix, hp: &HyperParams) -> Result<Gradients> {
    gradients(model, ratings, None, hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::Rating;

    fn hp0() -> HyperParams {
        HyperParams {
            lambda_u: 0.0,
            lambda_v: 0.0,
            lambda_p: 0.0,
            lambda_q: 0.0,
            ..Default::default()
        }
    }

    fn zero_model(n: usize, m: usize, k: usize) -> LatentModel {
        let mut model = LatentModel::zeros(n, m, k);
        model.p = vec![0.0; k];
        model.q = vec![0.0; k];
        model
    }

    #[test]
    fn loss_of_zero_model_with_one_rating() {
        let ratings = RatingMatrix::from_triples(1, 1, vec![Rating { user: 0, item: 0, value: 2.0 }]).unwrap();
        let model = zero_model(1, 1, 2);
        assert_eq!(loss(&model, &ratings, None, &hp0()).unwrap(), 2.0);
    }

    #[test]
    fn loss_of_empty_everything_is_zero() {
        let ratings = RatingMatrix::from_triples(1, 2, vec![]).unwrap();
        let model = zero_model(1, 2, 2);
        let y = [0.0, 0.0];
        let fb = SessionFeedback { user: 0, affinity: &y };
        assert_eq!(loss(&model, &ratings, Some(fb), &hp0()).unwrap(), 0.0);
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let ratings = RatingMatrix::from_triples(1, 1, vec![Rating { user: 0, item: 0, value: 3.0 }]).unwrap();
        let model = zero_model(1, 1, 2);
        let g = grad_loss(&model, &ratings, &hp0()).unwrap();
        assert_eq!(g.squared_norm(), 0.0);
    }

    #[test]
    fn pure_regularizer_gradient() {
        let ratings = RatingMatrix::from_triples(3, 2, vec![]).unwrap();
        let model = LatentModel::gaussian(3, 2, 3, 1.0, 5);
        let hp = HyperParams { lambda_u: 0.1, ..hp0() };
        let g = grad_loss(&model, &ratings, &hp).unwrap();
        for (g, u) in g.users.as_slice().iter().zip(model.users.as_slice()) {
            assert_eq!(*g, 0.1 * u);
        }
        assert_eq!(g.items.squared_norm(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let ratings = RatingMatrix::from_triples(2, 2, vec![]).unwrap();
        let model = LatentModel::zeros(2, 3, 2);
        assert!(loss(&model, &ratings, None, &hp0()).is_err());
        let model = LatentModel::zeros(2, 2, 2);
        let y = [0.0; 3];
        let fb = SessionFeedback { user: 0, affinity: &y };
        assert!(loss(&model, &ratings, Some(fb), &hp0()).is_err());
    }
}
