use log::{debug, warn};

use super::{grad_loss, loss, HyperParams, LatentModel};
use crate::error::{QrecError, Result};
use crate::ratings::RatingMatrix;

/// Loss after initialisation and after every Adam step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
}

impl TrainTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("trace holds the initial loss")
    }

    /// Whether the last `window` steps never rose by more than `rel_tol` of
    /// the previous loss.
    pub fn settled(&self, window: usize, rel_tol: f64) -> bool {
        let start = self.losses.len().saturating_sub(window + 1);
        self.losses[start..]
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + rel_tol))
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step<'a>(&mut self, hp: &HyperParams, params: impl Iterator<Item = (&'a mut f64, f64)>) {
        let c = hp.adam;
        self.t += 1;
        let bias1 = 1.0 - c.beta1.powi(self.t);
        let bias2 = 1.0 - c.beta2.powi(self.t);
        for (i, (x, g)) in params.enumerate() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            *x -= c.learning_rate * m_hat / (v_hat.sqrt() + c.eps);
        }
    }
}

/// Fits `U`, `V`, `p` on the ratings by full-batch Adam with the affinity
/// term off; `q` stays all-ones. The result has `p ≥ 0` (see
/// [`LatentModel::align_rating_head`]).
pub fn train_offline(ratings: &RatingMatrix, hp: &HyperParams) -> Result<LatentModel> {
    train_offline_traced(ratings, hp).map(|(model, _)| model)
}

pub fn train_offline_traced(ratings: &RatingMatrix, hp: &HyperParams) -> Result<(LatentModel, TrainTrace)> {
    hp.validate()?;
    if ratings.n_users() == 0 || ratings.n_items() == 0 {
        return Err(QrecError::Invalid("need at least one user and one item".into()));
    }
    let mut model = LatentModel::gaussian(ratings.n_users(), ratings.n_items(), hp.k, hp.init_std, hp.seed);
    let n_params = model.users.as_slice().len() + model.items.as_slice().len() + hp.k;
    let mut adam = Adam::new(n_params);

    let mut losses = Vec::with_capacity(hp.max_iters + 1);
    let initial = loss(&model, ratings, None, hp)?;
    if !initial.is_finite() {
        return Err(QrecError::Diverged {
            iteration: 0,
            loss: initial,
        });
    }
    losses.push(initial);
    for iteration in 1..=hp.max_iters {
        let g = grad_loss(&model, ratings, hp)?;
        let params = model
            .users
            .as_mut_slice()
            .iter_mut()
            .chain(model.items.as_mut_slice().iter_mut())
            .chain(model.p.iter_mut());
        let grads = g
            .users
            .as_slice()
            .iter()
            .chain(g.items.as_slice())
            .chain(&g.p)
            .copied();
        adam.step(hp, params.zip(grads));

        let current = loss(&model, ratings, None, hp)?;
        if !current.is_finite() {
            return Err(QrecError::Diverged {
                iteration,
                loss: current,
            });
        }
        losses.push(current);
    }

    model.align_rating_head();
    let trace = TrainTrace { losses };
    debug!(
        "offline training: loss {:.6} -> {:.6} over {} iterations",
        trace.initial_loss(),
        trace.final_loss(),
        hp.max_iters
    );
    if !trace.settled(10, 0.01) {
        let best = trace.losses.iter().copied().fold(f64::INFINITY, f64::min);
        warn!(
            "offline loss rose within the last 10 iterations (final {:.4}, best {best:.4}); \
             more iterations or a smaller learning rate may help",
            trace.final_loss()
        );
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::Rating;

    #[test]
    fn empty_ratings_shrink_towards_zero() {
        let ratings = RatingMatrix::from_triples(4, 3, vec![]).unwrap();
        let hp = HyperParams::default();
        let init = LatentModel::gaussian(4, 3, hp.k, hp.init_std, hp.seed);
        let model = train_offline(&ratings, &hp).unwrap();
        assert!(model.users.squared_norm() < init.users.squared_norm());
        assert_eq!(model.q, vec![1.0; hp.k]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let ratings = RatingMatrix::from_triples(
            2,
            2,
            vec![Rating { user: 0, item: 1, value: 4.0 }, Rating { user: 1, item: 0, value: 2.0 }],
        )
        .unwrap();
        let hp = HyperParams::default();
        assert_eq!(train_offline(&ratings, &hp).unwrap(), train_offline(&ratings, &hp).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let ratings = RatingMatrix::from_triples(1, 1, vec![Rating { user: 0, item: 0, value: 1e200 }]).unwrap();
        let err = train_offline(&ratings, &HyperParams::default()).unwrap_err();
        assert!(matches!(err, QrecError::Diverged { .. }), "{err}");
    }
}
