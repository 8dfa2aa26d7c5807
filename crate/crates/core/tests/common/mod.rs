//! Random instances and independent reference implementations shared by the
//! integration tests and the acceptance runner.

#![allow(dead_code)]

use qrec::factorization::Factors;
use qrec::{HyperParams, ItemCorpus, LatentModel, Rating, RatingMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A small random problem: model, ratings, a session user and its affinity row.
pub struct Instance {
    pub model: LatentModel,
    pub ratings: RatingMatrix,
    pub user: usize,
    pub affinity: Vec<f64>,
    pub hp: HyperParams,
}

pub fn random_instance(rng: &mut StdRng, max_users: usize, max_items: usize, max_k: usize) -> Instance {
    let n = rng.random_range(1..=max_users);
    let m = rng.random_range(1..=max_items);
    let k = rng.random_range(1..=max_k);
    let mut entries = Vec::new();
    for user in 0..n {
        for item in 0..m {
            if rng.random_bool(0.5) {
                entries.push(Rating {
                    user,
                    item,
                    value: f64::from(rng.random_range(1..=5u8)),
                });
            }
        }
    }
    let ratings = RatingMatrix::from_triples(n, m, entries).unwrap();
    let mut model = LatentModel::gaussian(n, m, k, 0.5, rng.random());
    for x in model.p.iter_mut().chain(model.q.iter_mut()) {
        *x = rng.random_range(-1.5..1.5);
    }
    let affinity = (0..m).map(|_| f64::from(rng.random_range(0..4u8))).collect();
    let hp = HyperParams {
        k,
        lambda_u: rng.random_range(0.05..1.0),
        lambda_v: rng.random_range(0.05..1.0),
        lambda_p: rng.random_range(0.0..1.0),
        lambda_q: rng.random_range(0.0..1.0),
        gamma: rng.random_range(0.0..2.0),
        ..Default::default()
    };
    Instance {
        model,
        user: rng.random_range(0..n),
        ratings,
        affinity,
        hp,
    }
}

/// Loss written straight from the definition with dense loops over every
/// (user, item) cell and explicit sums.
pub fn naive_loss(model: &LatentModel, ratings: &RatingMatrix, feedback: Option<(usize, &[f64])>, hp: &HyperParams) -> f64 {
    let k = model.p.len();
    let predict = |w: &[f64], i: usize, j: usize| {
        let mut s = 0.0;
        for t in 0..k {
            s += w[t] * model.users.row(i)[t] * model.items.row(j)[t];
        }
        s
    };
    let mut total = 0.0;
    for i in 0..model.users.rows() {
        for j in 0..model.items.rows() {
            for r in ratings.entries() {
                if r.user == i && r.item == j {
                    total += 0.5 * (r.value - predict(&model.p, i, j)).powi(2);
                }
            }
        }
    }
    if let Some((i, y)) = feedback {
        for j in 0..model.items.rows() {
            total += 0.5 * hp.gamma * (y[j] - predict(&model.q, i, j)).powi(2);
        }
    }
    let sq = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>();
    total
        + 0.5 * hp.lambda_u * sq(model.users.as_slice())
        + 0.5 * hp.lambda_v * sq(model.items.as_slice())
        + 0.5 * hp.lambda_p * sq(&model.p)
        + 0.5 * hp.lambda_q * sq(&model.q)
}

/// Which block of parameters a flat coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Users,
    Items,
    P,
}

pub fn coordinates(model: &LatentModel) -> Vec<(Block, usize)> {
    let mut out = Vec::new();
    out.extend((0..model.users.as_slice().len()).map(|c| (Block::Users, c)));
    out.extend((0..model.items.as_slice().len()).map(|c| (Block::Items, c)));
    out.extend((0..model.p.len()).map(|c| (Block::P, c)));
    out
}

pub fn coordinate_mut(model: &mut LatentModel, (block, c): (Block, usize)) -> &mut f64 {
    match block {
        Block::Users => &mut model.users.as_mut_slice()[c],
        Block::Items => &mut model.items.as_mut_slice()[c],
        Block::P => &mut model.p[c],
    }
}

/// Central finite difference of `f` along one coordinate.
pub fn central_difference(model: &LatentModel, coord: (Block, usize), step: f64, f: impl Fn(&LatentModel) -> f64) -> f64 {
    let mut plus = model.clone();
    *coordinate_mut(&mut plus, coord) += step;
    let mut minus = model.clone();
    *coordinate_mut(&mut minus, coord) -= step;
    (f(&plus) - f(&minus)) / (2.0 * step)
}

pub fn random_direction(rng: &mut StdRng, len: usize, norm: f64) -> Vec<f64> {
    let d: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    d.into_iter().map(|x| x * norm / n).collect()
}

pub fn with_items(model: &LatentModel, items: Factors) -> LatentModel {
    LatentModel { items, ..model.clone() }
}

pub fn with_user(model: &LatentModel, user: usize, u: &[f64]) -> LatentModel {
    let mut out = model.clone();
    out.users.row_mut(user).copy_from_slice(u);
    out
}

/// A random corpus with `m` items and `n` entities; an item's entity set
/// may be empty and entities may be absent everywhere.
pub fn random_corpus(rng: &mut StdRng, m: usize, n: usize, density: f64) -> ItemCorpus {
    let items = (0..m).map(|d| (format!("i{d}"), format!("item {d}"), String::new())).collect();
    let vocab = (0..n).map(|e| format!("e{e}")).collect();
    let rows = (0..m)
        .map(|_| (0..n).filter(|_| rng.random_bool(density)).collect())
        .collect();
    ItemCorpus::from_parts(items, vocab, rows).unwrap()
}

/// Exhaustive GBS: evaluates every available entity with a plain loop over
/// all items, keeps the strictly smaller objective, so the first minimum in
/// ascending entity order wins.
pub fn brute_force_question(pi: &[f64], candidates: &[usize], available: &[usize], corpus: &ItemCorpus) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut sorted = available.to_vec();
    sorted.sort_unstable();
    for e in sorted {
        let mut signed = 0.0;
        for d in 0..corpus.n_items() {
            if candidates.contains(&d) {
                let has = corpus.entities_of(d).contains(&e);
                signed += if has { pi[d] } else { -pi[d] };
            }
        }
        let objective = signed.abs();
        if best.is_none_or(|(_, b)| objective < b) {
            best = Some((e, objective));
        }
    }
    best.map(|(e, _)| e)
}

/// Literal metric definitions from a ranking list.
pub struct LiteralMetrics {
    pub recall_at_5: f64,
    pub ap_at_5: f64,
    pub ndcg: f64,
    pub mrr: f64,
}

pub fn literal_metrics(ranking: &[usize], target: usize) -> LiteralMetrics {
    let position = ranking.iter().position(|&d| d == target).unwrap();
    let top5 = &ranking[..ranking.len().min(5)];
    let recall = if top5.contains(&target) { 1.0 } else { 0.0 };
    // Average precision with one relevant item: precision at its rank if
    // it appears in the top 5.
    let mut ap = 0.0;
    let mut hits = 0.0;
    for (n, &d) in top5.iter().enumerate() {
        if d == target {
            hits += 1.0;
            ap += hits / (n as f64 + 1.0);
        }
    }
    // DCG over the top 100 with ideal DCG 1.
    let mut dcg = 0.0;
    for (n, &d) in ranking.iter().take(100).enumerate() {
        if d == target {
            dcg += 1.0 / ((n + 2) as f64).log2();
        }
    }
    LiteralMetrics {
        recall_at_5: recall,
        ap_at_5: ap,
        ndcg: dcg,
        mrr: 1.0 / (position as f64 + 1.0),
    }
}

pub fn random_permutation(rng: &mut StdRng, m: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..m).collect();
    v.shuffle(rng);
    v
}

/// A trained recommender over a random corpus with `m` items, plus the
/// number of users it knows.
pub fn random_world(seed: u64, m: usize, n_entities: usize, n_users: usize) -> std::sync::Arc<qrec::Recommender> {
    let mut r = rng(seed);
    let corpus = random_corpus(&mut r, m, n_entities, 0.35);
    let mut entries = Vec::new();
    for user in 0..n_users {
        for item in 0..m {
            if r.random_bool(0.3) {
                entries.push(Rating {
                    user,
                    item,
                    value: f64::from(r.random_range(1..=5u8)),
                });
            }
        }
    }
    let ratings = RatingMatrix::from_triples(n_users, m, entries).unwrap();
    let hp = HyperParams {
        max_iters: 30,
        seed,
        ..Default::default()
    };
    let model = qrec::factorization::train_offline(&ratings, &hp).unwrap();
    qrec::Recommender::new(model, std::sync::Arc::new(corpus), std::sync::Arc::new(ratings)).unwrap()
}
