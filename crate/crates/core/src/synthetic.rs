//! Seeded synthetic datasets for desk-scale experiments and tests.
//!
//! The benchmark draws users and items from a low-rank taste space. Entity
//! popularity is Zipf-like and tilted towards items whose latent position
//! matches the entity, so answers carry information about preferences.
//! Users rate items they are likely to like, with noisy 1–5 values.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::ItemCorpus;
use crate::dataset::Dataset;
use crate::error::{QrecError, Result};
use crate::ratings::{IdMap, Rating, RatingMatrix};

const QUALITIES: [&str; 20] = [
    "soft", "stainless", "ceramic", "wooden", "glass", "cotton", "linen", "nonstick", "compact", "vintage",
    "modern", "rustic", "waterproof", "heavy duty", "foldable", "bamboo", "copper", "marble", "velvet", "cast iron",
];
const THINGS: [&str; 20] = [
    "towel", "pan", "mug", "shelf", "lamp", "rug", "pillow", "kettle", "knife", "basket",
    "curtain", "vase", "blanket", "tray", "jar", "clock", "mirror", "bowl", "stool", "candle",
];

/// Knobs for [`benchmark`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Vocabulary size; every entity is attached to at least one item.
    pub n_entities: usize,
    pub latent_dim: usize,
    pub entities_per_item: usize,
    pub ratings_per_user: usize,
    /// Zipf exponent of item popularity when users pick what to rate.
    pub item_popularity: f64,
    /// Zipf exponent of entity popularity.
    pub zipf_exponent: f64,
    /// How strongly entity choice follows the latent space.
    pub entity_tilt: f64,
    /// Rating before noise is `rating_mean + rating_spread · affinity`,
    /// rounded and clamped to 1..=5.
    pub rating_mean: f64,
    pub rating_spread: f64,
    /// Extra rating for popular items, per standard deviation of
    /// log-popularity.
    pub popularity_bonus: f64,
    pub rating_noise: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    /// Retail-like: ratings skew high, a few items draw most of them, and
    /// popular items rate slightly better.
    fn default() -> Self {
        Self {
            n_users: 240,
            n_items: 128,
            n_entities: 320,
            latent_dim: 3,
            entities_per_item: 8,
            ratings_per_user: 16,
            item_popularity: 1.0,
            zipf_exponent: 0.8,
            entity_tilt: 1.0,
            rating_mean: 4.2,
            rating_spread: 0.3,
            popularity_bonus: 0.5,
            rating_noise: 0.5,
            seed: 7,
        }
    }
}

impl BenchmarkConfig {
    /// The default catalogue with every rating equal to 4: ratings record
    /// who rated what but favour no item, so a session that isolates the
    /// target can rank it first.
    pub fn separable() -> Self {
        Self {
            rating_mean: 4.0,
            rating_spread: 0.0,
            popularity_bonus: 0.0,
            rating_noise: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items < 2 || self.latent_dim == 0 {
            return Err(QrecError::Invalid("benchmark needs users, ≥2 items and a latent dimension".into()));
        }
        if self.n_entities == 0 || self.n_entities > QUALITIES.len() * THINGS.len() {
            return Err(QrecError::Invalid(format!(
                "n_entities must be in 1..={}",
                QUALITIES.len() * THINGS.len()
            )));
        }
        if self.entities_per_item == 0 || self.entities_per_item > self.n_entities {
            return Err(QrecError::Invalid("entities_per_item out of range".into()));
        }
        if self.ratings_per_user == 0 || self.ratings_per_user > self.n_items {
            return Err(QrecError::Invalid("ratings_per_user out of range".into()));
        }
        Ok(())
    }
}

fn entity_name(e: usize) -> String {
    format!("{} {}", QUALITIES[e % QUALITIES.len()], THINGS[e / QUALITIES.len()])
}

fn gaussian_rows(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weights(values: impl Iterator<Item = f64>) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(values).map_err(|e| QrecError::Invalid(format!("sampling weights: {e}")))
}

/// Draws `n` distinct indices by repeated weighted sampling.
fn sample_distinct(rng: &mut ChaCha8Rng, w: &[f64], n: usize) -> Result<Vec<usize>> {
    let mut w = w.to_vec();
    let mut picked = Vec::with_capacity(n);
    for _ in 0..n {
        let i = weights(w.iter().copied())?.sample(rng);
        picked.push(i);
        w[i] = 0.0;
    }
    Ok(picked)
}

/// Generates the benchmark. Every item has a distinct entity set, so a
/// truthful user can always be narrowed down to a single item.
pub fn benchmark(config: &BenchmarkConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.latent_dim;
    let scale = 1.0 / (k as f64).sqrt();
    let item_taste = gaussian_rows(&mut rng, config.n_items, k);
    let user_taste = gaussian_rows(&mut rng, config.n_users, k);
    let entity_taste = gaussian_rows(&mut rng, config.n_entities, k);

    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(config.n_items);
    let mut seen = std::collections::HashSet::new();
    for v in &item_taste {
        let w: Vec<f64> = entity_taste
            .iter()
            .enumerate()
            .map(|(e, t)| (e as f64 + 1.0).powf(-config.zipf_exponent) * (config.entity_tilt * scale * dot(t, v)).exp())
            .collect();
        let mut row = sample_distinct(&mut rng, &w, config.entities_per_item)?;
        row.sort_unstable();
        while !seen.insert(row.clone()) {
            let extra = sample_distinct(&mut rng, &w, config.n_entities.min(row.len() + 1))?;
            if let Some(e) = extra.into_iter().find(|e| !row.contains(e)) {
                row.push(e);
                row.sort_unstable();
            } else {
                return Err(QrecError::Invalid("cannot make entity sets distinct".into()));
            }
        }
        rows.push(row);
    }
    // Attach any unused entity to the item whose taste fits it best.
    let mut used = vec![false; config.n_entities];
    rows.iter().flatten().for_each(|&e| used[e] = true);
    for e in (0..config.n_entities).filter(|&e| !used[e]) {
        let d = (0..config.n_items)
            .max_by(|&a, &b| dot(&entity_taste[e], &item_taste[a]).total_cmp(&dot(&entity_taste[e], &item_taste[b])))
            .expect("at least two items");
        rows[d].push(e);
        rows[d].sort_unstable();
    }

    let items = rows
        .iter()
        .enumerate()
        .map(|(d, row)| {
            let names: Vec<String> = row.iter().map(|&e| entity_name(e)).collect();
            let title = format!("{} {}", names[0], d + 1);
            let document = format!("Features {}.", names.join(", "));
            (format!("i{:04}", d + 1), title, document)
        })
        .collect();
    let vocab = (0..config.n_entities).map(entity_name).collect();
    let corpus = ItemCorpus::from_parts(items, vocab, rows)?;

    let mut by_popularity: Vec<usize> = (0..config.n_items).collect();
    by_popularity.shuffle(&mut rng);
    let mut popularity = vec![0.0; config.n_items];
    for (r, &d) in by_popularity.iter().enumerate() {
        popularity[d] = (r as f64 + 1.0).powf(-config.item_popularity);
    }

    let log_pop: Vec<f64> = popularity.iter().map(|p| p.ln()).collect();
    let mean = log_pop.iter().sum::<f64>() / log_pop.len() as f64;
    let sd = (log_pop.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / log_pop.len() as f64).sqrt();
    let bonus: Vec<f64> = log_pop
        .iter()
        .map(|x| if sd > 0.0 { config.popularity_bonus * (x - mean) / sd } else { 0.0 })
        .collect();

    let mut entries = Vec::with_capacity(config.n_users * config.ratings_per_user);
    for (user, u) in user_taste.iter().enumerate() {
        let affinity: Vec<f64> = item_taste.iter().map(|v| scale * dot(u, v)).collect();
        let w: Vec<f64> = affinity.iter().zip(&popularity).map(|(a, p)| p * a.exp()).collect();
        for item in sample_distinct(&mut rng, &w, config.ratings_per_user)? {
            let noise: f64 = rng.sample(StandardNormal);
            let value = (config.rating_mean + config.rating_spread * affinity[item] + bonus[item] + config.rating_noise * noise).round().clamp(1.0, 5.0);
            entries.push(Rating { user, item, value });
        }
    }
    entries.sort_by_key(|r| (r.user, r.item));
    let users = IdMap::new((0..config.n_users).map(|u| format!("u{:04}", u + 1)).collect())?;
    let ratings = RatingMatrix::with_users(Arc::new(users), config.n_items, entries)?;
    Dataset::new(corpus, ratings)
}

/// Number of bit entities in [`binary_code`].
pub const CODE_BITS: usize = 6;

/// 64 items where entity `b` is present exactly when bit `b` of the item
/// index is set; item 0 has none. `n_raters` users rate every item 4, so no
/// item is favoured by the ratings.
pub fn binary_code(n_raters: usize) -> Result<Dataset> {
    let n_items = 1 << CODE_BITS;
    let items = (0..n_items)
        .map(|d| (format!("code{d:02}"), format!("Code {d:06b}"), format!("Item with bit pattern {d:06b}.")))
        .collect();
    let vocab = (0..CODE_BITS).map(|b| format!("bit {b}")).collect();
    let rows = (0..n_items)
        .map(|d| (0..CODE_BITS).filter(|b| d >> b & 1 == 1).collect())
        .collect();
    let corpus = ItemCorpus::from_parts(items, vocab, rows)?;
    let entries = (0..n_raters)
        .flat_map(|user| (0..n_items).map(move |item| Rating { user, item, value: 4.0 }))
        .collect();
    let ratings = RatingMatrix::from_triples(n_raters, n_items, entries)?;
    Dataset::new(corpus, ratings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_meets_the_size_floor() {
        let d = benchmark(&BenchmarkConfig::default()).unwrap();
        let s = d.summary();
        assert!(s.users >= 200 && s.items >= 100 && s.entities >= 300, "{s}");
        assert_eq!(s.ratings, 240 * 16);
        assert!(d.ratings.entries().iter().all(|r| (1.0..=5.0).contains(&r.value)));
        let mean = d.ratings.entries().iter().map(|r| r.value).sum::<f64>() / s.ratings as f64;
        assert!(mean > 3.5, "ratings skew high, mean {mean}");
        assert!((0..s.entities).all(|e| !d.corpus.items_with(e).is_empty()));
        let mut sigs: Vec<&[usize]> = (0..s.items).map(|i| d.corpus.entities_of(i)).collect();
        sigs.sort();
        sigs.dedup();
        assert_eq!(sigs.len(), s.items);
    }

    #[test]
    fn separable_ratings_are_flat() {
        let d = benchmark(&BenchmarkConfig::separable()).unwrap();
        assert!(d.ratings.entries().iter().all(|r| r.value == 4.0));
        let default = benchmark(&BenchmarkConfig::default()).unwrap();
        assert_eq!(d.corpus, default.corpus);
    }

    #[test]
    fn benchmark_is_seeded() {
        let c = BenchmarkConfig { n_users: 20, n_items: 30, n_entities: 40, ratings_per_user: 5, ..Default::default() };
        assert_eq!(benchmark(&c).unwrap(), benchmark(&c).unwrap());
        assert_ne!(benchmark(&c).unwrap(), benchmark(&BenchmarkConfig { seed: 8, ..c }).unwrap());
        assert!(benchmark(&BenchmarkConfig { n_entities: 1000, ..c }).is_err());
    }

    #[test]
    fn binary_code_bits() {
        let d = binary_code(2).unwrap();
        assert_eq!(d.corpus.n_items(), 64);
        assert_eq!(d.corpus.n_entities(), CODE_BITS);
        assert!(d.corpus.entities_of(0).is_empty());
        assert_eq!(d.corpus.entities_of(5), &[0, 2]);
        assert_eq!(d.corpus.entities_of(63).len(), CODE_BITS);
        assert_eq!(d.ratings.len(), 128);
    }
}
