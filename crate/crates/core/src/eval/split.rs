use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QrecError, Result};
use crate::ratings::{Rating, RatingMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(QrecError::Invalid(format!(
                "split fractions must be positive and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }

    /// Part sizes for `n` triples by largest remainder; ties favour the
    /// earlier part.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let exact = [self.train, self.validation, self.test].map(|f| f * n as f64);
        let mut sizes = exact.map(|x| x.floor() as usize);
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        let short = n - sizes.iter().sum::<usize>();
        for &i in order.iter().take(short) {
            sizes[i] += 1;
        }
        sizes
    }
}

/// Three rating matrices over the same users and items.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: RatingMatrix,
    pub validation: RatingMatrix,
    pub test: RatingMatrix,
}

/// Random triple-level split.
pub fn split_dataset(ratings: &RatingMatrix, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if ratings.is_empty() {
        return Err(QrecError::EmptyRatings);
    }
    let mut entries = ratings.entries().to_vec();
    entries.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let [n_train, n_val, _] = spec.sizes(entries.len());
    let test = entries.split_off(n_train + n_val);
    let validation = entries.split_off(n_train);
    Ok(Split {
        train: ratings.subset(entries)?,
        validation: ratings.subset(validation)?,
        test: ratings.subset(test)?,
    })
}

/// Moves every rating of `n_users` randomly chosen users to the test part;
/// the validation part is empty.
pub fn hold_out_users(ratings: &RatingMatrix, n_users: usize, seed: u64) -> Result<Split> {
    let mut active: Vec<usize> = (0..ratings.n_users()).filter(|&u| !ratings.user_ratings(u).is_empty()).collect();
    if n_users == 0 || n_users >= active.len() {
        return Err(QrecError::Invalid(format!(
            "cannot hold out {n_users} of {} rating users",
            active.len()
        )));
    }
    active.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held: HashSet<usize> = active[..n_users].iter().copied().collect();
    let (test, train): (Vec<Rating>, Vec<Rating>) = ratings.entries().iter().partition(|r| held.contains(&r.user));
    Ok(Split {
        train: ratings.subset(train)?,
        validation: ratings.subset(Vec::new())?,
        test: ratings.subset(test)?,
    })
}

/// Test triples whose user (resp. item) never occurs in training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColdTuples {
    pub cold_users: Vec<Rating>,
    pub cold_items: Vec<Rating>,
}

pub fn extract_cold_tuples(train: &RatingMatrix, test: &RatingMatrix) -> ColdTuples {
    let mut out = ColdTuples::default();
    for r in test.entries() {
        if train.user_ratings(r.user).is_empty() {
            out.cold_users.push(*r);
        }
        if train.item_ratings(r.item).is_empty() {
            out.cold_items.push(*r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratings(n: usize) -> RatingMatrix {
        let entries = (0..n).map(|i| Rating { user: i % 7, item: i / 7, value: 3.0 }).collect();
        RatingMatrix::from_triples(7, n.div_ceil(7), entries).unwrap()
    }

    #[test]
    fn largest_remainder_sizes() {
        let spec = SplitSpec::default();
        assert_eq!(spec.sizes(10), [8, 1, 1]);
        assert_eq!(spec.sizes(7), [5, 1, 1]);
        assert_eq!(spec.sizes(3), [3, 0, 0]);
        assert_eq!(SplitSpec { train: 0.5, validation: 0.25, test: 0.25, seed: 0 }.sizes(5), [3, 1, 1]);
        assert!(SplitSpec { train: 0.9, ..spec }.validate().is_err());
        assert!(SplitSpec { validation: 0.0, test: 0.2, ..spec }.validate().is_err());
    }

    #[test]
    fn split_partitions_triples() {
        let r = ratings(10);
        let s = split_dataset(&r, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
        let mut all: Vec<(usize, usize)> = [&s.train, &s.validation, &s.test]
            .iter()
            .flat_map(|m| m.entries().iter().map(|e| (e.user, e.item)))
            .collect();
        all.sort_unstable();
        let mut want: Vec<(usize, usize)> = r.entries().iter().map(|e| (e.user, e.item)).collect();
        want.sort_unstable();
        assert_eq!(all, want);
    }

    #[test]
    fn split_is_seeded() {
        let r = ratings(100);
        let spec = SplitSpec::default();
        assert_eq!(split_dataset(&r, &spec).unwrap(), split_dataset(&r, &spec).unwrap());
        assert_ne!(
            split_dataset(&r, &spec).unwrap().test,
            split_dataset(&r, &SplitSpec { seed: 43, ..spec }).unwrap().test
        );
        assert!(split_dataset(&RatingMatrix::from_triples(1, 1, vec![]).unwrap(), &spec).is_err());
    }

    #[test]
    fn cold_tuples() {
        let e = |user, item| Rating { user, item, value: 1.0 };
        let all = RatingMatrix::from_triples(3, 3, vec![e(0, 0), e(1, 1), e(2, 0), e(0, 2), e(1, 0)]).unwrap();
        let train = all.subset(vec![e(0, 0), e(1, 1)]).unwrap();
        let test = all.subset(vec![e(2, 0), e(0, 2), e(1, 0)]).unwrap();
        let cold = extract_cold_tuples(&train, &test);
        assert_eq!(cold.cold_users, vec![e(2, 0)]);
        assert_eq!(cold.cold_items, vec![e(0, 2)]);
    }

    #[test]
    fn held_out_users_are_exactly_cold() {
        let r = ratings(70);
        let s = hold_out_users(&r, 3, 1).unwrap();
        let cold = extract_cold_tuples(&s.train, &s.test);
        assert_eq!(cold.cold_users.len(), s.test.len());
        let users: HashSet<usize> = s.test.entries().iter().map(|e| e.user).collect();
        assert_eq!(users.len(), 3);
        assert_eq!(s.train.len() + s.test.len(), 70);
        assert!(hold_out_users(&r, 7, 1).is_err());
    }
}
