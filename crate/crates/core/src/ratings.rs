//! Sparse user × item rating matrix.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QrecError, Result};

/// Bidirectional map between external string IDs and dense indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(QrecError::Invalid(format!("duplicate id `{id}`")));
            }
        }
        Ok(Self { ids, index })
    }

    /// IDs `{prefix}0 .. {prefix}{n-1}`.
    pub fn sequential(prefix: &str, n: usize) -> Self {
        Self::new((0..n).map(|i| format!("{prefix}{i}")).collect()).expect("sequential ids are unique")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// Observed ratings with per-user and per-item adjacency.
///
/// Item indices are corpus indices. Train/validation/test parts of one
/// dataset share dimensions and the user ID map.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    users: Arc<IdMap>,
    n_items: usize,
    entries: Vec<Rating>,
    by_user: Vec<Vec<(usize, f64)>>,
    by_item: Vec<Vec<(usize, f64)>>,
}

impl RatingMatrix {
    /// Index-only construction; users get IDs `u0, u1, ...`.
    pub fn from_triples(n_users: usize, n_items: usize, entries: Vec<Rating>) -> Result<Self> {
        Self::with_users(Arc::new(IdMap::sequential("u", n_users)), n_items, entries)
    }

    pub fn with_users(users: Arc<IdMap>, n_items: usize, entries: Vec<Rating>) -> Result<Self> {
        let n_users = users.len();
        let mut by_user = vec![Vec::new(); n_users];
        let mut by_item = vec![Vec::new(); n_items];
        for r in &entries {
            if r.user >= n_users {
                return Err(QrecError::OutOfRange {
                    what: "user",
                    index: r.user,
                    len: n_users,
                });
            }
            if r.item >= n_items {
                return Err(QrecError::OutOfRange {
                    what: "item",
                    index: r.item,
                    len: n_items,
                });
            }
            if !r.value.is_finite() {
                return Err(QrecError::Invalid(format!(
                    "non-finite rating for ({}, {})",
                    r.user, r.item
                )));
            }
            by_user[r.user].push((r.item, r.value));
            by_item[r.item].push((r.user, r.value));
        }
        for (u, row) in by_user.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(QrecError::Invalid(format!(
                    "duplicate rating for user {} item {}",
                    users.id(u).unwrap_or("?"),
                    w[0].0
                )));
            }
        }
        for col in &mut by_item {
            col.sort_by_key(|&(i, _)| i);
        }
        Ok(Self {
            users,
            n_items,
            entries,
            by_user,
            by_item,
        })
    }

    /// Same dimensions and user map, different entries.
    pub fn subset(&self, entries: Vec<Rating>) -> Result<Self> {
        Self::with_users(self.users.clone(), self.n_items, entries)
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn users(&self) -> &Arc<IdMap> {
        &self.users
    }

    /// `(item, rating)` pairs of a user, sorted by item.
    pub fn user_ratings(&self, user: usize) -> &[(usize, f64)] {
        &self.by_user[user]
    }

    /// `(user, rating)` pairs of an item, sorted by user.
    pub fn item_ratings(&self, item: usize) -> &[(usize, f64)] {
        &self.by_item[item]
    }

    pub fn density(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.entries.len() as f64 / cells
        }
    }
}

/// Reads a `user_id \t item_id \t rating` file. Items are resolved through
/// `item_index`; users are numbered in order of first appearance.
pub fn read_ratings_file(
    path: &Path,
    n_items: usize,
    item_index: impl Fn(&str) -> Option<usize>,
) -> Result<RatingMatrix> {
    let text = fs::read_to_string(path).map_err(|e| QrecError::io(path, e))?;
    let mut users = IdMap::default();
    let mut entries = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(QrecError::parse(path, line_no, "expected 3 tab-separated columns"));
        }
        let (user_id, item_id) = (cols[0].trim(), cols[1].trim());
        if user_id.is_empty() {
            return Err(QrecError::parse(path, line_no, "empty user id"));
        }
        let item = item_index(item_id).ok_or_else(|| {
            QrecError::parse(path, line_no, format!("unknown item id `{item_id}`"))
        })?;
        let value: f64 = cols[2]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| QrecError::parse(path, line_no, format!("bad rating `{}`", cols[2])))?;
        let user = users.get_or_insert(user_id);
        if let Some(prev) = seen.insert((user, item), line_no) {
            return Err(QrecError::parse(
                path,
                line_no,
                format!("duplicate rating for ({user_id}, {item_id}); first on line {prev}"),
            ));
        }
        entries.push(Rating { user, item, value });
    }
    if entries.is_empty() {
        return Err(QrecError::EmptyRatings);
    }
    RatingMatrix::with_users(Arc::new(users), n_items, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(user: usize, item: usize, value: f64) -> Rating {
        Rating { user, item, value }
    }

    #[test]
    fn adjacency_is_sorted() {
        let m = RatingMatrix::from_triples(2, 3, vec![r(0, 2, 1.0), r(0, 0, 2.0), r(1, 0, 3.0)])
            .unwrap();
        assert_eq!(m.user_ratings(0), &[(0, 2.0), (2, 1.0)]);
        assert_eq!(m.item_ratings(0), &[(0, 2.0), (1, 3.0)]);
        assert!(m.item_ratings(1).is_empty());
        assert!((m.density() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicates_and_ranges_rejected() {
        assert!(RatingMatrix::from_triples(1, 1, vec![r(0, 0, 1.0), r(0, 0, 2.0)]).is_err());
        assert!(RatingMatrix::from_triples(1, 1, vec![r(1, 0, 1.0)]).is_err());
        assert!(RatingMatrix::from_triples(1, 1, vec![r(0, 1, 1.0)]).is_err());
        assert!(RatingMatrix::from_triples(1, 1, vec![r(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn file_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ratings.tsv");
        let lookup = |id: &str| ["a", "b"].iter().position(|x| *x == id);

        fs::write(&path, "u1\ta\t5\nu2\tb\t4\nu1\ta\t3\n").unwrap();
        let err = read_ratings_file(&path, 2, lookup).unwrap_err();
        assert!(matches!(err, QrecError::Parse { line: 3, .. }), "{err}");

        fs::write(&path, "").unwrap();
        assert!(matches!(
            read_ratings_file(&path, 2, lookup),
            Err(QrecError::EmptyRatings)
        ));

        fs::write(&path, "u1\tzz\t5\n").unwrap();
        assert!(matches!(
            read_ratings_file(&path, 2, lookup),
            Err(QrecError::Parse { line: 1, .. })
        ));

        fs::write(&path, "u1\ta\t5\nu2\tb\n").unwrap();
        assert!(matches!(
            read_ratings_file(&path, 2, lookup),
            Err(QrecError::Parse { line: 2, .. })
        ));

        fs::write(&path, "u1\ta\t5\nu2\tb\t4.5\n").unwrap();
        let m = read_ratings_file(&path, 2, lookup).unwrap();
        assert_eq!(m.n_users(), 2);
        assert_eq!(m.users().get("u2"), Some(1));
        assert_eq!(m.user_ratings(1), &[(1, 4.5)]);
    }
}
