//! A corpus together with the ratings over its items.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{escape_field, CorpusFile, ItemCorpus, DEFAULT_ENTITY_THRESHOLD};
use crate::error::{QrecError, Result};
use crate::ratings::{read_ratings_file, IdMap, Rating, RatingMatrix};

const ARTIFACT_FORMAT: &str = "qrec-dataset";
const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub entity_threshold: f64,
    /// Drop users and items with fewer ratings than this (0 disables).
    pub min_transactions: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            entity_threshold: DEFAULT_ENTITY_THRESHOLD,
            min_transactions: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub corpus: ItemCorpus,
    pub ratings: RatingMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub density: f64,
    pub entities: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} users / {} items / {} ratings / {:.2}% density / {} entities",
            self.users,
            self.items,
            self.ratings,
            self.density * 100.0,
            self.entities
        )
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    corpus: CorpusFile,
    users: Vec<String>,
    ratings: Vec<Rating>,
}

impl Dataset {
    pub fn new(corpus: ItemCorpus, ratings: RatingMatrix) -> Result<Self> {
        if corpus.n_items() != ratings.n_items() {
            return Err(QrecError::Dimension(format!(
                "corpus has {} items but ratings cover {}",
                corpus.n_items(),
                ratings.n_items()
            )));
        }
        Ok(Self { corpus, ratings })
    }

    /// Reads the three tab-separated input files and applies the
    /// minimum-transaction filter.
    pub fn ingest(items_file: &Path, entities_file: &Path, ratings_file: &Path, options: IngestOptions) -> Result<Self> {
        let corpus = ItemCorpus::ingest(items_file, entities_file, options.entity_threshold)?;
        let ratings = read_ratings_file(ratings_file, corpus.n_items(), |id| corpus.item_index(id))?;
        Self::new(corpus, ratings)?.filter_min_transactions(options.min_transactions)
    }

    /// Repeatedly drops users and items with fewer than `min` ratings until
    /// every survivor has at least `min`. Items are removed from the corpus
    /// too; users and items are renumbered in their original order.
    pub fn filter_min_transactions(&self, min: usize) -> Result<Self> {
        if min <= 1 {
            return Ok(self.clone());
        }
        let mut alive: Vec<Rating> = self.ratings.entries().to_vec();
        loop {
            let mut per_user: HashMap<usize, usize> = HashMap::new();
            let mut per_item: HashMap<usize, usize> = HashMap::new();
            for r in &alive {
                *per_user.entry(r.user).or_default() += 1;
                *per_item.entry(r.item).or_default() += 1;
            }
            let before = alive.len();
            alive.retain(|r| per_user[&r.user] >= min && per_item[&r.item] >= min);
            if alive.len() == before {
                break;
            }
        }
        if alive.is_empty() {
            return Err(QrecError::EmptyRatings);
        }

        let mut keep_items: Vec<usize> = alive.iter().map(|r| r.item).collect();
        keep_items.sort_unstable();
        keep_items.dedup();
        let mut keep_users: Vec<usize> = alive.iter().map(|r| r.user).collect();
        keep_users.sort_unstable();
        keep_users.dedup();

        let item_map: HashMap<usize, usize> = keep_items.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let user_map: HashMap<usize, usize> = keep_users.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let users = IdMap::new(
            keep_users
                .iter()
                .map(|&u| self.ratings.users().id(u).unwrap_or_default().to_string())
                .collect(),
        )?;
        let corpus = self.corpus.restrict(&keep_items)?;
        let entries = alive
            .into_iter()
            .map(|r| Rating {
                user: user_map[&r.user],
                item: item_map[&r.item],
                value: r.value,
            })
            .collect();
        let ratings = RatingMatrix::with_users(Arc::new(users), keep_items.len(), entries)?;
        Self::new(corpus, ratings)
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            users: self.ratings.n_users(),
            items: self.corpus.n_items(),
            ratings: self.ratings.len(),
            density: self.ratings.density(),
            entities: self.corpus.n_entities(),
        }
    }

    /// Writes the validated, indexed dataset as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DatasetFile {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            corpus: self.corpus.to_file(),
            users: self.ratings.users().ids().to_vec(),
            ratings: self.ratings.entries().to_vec(),
        };
        let json = serde_json::to_vec(&file).map_err(|e| QrecError::Invalid(e.to_string()))?;
        fs::write(path, json).map_err(|e| QrecError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| QrecError::io(path, e))?;
        let file: DatasetFile = serde_json::from_slice(&bytes)
            .map_err(|e| QrecError::parse(path, e.line(), e.to_string()))?;
        if file.format != ARTIFACT_FORMAT || file.version != ARTIFACT_VERSION {
            return Err(QrecError::parse(
                path,
                1,
                format!("unsupported dataset format {} v{}", file.format, file.version),
            ));
        }
        let corpus = ItemCorpus::from_file(file.corpus)?;
        let ratings = RatingMatrix::with_users(Arc::new(IdMap::new(file.users)?), corpus.n_items(), file.ratings)?;
        Self::new(corpus, ratings)
    }

    /// Writes `items.tsv`, `entities.tsv` and `ratings.tsv` into `dir`.
    pub fn write_tsv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| QrecError::io(dir, e))?;
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            fs::File::create(&path)
                .and_then(|mut f| f.write_all(body.as_bytes()))
                .map_err(|e| QrecError::io(&path, e))
        };
        let mut items = String::new();
        let mut entities = String::new();
        for r in self.corpus.items() {
            items.push_str(&format!(
                "{}\t{}\t{}\n",
                r.item_id,
                escape_field(&r.title),
                escape_field(&r.document)
            ));
            for &e in self.corpus.entities_of(r.index) {
                entities.push_str(&format!("{}\t{}\t1\n", r.item_id, self.corpus.entity_vocab()[e]));
            }
        }
        let mut ratings = String::new();
        for r in self.ratings.entries() {
            ratings.push_str(&format!(
                "{}\t{}\t{}\n",
                self.ratings.users().id(r.user).unwrap_or_default(),
                self.corpus.items()[r.item].item_id,
                r.value
            ));
        }
        write("items.tsv", items)?;
        write("entities.tsv", entities)?;
        write("ratings.tsv", ratings)
    }
}
