//! Item documents, their entities, and the binary item × entity incidence
//! structure questions are asked about.

mod extract;
mod pool;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QrecError, Result};

pub use extract::{extract_corpus_entities, heuristic_entities, STOP_WORDS};
pub use pool::QuestionPool;

/// Entities scoring below this are dropped at ingestion.
pub const DEFAULT_ENTITY_THRESHOLD: f64 = 0.1;

/// Renders the yes/no question asked about an entity.
pub fn render_question(entity: &str) -> String {
    format!("Are you seeking for a [{entity}] related item?")
}

/// Case-folded form used for every entity comparison.
pub fn fold_entity(raw: &str) -> String {
    raw.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    pub index: usize,
    pub title: String,
    pub document: String,
}

/// Items plus the entities found in their documents.
///
/// Immutable once built; share it behind an `Arc` across sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemCorpus {
    items: Vec<ItemRecord>,
    entity_vocab: Vec<String>,
    item_entities: Vec<Vec<usize>>,
    entity_items: Vec<Vec<usize>>,
    words_per_row: usize,
    bits: Vec<u64>,
    item_lookup: HashMap<String, usize>,
    entity_lookup: HashMap<String, usize>,
}

/// Serialized form of a corpus (ingest artifact).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusFile {
    pub items: Vec<ItemRecord>,
    pub entity_vocab: Vec<String>,
    pub item_entities: Vec<Vec<usize>>,
}

impl ItemCorpus {
    /// Builds a corpus from items and, per item, the entity indices it contains.
    ///
    /// `items` are `(item_id, title, document)`; the vocabulary order is kept
    /// as given, so entity indices are stable.
    pub fn from_parts(
        items: Vec<(String, String, String)>,
        entity_vocab: Vec<String>,
        item_entities: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(QrecError::EmptyCorpus("no items".into()));
        }
        if entity_vocab.is_empty() {
            return Err(QrecError::EmptyCorpus("no entities".into()));
        }
        if item_entities.len() != items.len() {
            return Err(QrecError::Dimension(format!(
                "{} items but {} entity rows",
                items.len(),
                item_entities.len()
            )));
        }

        let mut entity_lookup = HashMap::with_capacity(entity_vocab.len());
        let mut vocab = Vec::with_capacity(entity_vocab.len());
        for (e, raw) in entity_vocab.into_iter().enumerate() {
            let folded = fold_entity(&raw);
            if folded.is_empty() {
                return Err(QrecError::Invalid(format!("entity {e} is blank")));
            }
            if entity_lookup.insert(folded.clone(), e).is_some() {
                return Err(QrecError::Invalid(format!(
                    "duplicate entity `{folded}` after case-folding"
                )));
            }
            vocab.push(folded);
        }

        let mut item_lookup = HashMap::with_capacity(items.len());
        let mut records = Vec::with_capacity(items.len());
        for (index, (item_id, title, document)) in items.into_iter().enumerate() {
            if item_lookup.insert(item_id.clone(), index).is_some() {
                return Err(QrecError::Invalid(format!("duplicate item id `{item_id}`")));
            }
            records.push(ItemRecord {
                item_id,
                index,
                title,
                document,
            });
        }

        let n_entities = vocab.len();
        let words_per_row = n_entities.div_ceil(64);
        let mut bits = vec![0u64; words_per_row * records.len()];
        let mut entity_items = vec![Vec::new(); n_entities];
        let mut rows = Vec::with_capacity(records.len());
        for (d, mut row) in item_entities.into_iter().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &e in &row {
                if e >= n_entities {
                    return Err(QrecError::OutOfRange {
                        what: "entity",
                        index: e,
                        len: n_entities,
                    });
                }
                bits[d * words_per_row + e / 64] |= 1 << (e % 64);
                entity_items[e].push(d);
            }
            rows.push(row);
        }

        Ok(Self {
            items: records,
            entity_vocab: vocab,
            item_entities: rows,
            entity_items,
            words_per_row,
            bits,
            item_lookup,
            entity_lookup,
        })
    }

    /// Builds a corpus from scored `(item_id, entity, score)` annotations,
    /// keeping annotations with `score >= threshold`.
    ///
    /// The vocabulary is the sorted set of accepted (case-folded) entities.
    pub fn from_annotations(
        items: Vec<(String, String, String)>,
        annotations: impl IntoIterator<Item = (String, String, f64)>,
        threshold: f64,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(QrecError::EmptyCorpus("no items".into()));
        }
        let index: HashMap<&str, usize> = items
            .iter()
            .enumerate()
            .map(|(i, (id, _, _))| (id.as_str(), i))
            .collect();

        let mut accepted: Vec<Vec<String>> = vec![Vec::new(); items.len()];
        let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
        for (item_id, entity, score) in annotations {
            let d = *index
                .get(item_id.as_str())
                .ok_or_else(|| QrecError::UnknownItem(item_id.clone()))?;
            if score < threshold {
                continue;
            }
            let folded = fold_entity(&entity);
            if folded.is_empty() {
                continue;
            }
            vocab.entry(folded.clone()).or_insert(0);
            accepted[d].push(folded);
        }
        if vocab.is_empty() {
            return Err(QrecError::EmptyCorpus(format!(
                "no entity scored at or above {threshold}"
            )));
        }
        for (i, slot) in vocab.values_mut().enumerate() {
            *slot = i;
        }
        let rows = accepted
            .into_iter()
            .map(|names| names.iter().map(|n| vocab[n]).collect())
            .collect();
        Self::from_parts(items, vocab.into_keys().collect(), rows)
    }

    /// Reads the tab-separated items and entities files.
    pub fn ingest(items_file: &Path, entities_file: &Path, threshold: f64) -> Result<Self> {
        let items = read_items_file(items_file)?;
        let annotations = read_entities_file(entities_file)?;
        let known: std::collections::HashSet<&str> =
            items.iter().map(|(i, _, _)| i.as_str()).collect();
        if let Some((id, _, _, line)) = annotations
            .iter()
            .find(|(id, _, _, _)| !known.contains(id.as_str()))
        {
            return Err(QrecError::parse(
                entities_file,
                *line,
                format!("unknown item id `{id}`"),
            ));
        }
        Self::from_annotations(
            items,
            annotations.into_iter().map(|(i, e, s, _)| (i, e, s)),
            threshold,
        )
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_entities(&self) -> usize {
        self.entity_vocab.len()
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn item(&self, index: usize) -> Option<&ItemRecord> {
        self.items.get(index)
    }

    pub fn item_index(&self, item_id: &str) -> Option<usize> {
        self.item_lookup.get(item_id).copied()
    }

    pub fn entity_vocab(&self) -> &[String] {
        &self.entity_vocab
    }

    pub fn entity_name(&self, entity: usize) -> Option<&str> {
        self.entity_vocab.get(entity).map(String::as_str)
    }

    pub fn entity_index(&self, entity: &str) -> Option<usize> {
        self.entity_lookup.get(&fold_entity(entity)).copied()
    }

    /// Sorted entity indices of item `d`.
    pub fn entities_of(&self, d: usize) -> &[usize] {
        &self.item_entities[d]
    }

    /// Sorted item indices containing entity `e`.
    pub fn items_with(&self, e: usize) -> &[usize] {
        &self.entity_items[e]
    }

    /// Whether item `d`'s documents contain entity `e`.
    #[inline]
    pub fn contains(&self, d: usize, e: usize) -> bool {
        self.bits[d * self.words_per_row + e / 64] >> (e % 64) & 1 == 1
    }

    /// One-hot column of entity `e` over all items.
    pub fn entity_column(&self, e: usize) -> Result<Vec<u8>> {
        if e >= self.n_entities() {
            return Err(QrecError::OutOfRange {
                what: "entity",
                index: e,
                len: self.n_entities(),
            });
        }
        Ok((0..self.n_items())
            .map(|d| u8::from(self.contains(d, e)))
            .collect())
    }

    /// Total number of (item, entity) incidences.
    pub fn n_incidences(&self) -> usize {
        self.item_entities.iter().map(Vec::len).sum()
    }

    /// Keeps only the listed items (in the given order) and the entities
    /// that still occur in them.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut remap = vec![usize::MAX; self.n_entities()];
        let mut vocab = Vec::new();
        for &d in keep {
            for &e in self.entities_of(d) {
                if remap[e] == usize::MAX {
                    remap[e] = 0;
                }
            }
        }
        for (e, slot) in remap.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = vocab.len();
                vocab.push(self.entity_vocab[e].clone());
            }
        }
        let items = keep
            .iter()
            .map(|&d| {
                let r = &self.items[d];
                (r.item_id.clone(), r.title.clone(), r.document.clone())
            })
            .collect();
        let rows = keep
            .iter()
            .map(|&d| self.entities_of(d).iter().map(|&e| remap[e]).collect())
            .collect();
        Self::from_parts(items, vocab, rows)
    }

    /// Stable content hash over ids, vocabulary, and incidence.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.items {
            h.update(r.item_id.as_bytes());
            h.update([0u8]);
        }
        h.update([1u8]);
        for e in &self.entity_vocab {
            h.update(e.as_bytes());
            h.update([0u8]);
        }
        h.update([1u8]);
        for row in &self.item_entities {
            for &e in row {
                h.update((e as u64).to_le_bytes());
            }
            h.update(u64::MAX.to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }

    pub fn to_file(&self) -> CorpusFile {
        CorpusFile {
            items: self.items.clone(),
            entity_vocab: self.entity_vocab.clone(),
            item_entities: self.item_entities.clone(),
        }
    }

    pub fn from_file(file: CorpusFile) -> Result<Self> {
        let items = file
            .items
            .into_iter()
            .map(|r| (r.item_id, r.title, r.document))
            .collect();
        Self::from_parts(items, file.entity_vocab, file.item_entities)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| QrecError::io(path, e))
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Escapes a field for the tab-separated items file.
pub fn escape_field(field: &str) -> String {
    field
        .replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\t', "\\t")
        .replace('\r', "\\r")
}

/// Parses `item_id \t title \t document` lines. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_items_file(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = read_to_string(path)?;
    let mut seen = HashMap::new();
    let mut items = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (Some(id), Some(title), Some(doc)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(QrecError::parse(path, line_no, "expected 3 tab-separated columns"));
        };
        let id = id.trim();
        if id.is_empty() {
            return Err(QrecError::parse(path, line_no, "empty item id"));
        }
        if let Some(prev) = seen.insert(id.to_string(), line_no) {
            return Err(QrecError::parse(
                path,
                line_no,
                format!("duplicate item id `{id}` (first seen on line {prev})"),
            ));
        }
        items.push((id.to_string(), unescape(title), unescape(doc)));
    }
    if items.is_empty() {
        return Err(QrecError::EmptyCorpus(format!(
            "{} contains no items",
            path.display()
        )));
    }
    Ok(items)
}

/// Parses `item_id \t entity \t score` lines, returning the line number too.
pub fn read_entities_file(path: &Path) -> Result<Vec<(String, String, f64, usize)>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(QrecError::parse(path, line_no, "expected 3 tab-separated columns"));
        }
        let score: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| QrecError::parse(path, line_no, format!("bad score `{}`", cols[2])))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(QrecError::parse(
                path,
                line_no,
                format!("score {score} outside [0, 1]"),
            ));
        }
        out.push((cols[0].trim().to_string(), cols[1].to_string(), score, line_no));
    }
    Ok(out)
}
