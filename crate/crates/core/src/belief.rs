//! Dirichlet belief over the user's target and generalized binary search.
//!
//! The belief prior to question `l` is `Dir(α + Y)`; its mean is the
//! preference vector `π*`. The next entity is the one whose yes/no split of
//! the candidates' preference mass is closest to even:
//! `argmin_e |Σ_{d∈C} (2·1{e ∈ d} − 1) π*(d)|`.

use crate::corpus::{ItemCorpus, QuestionPool};
use crate::error::{QrecError, Result};
use crate::session::Answer;

/// Dirichlet prior `α` from a ranking: the item at zero-based position `r`
/// gets `1 / (r + 1)`.
pub fn init_alpha(ranking: &[usize]) -> Result<Vec<f64>> {
    let m = ranking.len();
    let mut alpha = vec![0.0; m];
    for (position, &item) in ranking.iter().enumerate() {
        if item >= m || alpha[item] != 0.0 {
            return Err(QrecError::Invalid(format!(
                "ranking is not a permutation of 0..{m}"
            )));
        }
        alpha[item] = 1.0 / (position as f64 + 1.0);
    }
    Ok(alpha)
}

/// Flat prior `α = c·1`.
pub fn uniform_alpha(n_items: usize, c: f64) -> Vec<f64> {
    vec![c; n_items]
}

/// `α` plus the accumulated affinity counts `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    alpha: Vec<f64>,
    affinity: Vec<u32>,
}

impl BeliefState {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(QrecError::Invalid("belief over zero items".into()));
        }
        if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(QrecError::Invalid("Dirichlet parameters must be positive".into()));
        }
        let affinity = vec![0; alpha.len()];
        Ok(Self { alpha, affinity })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn affinity(&self) -> &[u32] {
        &self.affinity
    }

    /// Adds one answer's indicator vector to `Y`.
    pub fn record(&mut self, indicator: &[bool]) {
        for (y, &hit) in self.affinity.iter_mut().zip(indicator) {
            *y += u32::from(hit);
        }
    }

    /// Mean of `Dir(α + Y)`.
    pub fn preference_mean(&self) -> Vec<f64> {
        let weights: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.affinity)
            .map(|(a, &y)| a + f64::from(y))
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

/// Items still consistent with every answer, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    members: Vec<usize>,
}

impl CandidateSet {
    pub fn all(n_items: usize) -> Self {
        Self {
            members: (0..n_items).collect(),
        }
    }

    pub fn from_members(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.members.binary_search(&item).is_ok()
    }
}

/// The GBS split imbalance of `entity` over the candidates.
///
/// Summed over candidates in ascending order so an entity and its
/// complement over `C` give exactly opposite signed sums.
pub fn split_imbalance(pi: &[f64], candidates: &CandidateSet, corpus: &ItemCorpus, entity: usize) -> f64 {
    candidates
        .members()
        .iter()
        .map(|&d| if corpus.contains(d, entity) { pi[d] } else { -pi[d] })
        .sum::<f64>()
        .abs()
}

/// Picks the available entity with the smallest split imbalance; ties go to
/// the smallest entity index. `π*` is used as given (not renormalised over `C`).
pub fn select_question(
    pi: &[f64],
    candidates: &CandidateSet,
    pool: &QuestionPool,
    corpus: &ItemCorpus,
) -> Result<usize> {
    if pi.len() != corpus.n_items() {
        return Err(QrecError::Dimension(format!(
            "preference vector has {} entries for {} items",
            pi.len(),
            corpus.n_items()
        )));
    }
    if candidates.is_empty() {
        return Err(QrecError::Invalid("empty candidate set".into()));
    }

    // Entities touching no candidate all share the same objective; compute
    // it once and let them compete only through their index.
    let mut touches = vec![false; corpus.n_entities()];
    for &d in candidates.members() {
        for &e in corpus.entities_of(d) {
            touches[e] = true;
        }
    }
    let untouched = candidates.members().iter().map(|&d| -pi[d]).sum::<f64>().abs();

    let mut best: Option<(usize, f64)> = None;
    for e in pool.iter() {
        let objective = if touches[e] {
            split_imbalance(pi, candidates, corpus, e)
        } else {
            untouched
        };
        match best {
            Some((_, b)) if objective >= b => {}
            _ => best = Some((e, objective)),
        }
        if objective == 0.0 {
            break;
        }
    }
    best.map(|(e, _)| e).ok_or(QrecError::NoQuestionsLeft)
}

/// Outcome of filtering the candidates by one answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub candidates: CandidateSet,
    /// Set when the answer would have emptied the set (the old set is kept).
    pub contradiction: bool,
}

/// Keeps the candidates consistent with `answer` about `entity`. "Not sure"
/// keeps everything; an answer leaving nothing keeps the previous set and
/// flags a contradiction.
pub fn prune_candidates(candidates: &CandidateSet, entity: usize, answer: Answer, corpus: &ItemCorpus) -> Pruned {
    let want = match answer {
        Answer::Yes => true,
        Answer::No => false,
        Answer::NotSure => {
            return Pruned {
                candidates: candidates.clone(),
                contradiction: false,
            }
        }
    };
    let members: Vec<usize> = candidates
        .members()
        .iter()
        .copied()
        .filter(|&d| corpus.contains(d, entity) == want)
        .collect();
    if members.is_empty() {
        Pruned {
            candidates: candidates.clone(),
            contradiction: true,
        }
    } else {
        Pruned {
            candidates: CandidateSet { members },
            contradiction: false,
        }
    }
}
