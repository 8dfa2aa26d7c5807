//! The interactive loop: ask, incorporate the answer, refine the factors,
//! re-rank.
//!
//! A [`Session`] owns copies of everything it mutates (its user factor, the
//! item factors, the item Gram cache, belief, candidates and pool), so any
//! number of sessions can run over one shared [`Recommender`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{
    init_alpha, prune_candidates, select_question, uniform_alpha, BeliefState, CandidateSet,
};
use crate::corpus::{render_question, ItemCorpus, QuestionPool};
use crate::error::{QrecError, Result};
use crate::factorization::{
    item_scores, rank_by_scores, solve_item_factors, solve_user_factor, Factors, HyperParams,
    ItemGrams, LatentModel,
};
use crate::ratings::RatingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    NotSure,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::NotSure => "not_sure",
        })
    }
}

impl FromStr for Answer {
    type Err = QrecError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Answer::Yes),
            "no" | "n" => Ok(Answer::No),
            "not_sure" | "not sure" | "notsure" | "unsure" => Ok(Answer::NotSure),
            other => Err(QrecError::Invalid(format!("unknown answer `{other}`"))),
        }
    }
}

/// How the next entity is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionPolicy {
    /// Generalized binary search on the belief mean.
    Gbs,
    /// Uniformly random over the remaining pool.
    Random { seed: u64 },
}

/// How the Dirichlet prior is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    /// `α = 1/(rank+1)` from the factor ranking.
    Ranked,
    /// `α = 1` for every item.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionOptions {
    pub policy: QuestionPolicy,
    pub prior: Prior,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            policy: QuestionPolicy::Gbs,
            prior: Prior::Ranked,
        }
    }
}

/// Who the session is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionUser {
    /// A user row of the rating matrix.
    Known(usize),
    /// A user the system has never seen.
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Stopped,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub entity: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub item: usize,
    pub score: f64,
}

/// The trained model, corpus and training ratings, shared by all sessions.
#[derive(Debug)]
pub struct Recommender {
    model: LatentModel,
    corpus: Arc<ItemCorpus>,
    ratings: Arc<RatingMatrix>,
    grams: ItemGrams,
}

impl Recommender {
    pub fn new(model: LatentModel, corpus: Arc<ItemCorpus>, ratings: Arc<RatingMatrix>) -> Result<Arc<Self>> {
        model.check()?;
        if model.n_items() != corpus.n_items() || ratings.n_items() != corpus.n_items() {
            return Err(QrecError::Dimension(format!(
                "corpus has {} items, model {}, ratings {}",
                corpus.n_items(),
                model.n_items(),
                ratings.n_items()
            )));
        }
        if model.n_users() != ratings.n_users() {
            return Err(QrecError::Dimension(format!(
                "model has {} users, ratings {}",
                model.n_users(),
                ratings.n_users()
            )));
        }
        let grams = ItemGrams::from_model(&model, &ratings);
        Ok(Arc::new(Self {
            model,
            corpus,
            ratings,
            grams,
        }))
    }

    pub fn model(&self) -> &LatentModel {
        &self.model
    }

    pub fn corpus(&self) -> &Arc<ItemCorpus> {
        &self.corpus
    }

    pub fn ratings(&self) -> &Arc<RatingMatrix> {
        &self.ratings
    }

    /// Opens a session: computes the initial ranking and prior, and copies
    /// the factors the session will refine.
    pub fn start_session(self: &Arc<Self>, user: SessionUser, hp: &HyperParams, options: SessionOptions) -> Result<Session> {
        hp.validate()?;
        if !(hp.lambda_u > 0.0 && hp.lambda_v > 0.0) {
            return Err(QrecError::Invalid("online updates need lambda_u, lambda_v > 0".into()));
        }
        if hp.k != self.model.k() {
            return Err(QrecError::Dimension(format!(
                "session K = {} but model K = {}",
                hp.k,
                self.model.k()
            )));
        }
        let k = self.model.k();
        let user_factor = match user {
            SessionUser::Known(i) if i >= self.model.n_users() => {
                return Err(QrecError::OutOfRange {
                    what: "user",
                    index: i,
                    len: self.model.n_users(),
                })
            }
            SessionUser::Known(i) if !self.ratings.user_ratings(i).is_empty() => self.model.users.row(i).to_vec(),
            _ => vec![0.0; k],
        };
        let m = self.corpus.n_items();
        let items = self.model.items.clone();
        let ranking = rank_by_scores(&item_scores(self.model.head(hp.score_head), &user_factor, &items));
        let alpha = match options.prior {
            Prior::Ranked => init_alpha(&ranking)?,
            Prior::Uniform => uniform_alpha(m, 1.0),
        };
        let rng = match options.policy {
            QuestionPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            QuestionPolicy::Gbs => None,
        };
        Ok(Session {
            rec: Arc::clone(self),
            user,
            hp: *hp,
            options,
            user_factor,
            items,
            grams: self.grams.clone(),
            belief: BeliefState::new(alpha)?,
            candidates: CandidateSet::all(m),
            pool: QuestionPool::full(self.corpus.n_entities()),
            asked: Vec::new(),
            pending: None,
            status: SessionStatus::Active,
            contradictions: 0,
            rng,
        })
    }
}

/// One user's elicitation episode.
#[derive(Debug, Clone)]
pub struct Session {
    rec: Arc<Recommender>,
    user: SessionUser,
    hp: HyperParams,
    options: SessionOptions,
    user_factor: Vec<f64>,
    items: Factors,
    grams: ItemGrams,
    belief: BeliefState,
    candidates: CandidateSet,
    pool: QuestionPool,
    asked: Vec<(usize, Answer)>,
    pending: Option<usize>,
    status: SessionStatus,
    contradictions: usize,
    rng: Option<ChaCha8Rng>,
}

impl Session {
    pub fn user(&self) -> SessionUser {
        self.user
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Questions answered so far (`l`).
    pub fn questions_asked(&self) -> usize {
        self.asked.len()
    }

    pub fn asked(&self) -> &[(usize, Answer)] {
        &self.asked
    }

    pub fn pending(&self) -> Option<usize> {
        self.pending
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn affinity(&self) -> &[u32] {
        self.belief.affinity()
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn pool(&self) -> &QuestionPool {
        &self.pool
    }

    /// Answers that would have emptied the candidate set.
    pub fn contradictions(&self) -> usize {
        self.contradictions
    }

    pub fn user_factor(&self) -> &[f64] {
        &self.user_factor
    }

    pub fn item_factors(&self) -> &Factors {
        &self.items
    }

    pub fn item_grams(&self) -> &ItemGrams {
        &self.grams
    }

    pub fn recommender(&self) -> &Arc<Recommender> {
        &self.rec
    }

    pub fn corpus(&self) -> &ItemCorpus {
        &self.rec.corpus
    }

    /// Issues the next question, or `None` once one candidate is left or
    /// the pool is exhausted. Repeats the pending question if unanswered.
    pub fn next_question(&mut self) -> Result<Option<Question>> {
        self.issue(false)
    }

    /// Like [`Session::next_question`] but ignores the single-candidate stop.
    pub fn force_next_question(&mut self) -> Result<Option<Question>> {
        self.issue(true)
    }

    fn issue(&mut self, force: bool) -> Result<Option<Question>> {
        if self.status != SessionStatus::Active {
            return Err(QrecError::Protocol(format!("session is {:?}", self.status)));
        }
        if let Some(entity) = self.pending {
            return Ok(Some(self.question(entity)));
        }
        if !force && self.candidates.len() <= 1 {
            return Ok(None);
        }
        if self.pool.is_empty() {
            self.status = SessionStatus::Exhausted;
            return Ok(None);
        }
        let entity = match self.rng.as_mut() {
            Some(rng) => {
                let nth = rng.random_range(0..self.pool.len());
                self.pool.iter().nth(nth).expect("index below pool length")
            }
            None => select_question(
                &self.belief.preference_mean(),
                &self.candidates,
                &self.pool,
                &self.rec.corpus,
            )?,
        };
        self.pool.remove(entity)?;
        self.pending = Some(entity);
        Ok(Some(self.question(entity)))
    }

    fn question(&self, entity: usize) -> Question {
        Question {
            entity,
            text: render_question(self.rec.corpus.entity_name(entity).unwrap_or_default()),
        }
    }

    /// Incorporates the answer to the pending question.
    ///
    /// Yes/no: adds the indicator `1{e ∈ d} == answer` to `Y`, prunes the
    /// candidates, and runs the configured number of ALS alternations.
    /// Not sure: only counts the question.
    pub fn apply_answer(&mut self, entity: usize, answer: Answer) -> Result<()> {
        if self.status != SessionStatus::Active {
            return Err(QrecError::Protocol(format!("session is {:?}", self.status)));
        }
        if self.pending != Some(entity) {
            return Err(QrecError::Protocol(match self.pending {
                Some(p) => format!("answer for entity {entity}, but entity {p} was asked"),
                None => format!("answer for entity {entity}, but no question is pending"),
            }));
        }
        self.pending = None;
        self.asked.push((entity, answer));

        let want = match answer {
            Answer::Yes => true,
            Answer::No => false,
            Answer::NotSure => return Ok(()),
        };
        let corpus = Arc::clone(&self.rec.corpus);
        let indicator: Vec<bool> = (0..corpus.n_items())
            .map(|d| corpus.contains(d, entity) == want)
            .collect();
        self.belief.record(&indicator);

        let pruned = prune_candidates(&self.candidates, entity, answer, &corpus);
        if pruned.contradiction {
            self.contradictions += 1;
        }
        self.candidates = pruned.candidates;

        self.refine_factors()
    }

    fn refine_factors(&mut self) -> Result<()> {
        let affinity: Vec<f64> = self.belief.affinity().iter().map(|&y| f64::from(y)).collect();
        let rec = Arc::clone(&self.rec);
        let (p, q) = (&rec.model.p, &rec.model.q);
        let user_ratings = match self.user {
            SessionUser::Known(i) => rec.ratings.user_ratings(i),
            SessionUser::Cold => &[],
        };
        for _ in 0..self.hp.als_sweeps {
            let new_u = solve_user_factor(
                &self.items,
                p,
                q,
                user_ratings,
                &affinity,
                self.hp.gamma,
                self.hp.lambda_u,
            )?;
            self.grams.replace_user(user_ratings, p, &self.user_factor, &new_u);
            self.user_factor = new_u;
            self.items = solve_item_factors(
                &self.grams,
                &self.user_factor,
                q,
                &affinity,
                self.hp.gamma,
                self.hp.lambda_v,
            )?;
        }
        Ok(())
    }

    pub fn stop(&mut self) {
        self.status = SessionStatus::Stopped;
        self.pending = None;
    }

    /// `p·(u ∘ v_j)` on the session's factors.
    pub fn scores(&self) -> Vec<f64> {
        item_scores(self.rec.model.head(self.hp.score_head), &self.user_factor, &self.items)
    }

    pub fn ranking(&self) -> Vec<usize> {
        rank_by_scores(&self.scores())
    }

    /// Top `k` items (at most M).
    pub fn recommendations(&self, k: usize) -> Vec<Recommendation> {
        let scores = self.scores();
        rank_by_scores(&scores)
            .into_iter()
            .take(k)
            .map(|item| Recommendation {
                item,
                score: scores[item],
            })
            .collect()
    }

    /// 1-based rank of `item` in the current ranking.
    pub fn rank_of(&self, item: usize) -> usize {
        rank_in_scores(&self.scores(), item)
    }

    /// Session-local model view, for checks against the reference updates.
    pub fn local_model(&self) -> LatentModel {
        let mut model = self.rec.model.clone();
        if let SessionUser::Known(i) = self.user {
            model.users.row_mut(i).copy_from_slice(&self.user_factor);
        }
        model.items = self.items.clone();
        model
    }

    pub fn options(&self) -> SessionOptions {
        self.options
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }
}

/// Rank (1-based) of `item` under descending score, ties by index.
pub fn rank_in_scores(scores: &[f64], item: usize) -> usize {
    let s = scores[item];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, &x)| x > s || (x == s && j < item))
        .count()
}

/// Truthful simulated user: yes iff the target contains the entity.
pub fn simulated_answer(corpus: &ItemCorpus, target: usize, entity: usize) -> Answer {
    if corpus.contains(target, entity) {
        Answer::Yes
    } else {
        Answer::No
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub entity: usize,
    pub answer: Answer,
    /// `|C|` after the answer.
    pub candidates: usize,
    /// 1-based rank of the target after the answer.
    pub target_rank: usize,
}

/// A simulated session's record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub target: usize,
    /// Target rank before any question.
    pub initial_target_rank: usize,
    pub steps: Vec<Step>,
    /// Full ranking before any question, then after each answer (empty when
    /// not recorded).
    pub rankings: Vec<Vec<usize>>,
}

impl Trajectory {
    /// Target rank after `n_q` questions; the last rank carries forward when
    /// the session stopped early.
    pub fn target_rank_at(&self, n_q: usize) -> usize {
        match n_q.min(self.steps.len()) {
            0 => self.initial_target_rank,
            l => self.steps[l - 1].target_rank,
        }
    }

    pub fn ranking_at(&self, n_q: usize) -> Option<&[usize]> {
        self.rankings
            .get(n_q.min(self.rankings.len().saturating_sub(1)))
            .map(Vec::as_slice)
    }

    pub fn final_ranking(&self) -> Option<&[usize]> {
        self.rankings.last().map(Vec::as_slice)
    }

    /// One `key=value` line per question.
    pub fn log_lines(&self, session_id: &str, corpus: &ItemCorpus) -> Vec<String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(l, s)| {
                format!(
                    "session={session_id} l={} entity={:?} answer={} candidates={} target_rank={}",
                    l + 1,
                    corpus.entity_name(s.entity).unwrap_or("?"),
                    s.answer,
                    s.candidates,
                    s.target_rank
                )
            })
            .collect()
    }
}

/// Runs the loop with a truthful simulated user until `n_q` questions,
/// one candidate left, or an empty pool. Records the full ranking after
/// every question.
pub fn run_session(
    rec: &Arc<Recommender>,
    user: SessionUser,
    target: usize,
    n_q: usize,
    hp: &HyperParams,
    options: SessionOptions,
) -> Result<Trajectory> {
    simulate(rec, user, target, n_q, hp, options, true)
}

/// As [`run_session`] but keeps only the target's rank per step.
pub fn simulate_target_ranks(
    rec: &Arc<Recommender>,
    user: SessionUser,
    target: usize,
    n_q: usize,
    hp: &HyperParams,
    options: SessionOptions,
) -> Result<Trajectory> {
    simulate(rec, user, target, n_q, hp, options, false)
}

fn simulate(
    rec: &Arc<Recommender>,
    user: SessionUser,
    target: usize,
    n_q: usize,
    hp: &HyperParams,
    options: SessionOptions,
    keep_rankings: bool,
) -> Result<Trajectory> {
    if target >= rec.corpus.n_items() {
        return Err(QrecError::OutOfRange {
            what: "item",
            index: target,
            len: rec.corpus.n_items(),
        });
    }
    let mut session = rec.start_session(user, hp, options)?;
    let mut rankings = Vec::new();
    let scores = session.scores();
    if keep_rankings {
        rankings.push(rank_by_scores(&scores));
    }
    let initial_target_rank = rank_in_scores(&scores, target);
    let mut steps = Vec::new();
    while session.questions_asked() < n_q {
        let Some(question) = session.next_question()? else {
            break;
        };
        let answer = simulated_answer(&rec.corpus, target, question.entity);
        session.apply_answer(question.entity, answer)?;
        let scores = session.scores();
        steps.push(Step {
            entity: question.entity,
            answer,
            candidates: session.candidates().len(),
            target_rank: rank_in_scores(&scores, target),
        });
        if keep_rankings {
            rankings.push(rank_by_scores(&scores));
        }
    }
    Ok(Trajectory {
        target,
        initial_target_rank,
        steps,
        rankings,
    })
}
