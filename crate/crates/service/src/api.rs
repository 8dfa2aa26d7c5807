//! Request and response bodies.

use serde::{Deserialize, Serialize};

use qrec::Answer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Real elicitation.
    Interactive,
    /// The user is shown a target first and then looks for it.
    Study,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub mode: Mode,
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub target_item: Option<String>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostAnswer {
    pub answer: Answer,
    /// The count the client last saw; a mismatch means the answer is stale.
    #[serde(default)]
    pub questions_asked: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TopK {
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub entity: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub rank: usize,
    pub item_id: String,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDetail {
    pub item_id: String,
    pub title: String,
    pub document: String,
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub mode: Mode,
    /// Shown in study mode so the user can get familiar with it.
    pub target: Option<ItemDetail>,
    pub question: Option<QuestionView>,
    pub done: bool,
    pub questions_asked: usize,
    pub top_items: Vec<ItemView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerAccepted {
    pub question: Option<QuestionView>,
    pub done: bool,
    pub questions_asked: usize,
    pub top_items: Vec<ItemView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub questions_asked: usize,
    pub items: Vec<ItemView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSummary {
    pub questions_asked: usize,
    pub final_top_k: Vec<ItemView>,
    /// 1-based rank of the study target when the session stopped.
    pub target_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub items: usize,
    pub entities: usize,
    pub users: usize,
    pub sessions: usize,
}
