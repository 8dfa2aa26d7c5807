//! Question-based interactive recommendation.
//!
//! The pipeline:
//!
//! 1. [`corpus`] loads items, their documents and entities, and builds the
//!    item × entity incidence questions are asked about.
//! 2. [`factorization`] trains the latent factor model offline and
//!    provides the closed-form online updates.
//! 3. [`belief`] tracks a Dirichlet belief over the target item and picks
//!    the next entity by generalized binary search.
//! 4. [`session`] runs the ask → answer → refine → re-rank loop.
//! 5. [`eval`] splits data, simulates users and computes ranking metrics.

pub mod belief;
pub mod checkpoint;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod ratings;
pub mod session;
pub mod synthetic;

pub use belief::{BeliefState, CandidateSet};
pub use corpus::{render_question, ItemCorpus, QuestionPool};
pub use dataset::Dataset;
pub use error::{QrecError, Result};
pub use factorization::{HyperParams, LatentModel};
pub use ratings::{Rating, RatingMatrix};
pub use session::{Answer, Recommender, Session, SessionOptions, SessionUser};
