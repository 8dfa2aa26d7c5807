//! Walks through one session step by step with a simulated user who has a
//! particular item in mind, printing each question and the refreshed list.
//!
//! cargo run --release -p qrec --example interactive_session

use std::sync::Arc;

use qrec::factorization::train_offline;
use qrec::session::simulated_answer;
use qrec::synthetic::{benchmark, BenchmarkConfig};
use qrec::{HyperParams, Recommender, SessionOptions, SessionUser};

fn main() -> qrec::Result<()> {
    let data = benchmark(&BenchmarkConfig::default())?;
    let hp = HyperParams::default();
    let model = train_offline(&data.ratings, &hp)?;
    let rec = Recommender::new(model, Arc::new(data.corpus.clone()), Arc::new(data.ratings.clone()))?;

    let user = 3;
    let target = data.corpus.n_items() - 1;
    let title = |d: usize| data.corpus.items()[d].title.as_str();
    let mut session = rec.start_session(SessionUser::Known(user), &hp, SessionOptions::default())?;
    println!("looking for: {} (rank {} before any question)\n", title(target), session.rank_of(target));

    while session.questions_asked() < 10 {
        let Some(q) = session.next_question()? else { break };
        let answer = simulated_answer(&data.corpus, target, q.entity);
        session.apply_answer(q.entity, answer)?;
        let top: Vec<&str> = session.recommendations(3).iter().map(|r| title(r.item)).collect();
        println!(
            "Q{:<2} {} -> {answer}\n    {} candidates, target rank {}, top: {}",
            session.questions_asked(),
            q.text,
            session.candidates().len(),
            session.rank_of(target),
            top.join(" | ")
        );
    }
    Ok(())
}
