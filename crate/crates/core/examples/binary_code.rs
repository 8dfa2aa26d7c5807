//! Sixty-four items, each described by the bits of its index. Six yes/no
//! questions are enough to single out any of them.
//!
//! cargo run -p qrec --example binary_code

use std::sync::Arc;

use qrec::factorization::train_offline;
use qrec::session::run_session;
use qrec::synthetic::binary_code;
use qrec::{HyperParams, Recommender, SessionOptions, SessionUser};

fn main() -> qrec::Result<()> {
    let data = binary_code(3)?;
    let hp = HyperParams::default();
    let model = train_offline(&data.ratings, &hp)?;
    let rec = Recommender::new(model, Arc::new(data.corpus.clone()), Arc::new(data.ratings.clone()))?;

    let mut worst = 0;
    for target in 0..data.corpus.n_items() {
        let t = run_session(&rec, SessionUser::Known(0), target, 20, &hp, SessionOptions::default())?;
        worst = worst.max(t.steps.len());
        if target == 37 {
            for line in t.log_lines("code37", &data.corpus) {
                println!("{line}");
            }
        }
    }
    println!("every item isolated within {worst} questions");
    Ok(())
}
