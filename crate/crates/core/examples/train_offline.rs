//! Trains the latent factor model on the synthetic benchmark and shows the
//! loss curve and a user's top items.
//!
//! cargo run --release -p qrec --example train_offline

use qrec::factorization::train_offline_traced;
use qrec::synthetic::{benchmark, BenchmarkConfig};
use qrec::HyperParams;

fn main() -> qrec::Result<()> {
    let data = benchmark(&BenchmarkConfig::default())?;
    let hp = HyperParams::default();
    let (model, trace) = train_offline_traced(&data.ratings, &hp)?;
    for (i, loss) in trace.losses.iter().enumerate().step_by(10) {
        println!("iter {i:>3}  loss {loss:>12.3}");
    }
    println!("final     loss {:>12.3}", trace.final_loss());
    println!("rating head p = {:?}", model.p);

    let user = 0;
    let rated: Vec<usize> = data.ratings.user_ratings(user).iter().map(|&(d, _)| d).collect();
    println!("\nuser {} rated {} items; top 5 by predicted rating:", data.ratings.users().ids()[user], rated.len());
    for &d in model.rank_items(user)?.iter().take(5) {
        let mark = if rated.contains(&d) { "  (rated)" } else { "" };
        println!("  {:<32} {:.3}{mark}", data.corpus.items()[d].title, model.score(user, d)?);
    }
    Ok(())
}
