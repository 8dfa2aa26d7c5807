//! Users the model has never seen: every rating of 30 users is held out and
//! their sessions start from a zero user factor.
//!
//! cargo run --release -p qrec --example cold_start

use qrec::eval::{hold_out_users, prepare, run_experiment, MetricsReport, Policy};
use qrec::synthetic::{benchmark, BenchmarkConfig};
use qrec::HyperParams;

fn main() -> qrec::Result<()> {
    let data = benchmark(&BenchmarkConfig::separable())?;
    let hp = HyperParams::default();
    let split = hold_out_users(&data.ratings, 30, 3)?;
    let bench = prepare(&data, split, &hp, 1)?;
    println!("{} cold sessions", bench.sessions.len());

    let mut report = MetricsReport::default();
    for policy in Policy::ALL {
        report.extend(run_experiment(
            &bench.recommender,
            &bench.sessions,
            policy,
            &hp,
            &[0, 5, 10, 15],
            policy.name(),
        )?);
    }
    print!("{}", report.to_csv());
    Ok(())
}
