//! Runs the desk-scale comparison suite on the synthetic benchmark and
//! prints one table per experiment.
//!
//! cargo run --release -p qrec --example benchmark_trends

use std::time::Instant;

use qrec::eval::{ablation_offline_init, prepare, run_experiment, split_dataset, sweep, MetricsReport, Policy, SplitSpec, SweepParam};
use qrec::synthetic::{benchmark, BenchmarkConfig};
use qrec::HyperParams;

fn main() -> qrec::Result<()> {
    let started = Instant::now();
    let data = benchmark(&BenchmarkConfig::default())?;
    println!("{}", data.summary());
    let hp = HyperParams::default();
    let split = split_dataset(&data.ratings, &SplitSpec::default())?;
    let bench = prepare(&data, split, &hp, 1)?;
    let n_qs = [0, 2, 5, 10, 15, 20];

    let mut report = MetricsReport::new(vec![("experiment".into(), "policies".into())]);
    for policy in Policy::ALL {
        report.extend(run_experiment(&bench.recommender, &bench.sessions, policy, &hp, &n_qs, policy.name())?);
    }
    report.extend(ablation_offline_init(&bench, &hp, &n_qs)?);
    println!("{}", report.to_csv());

    let gammas: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
    let mut g = MetricsReport::default();
    g.extend(sweep(&bench, SweepParam::Gamma, &gammas, &hp, &[5, 10])?);
    println!("{}", g.to_csv());

    let ks: Vec<f64> = (1..=10).map(f64::from).collect();
    let mut k = MetricsReport::default();
    k.extend(sweep(&bench, SweepParam::K, &ks, &hp, &[5, 10])?);
    println!("{}", k.to_csv());
    println!("elapsed {:.1?}", started.elapsed());
    Ok(())
}
