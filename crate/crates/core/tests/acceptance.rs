//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! cargo test --release -p qrec --test acceptance

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use qrec::belief::select_question;
use qrec::eval::{
    ablation_offline_init, hold_out_users, metrics_for_ranking, prepare, run_experiment, split_dataset, sweep, Policy,
    SplitSpec, SweepParam,
};
use qrec::factorization::{gradients, grad_loss, loss, train_offline, update_item_factors, update_user_factor, SessionFeedback};
use qrec::session::{run_session, simulated_answer, QuestionPolicy};
use qrec::synthetic::{benchmark, binary_code, BenchmarkConfig, CODE_BITS};
use qrec::{CandidateSet, HyperParams, QuestionPool, Recommender, SessionOptions, SessionUser};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn closed_form(budget: Duration) -> Outcome {
    let started = Instant::now();
    let mut r = rng(101);
    let mut worst_grad: f64 = 0.0;
    let mut descents = 0;
    for _ in 0..50 {
        let inst = random_instance(&mut r, 5, 6, 3);
        let fb = SessionFeedback {
            user: inst.user,
            affinity: &inst.affinity,
        };
        let f = |m: &qrec::LatentModel| loss(m, &inst.ratings, Some(fb), &inst.hp).unwrap();

        let u = update_user_factor(&inst.model, &inst.ratings, &inst.affinity, inst.user, &inst.hp).map_err(|e| e.to_string())?;
        let at_u = with_user(&inst.model, inst.user, &u);
        let g = gradients(&at_u, &inst.ratings, Some(fb), &inst.hp).unwrap();
        worst_grad = worst_grad.max(norm(g.users.row(inst.user)));
        let base = f(&at_u);
        for _ in 0..100 {
            let d = random_direction(&mut r, u.len(), 1e-3);
            let moved: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
            descents += usize::from(f(&with_user(&at_u, inst.user, &moved)) < base);
        }

        let v = update_item_factors(&inst.model, &inst.ratings, &inst.affinity, inst.user, &inst.hp).map_err(|e| e.to_string())?;
        let at_v = with_items(&inst.model, v);
        let g = gradients(&at_v, &inst.ratings, Some(fb), &inst.hp).unwrap();
        worst_grad = worst_grad.max(norm(g.items.as_slice()));
        let base = f(&at_v);
        for _ in 0..100 {
            let d = random_direction(&mut r, at_v.items.as_slice().len(), 1e-3);
            let mut moved = at_v.clone();
            for (x, dx) in moved.items.as_mut_slice().iter_mut().zip(&d) {
                *x += dx;
            }
            descents += usize::from(f(&moved) < base);
        }
    }
    let elapsed = started.elapsed();
    check(
        worst_grad < 1e-8 && descents == 0 && elapsed < budget,
        format!("max gradient norm {worst_grad:.2e}, {descents} descending perturbations, {elapsed:.2?}"),
    )
}

fn gradient_check() -> Outcome {
    let mut r = rng(102);
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for _ in 0..50 {
        let inst = random_instance(&mut r, 5, 6, 3);
        let g = grad_loss(&inst.model, &inst.ratings, &inst.hp).unwrap();
        for coord in coordinates(&inst.model) {
            let fd = central_difference(&inst.model, coord, 1e-5, |m| loss(m, &inst.ratings, None, &inst.hp).unwrap());
            let an = match coord.0 {
                Block::Users => g.users.as_slice()[coord.1],
                Block::Items => g.items.as_slice()[coord.1],
                Block::P => g.p[coord.1],
            };
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-6));
            coords += 1;
        }
    }
    check(worst < 1e-4, format!("{coords} coordinates, max relative error {worst:.2e}"))
}

fn gbs_oracle() -> Outcome {
    let mut r = rng(103);
    let mut mismatches = 0;
    for _ in 0..200 {
        let m = r.random_range(1..=10);
        let n = r.random_range(1..=8);
        let density = r.random_range(0.1..0.9);
        let corpus = random_corpus(&mut r, m, n, density);
        let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = if r.random_bool(0.3) {
            vec![1.0 / m as f64; m]
        } else {
            raw.iter().map(|x| x / total).collect()
        };
        let mut candidates: Vec<usize> = (0..m).filter(|_| r.random_bool(0.7)).collect();
        if candidates.is_empty() {
            candidates.push(0);
        }
        let mut pool = QuestionPool::full(n);
        let mut available = Vec::new();
        for e in 0..n {
            if r.random_bool(0.8) {
                available.push(e);
            } else {
                pool.remove(e).unwrap();
            }
        }
        let got = select_question(&pi, &CandidateSet::from_members(candidates.clone()), &pool, &corpus).ok();
        mismatches += usize::from(got != brute_force_question(&pi, &candidates, &available, &corpus));
    }
    check(mismatches == 0, format!("{mismatches}/200 corpora disagree"))
}

fn binary_code_identification(budget: Duration) -> Outcome {
    let started = Instant::now();
    let hp = HyperParams::default();
    let data = binary_code(3).map_err(|e| e.to_string())?;
    let model = train_offline(&data.ratings, &hp).map_err(|e| e.to_string())?;
    let rec = Recommender::new(model, Arc::new(data.corpus.clone()), Arc::new(data.ratings.clone())).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut mrr = 0.0;
    let n = data.corpus.n_items();
    for target in 0..n {
        let t = run_session(&rec, SessionUser::Known(0), target, 20, &hp, SessionOptions::default()).map_err(|e| e.to_string())?;
        let isolated = t.steps.len() == CODE_BITS && t.steps.last().is_some_and(|s| s.candidates == 1);
        if !isolated {
            bad.push(target);
        }
        mrr += metrics_for_ranking(t.final_ranking().unwrap(), target).unwrap().mrr;
    }
    mrr /= n as f64;
    let elapsed = started.elapsed();
    check(
        bad.is_empty() && mrr == 1.0 && elapsed < budget,
        format!("{} targets not isolated in {CODE_BITS} questions, MRR {mrr:.4}, {elapsed:.2?}", bad.len()),
    )
}

fn target_dominance() -> Outcome {
    let mut r = rng(104);
    let hp = HyperParams::default();
    let worlds: Vec<_> = (0..10).map(|w| random_world(200 + w, 40, 14, 10)).collect();
    let mut failures = 0;
    for _ in 0..1000 {
        let rec = &worlds[r.random_range(0..worlds.len())];
        let corpus = Arc::clone(rec.corpus());
        let m = corpus.n_items();
        let target = r.random_range(0..m);
        let user = if r.random_bool(0.3) {
            SessionUser::Cold
        } else {
            SessionUser::Known(r.random_range(0..rec.ratings().n_users()))
        };
        let options = if r.random_bool(0.5) {
            SessionOptions::default()
        } else {
            SessionOptions {
                policy: QuestionPolicy::Random { seed: r.random() },
                ..Default::default()
            }
        };
        let mut s = rec.start_session(user, &hp, options).map_err(|e| e.to_string())?;
        let mut l = 0u32;
        let mut ok = true;
        while let Some(q) = s.next_question().map_err(|e| e.to_string())? {
            let answer = simulated_answer(&corpus, target, q.entity);
            s.apply_answer(q.entity, answer).map_err(|e| e.to_string())?;
            l += 1;
            let y = s.affinity();
            ok &= y[target] == l && y.iter().copied().max() == Some(l) && s.candidates().contains(target);
            // Integer bookkeeping: Y_j counts answers item j agrees with.
            ok &= (0..m).all(|d| {
                let agree = s
                    .asked()
                    .iter()
                    .filter(|&&(e, a)| corpus.contains(d, e) == (a == qrec::Answer::Yes))
                    .count();
                y[d] as usize == agree
            });
            if l >= 15 {
                break;
            }
        }
        failures += usize::from(!ok);
    }
    check(failures == 0, format!("{failures}/1000 sessions violated an invariant"))
}

fn trends(budget: Duration) -> Vec<(&'static str, Outcome)> {
    let started = Instant::now();
    let run = || -> qrec::Result<Vec<(&'static str, Outcome)>> {
        let data = benchmark(&BenchmarkConfig::default())?;
        let hp = HyperParams::default();
        let split = split_dataset(&data.ratings, &SplitSpec::default())?;
        let bench = prepare(&data, split, &hp, 1)?;
        let n_qs = [2, 5, 10, 15];
        let rows = |policy: Policy| run_experiment(&bench.recommender, &bench.sessions, policy, &hp, &n_qs, policy.name());
        let qrec = rows(Policy::Qrec)?;
        let random = rows(Policy::RandomQuestion)?;
        let uniform = rows(Policy::UniformPriorSbs)?;
        let at = |rows: &[qrec::eval::MetricsRow], n_q: usize| rows.iter().find(|r| r.n_q == n_q).unwrap().metrics;

        let recall: Vec<f64> = n_qs.iter().map(|&n| at(&qrec, n).recall_at_5).collect();
        let a = check(
            recall.windows(2).all(|w| w[1] >= w[0]),
            format!("recall@5 over N_q {n_qs:?}: {}", fmt_list(&recall)),
        );
        let (q10, r10) = (at(&qrec, 10).mrr, at(&random, 10).mrr);
        let b = check(q10 > r10, format!("MRR@N_q=10 qrec {q10:.4} vs random question {r10:.4}"));
        let (q5, u5) = (at(&qrec, 5).recall_at_5, at(&uniform, 5).recall_at_5);
        let c = check(q5 > u5, format!("recall@5@N_q=5 qrec {q5:.4} vs uniform-prior SBS {u5:.4}"));

        let ablation = ablation_offline_init(&bench, &hp, &[5])?;
        let (off, rnd) = (ablation[0].metrics.recall_at_5, ablation[1].metrics.recall_at_5);
        let (off_mrr, rnd_mrr) = (ablation[0].metrics.mrr, ablation[1].metrics.mrr);
        let d = check(
            off >= rnd && off_mrr >= rnd_mrr,
            format!("N_q=5 offline init recall@5 {off:.4} / MRR {off_mrr:.4} vs random init {rnd:.4} / {rnd_mrr:.4}"),
        );

        let gammas: Vec<f64> = (0..=10).map(|i| f64::from(i) * 0.5).collect();
        let swept = sweep(&bench, SweepParam::Gamma, &gammas, &hp, &[10])?;
        let mrrs: Vec<f64> = swept.iter().map(|r| r.metrics.mrr).collect();
        let e = check(
            mrrs[1..].iter().all(|&x| x > mrrs[0]),
            format!("MRR@N_q=10 over gamma 0..5 step 0.5: {}", fmt_list(&mrrs)),
        );
        Ok(vec![
            ("trend (a) recall@5 non-decreasing in N_q", a),
            ("trend (b) beats random questions", b),
            ("trend (c) beats uniform-prior SBS", c),
            ("trend (d) offline init >= random init", d),
            ("trend (e) gamma=0 worst", e),
        ])
    };
    let mut out = run().unwrap_or_else(|e| vec![("trends", Err(e.to_string()))]);
    let elapsed = started.elapsed();
    out.push(("trend suite runtime", check(elapsed < budget, format!("{elapsed:.1?}"))));
    out
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn cold_start() -> Outcome {
    let run = || -> qrec::Result<(f64, f64, usize)> {
        let data = benchmark(&BenchmarkConfig::separable())?;
        let hp = HyperParams::default();
        let split = hold_out_users(&data.ratings, 30, 3)?;
        let bench = prepare(&data, split, &hp, 1)?;
        let rows = run_experiment(&bench.recommender, &bench.sessions, Policy::Qrec, &hp, &[0, 15], "cold")?;
        Ok((rows[0].metrics.mrr, rows[1].metrics.mrr, bench.sessions.len()))
    };
    let (start, end, n) = run().map_err(|e| e.to_string())?;
    check(end >= 0.9, format!("{n} cold sessions, MRR {start:.4} at N_q=0 -> {end:.4} at N_q=15"))
}

fn metrics_suite() -> Outcome {
    let mut r = rng(105);
    let mut mismatches = 0;
    let mut past_cutoff = 0;
    for _ in 0..1000 {
        let m = r.random_range(1..=250);
        let ranking = random_permutation(&mut r, m);
        let target = r.random_range(0..m);
        let got = metrics_for_ranking(&ranking, target).unwrap();
        let want = literal_metrics(&ranking, target);
        past_cutoff += usize::from(ranking.iter().position(|&d| d == target).unwrap() >= 100);
        mismatches += usize::from(
            got.recall_at_5 != want.recall_at_5 || got.ap_at_5 != want.ap_at_5 || got.ndcg != want.ndcg || got.mrr != want.mrr,
        );
    }
    check(
        mismatches == 0 && past_cutoff > 0,
        format!("{mismatches}/1000 mismatches, {past_cutoff} targets beyond the NDCG cutoff"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(&str, Outcome, Duration)> = Vec::new();
    fn timed(results: &mut Vec<(&str, Outcome, Duration)>, name: &'static str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let outcome = f();
        results.push((name, outcome, t.elapsed()));
    }
    timed(&mut results, "closed-form updates are exact minimisers", || closed_form(Duration::from_secs(5)));
    timed(&mut results, "offline gradient matches finite differences", gradient_check);
    timed(&mut results, "question selection matches exhaustive search", gbs_oracle);
    timed(&mut results, "binary code identified in six questions", || {
        binary_code_identification(Duration::from_secs(30))
    });
    timed(&mut results, "target dominance and bookkeeping", target_dominance);
    let t = Instant::now();
    for (name, outcome) in trends(Duration::from_secs(600)) {
        results.push((name, outcome, t.elapsed()));
    }
    timed(&mut results, "cold start reaches MRR 0.9 by N_q=15", cold_start);
    timed(&mut results, "metrics match literal definitions", metrics_suite);

    let mut failed = 0;
    for (name, outcome, elapsed) in &results {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {name}: {detail} [{elapsed:.2?}]");
    }
    println!(
        "SKIP full reproduction on user-supplied retail data: see README ({} criteria, {failed} failed, {:.1?})",
        results.len(),
        started.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
