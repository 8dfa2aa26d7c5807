use crate::error::{QrecError, Result};

/// Cut-off for recall and average precision.
pub const TOP_N: usize = 5;
/// NDCG only credits targets ranked within this many items.
pub const NDCG_CUTOFF: usize = 100;

/// Single-relevant-item ranking metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub recall_at_5: f64,
    pub ap_at_5: f64,
    pub ndcg: f64,
    pub mrr: f64,
}

/// Metrics for a target at 1-based rank `rank`.
pub fn metrics_for_rank(rank: usize) -> Metrics {
    assert!(rank >= 1, "ranks are 1-based");
    let r = rank as f64;
    let hit = rank <= TOP_N;
    Metrics {
        recall_at_5: if hit { 1.0 } else { 0.0 },
        ap_at_5: if hit { 1.0 / r } else { 0.0 },
        ndcg: if rank <= NDCG_CUTOFF { 1.0 / (r + 1.0).log2() } else { 0.0 },
        mrr: 1.0 / r,
    }
}

pub fn metrics_for_ranking(ranking: &[usize], target: usize) -> Result<Metrics> {
    ranking
        .iter()
        .position(|&d| d == target)
        .map(|p| metrics_for_rank(p + 1))
        .ok_or_else(|| QrecError::Invalid(format!("target {target} is not in the ranking")))
}

/// Arithmetic mean, summed in the given order.
pub fn mean_metrics(values: &[Metrics]) -> Metrics {
    if values.is_empty() {
        return Metrics::default();
    }
    let n = values.len() as f64;
    let mut sum = Metrics::default();
    for m in values {
        sum.recall_at_5 += m.recall_at_5;
        sum.ap_at_5 += m.ap_at_5;
        sum.ndcg += m.ndcg;
        sum.mrr += m.mrr;
    }
    Metrics {
        recall_at_5: sum.recall_at_5 / n,
        ap_at_5: sum.ap_at_5 / n,
        ndcg: sum.ndcg / n,
        mrr: sum.mrr / n,
    }
}
