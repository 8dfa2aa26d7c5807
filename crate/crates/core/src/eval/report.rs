use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::metrics::Metrics;
use crate::error::{QrecError, Result};

/// One table row: an arm at one question budget.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub policy: String,
    pub n_q: usize,
    pub metrics: Metrics,
    pub sessions: usize,
}

/// Rows plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub config: Vec<(String, String)>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn new(config: Vec<(String, String)>) -> Self {
        Self { config, rows: Vec::new() }
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = MetricsRow>) {
        self.rows.extend(rows);
    }

    pub fn row(&self, policy: &str, n_q: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.policy == policy && r.n_q == n_q)
    }

    /// Short hash of the configuration echo.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.config {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,N_q,recall@5,AP@5,NDCG,MRR,sessions\n");
        for r in &self.rows {
            let m = r.metrics;
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{}",
                r.policy, r.n_q, m.recall_at_5, m.ap_at_5, m.ndcg, m.mrr, r.sessions
            );
        }
        out
    }

    /// `# key=value` lines, ending with the fingerprint.
    pub fn config_echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "# fingerprint={}", self.fingerprint());
        out
    }

    pub fn render(&self) -> String {
        format!("{}{}", self.config_echo(), self.to_csv())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| QrecError::io(dir, e))?;
        }
        fs::write(path, self.render()).map_err(|e| QrecError::io(path, e))
    }
}
