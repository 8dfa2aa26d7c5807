//! Versioned on-disk form of a trained model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ItemCorpus;
use crate::error::{QrecError, Result};
use crate::factorization::{HyperParams, LatentModel};

const FORMAT: &str = "qrec-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model with the hyper-parameters it was fitted with and the
/// fingerprint of the corpus whose item order it assumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    pub version: u32,
    pub corpus_fingerprint: String,
    pub hyper_params: HyperParams,
    /// Free-form `key=value` notes on how the model was produced.
    #[serde(default)]
    pub provenance: Vec<(String, String)>,
    pub model: LatentModel,
}

impl Checkpoint {
    pub fn new(model: LatentModel, hyper_params: HyperParams, corpus: &ItemCorpus) -> Self {
        Self {
            format: FORMAT.into(),
            version: CHECKPOINT_VERSION,
            corpus_fingerprint: corpus.fingerprint(),
            hyper_params,
            provenance: Vec::new(),
            model,
        }
    }

    pub fn with_provenance(mut self, provenance: Vec<(String, String)>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn provenance(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| QrecError::Checkpoint(e.to_string()))?;
        fs::write(path, json).map_err(|e| QrecError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| QrecError::io(path, e))?;
        let ckpt: Self = serde_json::from_slice(&bytes)
            .map_err(|e| QrecError::Checkpoint(format!("{}: {e}", path.display())))?;
        if ckpt.format != FORMAT {
            return Err(QrecError::Checkpoint(format!("{} is not a checkpoint", path.display())));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(QrecError::Checkpoint(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        ckpt.model.check()?;
        Ok(ckpt)
    }

    /// Fails unless the checkpoint was trained against `corpus` with
    /// `n_users` users.
    pub fn verify(&self, corpus: &ItemCorpus, n_users: usize) -> Result<()> {
        let fp = corpus.fingerprint();
        if fp != self.corpus_fingerprint {
            return Err(QrecError::Checkpoint(format!(
                "corpus fingerprint {fp} does not match checkpoint {}",
                self.corpus_fingerprint
            )));
        }
        if self.model.n_items() != corpus.n_items() || self.model.n_users() != n_users {
            return Err(QrecError::Checkpoint(format!(
                "checkpoint is {}x{} but data is {}x{}",
                self.model.n_users(),
                self.model.n_items(),
                n_users,
                corpus.n_items()
            )));
        }
        Ok(())
    }
}
