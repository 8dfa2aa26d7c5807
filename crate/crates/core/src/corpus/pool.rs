use crate::error::{QrecError, Result};

/// Entities that may still be asked in a session, iterated in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionPool {
    available: Vec<bool>,
    remaining: usize,
}

impl QuestionPool {
    /// A pool holding every entity of a vocabulary of size `n_entities`.
    pub fn full(n_entities: usize) -> Self {
        Self {
            available: vec![true; n_entities],
            remaining: n_entities,
        }
    }

    pub fn len(&self) -> usize {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn capacity(&self) -> usize {
        self.available.len()
    }

    pub fn contains(&self, entity: usize) -> bool {
        self.available.get(entity).copied().unwrap_or(false)
    }

    /// Removes an entity; asking the same entity twice is an error.
    pub fn remove(&mut self, entity: usize) -> Result<()> {
        match self.available.get_mut(entity) {
            Some(slot @ true) => {
                *slot = false;
                self.remaining -= 1;
                Ok(())
            }
            Some(false) => Err(QrecError::Protocol(format!(
                "entity {entity} was already asked"
            ))),
            None => Err(QrecError::OutOfRange {
                what: "entity",
                index: entity,
                len: self.available.len(),
            }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.available
            .iter()
            .enumerate()
            .filter_map(|(e, &a)| a.then_some(e))
    }
}
