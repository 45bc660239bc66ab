//! Experience replay of complete episodes.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::scanenv::{EnvConfig, ScanHistory};
use crate::{Error, Result};

/// A stored episode and the training image it was collected on.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub history: ScanHistory,
    pub image_index: usize,
}

/// FIFO buffer of at most `capacity` episodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Episode>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            episodes: VecDeque::new(),
            inserted: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Total pushes since creation.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, cfg: &EnvConfig, history: ScanHistory, image_index: usize) -> Result<()> {
        if !history.is_complete(cfg) {
            return Err(Error::Contract(format!(
                "episode has {} of {} segments",
                history.len(),
                cfg.segments
            )));
        }
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(Episode {
            history,
            image_index,
        });
        self.inserted += 1;
        Ok(())
    }

    /// `n` distinct episodes drawn uniformly, or `None` while fewer than
    /// `n` are stored.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Option<Vec<&Episode>> {
        if n > self.episodes.len() {
            return None;
        }
        Some(
            index::sample(rng, self.episodes.len(), n)
                .into_iter()
                .map(|i| &self.episodes[i])
                .collect(),
        )
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    /// Rebuild from saved contents.
    pub fn restore(capacity: usize, episodes: Vec<Episode>, inserted: u64) -> Result<Self> {
        if episodes.len() > capacity {
            return Err(Error::Data(format!(
                "{} stored episodes exceed capacity {capacity}",
                episodes.len()
            )));
        }
        let mut buf = Self::new(capacity)?;
        buf.episodes = episodes.into();
        buf.inserted = inserted;
        Ok(buf)
    }
}
