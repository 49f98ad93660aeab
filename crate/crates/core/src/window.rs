//! The merge window: an ordered list of live clusters, a position-limited
//! search for the lowest-loss merge, merge application with shift-left
//! hole covering, and singleton inclusion.
//!
//! Candidate losses are evaluated as a parallel map over a frozen
//! [`ClusterSet`]; the winner is then picked by a sequential scan in a
//! fixed candidate order, so the result does not depend on the number of
//! worker threads.

use rayon::prelude::*;

use crate::corpus::{BigramTable, WordId};
use crate::error::Error;
use crate::infotheory::{ClusterId, ClusterSet, MergeCandidate};
use crate::Result;

/// Losses within this distance count as equal and fall through to the
/// lexicographic (position i, position j) tie-break.
const LOSS_TIE_EPS: f64 = 1e-12;

/// Ordered merge window. Position matters: the merge search only allows
/// pairs whose left cluster sits at a position below `merge_limit`.
#[derive(Debug, Clone)]
pub struct WindowState {
    clusters: Vec<ClusterId>,
    merge_limit: usize,
}

impl WindowState {
    pub fn new() -> Self {
        WindowState {
            clusters: Vec::new(),
            merge_limit: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.clusters.len()
    }

    pub fn merge_limit(&self) -> usize {
        self.merge_limit
    }

    pub fn set_merge_limit(&mut self, limit: usize) {
        self.merge_limit = limit;
    }

    pub fn cluster_at(&self, pos: usize) -> ClusterId {
        self.clusters[pos]
    }

    pub fn clusters(&self) -> &[ClusterId] {
        &self.clusters
    }

    /// Lowest-loss merge over all pairs with `position(i) < merge_limit`
    /// and `position(i) < position(j)`. Ties go to the lexicographically
    /// smallest position pair.
    pub fn best_merge(&self, probs: &ClusterSet) -> Result<MergeCandidate> {
        if self.size() < 2 {
            return Err(Error::NothingToMerge(self.size()));
        }
        let limit = self.merge_limit.min(self.size());
        let mut pairs = Vec::with_capacity(limit * self.size());
        for i in 0..limit {
            for j in (i + 1)..self.size() {
                pairs.push((i, j));
            }
        }
        debug_assert!(!pairs.is_empty(), "merge_limit must be at least 1");

        let losses: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| {
                probs
                    .merge_loss(self.clusters[i], self.clusters[j])
                    .expect("window positions hold distinct live clusters")
            })
            .collect();

        // Sequential reduction in candidate order keeps the winner
        // independent of the parallel split above.
        let mut best = 0;
        for k in 1..pairs.len() {
            if losses[k] < losses[best] - LOSS_TIE_EPS {
                best = k;
            }
        }
        let (pos_left, pos_right) = pairs[best];
        Ok(MergeCandidate {
            left: self.clusters[pos_left],
            right: self.clusters[pos_right],
            pos_left,
            pos_right,
            loss: losses[best],
            version: probs.version(),
        })
    }

    /// Apply a candidate produced by [`best_merge`] on this exact state:
    /// the right cluster is absorbed into the left one and every position
    /// above it shifts left by one. Returns the AMI loss.
    pub fn apply_merge(
        &mut self,
        probs: &mut ClusterSet,
        candidate: &MergeCandidate,
    ) -> Result<f64> {
        if candidate.version != probs.version()
            || self.clusters.get(candidate.pos_left) != Some(&candidate.left)
            || self.clusters.get(candidate.pos_right) != Some(&candidate.right)
        {
            return Err(Error::StaleCandidate);
        }
        let loss = probs.merge(candidate.left, candidate.right)?;
        self.clusters.remove(candidate.pos_right);
        Ok(loss)
    }

    /// Append a new singleton cluster for `word` at the end of the window.
    pub fn include(
        &mut self,
        probs: &mut ClusterSet,
        word: WordId,
        table: &BigramTable,
    ) -> Result<ClusterId> {
        let id = probs.include_word(word, table)?;
        self.clusters.push(id);
        Ok(id)
    }
}

impl Default for WindowState {
    fn default() -> Self {
        WindowState::new()
    }
}
