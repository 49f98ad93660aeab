//! Cluster probability model and all information-theoretic quantities:
//! joint probabilities, left/right marginals, mutual information, average
//! mutual information, the additive merge algebra and merge loss.
//!
//! All quantities are kept as integer bigram counts and only turned into
//! probabilities by dividing through a fixed normalization constant, so
//! `p(i, j) = 0` is always decided on integer counts. Marginals are
//! global: they come from full-corpus counts and are never restricted to
//! the words currently held in a merge window. Logarithms are base 2 and
//! every quantity is in bits.

use std::collections::BTreeMap;

use crate::corpus::{BigramTable, Dataset, WordId};
use crate::error::Error;
use crate::Result;

pub type ClusterId = usize;

/// A merge pair picked by the window search, with its AMI loss in bits.
///
/// `left`/`right` are cluster ids; `pos_left < pos_right` are their window
/// positions at search time. The candidate is only valid against the exact
/// state it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeCandidate {
    pub left: ClusterId,
    pub right: ClusterId,
    pub pos_left: usize,
    pub pos_right: usize,
    pub loss: f64,
    pub(crate) version: u64,
}

#[derive(Debug, Clone)]
struct Cluster {
    members: Vec<WordId>,
    /// Joint counts with this cluster on the left, keyed by partner cluster.
    succ: BTreeMap<ClusterId, u64>,
    /// Joint counts with this cluster on the right, keyed by partner cluster.
    pred: BTreeMap<ClusterId, u64>,
    /// Global left-marginal count (numerator of pl).
    left_count: u64,
    /// Global right-marginal count (numerator of pr).
    right_count: u64,
}

/// Live clustering state: member sets, sparse joint counts between live
/// clusters and global marginal counts, with the current AMI maintained
/// incrementally.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    clusters: Vec<Option<Cluster>>,
    word_cluster: Vec<Option<ClusterId>>,
    norm: f64,
    ami: f64,
    version: u64,
    live: usize,
}

impl ClusterSet {
    /// Empty state over a vocabulary of `vocab_size` words. `norm` is the
    /// probability denominator applied to every count.
    pub fn new(vocab_size: usize, norm: f64) -> Self {
        assert!(norm > 0.0, "normalization must be positive");
        ClusterSet {
            clusters: Vec::new(),
            word_cluster: vec![None; vocab_size],
            norm,
            ami: 0.0,
            version: 0,
            live: 0,
        }
    }

    /// Empty state normalized by the dataset's token count, which
    /// reproduces the reference AMI values for the toy corpora.
    pub fn for_dataset(dataset: &Dataset) -> Self {
        ClusterSet::new(dataset.vocab.len(), dataset.token_count() as f64)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Current AMI over all live clusters, maintained incrementally.
    pub fn ami(&self) -> f64 {
        self.ami
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn is_live(&self, id: ClusterId) -> bool {
        self.clusters.get(id).is_some_and(|c| c.is_some())
    }

    /// Live cluster ids in ascending order.
    pub fn live_clusters(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(id, c)| c.as_ref().map(|_| id))
    }

    pub fn members(&self, id: ClusterId) -> &[WordId] {
        &self.cluster(id).members
    }

    pub fn cluster_of(&self, word: WordId) -> Option<ClusterId> {
        self.word_cluster[word as usize]
    }

    fn cluster(&self, id: ClusterId) -> &Cluster {
        self.clusters[id].as_ref().expect("dead cluster id")
    }

    pub fn joint_count(&self, i: ClusterId, j: ClusterId) -> u64 {
        self.cluster(i).succ.get(&j).copied().unwrap_or(0)
    }

    pub fn left_count(&self, i: ClusterId) -> u64 {
        self.cluster(i).left_count
    }

    pub fn right_count(&self, i: ClusterId) -> u64 {
        self.cluster(i).right_count
    }

    /// Joint probability p(i, j).
    pub fn joint(&self, i: ClusterId, j: ClusterId) -> f64 {
        self.joint_count(i, j) as f64 / self.norm
    }

    /// Left marginal pl(i).
    pub fn pl(&self, i: ClusterId) -> f64 {
        self.left_count(i) as f64 / self.norm
    }

    /// Right marginal pr(i).
    pub fn pr(&self, i: ClusterId) -> f64 {
        self.right_count(i) as f64 / self.norm
    }

    /// One MI summand from raw counts under this set's normalization.
    pub fn mi_from_counts(&self, joint: u64, left: u64, right: u64) -> f64 {
        self.mi_term(joint, left, right)
    }

    fn mi_term(&self, joint: u64, left: u64, right: u64) -> f64 {
        if joint == 0 {
            return 0.0;
        }
        let p = joint as f64 / self.norm;
        let pl = left as f64 / self.norm;
        let pr = right as f64 / self.norm;
        p * (p / (pl * pr)).log2()
    }

    /// MI(i, j) = p(i,j) * log2(p(i,j) / (pl(i) * pr(j))), with the
    /// 0 * log 0 := 0 convention.
    pub fn mutual_information(&self, i: ClusterId, j: ClusterId) -> Result<f64> {
        let joint = self.joint_count(i, j);
        let left = self.left_count(i);
        let right = self.right_count(j);
        if joint > 0 && (left == 0 || right == 0) {
            return Err(Error::InconsistentMarginals(i, j));
        }
        Ok(self.mi_term(joint, left, right))
    }

    /// AMI: sum of MI over all ordered pairs of live clusters, i = j included.
    pub fn average_mutual_information(&self) -> f64 {
        let mut sum = 0.0;
        for cluster in self.clusters.iter().flatten() {
            for (&m, &count) in &cluster.succ {
                sum += self.mi_term(count, cluster.left_count, self.right_count(m));
            }
        }
        sum
    }

    /// The additive merge identities for clusters `i + j` against `m`:
    /// `(p(i+j, m), p(m, i+j), pl(i+j), pr(i+j))`. Passing `m = i` or
    /// `m = j` stands for the merged cluster itself, where both joint
    /// slots carry the four-way sum p(i+j, i+j).
    pub fn merged_probabilities(
        &self,
        i: ClusterId,
        j: ClusterId,
        m: ClusterId,
    ) -> Result<(f64, f64, f64, f64)> {
        if i == j {
            return Err(Error::SelfMerge(i));
        }
        let pl = self.pl(i) + self.pl(j);
        let pr = self.pr(i) + self.pr(j);
        if m == i || m == j {
            let self_joint = (self.joint_count(i, i)
                + self.joint_count(i, j)
                + self.joint_count(j, i)
                + self.joint_count(j, j)) as f64
                / self.norm;
            return Ok((self_joint, self_joint, pl, pr));
        }
        let out = self.joint(i, m) + self.joint(j, m);
        let inc = self.joint(m, i) + self.joint(m, j);
        Ok((out, inc, pl, pr))
    }

    /// L(i, j): the AMI difference caused by merging `i` and `j`,
    /// evaluated by re-summing every affected MI term. Tiny negative
    /// results in (-1e-12, 0) are clamped to 0.
    pub fn merge_loss(&self, i: ClusterId, j: ClusterId) -> Result<f64> {
        if i == j {
            return Err(Error::SelfMerge(i));
        }
        let a = self.cluster(i);
        let b = self.cluster(j);

        // Every current term with i or j on either side, counted once.
        let mut old = 0.0;
        for (&m, &c) in &a.succ {
            old += self.mi_term(c, a.left_count, self.right_count(m));
        }
        for (&m, &c) in &a.pred {
            if m != i {
                old += self.mi_term(c, self.left_count(m), a.right_count);
            }
        }
        for (&m, &c) in &b.succ {
            if m != i {
                old += self.mi_term(c, b.left_count, self.right_count(m));
            }
        }
        for (&m, &c) in &b.pred {
            if m != i && m != j {
                old += self.mi_term(c, self.left_count(m), b.right_count);
            }
        }

        let left_count = a.left_count + b.left_count;
        let right_count = a.right_count + b.right_count;
        let mut succ = a.succ.clone();
        for (&m, &c) in &b.succ {
            *succ.entry(m).or_insert(0) += c;
        }
        let mut pred = a.pred.clone();
        for (&m, &c) in &b.pred {
            *pred.entry(m).or_insert(0) += c;
        }
        let self_joint =
            succ.remove(&i).unwrap_or(0) + succ.remove(&j).unwrap_or(0);
        pred.remove(&i);
        pred.remove(&j);

        let mut new = self.mi_term(self_joint, left_count, right_count);
        for (&m, &c) in &succ {
            new += self.mi_term(c, left_count, self.right_count(m));
        }
        for (&m, &c) in &pred {
            new += self.mi_term(c, self.left_count(m), right_count);
        }

        let mut loss = old - new;
        if loss > -1e-12 && loss < 0.0 {
            loss = 0.0;
        }
        Ok(loss)
    }

    /// Merge cluster `j` into cluster `i`. Returns the loss that was
    /// subtracted from the maintained AMI.
    pub fn merge(&mut self, i: ClusterId, j: ClusterId) -> Result<f64> {
        let loss = self.merge_loss(i, j)?;
        let b = self.clusters[j].take().expect("dead cluster id");
        let a = self.clusters[i].as_mut().expect("dead cluster id");

        for &w in &b.members {
            self.word_cluster[w as usize] = Some(i);
        }
        a.members.extend_from_slice(&b.members);

        for (m, c) in b.succ {
            *a.succ.entry(m).or_insert(0) += c;
        }
        for (m, c) in b.pred {
            *a.pred.entry(m).or_insert(0) += c;
        }
        let self_joint = a.succ.remove(&i).unwrap_or(0) + a.succ.remove(&j).unwrap_or(0);
        a.pred.remove(&i);
        a.pred.remove(&j);
        if self_joint > 0 {
            a.succ.insert(i, self_joint);
            a.pred.insert(i, self_joint);
        }
        a.left_count += b.left_count;
        a.right_count += b.right_count;

        let succ: Vec<(ClusterId, u64)> = a
            .succ
            .iter()
            .filter(|&(&m, _)| m != i)
            .map(|(&m, &c)| (m, c))
            .collect();
        let pred: Vec<(ClusterId, u64)> = a
            .pred
            .iter()
            .filter(|&(&m, _)| m != i)
            .map(|(&m, &c)| (m, c))
            .collect();
        for (m, c) in succ {
            let other = self.clusters[m].as_mut().expect("dead partner");
            other.pred.remove(&j);
            other.pred.insert(i, c);
        }
        for (m, c) in pred {
            let other = self.clusters[m].as_mut().expect("dead partner");
            other.succ.remove(&j);
            other.succ.insert(i, c);
        }

        self.live -= 1;
        self.ami -= loss;
        self.version += 1;
        Ok(loss)
    }

    /// Materialize a singleton cluster for `word` from the bigram table.
    /// Its joint counts against every live cluster (and itself) are filled
    /// in; the AMI grows by the new nonnegative terms.
    pub fn include_word(&mut self, word: WordId, table: &BigramTable) -> Result<ClusterId> {
        if self.word_cluster[word as usize].is_some() {
            return Err(Error::WordAlreadyIncluded(word));
        }
        let id = self.clusters.len();
        let mut succ = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for &(b, c) in table.successors(word) {
            let partner = if b == word {
                Some(id)
            } else {
                self.word_cluster[b as usize]
            };
            if let Some(partner) = partner {
                *succ.entry(partner).or_insert(0) += c as u64;
            }
        }
        for &(a, c) in table.predecessors(word) {
            let partner = if a == word {
                Some(id)
            } else {
                self.word_cluster[a as usize]
            };
            if let Some(partner) = partner {
                *pred.entry(partner).or_insert(0) += c as u64;
            }
        }
        let left_count = table.left_total(word);
        let right_count = table.right_total(word);

        let mut delta = 0.0;
        for (&m, &c) in &succ {
            if m == id {
                delta += self.mi_term(c, left_count, right_count);
            } else {
                delta += self.mi_term(c, left_count, self.right_count(m));
            }
        }
        for (&m, &c) in &pred {
            if m != id {
                delta += self.mi_term(c, self.left_count(m), right_count);
            }
        }
        for (&m, &c) in &succ {
            if m != id {
                self.clusters[m].as_mut().unwrap().pred.insert(id, c);
            }
        }
        for (&m, &c) in &pred {
            if m != id {
                self.clusters[m].as_mut().unwrap().succ.insert(id, c);
            }
        }

        self.clusters.push(Some(Cluster {
            members: vec![word],
            succ,
            pred,
            left_count,
            right_count,
        }));
        self.word_cluster[word as usize] = Some(id);
        self.live += 1;
        self.ami += delta;
        self.version += 1;
        Ok(id)
    }
}
