//! The four clustering drivers.
//!
//! * `BROWN` — windowed greedy merging: seed the window with the C+1 most
//!   frequent words, then alternate one lowest-loss merge with one
//!   inclusion until the vocabulary is exhausted and the window has been
//!   merged down to C clusters.
//! * `BROWN_NW` — no window: all words start as singleton clusters and
//!   |V| - C unrestricted merges are performed.
//! * `ALLSAME` — includes whole equal-frequency tiers at once and only
//!   allows merges whose left cluster is a citizen (was in the window
//!   before the latest mass inclusion).
//! * `RESORT` — BROWN, but every R merges the not-yet-included words are
//!   re-sorted by the mutual information they share with the current
//!   window clusters.
//!
//! All drivers are deterministic for a fixed dataset and parameters,
//! independent of the worker thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::{Dataset, WordId};
use crate::error::Error;
use crate::infotheory::{ClusterSet, MergeCandidate};
use crate::window::WindowState;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Brown,
    BrownNw,
    Allsame,
    Resort,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Brown => "brown",
            Algorithm::BrownNw => "brown-nw",
            Algorithm::Allsame => "allsame",
            Algorithm::Resort => "resort",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        match s {
            "brown" => Ok(Algorithm::Brown),
            "brown-nw" | "brown_nw" => Ok(Algorithm::BrownNw),
            "allsame" => Ok(Algorithm::Allsame),
            "resort" => Ok(Algorithm::Resort),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// One merge step: positions at merge time, the loss paid, the AMI right
/// after the merge (before any inclusion that follows it) and the window
/// size at the end of the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressionRecord {
    pub iteration: usize,
    pub pos_i: usize,
    pub pos_j: usize,
    pub loss: f64,
    pub ami_after: f64,
    pub window_size: usize,
}

/// Per-merge AMI progression of a complete run; one record per merge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgressionLog {
    pub records: Vec<ProgressionRecord>,
}

impl ProgressionLog {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iteration,pos_i,pos_j,loss_bits,ami_bits,window_size")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.iteration, r.pos_i, r.pos_j, r.loss, r.ami_after, r.window_size
            )?;
        }
        Ok(())
    }
}

/// A finished clustering: a total assignment of word ids onto cluster
/// indices `0..C-1` plus the final AMI.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignment: Vec<u32>,
    pub final_ami: f64,
    pub algorithm: Option<Algorithm>,
    pub num_clusters: usize,
    pub resort_interval: Option<usize>,
}

impl ClusteringResult {
    /// Rebuild a result from a bare word -> cluster assignment, computing
    /// the AMI of that clustering from the dataset counts.
    pub fn from_assignment(assignment: Vec<u32>, dataset: &Dataset) -> Result<ClusteringResult> {
        if assignment.len() != dataset.vocab.len() {
            return Err(Error::ClusteringMismatch {
                expected: dataset.vocab.len(),
                got: assignment.len(),
            });
        }
        let num_clusters = assignment.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let final_ami = ami_of_assignment(dataset, &assignment);
        Ok(ClusteringResult {
            assignment,
            final_ami,
            algorithm: None,
            num_clusters,
            resort_interval: None,
        })
    }

    pub fn cluster_of(&self, word: WordId) -> u32 {
        self.assignment[word as usize]
    }

    /// Tab-separated export, one `cluster_id<TAB>word<TAB>frequency` row
    /// per word, sorted by cluster, then frequency descending, then word
    /// id.
    pub fn write_clusters_tsv<W: Write>(&self, dataset: &Dataset, w: &mut W) -> Result<()> {
        let mut rows: Vec<WordId> = dataset.vocab.ids().collect();
        rows.sort_by_key(|&id| {
            (
                self.cluster_of(id),
                std::cmp::Reverse(dataset.vocab.freq(id)),
                id,
            )
        });
        for id in rows {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.cluster_of(id),
                dataset.vocab.word(id),
                dataset.vocab.freq(id)
            )?;
        }
        Ok(())
    }

    /// Read an assignment back from the tab-separated export. Every word
    /// of the dataset vocabulary must appear exactly once.
    pub fn read_clusters_tsv<R: BufRead>(dataset: &Dataset, r: &mut R) -> Result<ClusteringResult> {
        let mut assignment = vec![u32::MAX; dataset.vocab.len()];
        let mut seen = 0usize;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let bad = |detail: String| Error::DatasetFormat {
                section: "clusters",
                detail: format!("line {}: {detail}", i + 1),
            };
            let cluster: u32 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("missing cluster id".into()))?;
            let word = parts.next().ok_or_else(|| bad("missing word".into()))?;
            let id = dataset
                .vocab
                .id_of(word)
                .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
            if assignment[id as usize] != u32::MAX {
                return Err(bad(format!("duplicate word {word:?}")));
            }
            assignment[id as usize] = cluster;
            seen += 1;
        }
        if seen != dataset.vocab.len() {
            return Err(Error::ClusteringMismatch {
                expected: dataset.vocab.len(),
                got: seen,
            });
        }
        ClusteringResult::from_assignment(assignment, dataset)
    }
}

/// AMI of an arbitrary complete assignment, summed directly from the
/// dataset bigram counts with global marginals.
pub fn ami_of_assignment(dataset: &Dataset, assignment: &[u32]) -> f64 {
    let norm = dataset.token_count() as f64;
    let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for a in dataset.vocab.ids() {
        for &(b, c) in dataset.bigrams.successors(a) {
            *joint
                .entry((assignment[a as usize], assignment[b as usize]))
                .or_insert(0) += c as u64;
        }
    }
    let mut pl: BTreeMap<u32, u64> = BTreeMap::new();
    let mut pr: BTreeMap<u32, u64> = BTreeMap::new();
    for (&(i, j), &c) in &joint {
        *pl.entry(i).or_insert(0) += c;
        *pr.entry(j).or_insert(0) += c;
    }
    let mut sum = 0.0;
    for (&(i, j), &c) in &joint {
        let p = c as f64 / norm;
        sum += p * (p / ((pl[&i] as f64 / norm) * (pr[&j] as f64 / norm))).log2();
    }
    sum
}

/// Mutual information between a not-yet-included word (as a singleton
/// with global marginals) and every cluster in the window, summed over
/// both directions.
pub fn resort_key(word: WordId, _window: &WindowState, probs: &ClusterSet, dataset: &Dataset) -> f64 {
    let table = &dataset.bigrams;
    let mut succ: BTreeMap<usize, u64> = BTreeMap::new();
    let mut pred: BTreeMap<usize, u64> = BTreeMap::new();
    for &(b, c) in table.successors(word) {
        if b == word {
            continue;
        }
        if let Some(q) = probs.cluster_of(b) {
            *succ.entry(q).or_insert(0) += c as u64;
        }
    }
    for &(a, c) in table.predecessors(word) {
        if a == word {
            continue;
        }
        if let Some(q) = probs.cluster_of(a) {
            *pred.entry(q).or_insert(0) += c as u64;
        }
    }
    let left = table.left_total(word);
    let right = table.right_total(word);
    let mut key = 0.0;
    for (&q, &c) in &succ {
        key += probs.mi_from_counts(c, left, probs.right_count(q));
    }
    for (&q, &c) in &pred {
        key += probs.mi_from_counts(c, probs.left_count(q), right);
    }
    key
}

fn validate(dataset: &Dataset, c: usize) -> Result<()> {
    if c < 2 {
        return Err(Error::InvalidConfig(format!("C must be at least 2, got {c}")));
    }
    if dataset.vocab.len() < c {
        return Err(Error::VocabularyTooSmall {
            vocab: dataset.vocab.len(),
            clusters: c,
        });
    }
    Ok(())
}

struct Run {
    probs: ClusterSet,
    window: WindowState,
    log: ProgressionLog,
}

impl Run {
    fn new(dataset: &Dataset) -> Self {
        Run {
            probs: ClusterSet::for_dataset(dataset),
            window: WindowState::new(),
            log: ProgressionLog::default(),
        }
    }

    fn include(&mut self, dataset: &Dataset, word: WordId) -> Result<()> {
        self.window.include(&mut self.probs, word, &dataset.bigrams)?;
        Ok(())
    }

    fn merge_best(&mut self) -> Result<MergeCandidate> {
        let cand = self.window.best_merge(&self.probs)?;
        self.window.apply_merge(&mut self.probs, &cand)?;
        Ok(cand)
    }

    fn record(&mut self, iteration: usize, cand: &MergeCandidate, ami_after: f64) {
        self.log.records.push(ProgressionRecord {
            iteration,
            pos_i: cand.pos_left,
            pos_j: cand.pos_right,
            loss: cand.loss,
            ami_after,
            window_size: self.window.size(),
        });
    }

    fn finish(
        self,
        dataset: &Dataset,
        algorithm: Algorithm,
        c: usize,
        resort_interval: Option<usize>,
    ) -> (ClusteringResult, ProgressionLog) {
        debug_assert_eq!(self.window.size(), c);
        let mut assignment = vec![0u32; dataset.vocab.len()];
        for (index, pos) in self.window.clusters().iter().enumerate() {
            for &w in self.probs.members(*pos) {
                assignment[w as usize] = index as u32;
            }
        }
        // Recompute the final AMI from the class-aggregated integer
        // counts. Unlike the incremental accumulator this does not
        // depend on merge history, so equal clusterings report
        // bit-identical AMIs.
        let final_ami = ami_of_assignment(dataset, &assignment);
        let result = ClusteringResult {
            assignment,
            final_ami,
            algorithm: Some(algorithm),
            num_clusters: c,
            resort_interval,
        };
        (result, self.log)
    }
}

/// Windowed Brown clustering.
pub fn run_brown(dataset: &Dataset, c: usize) -> Result<(ClusteringResult, ProgressionLog)> {
    windowed(dataset, c, None, Algorithm::Brown)
}

/// BROWN with periodic re-sorting of the not-yet-included words.
pub fn run_resort(
    dataset: &Dataset,
    c: usize,
    interval: usize,
) -> Result<(ClusteringResult, ProgressionLog)> {
    if interval < 1 {
        return Err(Error::InvalidConfig(format!(
            "resort interval must be at least 1, got {interval}"
        )));
    }
    windowed(dataset, c, Some(interval), Algorithm::Resort)
}

fn windowed(
    dataset: &Dataset,
    c: usize,
    resort_interval: Option<usize>,
    algorithm: Algorithm,
) -> Result<(ClusteringResult, ProgressionLog)> {
    validate(dataset, c)?;
    let mut order = dataset.inclusion_order();
    let vocab_size = order.len();
    let mut run = Run::new(dataset);
    let seed = (c + 1).min(vocab_size);
    for &w in &order[..seed] {
        run.include(dataset, w)?;
    }
    let mut cursor = seed;

    for iteration in 0..vocab_size - c {
        run.window.set_merge_limit(run.window.size());
        let cand = run.merge_best()?;
        let ami_after = run.probs.ami();
        if cursor < vocab_size {
            run.include(dataset, order[cursor])?;
            cursor += 1;
        }
        run.record(iteration, &cand, ami_after);

        if let Some(interval) = resort_interval {
            if (iteration + 1) % interval == 0 && cursor < vocab_size {
                let rest = &mut order[cursor..];
                let keys: Vec<f64> = rest
                    .iter()
                    .map(|&w| resort_key(w, &run.window, &run.probs, dataset))
                    .collect();
                let mut indices: Vec<usize> = (0..rest.len()).collect();
                // stable: equal keys keep their prior relative order
                indices.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap());
                let sorted: Vec<WordId> = indices.iter().map(|&i| rest[i]).collect();
                rest.copy_from_slice(&sorted);
            }
        }
    }
    Ok(run.finish(dataset, algorithm, c, resort_interval))
}

/// Non-windowed Brown clustering: every word is a singleton cluster up
/// front and |V| - C unrestricted lowest-loss merges are performed.
pub fn run_brown_nw(dataset: &Dataset, c: usize) -> Result<(ClusteringResult, ProgressionLog)> {
    validate(dataset, c)?;
    let order = dataset.inclusion_order();
    let vocab_size = order.len();
    let mut run = Run::new(dataset);
    for &w in &order {
        run.include(dataset, w)?;
    }
    for iteration in 0..vocab_size - c {
        run.window.set_merge_limit(run.window.size());
        let cand = run.merge_best()?;
        let ami_after = run.probs.ami();
        run.record(iteration, &cand, ami_after);
    }
    Ok(run.finish(dataset, Algorithm::BrownNw, c, None))
}

/// ALLSAME: mass-include whole equal-frequency tiers and require the left
/// side of every merge to be a citizen cluster.
pub fn run_allsame(dataset: &Dataset, c: usize) -> Result<(ClusteringResult, ProgressionLog)> {
    validate(dataset, c)?;
    let order = dataset.inclusion_order();
    let vocab_size = order.len();
    let mut run = Run::new(dataset);

    // Initial inclusion: take words until a frequency change past
    // position C+1; merge_limit is the start of the tier containing the
    // word at position C+1.
    let mut merge_limit = 0;
    let mut previous_freq = 0;
    let mut cursor = 0;
    while cursor < vocab_size {
        let freq = dataset.vocab.freq(order[cursor]);
        if freq != previous_freq {
            if cursor <= c + 1 {
                merge_limit = cursor;
                previous_freq = freq;
            } else {
                break;
            }
        }
        run.include(dataset, order[cursor])?;
        cursor += 1;
    }
    // a corpus whose top tier runs past position C+1 has no second tier
    // to mark the boundary; keep at least one mergeable left position
    merge_limit = merge_limit.max(1);

    for iteration in 0..vocab_size - c {
        run.window.set_merge_limit(merge_limit);
        let cand = run.merge_best()?;
        let ami_after = run.probs.ami();
        let both_citizens = cand.pos_right < merge_limit;

        if run.window.size() == c {
            merge_limit = c;
            if cursor < vocab_size {
                let tier = dataset.vocab.freq(order[cursor]);
                while cursor < vocab_size && dataset.vocab.freq(order[cursor]) == tier {
                    run.include(dataset, order[cursor])?;
                    cursor += 1;
                }
            }
        } else if both_citizens {
            merge_limit -= 1;
        }
        run.record(iteration, &cand, ami_after);
    }
    Ok(run.finish(dataset, Algorithm::Allsame, c, None))
}
