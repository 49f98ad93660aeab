//! Class-based bigram language model: a word predicts its class from the
//! previous word's class, then the word from its class. Trained by
//! maximum likelihood from a clustering and the dataset counts, with no
//! smoothing; evaluation applies a probability floor inside perplexity
//! only.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::algorithms::ClusteringResult;
use crate::corpus::{Dataset, TokenStream, Vocabulary, WordId};
use crate::error::Error;
use crate::Result;

/// Probability floor applied to zero (and tiny) transition factors when
/// accumulating perplexity.
pub const DEFAULT_FLOOR: f64 = 1e-12;

const MODEL_FORMAT_VERSION: u32 = 1;

/// P(w_k | w_{k-1}) = emit(w_k) * trans(class(w_{k-1}), class(w_k)).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLanguageModel {
    words: Vec<String>,
    index: HashMap<String, WordId>,
    class_of: Vec<u32>,
    emit: Vec<f64>,
    trans: Vec<BTreeMap<u32, f64>>,
    num_classes: usize,
    floor_default: f64,
}

/// Evaluation of a model against a test stream. `perplexity_n` is the
/// probability product over scored transitions without the Nth root; it
/// is `None` when the product overflows f64, in which case only the log2
/// value is usable.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cpa: f64,
    pub correct: u64,
    pub log2_perplexity_n: f64,
    pub perplexity_n: Option<f64>,
    pub scored: u64,
    pub skipped_oov: u64,
}

impl ClassLanguageModel {
    /// Maximum-likelihood fit: trans(c', c) is the class bigram count
    /// over the left class count, emit(w) is the word frequency over its
    /// class frequency.
    pub fn train(clustering: &ClusteringResult, dataset: &Dataset) -> Result<ClassLanguageModel> {
        let vocab = &dataset.vocab;
        if clustering.assignment.len() != vocab.len() {
            return Err(Error::ClusteringMismatch {
                expected: vocab.len(),
                got: clustering.assignment.len(),
            });
        }
        let num_classes = clustering.num_clusters;
        let class_of = clustering.assignment.clone();

        let mut class_freq = vec![0u64; num_classes];
        for id in vocab.ids() {
            class_freq[class_of[id as usize] as usize] += u64::from(vocab.freq(id));
        }
        let emit: Vec<f64> = vocab
            .ids()
            .map(|id| {
                f64::from(vocab.freq(id)) / class_freq[class_of[id as usize] as usize] as f64
            })
            .collect();

        let mut pair_counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        let mut left_counts = vec![0u64; num_classes];
        for a in vocab.ids() {
            let ca = class_of[a as usize];
            for &(b, n) in dataset.bigrams.successors(a) {
                let cb = class_of[b as usize];
                *pair_counts.entry((ca, cb)).or_insert(0) += u64::from(n);
                left_counts[ca as usize] += u64::from(n);
            }
        }
        let mut trans: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); num_classes];
        for ((ca, cb), n) in pair_counts {
            trans[ca as usize].insert(cb, n as f64 / left_counts[ca as usize] as f64);
        }

        let words: Vec<String> = vocab.ids().map(|id| vocab.word(id).to_string()).collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        Ok(ClassLanguageModel {
            words,
            index,
            class_of,
            emit,
            trans,
            num_classes,
            floor_default: DEFAULT_FLOOR,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn vocab_len(&self) -> usize {
        self.words.len()
    }

    pub fn floor_default(&self) -> f64 {
        self.floor_default
    }

    pub fn id_of(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn class_of(&self, id: WordId) -> u32 {
        self.class_of[id as usize]
    }

    pub fn emit(&self, id: WordId) -> f64 {
        self.emit[id as usize]
    }

    pub fn trans(&self, from: u32, to: u32) -> f64 {
        self.trans[from as usize].get(&to).copied().unwrap_or(0.0)
    }

    /// P(next | prev) without any floor; 0 for unseen class transitions.
    pub fn word_probability(&self, prev: WordId, next: WordId) -> Result<f64> {
        if prev as usize >= self.words.len() {
            return Err(Error::OutOfVocabulary(format!("word id {prev}")));
        }
        if next as usize >= self.words.len() {
            return Err(Error::OutOfVocabulary(format!("word id {next}")));
        }
        Ok(self.emit[next as usize] * self.trans(self.class_of[prev as usize], self.class_of[next as usize]))
    }

    fn best_next_class(&self, from: u32) -> u32 {
        // ties go to the lowest class index; the strict comparison over
        // ascending keys keeps the first maximum
        let mut best = 0u32;
        let mut best_p = 0.0;
        for (&c, &p) in &self.trans[from as usize] {
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        best
    }

    /// The most likely next class after `prev`, and the most frequent
    /// word in that class. Ties fall to the lowest class index and the
    /// lowest word id.
    pub fn predict_next(&self, prev: WordId) -> Result<(u32, WordId)> {
        if prev as usize >= self.words.len() {
            return Err(Error::OutOfVocabulary(format!("word id {prev}")));
        }
        let class = self.best_next_class(self.class_of[prev as usize]);
        let mut word = None;
        let mut best_p = f64::NEG_INFINITY;
        for (id, &c) in self.class_of.iter().enumerate() {
            if c == class && self.emit[id] > best_p {
                word = Some(id as WordId);
                best_p = self.emit[id];
            }
        }
        // every class index comes from a trained assignment, so it has
        // at least one member
        Ok((class, word.expect("class has a member")))
    }

    fn map_stream(&self, stream: &TokenStream, vocab: &Vocabulary) -> Vec<Option<WordId>> {
        let by_test_id: Vec<Option<WordId>> =
            vocab.ids().map(|id| self.id_of(vocab.word(id))).collect();
        stream
            .tokens
            .iter()
            .map(|&t| by_test_id[t as usize])
            .collect()
    }

    /// Scored transitions, correct class predictions, skipped (OOV)
    /// transitions, and the log2 of the perplexity product.
    fn score(
        &self,
        stream: &TokenStream,
        vocab: &Vocabulary,
        floor: f64,
    ) -> Result<(u64, u64, u64, f64)> {
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "floor must be in (0, 1], got {floor}"
            )));
        }
        let mapped = self.map_stream(stream, vocab);
        let mut scored = 0u64;
        let mut correct = 0u64;
        let mut skipped = 0u64;
        let mut log2_pp = 0.0f64;
        for pair in mapped.windows(2) {
            let (prev, next) = match (pair[0], pair[1]) {
                (Some(p), Some(n)) => (p, n),
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            scored += 1;
            let p = self.word_probability(prev, next)?;
            log2_pp -= p.max(floor).log2();
            let predicted = self.best_next_class(self.class_of[prev as usize]);
            if predicted == self.class_of[next as usize] {
                correct += 1;
            }
        }
        if scored == 0 {
            return Err(Error::NoScorableBigrams);
        }
        Ok((scored, correct, skipped, log2_pp))
    }

    /// Perplexity product over the test stream without the Nth root,
    /// reported as its log2. Transitions touching a word outside the
    /// model vocabulary are skipped.
    pub fn perplexity_n(&self, stream: &TokenStream, vocab: &Vocabulary, floor: f64) -> Result<f64> {
        let (_, _, _, log2_pp) = self.score(stream, vocab, floor)?;
        Ok(log2_pp)
    }

    /// Fraction of scored transitions whose most likely next class is
    /// the class of the actual next word.
    pub fn cpa(&self, stream: &TokenStream, vocab: &Vocabulary) -> Result<f64> {
        let (scored, correct, _, _) = self.score(stream, vocab, DEFAULT_FLOOR)?;
        Ok(correct as f64 / scored as f64)
    }

    /// Full evaluation in one pass over the test stream.
    pub fn evaluate(&self, stream: &TokenStream, vocab: &Vocabulary, floor: f64) -> Result<EvalReport> {
        let (scored, correct, skipped, log2_pp) = self.score(stream, vocab, floor)?;
        let pp = log2_pp.exp2();
        Ok(EvalReport {
            cpa: correct as f64 / scored as f64,
            correct,
            log2_perplexity_n: log2_pp,
            perplexity_n: pp.is_finite().then_some(pp),
            scored,
            skipped_oov: skipped,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ClassLanguageModel> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "CLM {MODEL_FORMAT_VERSION}")?;
        writeln!(w, "C {}", self.num_classes)?;
        writeln!(w, "V {}", self.words.len())?;
        writeln!(w, "FLOOR {}", self.floor_default)?;
        for (id, word) in self.words.iter().enumerate() {
            writeln!(w, "W {word} {} {}", self.class_of[id], self.emit[id])?;
        }
        for (from, row) in self.trans.iter().enumerate() {
            for (&to, &p) in row {
                writeln!(w, "T {from} {to} {p}")?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<ClassLanguageModel> {
        fn bad(line: usize, detail: impl Into<String>) -> Error {
            Error::ModelFormat {
                line,
                detail: detail.into(),
            }
        }
        fn field<T: std::str::FromStr>(line: usize, s: Option<&str>, what: &str) -> Result<T> {
            s.ok_or_else(|| bad(line, format!("missing {what}")))?
                .parse()
                .map_err(|_| bad(line, format!("unparsable {what}")))
        }

        let mut lines = r.lines().enumerate();
        let mut next_line = |tag: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(bad(0, format!("missing {tag} line"))),
            }
        };

        let (n, header) = next_line("header")?;
        let version: u32 = match header.strip_prefix("CLM ") {
            Some(v) => field(n, Some(v), "format version")?,
            None => return Err(bad(n, "expected CLM header")),
        };
        if version != MODEL_FORMAT_VERSION {
            return Err(bad(n, format!("unsupported model format version {version}")));
        }
        let (n, line) = next_line("class count")?;
        let num_classes: usize = field(n, line.strip_prefix("C "), "class count")?;
        let (n, line) = next_line("vocabulary size")?;
        let vocab_len: usize = field(n, line.strip_prefix("V "), "vocabulary size")?;
        let (n, line) = next_line("floor")?;
        let floor_default: f64 = field(n, line.strip_prefix("FLOOR "), "floor")?;
        if num_classes == 0 || vocab_len == 0 {
            return Err(bad(n, "empty model"));
        }

        let mut words = Vec::with_capacity(vocab_len);
        let mut class_of = Vec::with_capacity(vocab_len);
        let mut emit = Vec::with_capacity(vocab_len);
        let mut trans: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); num_classes];
        for (i, line) in lines {
            let n = i + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("W") => {
                    let word: String = field(n, parts.next(), "word")?;
                    let class: u32 = field(n, parts.next(), "class")?;
                    let p: f64 = field(n, parts.next(), "emission probability")?;
                    if class as usize >= num_classes {
                        return Err(bad(n, format!("class {class} out of range")));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad(n, format!("probability {p} out of range")));
                    }
                    words.push(word);
                    class_of.push(class);
                    emit.push(p);
                }
                Some("T") => {
                    let from: u32 = field(n, parts.next(), "source class")?;
                    let to: u32 = field(n, parts.next(), "target class")?;
                    let p: f64 = field(n, parts.next(), "transition probability")?;
                    if from as usize >= num_classes || to as usize >= num_classes {
                        return Err(bad(n, "class out of range"));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad(n, format!("probability {p} out of range")));
                    }
                    trans[from as usize].insert(to, p);
                }
                Some(tag) => return Err(bad(n, format!("unknown record {tag:?}"))),
                None => unreachable!("empty lines are skipped"),
            }
        }
        if words.len() != vocab_len {
            return Err(bad(
                0,
                format!("expected {vocab_len} word records, got {}", words.len()),
            ));
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        Ok(ClassLanguageModel {
            words,
            index,
            class_of,
            emit,
            trans,
            num_classes,
            floor_default,
        })
    }
}
