//! Corpus ingestion: tokenization, vocabulary construction, bigram
//! counting and dataset persistence.
//!
//! Tokens are maximal runs of non-whitespace with every punctuation mark
//! in `.,;:!?()"'` split off as its own token. Words are case-sensitive
//! (`The` and `the` are distinct). Newlines separate tokens but never
//! break bigram adjacency: the corpus is a single token stream.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::Error;
use crate::Result;

pub type WordId = u32;

const MAGIC: &[u8; 4] = b"BRWN";
const FORMAT_VERSION: u32 = 1;

const PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '"', '\''];

/// The corpus as a position-indexed sequence of word ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<WordId>,
    pub source_name: String,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Word <-> id map with per-word frequency and first-occurrence position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    freq: Vec<u32>,
    first_pos: Vec<u32>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn id_of(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn freq(&self, id: WordId) -> u32 {
        self.freq[id as usize]
    }

    pub fn first_pos(&self, id: WordId) -> u32 {
        self.first_pos[id as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = WordId> {
        0..self.words.len() as WordId
    }

    fn from_parts(words: Vec<String>, freq: Vec<u32>, first_pos: Vec<u32>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        Vocabulary {
            words,
            freq,
            first_pos,
            index,
        }
    }
}

/// Sparse corpus bigram counts with left/right adjacency indices.
///
/// `left_adj(a)` lists the partners `b` with `count(a, b) > 0`; `right_adj(b)`
/// lists the partners `a` with `count(a, b) > 0`. Adjacency lists are sorted
/// by partner id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramTable {
    right: Vec<Vec<(WordId, u32)>>,
    left: Vec<Vec<(WordId, u32)>>,
    left_totals: Vec<u64>,
    right_totals: Vec<u64>,
    n_bigrams: u64,
}

impl BigramTable {
    /// Number of times word `b` immediately follows word `a`.
    pub fn count(&self, a: WordId, b: WordId) -> u32 {
        let row = &self.right[a as usize];
        match row.binary_search_by_key(&b, |&(p, _)| p) {
            Ok(i) => row[i].1,
            Err(_) => 0,
        }
    }

    /// Successors of `a`: all `(b, count(a, b))` with nonzero count.
    pub fn successors(&self, a: WordId) -> &[(WordId, u32)] {
        &self.right[a as usize]
    }

    /// Predecessors of `b`: all `(a, count(a, b))` with nonzero count.
    pub fn predecessors(&self, b: WordId) -> &[(WordId, u32)] {
        &self.left[b as usize]
    }

    /// Total count of bigrams with `a` on the left.
    pub fn left_total(&self, a: WordId) -> u64 {
        self.left_totals[a as usize]
    }

    /// Total count of bigrams with `b` on the right.
    pub fn right_total(&self, b: WordId) -> u64 {
        self.right_totals[b as usize]
    }

    pub fn n_bigrams(&self) -> u64 {
        self.n_bigrams
    }

    fn from_pairs(pairs: &[((WordId, WordId), u32)], vocab_size: usize) -> Self {
        let mut right = vec![Vec::new(); vocab_size];
        let mut left = vec![Vec::new(); vocab_size];
        let mut left_totals = vec![0u64; vocab_size];
        let mut right_totals = vec![0u64; vocab_size];
        let mut n_bigrams = 0u64;
        for &((a, b), c) in pairs {
            right[a as usize].push((b, c));
            left[b as usize].push((a, c));
            left_totals[a as usize] += c as u64;
            right_totals[b as usize] += c as u64;
            n_bigrams += c as u64;
        }
        for row in right.iter_mut().chain(left.iter_mut()) {
            row.sort_unstable_by_key(|&(p, _)| p);
        }
        BigramTable {
            right,
            left,
            left_totals,
            right_totals,
            n_bigrams,
        }
    }
}

/// Split raw text into a token stream and its vocabulary.
pub fn tokenize(text: &str, source_name: &str) -> Result<(TokenStream, Vocabulary)> {
    let mut words: Vec<String> = Vec::new();
    let mut freq: Vec<u32> = Vec::new();
    let mut first_pos: Vec<u32> = Vec::new();
    let mut index: HashMap<String, WordId> = HashMap::new();
    let mut tokens: Vec<WordId> = Vec::new();

    let mut push = |tok: &str, tokens: &mut Vec<WordId>| {
        let id = match index.get(tok) {
            Some(&id) => {
                freq[id as usize] += 1;
                id
            }
            None => {
                let id = words.len() as WordId;
                words.push(tok.to_string());
                freq.push(1);
                first_pos.push(tokens.len() as u32);
                index.insert(tok.to_string(), id);
                id
            }
        };
        tokens.push(id);
    };

    for run in text.split_whitespace() {
        let mut start = 0;
        for (i, ch) in run.char_indices() {
            if PUNCTUATION.contains(&ch) {
                if start < i {
                    push(&run[start..i], &mut tokens);
                }
                push(&run[i..i + ch.len_utf8()], &mut tokens);
                start = i + ch.len_utf8();
            }
        }
        if start < run.len() {
            push(&run[start..], &mut tokens);
        }
    }

    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let stream = TokenStream {
        tokens,
        source_name: source_name.to_string(),
    };
    Ok((stream, Vocabulary::from_parts(words, freq, first_pos)))
}

/// Count all adjacent token pairs of the stream.
pub fn count_bigrams(stream: &TokenStream, vocab_size: usize) -> Result<BigramTable> {
    if stream.len() < 2 {
        return Err(Error::CorpusTooShort);
    }
    let mut counts: HashMap<(WordId, WordId), u32> = HashMap::new();
    for pair in stream.tokens.windows(2) {
        *counts.entry((pair[0], pair[1])).or_insert(0) += 1;
    }
    let mut pairs: Vec<_> = counts.into_iter().collect();
    pairs.sort_unstable_by_key(|&(k, _)| k);
    Ok(BigramTable::from_pairs(&pairs, vocab_size))
}

/// Inclusion ordering: frequency descending, ties by first occurrence.
pub fn order_words(vocab: &Vocabulary) -> Vec<WordId> {
    let mut ids: Vec<WordId> = vocab.ids().collect();
    ids.sort_by_key(|&id| (std::cmp::Reverse(vocab.freq(id)), vocab.first_pos(id)));
    ids
}

/// A complete persisted corpus: token stream, vocabulary and bigram table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub stream: TokenStream,
    pub vocab: Vocabulary,
    pub bigrams: BigramTable,
}

impl Dataset {
    pub fn from_text(text: &str, source_name: &str) -> Result<Dataset> {
        let (stream, vocab) = tokenize(text, source_name)?;
        let bigrams = count_bigrams(&stream, vocab.len())?;
        Ok(Dataset {
            stream,
            vocab,
            bigrams,
        })
    }

    pub fn token_count(&self) -> usize {
        self.stream.len()
    }

    pub fn inclusion_order(&self) -> Vec<WordId> {
        order_words(&self.vocab)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let mut r = BufReader::new(File::open(path)?);
        Dataset::read_from(&mut r)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;

        w.write_u32::<LittleEndian>(self.vocab.len() as u32)?;
        for id in self.vocab.ids() {
            let word = self.vocab.word(id).as_bytes();
            w.write_u32::<LittleEndian>(word.len() as u32)?;
            w.write_all(word)?;
            w.write_u32::<LittleEndian>(self.vocab.freq(id))?;
            w.write_u32::<LittleEndian>(self.vocab.first_pos(id))?;
        }

        w.write_u64::<LittleEndian>(self.stream.len() as u64)?;
        for &t in &self.stream.tokens {
            w.write_u32::<LittleEndian>(t)?;
        }

        let mut pairs: Vec<(WordId, WordId, u32)> = Vec::new();
        for a in self.vocab.ids() {
            for &(b, c) in self.bigrams.successors(a) {
                pairs.push((a, b, c));
            }
        }
        pairs.sort_unstable();
        w.write_u64::<LittleEndian>(pairs.len() as u64)?;
        for (a, b, c) in pairs {
            w.write_u32::<LittleEndian>(a)?;
            w.write_u32::<LittleEndian>(b)?;
            w.write_u32::<LittleEndian>(c)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Dataset> {
        let section = |s: &'static str, detail: String| Error::DatasetFormat { section: s, detail };

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| section("header", e.to_string()))?;
        if &magic != MAGIC {
            return Err(section("header", "bad magic bytes".into()));
        }
        let version = r
            .read_u32::<LittleEndian>()
            .map_err(|e| section("header", e.to_string()))?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch(version));
        }

        let vocab_len = r
            .read_u32::<LittleEndian>()
            .map_err(|e| section("vocabulary", e.to_string()))? as usize;
        let mut words = Vec::with_capacity(vocab_len);
        let mut freq = Vec::with_capacity(vocab_len);
        let mut first_pos = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let len = r
                .read_u32::<LittleEndian>()
                .map_err(|e| section("vocabulary", e.to_string()))? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)
                .map_err(|e| section("vocabulary", e.to_string()))?;
            let word = String::from_utf8(buf)
                .map_err(|e| section("vocabulary", e.to_string()))?;
            words.push(word);
            freq.push(
                r.read_u32::<LittleEndian>()
                    .map_err(|e| section("vocabulary", e.to_string()))?,
            );
            first_pos.push(
                r.read_u32::<LittleEndian>()
                    .map_err(|e| section("vocabulary", e.to_string()))?,
            );
        }
        let vocab = Vocabulary::from_parts(words, freq, first_pos);

        let n_tokens = r
            .read_u64::<LittleEndian>()
            .map_err(|e| section("tokens", e.to_string()))? as usize;
        let mut tokens = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            let t = r
                .read_u32::<LittleEndian>()
                .map_err(|e| section("tokens", e.to_string()))?;
            if t as usize >= vocab.len() {
                return Err(section("tokens", format!("word id {t} out of range")));
            }
            tokens.push(t);
        }

        let n_pairs = r
            .read_u64::<LittleEndian>()
            .map_err(|e| section("bigrams", e.to_string()))? as usize;
        let mut pairs = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let a = r
                .read_u32::<LittleEndian>()
                .map_err(|e| section("bigrams", e.to_string()))?;
            let b = r
                .read_u32::<LittleEndian>()
                .map_err(|e| section("bigrams", e.to_string()))?;
            let c = r
                .read_u32::<LittleEndian>()
                .map_err(|e| section("bigrams", e.to_string()))?;
            if a as usize >= vocab.len() || b as usize >= vocab.len() {
                return Err(section("bigrams", format!("word id pair ({a}, {b}) out of range")));
            }
            pairs.push(((a, b), c));
        }
        let bigrams = BigramTable::from_pairs(&pairs, vocab.len());

        Ok(Dataset {
            stream: TokenStream {
                tokens,
                source_name: String::new(),
            },
            vocab,
            bigrams,
        })
    }

    /// Plain-text debug export: one `a<TAB>b<TAB>count` line per nonzero bigram.
    pub fn export_bigrams_tsv<W: Write>(&self, w: &mut W) -> Result<()> {
        for a in self.vocab.ids() {
            for &(b, c) in self.bigrams.successors(a) {
                writeln!(w, "{}\t{}\t{}", self.vocab.word(a), self.vocab.word(b), c)?;
            }
        }
        Ok(())
    }
}
