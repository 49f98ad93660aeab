//! Shared fixtures and an independent from-scratch oracle.
//!
//! The oracle recomputes everything naively from the raw token list:
//! string-keyed bigram counts, cluster probabilities summed per pair of
//! word sets, and exhaustive enumeration of merge candidates. It shares
//! no code with the library beyond the documented tie rules, so
//! agreement between the two is meaningful.

// each test binary uses its own subset of these helpers
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::distributions::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FIGURE_A: &str = "the dog chased the cats .\n\
                            the dog scared the cats .\n\
                            the cats ran away .\n\
                            Alice likes cats .\n\
                            Alice likes sports .\n";

pub const FIGURE_B: &str = "the dog chased the cats .\n\
                            Alice likes cats .\n\
                            Alice likes sports .\n\
                            the dog scared the cats .\n\
                            the cats ran away .\n";

pub const MARGRETHE: &str = "Margrethe II was born on the April 16 1940 .\n\
                             Margrethe II succeeded to the throne in 1972 ,\n\
                             becoming Her Majesty Margrethe II.\n\
                             Her Majesty Margrethe II only became heir presumptive in 1953\n\
                             when changes to the constitution allowed Margrethe to be a\n\
                             legal heir to the throne.\n";

/// The three reference clusterings of the toy corpus, with their
/// published AMI values.
pub fn reference_clusterings() -> Vec<(Vec<Vec<&'static str>>, f64)> {
    vec![
        (
            vec![
                vec!["the", "likes"],
                vec![".", "Alice", "chased", "ran", "scared", "away"],
                vec!["cats", "dog", "sports"],
            ],
            1.1411,
        ),
        (
            vec![
                vec!["the", "likes", "ran"],
                vec![".", "Alice", "chased", "scared"],
                vec!["cats", "dog", "away", "sports"],
            ],
            1.1373,
        ),
        (
            vec![
                vec!["the", "Alice", "away"],
                vec![".", "chased", "ran", "scared"],
                vec!["cats", "dog", "likes", "sports"],
            ],
            1.1218,
        ),
    ]
}

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleAlgo {
    Brown,
    BrownNw,
    Allsame,
    Resort(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    pub iteration: usize,
    pub pos_i: usize,
    pub pos_j: usize,
    pub loss: f64,
    pub ami_after: f64,
    pub window_size: usize,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub steps: Vec<OracleStep>,
    /// clusters in final window order, words sorted inside each
    pub clusters: Vec<Vec<String>>,
    pub final_ami: f64,
}

pub struct Oracle {
    tokens: Vec<String>,
    bigram: BTreeMap<(String, String), u64>,
    left_tot: BTreeMap<String, u64>,
    right_tot: BTreeMap<String, u64>,
    order: Vec<String>,
}

impl Oracle {
    pub fn new(text: &str) -> Oracle {
        let mut tokens = Vec::new();
        for chunk in text.split_whitespace() {
            let mut word = String::new();
            for ch in chunk.chars() {
                if ".,;:!?()\"'".contains(ch) {
                    if !word.is_empty() {
                        tokens.push(std::mem::take(&mut word));
                    }
                    tokens.push(ch.to_string());
                } else {
                    word.push(ch);
                }
            }
            if !word.is_empty() {
                tokens.push(word);
            }
        }
        let mut bigram = BTreeMap::new();
        let mut left_tot = BTreeMap::new();
        let mut right_tot = BTreeMap::new();
        for pair in tokens.windows(2) {
            *bigram
                .entry((pair[0].clone(), pair[1].clone()))
                .or_insert(0u64) += 1;
            *left_tot.entry(pair[0].clone()).or_insert(0u64) += 1;
            *right_tot.entry(pair[1].clone()).or_insert(0u64) += 1;
        }
        let mut freq: BTreeMap<&String, u64> = BTreeMap::new();
        let mut first: BTreeMap<&String, usize> = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            *freq.entry(t).or_insert(0) += 1;
            first.entry(t).or_insert(i);
        }
        let mut order: Vec<String> = freq.keys().map(|w| w.to_string()).collect();
        order.sort_by_key(|w| (std::cmp::Reverse(freq[w]), first[w]));
        Oracle {
            tokens,
            bigram,
            left_tot,
            right_tot,
            order,
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.order.len()
    }

    pub fn inclusion_order(&self) -> &[String] {
        &self.order
    }

    fn freq_of(&self, w: &str) -> u64 {
        self.tokens.iter().filter(|t| t.as_str() == w).count() as u64
    }

    fn joint(&self, a: &[String], b: &[String]) -> u64 {
        let mut n = 0;
        for x in a {
            for y in b {
                n += self
                    .bigram
                    .get(&(x.clone(), y.clone()))
                    .copied()
                    .unwrap_or(0);
            }
        }
        n
    }

    fn pl(&self, a: &[String]) -> u64 {
        a.iter().map(|w| self.left_tot.get(w).copied().unwrap_or(0)).sum()
    }

    fn pr(&self, b: &[String]) -> u64 {
        b.iter().map(|w| self.right_tot.get(w).copied().unwrap_or(0)).sum()
    }

    fn mi(&self, a: &[String], b: &[String]) -> f64 {
        let joint = self.joint(a, b);
        if joint == 0 {
            return 0.0;
        }
        let n = self.tokens.len() as f64;
        let p = joint as f64 / n;
        let pl = self.pl(a) as f64 / n;
        let pr = self.pr(b) as f64 / n;
        p * (p / (pl * pr)).log2()
    }

    pub fn ami(&self, window: &[Vec<String>]) -> f64 {
        let mut sum = 0.0;
        for a in window {
            for b in window {
                sum += self.mi(a, b);
            }
        }
        sum
    }

    fn merge_loss(&self, window: &[Vec<String>], i: usize, j: usize) -> f64 {
        let mut merged: Vec<Vec<String>> = Vec::new();
        for (k, c) in window.iter().enumerate() {
            if k == i {
                let mut u = c.clone();
                u.extend_from_slice(&window[j]);
                merged.push(u);
            } else if k != j {
                merged.push(c.clone());
            }
        }
        let loss = self.ami(window) - self.ami(&merged);
        if loss > -1e-12 && loss < 0.0 {
            0.0
        } else {
            loss
        }
    }

    fn best(&self, window: &[Vec<String>], limit: usize) -> (usize, usize, f64) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..limit.min(window.len()) {
            for j in (i + 1)..window.len() {
                let loss = self.merge_loss(window, i, j);
                match best {
                    Some((_, _, b)) if loss >= b - TIE_EPS => {}
                    _ => best = Some((i, j, loss)),
                }
            }
        }
        best.expect("window has a mergeable pair")
    }

    fn resort_key(&self, word: &str, window: &[Vec<String>]) -> f64 {
        let singleton = vec![word.to_string()];
        window
            .iter()
            .map(|q| self.mi(&singleton, q) + self.mi(q, &singleton))
            .sum()
    }

    pub fn run(&self, algo: OracleAlgo, c: usize) -> OracleRun {
        let vocab_size = self.order.len();
        assert!(vocab_size > c && c >= 2);
        let mut order = self.order.clone();
        let mut window: Vec<Vec<String>> = Vec::new();
        let mut steps = Vec::new();

        let (mut cursor, mut merge_limit) = match algo {
            OracleAlgo::BrownNw => {
                for w in &order {
                    window.push(vec![w.clone()]);
                }
                (vocab_size, usize::MAX)
            }
            OracleAlgo::Brown | OracleAlgo::Resort(_) => {
                for w in &order[..c + 1] {
                    window.push(vec![w.clone()]);
                }
                (c + 1, usize::MAX)
            }
            OracleAlgo::Allsame => {
                let mut limit = 0;
                let mut prev = 0;
                let mut cur = 0;
                while cur < vocab_size {
                    let f = self.freq_of(&order[cur]);
                    if f != prev {
                        if cur <= c + 1 {
                            limit = cur;
                            prev = f;
                        } else {
                            break;
                        }
                    }
                    window.push(vec![order[cur].clone()]);
                    cur += 1;
                }
                (cur, limit.max(1))
            }
        };

        for iteration in 0..vocab_size - c {
            let limit = merge_limit.min(window.len());
            let (i, j, loss) = self.best(&window, limit);
            let right = window.remove(j);
            window[i].extend(right);
            let ami_after = self.ami(&window);
            let both_citizens = j < limit;

            match algo {
                OracleAlgo::Brown | OracleAlgo::Resort(_) => {
                    if cursor < vocab_size {
                        window.push(vec![order[cursor].clone()]);
                        cursor += 1;
                    }
                }
                OracleAlgo::BrownNw => {}
                OracleAlgo::Allsame => {
                    if window.len() == c {
                        merge_limit = c;
                        if cursor < vocab_size {
                            let tier = self.freq_of(&order[cursor]);
                            while cursor < vocab_size && self.freq_of(&order[cursor]) == tier {
                                window.push(vec![order[cursor].clone()]);
                                cursor += 1;
                            }
                        }
                    } else if both_citizens {
                        merge_limit -= 1;
                    }
                }
            }
            steps.push(OracleStep {
                iteration,
                pos_i: i,
                pos_j: j,
                loss,
                ami_after,
                window_size: window.len(),
            });

            if let OracleAlgo::Resort(interval) = algo {
                if (iteration + 1) % interval == 0 && cursor < vocab_size {
                    let rest = order[cursor..].to_vec();
                    let keys: Vec<f64> =
                        rest.iter().map(|w| self.resort_key(w, &window)).collect();
                    let mut idx: Vec<usize> = (0..rest.len()).collect();
                    idx.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap());
                    for (slot, &src) in idx.iter().enumerate() {
                        order[cursor + slot] = rest[src].clone();
                    }
                }
            }
        }

        let final_ami = self.ami(&window);
        let mut clusters: Vec<Vec<String>> = window;
        for c in &mut clusters {
            c.sort();
        }
        OracleRun {
            steps,
            clusters,
            final_ami,
        }
    }
}

/// Deterministic small random corpus for oracle cross-checks. At least
/// five distinct words, 15 to 30 tokens.
pub fn random_corpus(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"];
    let len = rng.gen_range(15..=30);
    let mut tokens: Vec<&str> = alphabet[..5].to_vec();
    while tokens.len() < len {
        tokens.push(alphabet[rng.gen_range(0..alphabet.len())]);
    }
    tokens.shuffle(&mut rng);
    tokens.join(" ")
}

/// The fixed synthetic corpus for the windowed-vs-non-windowed
/// comparison: 40 word types, 400 tokens, Zipf-distributed frequencies,
/// seed 7.
pub fn zipf_corpus() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zipf = rand_distr::Zipf::new(40, 1.07).unwrap();
    let tokens: Vec<String> = (0..400)
        .map(|_| {
            let rank = zipf.sample(&mut rng) as usize;
            format!("w{:02}", rank - 1)
        })
        .collect();
    tokens.join(" ")
}
