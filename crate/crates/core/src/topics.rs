//! LDA topic modelling by collapsed Gibbs sampling, held-out inference of
//! per-document topic vectors, and Topic Similarity (cosine similarity of
//! two topic vectors).
//!
//! Sampling uses a seeded ChaCha generator and visits tokens in document
//! order, so a fit is a pure function of its inputs and parameters.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ITERATIONS: usize = 30;
pub const DEFAULT_BETA: f64 = 0.01;
pub const INFER_BURN_IN: usize = 20;
pub const INFER_SAMPLES: usize = 10;
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Common English function words, dropped from topic vocabularies by default.
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("no documents given")]
    NoDocuments,
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("documents contain no in-vocabulary tokens")]
    NoTokens,
    #[error("number of topics must be at least 2, got {0}")]
    TooFewTopics(usize),
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("prior {name} must be positive and finite, got {value}")]
    InvalidPrior { name: &'static str, value: f64 },
    #[error("topic vectors differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for an all-zero vector")]
    ZeroVector,
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
}

pub type Result<T> = std::result::Result<T, TopicError>;

#[derive(Debug, Clone, Default)]
pub struct VocabOptions {
    pub min_doc_freq: usize,
    pub stopwords: HashSet<String>,
    /// Drop tokens that contain no letter (punctuation, bare numbers).
    pub require_letter: bool,
}

impl VocabOptions {
    /// Built-in English stopwords, letter-bearing tokens only.
    pub fn english() -> Self {
        VocabOptions {
            min_doc_freq: 1,
            stopwords: ENGLISH_STOPWORDS.iter().map(|w| w.to_string()).collect(),
            require_letter: true,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

/// Term/index bijection with document frequencies. Indices follow first
/// occurrence in the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Case-insensitive lookup.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index
            .get(token)
            .or_else(|| self.index.get(&token.to_lowercase()))
            .copied()
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    /// In-vocabulary token ids of `tokens`, skipping unknown tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index_of(t.as_ref())).collect()
    }
}

pub fn build_vocab<S: AsRef<str>>(docs: &[Vec<S>], options: &VocabOptions) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(TopicError::NoDocuments);
    }
    let mut order: Vec<String> = Vec::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for token in doc {
            let term = token.as_ref().to_lowercase();
            if options.stopwords.contains(&term) || (options.require_letter && !term.chars().any(char::is_alphabetic)) {
                continue;
            }
            if seen.insert(term.clone()) {
                let count = df.entry(term.clone()).or_insert(0);
                if *count == 0 {
                    order.push(term);
                }
                *count += 1;
            }
        }
    }
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    for term in order {
        let f = df[&term];
        if f >= options.min_doc_freq {
            terms.push(term);
            doc_freq.push(f);
        }
    }
    if terms.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    Ok(VocabularyRepr { terms, doc_freq }.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl LdaParams {
    /// `alpha = 50 / K`, `beta = 0.01`, 30 sweeps, seed 0.
    pub fn new(topics: usize) -> Self {
        LdaParams {
            topics,
            iterations: DEFAULT_ITERATIONS,
            alpha: 50.0 / topics.max(1) as f64,
            beta: DEFAULT_BETA,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_priors(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.topics < 2 {
            return Err(TopicError::TooFewTopics(self.topics));
        }
        if self.iterations < 1 {
            return Err(TopicError::NoIterations);
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(TopicError::InvalidPrior { name, value });
            }
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state over integer-encoded documents.
///
/// Exposed so callers can drive sweeps one at a time and observe the topic
/// assignments; [`fit_lda`] is the usual entry point.
pub struct GibbsSampler {
    params: LdaParams,
    vocab_size: usize,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u64>>,
    // K x V, row-major
    topic_word: Vec<u64>,
    topic_totals: Vec<u64>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, params: LdaParams) -> Result<Self> {
        params.validate()?;
        if vocab_size == 0 {
            return Err(TopicError::EmptyVocabulary);
        }
        if docs.iter().all(Vec::is_empty) {
            return Err(TopicError::NoTokens);
        }
        let k = params.topics;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut doc_topic = vec![vec![0u64; k]; docs.len()];
        let mut topic_word = vec![0u64; k * vocab_size];
        let mut topic_totals = vec![0u64; k];
        let assignments: Vec<Vec<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        assert!(w < vocab_size, "word id {w} out of range");
                        let z = rng.random_range(0..k);
                        doc_topic[d][z] += 1;
                        topic_word[z * vocab_size + w] += 1;
                        topic_totals[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            params,
            vocab_size,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_totals,
            rng,
            weights: vec![0.0; k],
        })
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.params.topics;
        let v = self.vocab_size;
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let v_beta = v as f64 * beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[d][t] as f64 + alpha) * (self.topic_word[t * v + w] as f64 + beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    total += p;
                    self.weights[t] = total;
                }
                let new = sample_cumulative(&self.weights, total, &mut self.rng);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn doc_topic_counts(&self) -> &[Vec<u64>] {
        &self.doc_topic
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn topic_word_counts(&self) -> Vec<Vec<u64>> {
        self.topic_word.chunks(self.vocab_size).map(<[u64]>::to_vec).collect()
    }

    pub fn into_model(self, vocabulary: Vocabulary) -> TopicModel {
        assert_eq!(vocabulary.len(), self.vocab_size, "vocabulary size mismatch");
        TopicModel {
            version: MODEL_FORMAT_VERSION,
            topics: self.params.topics,
            alpha: self.params.alpha,
            beta: self.params.beta,
            iterations: self.params.iterations,
            seed: self.params.seed,
            topic_word_counts: self.topic_word_counts(),
            topic_totals: self.topic_totals,
            vocabulary,
        }
    }
}

fn sample_cumulative(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * total;
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub version: u32,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub topic_word_counts: Vec<Vec<u64>>,
    pub topic_totals: Vec<u64>,
    pub vocabulary: Vocabulary,
}

/// Fits LDA on `docs`, building a vocabulary with `vocab_options`.
pub fn fit_lda<S: AsRef<str>>(docs: &[Vec<S>], vocab_options: &VocabOptions, params: LdaParams) -> Result<TopicModel> {
    params.validate()?;
    let vocabulary = build_vocab(docs, vocab_options)?;
    fit_lda_with_vocab(docs, vocabulary, params)
}

pub fn fit_lda_with_vocab<S: AsRef<str>>(
    docs: &[Vec<S>],
    vocabulary: Vocabulary,
    params: LdaParams,
) -> Result<TopicModel> {
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocabulary.encode(d)).collect();
    let mut sampler = GibbsSampler::new(encoded, vocabulary.len(), params)?;
    for sweep in 0..params.iterations {
        sampler.sweep();
        log::debug!("lda sweep={} topics={}", sweep + 1, params.topics);
    }
    Ok(sampler.into_model(vocabulary))
}

/// Length-K probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicVector(Vec<f64>);

impl TopicVector {
    pub fn uniform(k: usize) -> Self {
        TopicVector(vec![1.0 / k as f64; k])
    }

    /// Normalizes non-negative weights to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(TopicError::ZeroVector);
        }
        Ok(TopicVector(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub vector: TopicVector,
    pub in_vocab_tokens: usize,
    /// No token was in the vocabulary; `vector` is uniform.
    pub oov_fallback: bool,
}

// 64-bit FNV-1a; stable across platforms and releases.
fn content_hash<S: AsRef<str>>(tokens: &[S]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for t in tokens {
        for b in t.as_ref().bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Smoothed `p(word | topic)`.
    pub fn word_probability(&self, topic: usize, word: usize) -> f64 {
        (self.topic_word_counts[topic][word] as f64 + self.beta)
            / (self.topic_totals[topic] as f64 + self.vocab_size() as f64 * self.beta)
    }

    /// Held-out topic proportions for `tokens` with the fitted counts frozen.
    ///
    /// Runs `INFER_BURN_IN` sweeps, then averages the document-topic counts
    /// over `INFER_SAMPLES` further sweeps and returns
    /// `(n_k + alpha) / (N + K * alpha)`. The generator is seeded from the
    /// model seed and the in-vocabulary token content, so identical inputs
    /// give identical vectors.
    pub fn infer<S: AsRef<str>>(&self, tokens: &[S]) -> Inference {
        let k = self.topics;
        let words = self.vocabulary.encode(tokens);
        if words.is_empty() {
            return Inference {
                vector: TopicVector::uniform(k),
                in_vocab_tokens: 0,
                oov_fallback: true,
            };
        }
        let known: Vec<&str> = words.iter().map(|&w| self.vocabulary.terms[w].as_str()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ content_hash(&known));

        // p(w | k) for each token position, computed once.
        let phi: Vec<Vec<f64>> = words
            .iter()
            .map(|&w| (0..k).map(|t| self.word_probability(t, w)).collect())
            .collect();
        let mut counts = vec![0u64; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        let mut accumulated = vec![0u64; k];
        let mut cumulative = vec![0.0; k];
        for sweep in 0..INFER_BURN_IN + INFER_SAMPLES {
            for (i, topic) in z.iter_mut().enumerate() {
                counts[*topic] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (counts[t] as f64 + self.alpha) * phi[i][t];
                    cumulative[t] = total;
                }
                *topic = sample_cumulative(&cumulative, total, &mut rng);
                counts[*topic] += 1;
            }
            if sweep >= INFER_BURN_IN {
                for t in 0..k {
                    accumulated[t] += counts[t];
                }
            }
        }
        let n = words.len() as f64;
        let denom = n + k as f64 * self.alpha;
        let probs: Vec<f64> = accumulated
            .iter()
            .map(|&c| (c as f64 / INFER_SAMPLES as f64 + self.alpha) / denom)
            .collect();
        Inference {
            vector: TopicVector::from_weights(probs).expect("positive smoothed weights"),
            in_vocab_tokens: words.len(),
            oov_fallback: false,
        }
    }

    /// The `n` highest-count words of every topic.
    pub fn top_words(&self, n: usize) -> Vec<Vec<(String, u64)>> {
        self.topic_word_counts
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
                idx.into_iter()
                    .take(n)
                    .map(|w| (self.vocabulary.terms[w].clone(), row[w]))
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TopicModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(TopicError::UnsupportedVersion(model.version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Cosine similarity of two non-negative vectors, clamped to `[0, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(TopicError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(TopicError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Topic Similarity between an article vector and a summary vector.
pub fn topic_similarity(article: &TopicVector, summary: &TopicVector) -> Result<f64> {
    cosine(article.probs(), summary.probs())
}

/// Topic Similarity for each `(article, summary)` pair.
pub fn ts_pairs<S: AsRef<str> + Sync>(model: &TopicModel, pairs: &[(Vec<S>, Vec<S>)]) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|(article, summary)| topic_similarity(&model.infer(article).vector, &model.infer(summary).vector))
        .collect()
}

/// Labelled documents over disjoint per-class vocabularies.
///
/// Class `c` draws uniformly from terms `"{prefix_c}1" ..= "{prefix_c}{n}"`
/// where the prefixes are `a`, `b`, `c`, ... Useful for checking that a
/// topic model separates clearly distinct themes.
pub mod synthetic {
    use super::*;

    #[derive(Debug, Clone)]
    pub struct LabeledDoc {
        pub class: usize,
        pub tokens: Vec<String>,
    }

    pub fn class_terms(class: usize, vocab_per_class: usize) -> Vec<String> {
        let prefix = (b'a' + class as u8) as char;
        (1..=vocab_per_class).map(|i| format!("{prefix}{i}")).collect()
    }

    pub fn disjoint_corpus(
        classes: usize,
        vocab_per_class: usize,
        docs_per_class: usize,
        tokens_per_doc: usize,
        seed: u64,
    ) -> Vec<LabeledDoc> {
        assert!(classes <= 26, "at most 26 classes");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut docs = Vec::with_capacity(classes * docs_per_class);
        for class in 0..classes {
            let terms = class_terms(class, vocab_per_class);
            for _ in 0..docs_per_class {
                let tokens = (0..tokens_per_doc)
                    .map(|_| terms[rng.random_range(0..terms.len())].clone())
                    .collect();
                docs.push(LabeledDoc { class, tokens });
            }
        }
        docs
    }
}
