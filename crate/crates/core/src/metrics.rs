//! Reference-based overlap metrics (ROUGE-N, ROUGE-L, BLEU, METEOR), the
//! chunk-and-max aggregation used for scoring long references, and ingestion
//! of scores computed by external tools.
//!
//! Every metric works on token slices; callers decide tokenization and case.
//! METEOR lowercases internally for its exact-match stage.

use std::collections::HashMap;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ChunkParams, CorpusError};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("at least one reference is required")]
    NoReferences,
    #[error("reference text is empty")]
    EmptyReference,
    #[error(transparent)]
    Chunking(#[from] CorpusError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(matches: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Prf::from_pr(ratio(matches, candidate_total), ratio(matches, reference_total))
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// `(clipped matches, candidate n-gram total)`.
fn clipped_matches<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matches = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> Result<Prf> {
    if n == 0 {
        return Err(MetricError::InvalidOrder(n));
    }
    let (matches, cand_total) = clipped_matches(candidate, reference, n);
    let ref_total = reference.len().saturating_sub(n - 1);
    Ok(Prf::from_counts(matches, cand_total, ref_total))
}

/// Longest common subsequence length, `O(|a|·|b|)` time and `O(|b|)` space.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> Prf {
    Prf::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    #[default]
    AddEpsilon,
}

pub const BLEU_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuOptions {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuOptions {
    fn default() -> Self {
        BleuOptions {
            max_n: 4,
            smoothing: Smoothing::AddEpsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    /// Candidate had no tokens; `score` is 0.
    pub empty_candidate: bool,
}

/// Pooled BLEU statistics; per-pair stats add up to corpus-level stats.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    pub fn new<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], max_n: usize) -> Result<Self> {
        if max_n == 0 {
            return Err(MetricError::InvalidOrder(0));
        }
        if references.is_empty() {
            return Err(MetricError::NoReferences);
        }
        let mut matches = Vec::with_capacity(max_n);
        let mut totals = Vec::with_capacity(max_n);
        for n in 1..=max_n {
            let cand = ngram_counts(candidate, n);
            // Clip by the maximum count over references.
            let mut max_ref: HashMap<&[T], usize> = HashMap::new();
            for r in references {
                for (g, c) in ngram_counts(r.as_ref(), n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            matches.push(
                cand.iter()
                    .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                    .sum(),
            );
            totals.push(candidate.len().saturating_sub(n - 1));
        }
        // Closest reference length, ties broken toward the shorter one.
        let c = candidate.len();
        let reference_len = references
            .iter()
            .map(|r| r.as_ref().len())
            .min_by_key(|&r| (r.abs_diff(c), r))
            .expect("non-empty references");
        Ok(BleuStats {
            matches,
            totals,
            candidate_len: c,
            reference_len,
        })
    }

    pub fn merge(&mut self, other: &BleuStats) {
        if self.matches.is_empty() {
            self.matches = vec![0; other.matches.len()];
            self.totals = vec![0; other.totals.len()];
        }
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// With `Smoothing::None` any zero precision makes the score zero. With
    /// `AddEpsilon` a zero match count (or an order longer than the
    /// candidate) contributes `BLEU_EPSILON` instead.
    pub fn score(&self, smoothing: Smoothing) -> BleuScore {
        if self.candidate_len == 0 {
            return BleuScore {
                score: 0.0,
                precisions: vec![0.0; self.matches.len()],
                brevity_penalty: 0.0,
                empty_candidate: true,
            };
        }
        let precisions: Vec<f64> = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| match (smoothing, m) {
                (Smoothing::AddEpsilon, 0) => BLEU_EPSILON / t.max(1) as f64,
                _ if t == 0 => 0.0,
                _ => m as f64 / t as f64,
            })
            .collect();
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let brevity_penalty = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        let score = if precisions.contains(&0.0) {
            0.0
        } else {
            let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
            brevity_penalty * log_mean.exp()
        };
        BleuScore {
            score,
            precisions,
            brevity_penalty,
            empty_candidate: false,
        }
    }
}

pub fn bleu<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], options: BleuOptions) -> Result<BleuScore> {
    let score = BleuStats::new(candidate, references, options.max_n)?.score(options.smoothing);
    if score.empty_candidate {
        log::warn!("bleu empty_candidate=true score=0");
    }
    Ok(score)
}

/// BLEU over pooled n-gram counts of many `(candidate, references)` pairs.
pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<Vec<S>>)], options: BleuOptions) -> Result<BleuScore> {
    let mut pooled = BleuStats::default();
    for (cand, refs) in pairs {
        let cand: Vec<&str> = cand.iter().map(AsRef::as_ref).collect();
        let refs: Vec<Vec<&str>> = refs.iter().map(|r| r.iter().map(AsRef::as_ref).collect()).collect();
        pooled.merge(&BleuStats::new(&cand, &refs, options.max_n)?);
    }
    if pooled.matches.is_empty() {
        pooled.matches = vec![0; options.max_n];
        pooled.totals = vec![0; options.max_n];
    }
    Ok(pooled.score(options.smoothing))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorScore {
    pub score: f64,
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
}

/// Recall-weighted harmonic mean `10PR / (R + 9P)`.
pub fn meteor_fmean(precision: f64, recall: f64) -> f64 {
    if precision == 0.0 || recall == 0.0 {
        0.0
    } else {
        10.0 * precision * recall / (recall + 9.0 * precision)
    }
}

/// Fragmentation penalty `0.5 * (chunks / matches)^3`.
pub fn meteor_penalty(chunks: usize, matches: usize) -> f64 {
    if matches == 0 {
        0.0
    } else {
        0.5 * (chunks as f64 / matches as f64).powi(3)
    }
}

pub fn stem(word: &str) -> String {
    porter_stemmer::stem(&word.to_lowercase())
}

/// Aligns `cand_keys` to `ref_keys` for tokens not yet matched. Each
/// candidate token (left to right) takes the reference slot right after the
/// previous token's slot when that slot matches, otherwise the leftmost free
/// matching slot.
fn align_stage(cand_keys: &[String], ref_keys: &[String], cand_match: &mut [Option<usize>], ref_used: &mut [bool]) {
    let mut slots: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, key) in ref_keys.iter().enumerate() {
        if !ref_used[j] {
            slots.entry(key.as_str()).or_default().push(j);
        }
    }
    for i in 0..cand_keys.len() {
        if cand_match[i].is_some() {
            continue;
        }
        let Some(free) = slots.get_mut(cand_keys[i].as_str()) else {
            continue;
        };
        let adjacent = i
            .checked_sub(1)
            .and_then(|p| cand_match[p])
            .map(|j| j + 1)
            .and_then(|next| free.iter().position(|&j| j == next));
        let pick = match adjacent {
            Some(pos) => Some(free.remove(pos)),
            None if !free.is_empty() => Some(free.remove(0)),
            None => None,
        };
        if let Some(j) = pick {
            cand_match[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

/// METEOR with exact (lowercased) and Porter-stem matching stages; no
/// synonym stage.
pub fn meteor<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> MeteorScore {
    let lower = |xs: &[S]| -> Vec<String> { xs.iter().map(|s| s.as_ref().to_lowercase()).collect() };
    let (cand, refs) = (lower(candidate), lower(reference));
    let mut cand_match = vec![None; cand.len()];
    let mut ref_used = vec![false; refs.len()];
    align_stage(&cand, &refs, &mut cand_match, &mut ref_used);
    let cand_stems: Vec<String> = cand.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = refs.iter().map(|w| stem(w)).collect();
    align_stage(&cand_stems, &ref_stems, &mut cand_match, &mut ref_used);

    let pairs: Vec<(usize, usize)> = cand_match
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let m = pairs.len();
    if m == 0 {
        return MeteorScore {
            score: 0.0,
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
        };
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let precision = m as f64 / cand.len() as f64;
    let recall = m as f64 / refs.len() as f64;
    let fmean = meteor_fmean(precision, recall);
    let penalty = meteor_penalty(chunks, m);
    MeteorScore {
        score: fmean * (1.0 - penalty),
        matches: m,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Maximum over all reference chunks.
    #[default]
    GlobalMax,
    /// Per candidate sentence, the maximum over chunks; then the mean.
    MaxThenMean,
}

/// Splits after `.`, `!` and `?` tokens. A trailing fragment without
/// terminal punctuation forms its own sentence.
pub fn split_sentences<S: AsRef<str>>(tokens: &[S]) -> Vec<&[S]> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if matches!(t.as_ref(), "." | "!" | "?") {
            out.push(&tokens[start..=i]);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

/// Scores `candidate` against a reference too long for `scorer` by
/// splitting the reference into overlapping chunks.
pub fn chunked_aggregate<F>(
    scorer: F,
    long_reference: &[String],
    candidate: &[String],
    params: ChunkParams,
    mode: AggregationMode,
) -> Result<f64>
where
    F: Fn(&[String], &[String]) -> f64,
{
    if long_reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let chunks = crate::corpus::chunk_tokens("", long_reference, params)?;
    let best = |piece: &[String]| {
        chunks
            .iter()
            .map(|c| scorer(&c.tokens, piece))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(match mode {
        AggregationMode::GlobalMax => best(candidate),
        AggregationMode::MaxThenMean => {
            let sentences = split_sentences(candidate);
            if sentences.is_empty() {
                best(candidate)
            } else {
                sentences.iter().map(|s| best(s)).sum::<f64>() / sentences.len() as f64
            }
        }
    })
}

/// One metric value for an (article, summary) pair. Internal and external
/// scores share this JSONL schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub article_id: String,
    pub summary_id: String,
    #[serde(rename = "metric")]
    pub metric_name: String,
    pub value: f64,
}

pub type ExternalScore = ScoreRecord;

impl ScoreRecord {
    pub fn new(article_id: &str, summary_id: &str, metric: &str, value: f64) -> Self {
        ScoreRecord {
            article_id: article_id.to_string(),
            summary_id: summary_id.to_string(),
            metric_name: metric.to_string(),
            value,
        }
    }
}

/// Reads `{article_id, summary_id, metric, value}` lines. Non-finite values
/// (including the strings `"NaN"` and `"inf"`) are rejected.
pub fn ingest_external_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        Number(f64),
        Text(String),
    }
    #[derive(Deserialize)]
    struct Line {
        article_id: String,
        summary_id: String,
        metric: String,
        value: Value,
    }
    let file = File::open(path).map_err(|source| MetricError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |line: usize, message: String| MetricError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| MetricError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        let value = match rec.value {
            Value::Number(v) => v,
            Value::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| malformed(line_no, format!("value `{s}` is not a number")))?,
        };
        if !value.is_finite() {
            return Err(malformed(line_no, format!("non-finite value {value}")));
        }
        out.push(ScoreRecord {
            article_id: rec.article_id,
            summary_id: rec.summary_id,
            metric_name: rec.metric,
            value,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn rouge_n_examples() {
        let p = rouge_n(&t("the cat sat"), &t("the cat slept"), 1).unwrap();
        assert!(close(p.precision, 2.0 / 3.0) && close(p.recall, 2.0 / 3.0) && close(p.f1, 2.0 / 3.0));
        let p = rouge_n(&t("a b c d"), &t("a b c e"), 2).unwrap();
        assert!(close(p.precision, 2.0 / 3.0) && close(p.recall, 2.0 / 3.0));
        let same = t("x y z w");
        for n in 1..=4 {
            assert_eq!(
                rouge_n(&same, &same, n).unwrap(),
                Prf {
                    precision: 1.0,
                    recall: 1.0,
                    f1: 1.0
                }
            );
        }
        assert!(matches!(rouge_n(&same, &same, 0), Err(MetricError::InvalidOrder(0))));
        assert_eq!(rouge_n(&t("a"), &t("a b"), 2).unwrap().precision, 0.0);
    }

    #[test]
    fn rouge_l_examples() {
        let p = rouge_l(&t("a c b"), &t("a b c"));
        assert_eq!(lcs_len(&t("a c b"), &t("a b c")), 2);
        assert!(close(p.f1, 2.0 / 3.0));
        assert_eq!(rouge_l(&t("a b"), &t("a b")).f1, 1.0);
        assert_eq!(rouge_l(&t("a b"), &t("c d")).f1, 0.0);
        assert_eq!(rouge_l::<String>(&[], &[]).f1, 0.0);
    }

    #[test]
    fn bleu_examples() {
        let none = |n| BleuOptions {
            max_n: n,
            smoothing: Smoothing::None,
        };
        let s = bleu(&t("a b c d e"), &[t("a b c d e")], BleuOptions::default()).unwrap();
        assert_eq!(s.score, 1.0);
        let s = bleu(&t("a b c d"), &[t("a b x d")], none(2)).unwrap();
        assert!((s.score - 0.5).abs() < 1e-9);
        let s = bleu(&t("the the the the"), &[t("the cat")], none(1)).unwrap();
        assert!((s.score - 0.25).abs() < 1e-9);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn bleu_zero_precision_and_smoothing() {
        let cand = t("a b c d");
        let refs = [t("a x b y")];
        let strict = bleu(
            &cand,
            &refs,
            BleuOptions {
                max_n: 2,
                smoothing: Smoothing::None,
            },
        )
        .unwrap();
        assert_eq!(strict.score, 0.0);
        let smooth = bleu(
            &cand,
            &refs,
            BleuOptions {
                max_n: 2,
                smoothing: Smoothing::AddEpsilon,
            },
        )
        .unwrap();
        assert!(smooth.score > 0.0 && smooth.score < 1e-3);
    }

    #[test]
    fn bleu_brevity_and_errors() {
        let s = bleu(
            &t("a b"),
            &[t("a b c d")],
            BleuOptions {
                max_n: 1,
                smoothing: Smoothing::None,
            },
        )
        .unwrap();
        assert!(close(s.brevity_penalty, (1.0f64 - 2.0).exp()));
        let empty: Vec<String> = vec![];
        let s = bleu(&empty, &[t("a")], BleuOptions::default()).unwrap();
        assert!(s.empty_candidate);
        assert_eq!(s.score, 0.0);
        let no_refs: [Vec<String>; 0] = [];
        assert!(matches!(
            bleu(&t("a"), &no_refs, BleuOptions::default()),
            Err(MetricError::NoReferences)
        ));
        assert!(bleu(
            &t("a"),
            &[t("a")],
            BleuOptions {
                max_n: 0,
                smoothing: Smoothing::None
            }
        )
        .is_err());
    }

    #[test]
    fn bleu_closest_reference_length() {
        let stats = BleuStats::new(&t("a b c"), &[t("a"), t("a b c d"), t("a b")], 1).unwrap();
        // |3-4| == |3-2|; the shorter wins.
        assert_eq!(stats.reference_len, 2);
    }

    #[test]
    fn corpus_bleu_pools_counts() {
        let pairs = vec![(t("a b c d"), vec![t("a b c d")]), (t("x y"), vec![t("x y")])];
        let s = corpus_bleu(&pairs, BleuOptions::default()).unwrap();
        assert_eq!(s.score, 1.0);
    }

    #[test]
    fn meteor_examples() {
        let s = meteor(&t("the cat sat"), &t("the cat sat"));
        assert_eq!((s.matches, s.chunks), (3, 1));
        assert!((s.score - (1.0 - 0.5 / 27.0)).abs() < 1e-12);
        assert_eq!(meteor(&t("a b"), &t("c d")).score, 0.0);
        let s = meteor(&t("cats"), &t("cat"));
        assert_eq!(s.matches, 1);
        let s = meteor(&t("The Cat"), &t("the cat"));
        assert_eq!(s.matches, 2);
    }

    #[test]
    fn meteor_prefers_contiguous_alignment() {
        let s = meteor(&t("b a"), &t("a b a"));
        assert_eq!((s.matches, s.chunks), (2, 1));
        let s = meteor(&t("a b c"), &t("c b a"));
        assert_eq!(s.chunks, 3);
    }

    #[test]
    fn meteor_penalty_monotone() {
        for m in 1..20 {
            for c in 1..m {
                assert!(meteor_penalty(c, m) < meteor_penalty(c + 1, m));
            }
        }
    }

    #[test]
    fn chunked_examples() {
        let reference = t("a b c d e f g h i j");
        let cand = t("a b");
        let direct = rouge_n(&cand, &reference, 1).unwrap().recall;
        let single = ChunkParams::new(20, 2).unwrap();
        let scorer = |r: &[String], c: &[String]| rouge_n(c, r, 1).unwrap().recall;
        for mode in [AggregationMode::GlobalMax, AggregationMode::MaxThenMean] {
            assert_eq!(
                chunked_aggregate(scorer, &reference, &cand, single, mode).unwrap(),
                direct
            );
            assert_eq!(
                chunked_aggregate(
                    |_: &[String], _: &[String]| 0.37,
                    &reference,
                    &cand,
                    ChunkParams::new(3, 1).unwrap(),
                    mode
                )
                .unwrap(),
                0.37
            );
        }
        assert!(matches!(
            chunked_aggregate(scorer, &[], &cand, single, AggregationMode::GlobalMax),
            Err(MetricError::EmptyReference)
        ));
    }

    #[test]
    fn chunked_max_then_mean() {
        // Chunks of "a b | c d"; sentence 1 matches chunk 1, sentence 2 nothing.
        let reference = t("a b c d");
        let cand = t("a . z .");
        let scorer = |r: &[String], c: &[String]| {
            let hits = c.iter().filter(|w| r.contains(w) && w.as_str() != ".").count();
            hits as f64
        };
        let params = ChunkParams::new(2, 0).unwrap();
        assert_eq!(
            chunked_aggregate(scorer, &reference, &cand, params, AggregationMode::MaxThenMean).unwrap(),
            0.5
        );
        assert_eq!(
            chunked_aggregate(scorer, &reference, &cand, params, AggregationMode::GlobalMax).unwrap(),
            1.0
        );
    }

    #[test]
    fn sentence_split() {
        let toks = t("a b . c ! d");
        let s = split_sentences(&toks);
        assert_eq!(s.len(), 3);
        assert_eq!(s[2], &["d".to_string()]);
    }
}
