//! Document ingestion, OCR-noise cleaning, tokenization, chunking and
//! train/test partitioning.
//!
//! The cleaning filters keep a document only when most of its visible
//! characters are alphanumeric and most of its alphabetic words are found in
//! a dictionary. Both thresholds default to `0.7` and are compared inclusively.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ALNUM_THRESHOLD: f64 = 0.7;
pub const DEFAULT_DICT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_CHUNK_LENGTH: usize = 512;
pub const DEFAULT_OVERLAP: usize = 64;

const DEFAULT_DICTIONARY: &str = include_str!("../data/default_dictionary.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate document id `{id}`")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("overlap {overlap} must be smaller than chunk length {chunk_length}")]
    InvalidChunking { chunk_length: usize, overlap: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidTestFraction(f64),
    #[error("need at least 2 documents to split, got {0}")]
    TooFewDocuments(usize),
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing)]
    pub source_path: String,
    #[serde(default, rename = "meta", skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            source_path: String::new(),
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Directory,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub keep_empty: bool,
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    meta: Option<serde_json::Map<String, serde_json::Value>>,
}

/// Loads a corpus from a JSONL file or a directory of `.txt` files.
///
/// Directory entries are read in file-name order and take their id from the
/// file stem. JSONL records keep their input order. Documents whose text is
/// blank are dropped unless `options.keep_empty` is set.
pub fn load_corpus(path: &Path, format: CorpusFormat, options: LoadOptions) -> Result<Vec<Document>> {
    match format {
        CorpusFormat::Jsonl => load_jsonl(path, options),
        CorpusFormat::Directory => load_directory(path, options),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_jsonl(path: &Path, options: LoadOptions) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id: record.id,
            });
        }
        if record.text.trim().is_empty() && !options.keep_empty {
            log::warn!("load skipped_empty id={} line={line_no}", record.id);
            continue;
        }
        let metadata = record
            .meta
            .unwrap_or_default()
            .into_iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => (k, s),
                other => (k, other.to_string()),
            })
            .collect();
        docs.push(Document {
            id: record.id,
            text: record.text,
            source_path: format!("{}:{}", path.display(), line_no),
            metadata,
        });
    }
    Ok(docs)
}

fn load_directory(path: &Path, options: LoadOptions) -> Result<Vec<Document>> {
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    files.sort();

    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(files.len());
    for (idx, file) in files.iter().enumerate() {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = fs::read_to_string(file).map_err(io_err(file))?;
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: file.clone(),
                line: idx + 1,
                id,
            });
        }
        if text.trim().is_empty() && !options.keep_empty {
            log::warn!("load skipped_empty id={id} path={}", file.display());
            continue;
        }
        docs.push(Document {
            id,
            text,
            source_path: file.display().to_string(),
            metadata: BTreeMap::new(),
        });
    }
    Ok(docs)
}

/// Writes documents as corpus JSONL (`id`, `text`, optional `meta`).
pub fn write_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    let write_err = |source| CorpusError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(write_err)?);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("document serializes");
        writeln!(out, "{line}").map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

/// A lowercase word list used by [`dict_word_fraction`].
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    /// Parses one word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Dictionary { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(Self::parse(&text))
    }

    /// Small bundled list of common English words.
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_DICTIONARY)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Dictionary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Dictionary {
            words: iter.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }
}

/// Fraction of non-whitespace characters that are letters or ASCII digits.
pub fn alnum_fraction(text: &str) -> f64 {
    let (mut visible, mut alnum) = (0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        visible += 1;
        if c.is_alphabetic() || c.is_ascii_digit() {
            alnum += 1;
        }
    }
    if visible == 0 {
        0.0
    } else {
        alnum as f64 / visible as f64
    }
}

/// Fraction of alphabetic words found in `dictionary`.
///
/// Words are whitespace-split, stripped of surrounding punctuation and
/// lowercased. A word counts as alphabetic when every remaining character is
/// a letter (internal apostrophes and hyphens allowed).
pub fn dict_word_fraction(text: &str, dictionary: &Dictionary) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(CorpusError::EmptyDictionary);
    }
    let (mut total, mut known) = (0usize, 0usize);
    for raw in text.split_whitespace() {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if word.is_empty()
            || !word.chars().any(char::is_alphabetic)
            || !word.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '-')
        {
            continue;
        }
        total += 1;
        if dictionary.contains(&word.to_lowercase()) {
            known += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { known as f64 / total as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningEntry {
    pub id: String,
    pub alnum_fraction: f64,
    pub dict_fraction: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningReport {
    pub kept_count: usize,
    pub rejected_count: usize,
    pub per_document: Vec<CleaningEntry>,
}

impl CleaningReport {
    /// CSV with header `id,alnum_fraction,dict_fraction,kept`.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for entry in &self.per_document {
            writer.serialize(entry).expect("in-memory csv write");
        }
        if self.per_document.is_empty() {
            writer
                .write_record(["id", "alnum_fraction", "dict_fraction", "kept"])
                .expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("flush to vec")).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CleaningThresholds {
    pub alnum: f64,
    pub dict: f64,
}

impl Default for CleaningThresholds {
    fn default() -> Self {
        CleaningThresholds {
            alnum: DEFAULT_ALNUM_THRESHOLD,
            dict: DEFAULT_DICT_THRESHOLD,
        }
    }
}

pub fn filter_clean(
    docs: Vec<Document>,
    thresholds: CleaningThresholds,
    dictionary: &Dictionary,
) -> Result<(Vec<Document>, CleaningReport)> {
    for t in [thresholds.alnum, thresholds.dict] {
        if !(0.0..=1.0).contains(&t) {
            return Err(CorpusError::InvalidThreshold(t));
        }
    }
    let mut report = CleaningReport::default();
    let mut kept = Vec::new();
    for doc in docs {
        let alnum = alnum_fraction(&doc.text);
        let dict = dict_word_fraction(&doc.text, dictionary)?;
        let keep = alnum >= thresholds.alnum && dict >= thresholds.dict;
        report.per_document.push(CleaningEntry {
            id: doc.id.clone(),
            alnum_fraction: alnum,
            dict_fraction: dict,
            kept: keep,
        });
        if keep {
            report.kept_count += 1;
            kept.push(doc);
        } else {
            report.rejected_count += 1;
        }
    }
    Ok((kept, report))
}

/// Word-level tokenizer: splits on whitespace, then peels leading and
/// trailing punctuation off each word as separate single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let start = chars.iter().position(|c| c.is_alphanumeric()).unwrap_or(chars.len());
        let end = chars.iter().rposition(|c| c.is_alphanumeric()).map_or(start, |p| p + 1);
        tokens.extend(chars[..start].iter().map(char::to_string));
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        tokens.extend(chars[end.max(start)..].iter().map(char::to_string));
    }
    tokens
}

/// [`tokenize`] followed by lowercasing.
pub fn tokenize_lower(text: &str) -> Vec<String> {
    tokenize(&text.to_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    pub start_offset: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkParams {
    pub chunk_length: usize,
    pub overlap: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        ChunkParams {
            chunk_length: DEFAULT_CHUNK_LENGTH,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

impl ChunkParams {
    pub fn new(chunk_length: usize, overlap: usize) -> Result<Self> {
        let params = ChunkParams { chunk_length, overlap };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.overlap >= self.chunk_length {
            return Err(CorpusError::InvalidChunking {
                chunk_length: self.chunk_length,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.chunk_length - self.overlap
    }

    /// Start offsets of every window over `len` tokens.
    pub fn starts(&self, len: usize) -> Vec<usize> {
        if len <= self.chunk_length {
            return vec![0];
        }
        let stride = self.stride();
        let count = (len - self.chunk_length).div_ceil(stride) + 1;
        (0..count).map(|i| i * stride).collect()
    }
}

/// Overlapping fixed-length windows. A sequence no longer than one window
/// (including the empty sequence) yields a single chunk.
pub fn chunk_tokens(doc_id: &str, tokens: &[String], params: ChunkParams) -> Result<Vec<Chunk>> {
    params.validate()?;
    Ok(params
        .starts(tokens.len())
        .into_iter()
        .enumerate()
        .map(|(index, start)| {
            let end = (start + params.chunk_length).min(tokens.len());
            Chunk {
                doc_id: doc_id.to_string(),
                index,
                start_offset: start,
                tokens: tokens[start..end].to_vec(),
            }
        })
        .collect())
}

/// Seeded shuffle split; `round(test_fraction * n)` documents go to test.
pub fn split_train_test(docs: &[Document], test_fraction: f64, seed: u64) -> Result<(Vec<Document>, Vec<Document>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidTestFraction(test_fraction));
    }
    if docs.len() < 2 {
        return Err(CorpusError::TooFewDocuments(docs.len()));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_fraction * docs.len() as f64).round() as usize;
    let mut is_test = vec![false; docs.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (test, train): (Vec<_>, Vec<_>) = docs.iter().cloned().zip(is_test).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(d, _)| d).collect(),
        test.into_iter().map(|(d, _)| d).collect(),
    ))
}
