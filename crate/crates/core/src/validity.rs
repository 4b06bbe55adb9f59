//! Heuristic detection of invalid (garbage) summaries and scoring of the
//! detector against human labels.
//!
//! Five rules ship by default:
//!
//! | id | fires when |
//! |----|------------|
//! | R1 | a Python function signature appears (`def name(`) |
//! | R2 | the word "summary" occurs three or more times |
//! | R3 | the phrase "adobe reader" appears |
//! | R4 | the text contains no ASCII letter |
//! | R5 | the text contains two or more `=` characters |
//!
//! R2 and R3 are case-insensitive. Further rules can be registered on a
//! [`Detector`] without touching [`ValidityVerdict`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::SummaryRecord;

#[derive(Debug, Error)]
pub enum ValidityError {
    #[error("no human label for summary `{0}`")]
    MissingLabel(String),
    #[error("{0} is undefined: denominator is zero")]
    UndefinedRate(&'static str),
    #[error("cannot read labels from {path}: {message}")]
    LabelFile { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, ValidityError>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub String);

impl RuleId {
    pub fn new(id: impl Into<String>) -> Self {
        RuleId(id.into())
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RuleId {
    fn from(s: &str) -> Self {
        RuleId(s.to_string())
    }
}

pub trait Rule: Send + Sync {
    fn id(&self) -> &str;
    fn description(&self) -> &str;
    fn fires(&self, text: &str) -> bool;
}

/// A rule backed by a plain predicate.
pub struct FnRule {
    id: String,
    description: String,
    predicate: Box<dyn Fn(&str) -> bool + Send + Sync>,
}

impl FnRule {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        predicate: impl Fn(&str) -> bool + Send + Sync + 'static,
    ) -> Self {
        FnRule {
            id: id.into(),
            description: description.into(),
            predicate: Box::new(predicate),
        }
    }
}

impl Rule for FnRule {
    fn id(&self) -> &str {
        &self.id
    }
    fn description(&self) -> &str {
        &self.description
    }
    fn fires(&self, text: &str) -> bool {
        (self.predicate)(text)
    }
}

static FUNCTION_SIGNATURE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bdef\s+[A-Za-z_][A-Za-z0-9_]*\s*\(").unwrap());
static SUMMARY_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bsummary\b").unwrap());

pub fn has_function_signature(text: &str) -> bool {
    FUNCTION_SIGNATURE.is_match(text)
}

pub fn summary_word_count(text: &str) -> usize {
    SUMMARY_WORD.find_iter(text).count()
}

pub fn mentions_adobe_reader(text: &str) -> bool {
    text.to_lowercase().contains("adobe reader")
}

pub fn has_no_english_letter(text: &str) -> bool {
    !text.chars().any(|c| c.is_ascii_alphabetic())
}

pub fn equals_sign_count(text: &str) -> usize {
    text.chars().filter(|&c| c == '=').count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    #[serde(rename = "id")]
    pub summary_id: String,
    pub is_valid: bool,
    #[serde(rename = "rules")]
    pub triggered_rules: BTreeSet<RuleId>,
}

impl ValidityVerdict {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

/// An ordered table of rules; every rule is evaluated on every input.
pub struct Detector {
    rules: Vec<Box<dyn Rule>>,
}

impl Default for Detector {
    fn default() -> Self {
        Self::standard()
    }
}

impl Detector {
    pub fn empty() -> Self {
        Detector { rules: Vec::new() }
    }

    pub fn standard() -> Self {
        Detector::empty()
            .with_rule(FnRule::new("R1", "python function signature", has_function_signature))
            .with_rule(FnRule::new("R2", "word \"summary\" three or more times", |t| {
                summary_word_count(t) >= 3
            }))
            .with_rule(FnRule::new("R3", "phrase \"adobe reader\"", mentions_adobe_reader))
            .with_rule(FnRule::new("R4", "no English letter", has_no_english_letter))
            .with_rule(FnRule::new("R5", "two or more `=`", |t| equals_sign_count(t) >= 2))
    }

    pub fn with_rule(mut self, rule: impl Rule + 'static) -> Self {
        self.rules.push(Box::new(rule));
        self
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.id())
    }

    pub fn rules(&self) -> impl Iterator<Item = &dyn Rule> {
        self.rules.iter().map(|r| r.as_ref())
    }

    pub fn check(&self, summary_id: &str, text: &str) -> ValidityVerdict {
        let triggered: BTreeSet<RuleId> = self
            .rules
            .iter()
            .filter(|r| r.fires(text))
            .map(|r| RuleId::new(r.id()))
            .collect();
        ValidityVerdict {
            summary_id: summary_id.to_string(),
            is_valid: triggered.is_empty(),
            triggered_rules: triggered,
        }
    }

    pub fn filter_valid<'a>(&self, records: &'a [SummaryRecord]) -> ValiditySplit<'a> {
        let (mut valid, mut invalid) = (Vec::new(), Vec::new());
        for record in records {
            if self.check(&record.summary_id, &record.text).is_valid {
                valid.push(record);
            } else {
                invalid.push(record);
            }
        }
        let proportion_invalid = if records.is_empty() {
            0.0
        } else {
            invalid.len() as f64 / records.len() as f64
        };
        ValiditySplit {
            valid,
            invalid,
            proportion_invalid,
        }
    }
}

static STANDARD: LazyLock<Detector> = LazyLock::new(Detector::standard);

/// Runs the five standard rules.
pub fn check(summary_id: &str, text: &str) -> ValidityVerdict {
    STANDARD.check(summary_id, text)
}

#[derive(Debug, Clone)]
pub struct ValiditySplit<'a> {
    pub valid: Vec<&'a SummaryRecord>,
    pub invalid: Vec<&'a SummaryRecord>,
    pub proportion_invalid: f64,
}

pub fn filter_valid(records: &[SummaryRecord]) -> ValiditySplit<'_> {
    STANDARD.filter_valid(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumanLabel {
    Valid,
    Invalid,
}

/// Counts with "invalid summary" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(verdicts: &[ValidityVerdict], labels: &HashMap<String, HumanLabel>) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for v in verdicts {
        let label = labels
            .get(&v.summary_id)
            .ok_or_else(|| ValidityError::MissingLabel(v.summary_id.clone()))?;
        match (!v.is_valid, *label == HumanLabel::Invalid) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, false) => m.tn += 1,
            (false, true) => m.fn_ += 1,
        }
    }
    Ok(m)
}

/// `(false positive rate, false negative rate)`.
pub fn rates(m: &ConfusionMatrix) -> Result<(f64, f64)> {
    if m.fp + m.tn == 0 {
        return Err(ValidityError::UndefinedRate("false positive rate"));
    }
    if m.fn_ + m.tp == 0 {
        return Err(ValidityError::UndefinedRate("false negative rate"));
    }
    Ok((m.fp as f64 / (m.fp + m.tn) as f64, m.fn_ as f64 / (m.fn_ + m.tp) as f64))
}

fn label_err(path: &Path, message: impl ToString) -> ValidityError {
    ValidityError::LabelFile {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads `id,label` rows, `label` being `valid` or `invalid`.
pub fn read_validity_labels(path: &Path) -> Result<HashMap<String, HumanLabel>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        label: HumanLabel,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| label_err(path, e))?;
    reader
        .deserialize::<Row>()
        .map(|row| row.map(|r| (r.id, r.label)).map_err(|e| label_err(path, e)))
        .collect()
}

/// Reads `id,usefulness` rows with usefulness in {0, 1, 2}.
pub fn read_usefulness_labels(path: &Path) -> Result<HashMap<String, u8>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        usefulness: u8,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| label_err(path, e))?;
    let mut out = HashMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| label_err(path, e))?;
        if row.usefulness > 2 {
            return Err(label_err(
                path,
                format!("usefulness {} for `{}` is not 0, 1 or 2", row.usefulness, row.id),
            ));
        }
        out.insert(row.id, row.usefulness);
    }
    Ok(out)
}
