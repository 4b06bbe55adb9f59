//! Aggregation of per-pair scores into comparison tables.
//!
//! A score whose `article_id` differs from the article its summary was
//! generated for is a random-baseline pair and lands in the
//! "Article - Random Summary" rows. Everything else is grouped by the
//! summary's model tag and run.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::ScoreRecord;
use crate::validity::{self, ConfusionMatrix, HumanLabel, ValidityVerdict};

pub const RANDOM_LABEL: &str = "Article - Random Summary";
pub const TS_METRIC: &str = "ts";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot aggregate an empty score list")]
    EmptyScores,
    #[error("need at least 2 articles for a random pairing, got {0}")]
    TooFewArticles(usize),
    #[error("article `{0}` has no summary to pair")]
    MissingSummary(String),
    #[error("percent change from zero is undefined")]
    ZeroBaseline,
    #[error("score references unknown summary `{0}`")]
    DanglingSummary(String),
    #[error("no validity verdict for summary `{0}`")]
    MissingVerdict(String),
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
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub article_id: String,
    pub summary_id: String,
    pub run_id: u32,
    pub model_tag: String,
    pub text: String,
}

impl SummaryRecord {
    pub fn new(article_id: &str, summary_id: &str, run_id: u32, model_tag: &str, text: &str) -> Self {
        SummaryRecord {
            article_id: article_id.into(),
            summary_id: summary_id.into(),
            run_id,
            model_tag: model_tag.into(),
            text: text.into(),
        }
    }

    pub fn key(&self) -> (String, u32, String) {
        (self.article_id.clone(), self.run_id, self.model_tag.clone())
    }
}

/// Reads summary JSONL. Duplicate summary ids or duplicate
/// `(article_id, run_id, model_tag)` keys are rejected.
pub fn read_summaries(path: &Path) -> Result<Vec<SummaryRecord>> {
    let file = File::open(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |line, message| ReportError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut ids = HashSet::new();
    let mut keys = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SummaryRecord = serde_json::from_str(&line).map_err(|e| malformed(idx + 1, e.to_string()))?;
        if !ids.insert(rec.summary_id.clone()) {
            return Err(malformed(idx + 1, format!("duplicate summary id `{}`", rec.summary_id)));
        }
        if !keys.insert(rec.key()) {
            return Err(malformed(
                idx + 1,
                format!(
                    "duplicate record for article `{}` run {} model `{}`",
                    rec.article_id, rec.run_id, rec.model_tag
                ),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator), 0 for a singleton.
    pub stddev: f64,
    pub n: usize,
}

/// Mean and sample standard deviation (Welford's update).
pub fn aggregate(scores: &[f64]) -> Result<Stats> {
    if scores.is_empty() {
        return Err(ReportError::EmptyScores);
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in scores.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = scores.len();
    let stddev = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(Stats { mean, stddev, n })
}

/// Pairs every article with the summary of a different article.
///
/// Seeded permutations of the article list are drawn until one has no fixed
/// point, giving a uniform random derangement. The first summary listed for
/// each article is used.
pub fn random_pairing(article_ids: &[String], summaries: &[SummaryRecord], seed: u64) -> Result<Vec<(String, String)>> {
    if article_ids.len() < 2 {
        return Err(ReportError::TooFewArticles(article_ids.len()));
    }
    let mut by_article: HashMap<&str, &str> = HashMap::new();
    for s in summaries {
        by_article.entry(s.article_id.as_str()).or_insert(s.summary_id.as_str());
    }
    let own: Vec<&str> = article_ids
        .iter()
        .map(|a| {
            by_article
                .get(a.as_str())
                .copied()
                .ok_or_else(|| ReportError::MissingSummary(a.clone()))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..article_ids.len()).collect();
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            break;
        }
    }
    Ok(article_ids
        .iter()
        .zip(&perm)
        .map(|(a, &j)| (a.clone(), own[j].to_string()))
        .collect())
}

/// `(after - before) / |before| * 100`.
pub fn percent_change(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 {
        return Err(ReportError::ZeroBaseline);
    }
    Ok((after - before) / before.abs() * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    All,
    ValidOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Own,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub label: String,
    pub kind: PairKind,
    pub model_tag: String,
    pub run_id: u32,
    pub metric: String,
    pub filter: Filter,
    /// `None` when the cell has no scores.
    pub stats: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub model_tag: String,
    pub run_id: u32,
    pub total: usize,
    pub invalid: usize,
    pub proportion_invalid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub matrix: ConfusionMatrix,
    pub false_positive_rate: Option<f64>,
    pub false_negative_rate: Option<f64>,
}

/// Effect of dropping invalid summaries, comparing the run-averaged mean
/// and run-averaged stddev before and after filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterEffect {
    pub label: String,
    pub model_tag: String,
    pub metric: String,
    pub mean_change_pct: Option<f64>,
    pub stddev_change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsefulnessRow {
    pub class: String,
    pub n: usize,
    /// One mean per entry of `UsefulnessTable::metrics`.
    pub means: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsefulnessTable {
    pub metrics: Vec<String>,
    /// Not useful (rating 0) vs useful (rating 1 or 2).
    pub binary: Vec<UsefulnessRow>,
    /// One row per rating 0, 1, 2.
    pub graded: Vec<UsefulnessRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metrics: Vec<String>,
    pub rows: Vec<AggregateRow>,
    pub validity: Vec<ValidityRow>,
    pub confusion: Option<ConfusionSummary>,
    pub filter_effects: Vec<FilterEffect>,
    pub usefulness: Option<UsefulnessTable>,
    /// Pairs left out of the aggregates (e.g. summaries with no in-vocabulary tokens).
    pub excluded_pairs: usize,
}

/// "Article - Foundation Summary" for tag `foundation`.
pub fn comparison_label(kind: PairKind, model_tag: &str) -> String {
    match kind {
        PairKind::Random => RANDOM_LABEL.to_string(),
        PairKind::Own => {
            let mut chars = model_tag.chars();
            let tag = match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect::<String>(),
                None => String::new(),
            };
            format!("Article - {tag} Summary")
        }
    }
}

/// Collects the inputs of a report. Only `records` is required.
pub struct ReportBuilder<'a> {
    records: &'a [SummaryRecord],
    verdicts: Option<HashMap<String, ValidityVerdict>>,
    scores: Vec<&'a ScoreRecord>,
    usefulness: Option<&'a HashMap<String, u8>>,
    validity_labels: Option<&'a HashMap<String, HumanLabel>>,
    excluded: HashSet<(String, String, String)>,
    valid_only_rows: bool,
}

impl<'a> ReportBuilder<'a> {
    pub fn new(records: &'a [SummaryRecord]) -> Self {
        ReportBuilder {
            records,
            verdicts: None,
            scores: Vec::new(),
            usefulness: None,
            validity_labels: None,
            excluded: HashSet::new(),
            valid_only_rows: true,
        }
    }

    pub fn verdicts(mut self, verdicts: &[ValidityVerdict]) -> Self {
        self.verdicts = Some(verdicts.iter().map(|v| (v.summary_id.clone(), v.clone())).collect());
        self
    }

    /// Internal or external per-pair scores; may be called repeatedly.
    pub fn scores(mut self, scores: &'a [ScoreRecord]) -> Self {
        self.scores.extend(scores);
        self
    }

    pub fn usefulness(mut self, labels: &'a HashMap<String, u8>) -> Self {
        self.usefulness = Some(labels);
        self
    }

    pub fn validity_labels(mut self, labels: &'a HashMap<String, HumanLabel>) -> Self {
        self.validity_labels = Some(labels);
        self
    }

    /// Leaves `(article_id, summary_id, metric)` out of every aggregate.
    pub fn exclude(mut self, article_id: &str, summary_id: &str, metric: &str) -> Self {
        self.excluded
            .insert((article_id.into(), summary_id.into(), metric.into()));
        self
    }

    /// Emit valid-only rows when verdicts are present (default `true`).
    pub fn valid_only_rows(mut self, enabled: bool) -> Self {
        self.valid_only_rows = enabled;
        self
    }

    pub fn build(self) -> Result<EvaluationReport> {
        let by_id: HashMap<&str, &SummaryRecord> = self.records.iter().map(|r| (r.summary_id.as_str(), r)).collect();
        let tag_order: Vec<&str> = {
            let mut seen = HashSet::new();
            self.records
                .iter()
                .map(|r| r.model_tag.as_str())
                .filter(|t| seen.insert(*t))
                .collect()
        };
        let tag_rank = |tag: &str| tag_order.iter().position(|t| *t == tag).unwrap_or(usize::MAX);

        let mut metrics: Vec<String> = Vec::new();
        // (metric rank, kind, tag rank, run) -> (all scores, valid-only scores)
        type CellKey = (usize, PairKind, usize, u32);
        let mut cells: BTreeMap<CellKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        let mut cell_tags: HashMap<CellKey, String> = HashMap::new();
        let mut excluded_pairs = 0;
        for score in &self.scores {
            let record = by_id
                .get(score.summary_id.as_str())
                .ok_or_else(|| ReportError::DanglingSummary(score.summary_id.clone()))?;
            if self.excluded.contains(&(
                score.article_id.clone(),
                score.summary_id.clone(),
                score.metric_name.clone(),
            )) {
                excluded_pairs += 1;
                continue;
            }
            let metric_rank = match metrics.iter().position(|m| *m == score.metric_name) {
                Some(i) => i,
                None => {
                    metrics.push(score.metric_name.clone());
                    metrics.len() - 1
                }
            };
            let kind = if record.article_id == score.article_id {
                PairKind::Own
            } else {
                PairKind::Random
            };
            let key = (metric_rank, kind, tag_rank(&record.model_tag), record.run_id);
            cell_tags.entry(key).or_insert_with(|| record.model_tag.clone());
            let cell = cells.entry(key).or_default();
            cell.0.push(score.value);
            if let Some(verdicts) = &self.verdicts {
                let v = verdicts
                    .get(&record.summary_id)
                    .ok_or_else(|| ReportError::MissingVerdict(record.summary_id.clone()))?;
                if v.is_valid {
                    cell.1.push(score.value);
                }
            }
        }

        let with_valid = self.verdicts.is_some() && self.valid_only_rows;
        let mut rows = Vec::new();
        for (key, (all, valid)) in &cells {
            let (metric_rank, kind, _, run_id) = *key;
            let tag = &cell_tags[key];
            let mut push = |filter, values: &[f64]| {
                rows.push(AggregateRow {
                    label: comparison_label(kind, tag),
                    kind,
                    model_tag: tag.clone(),
                    run_id,
                    metric: metrics[metric_rank].clone(),
                    filter,
                    stats: aggregate(values).ok(),
                });
            };
            push(Filter::All, all);
            if with_valid {
                push(Filter::ValidOnly, valid);
            }
        }

        let filter_effects = if with_valid { filter_effects(&rows) } else { Vec::new() };

        Ok(EvaluationReport {
            validity: self.validity_rows(&tag_order),
            confusion: self.confusion_summary(),
            usefulness: self.usefulness_table(&metrics, &by_id),
            metrics,
            rows,
            filter_effects,
            excluded_pairs,
        })
    }

    fn validity_rows(&self, tag_order: &[&str]) -> Vec<ValidityRow> {
        let Some(verdicts) = &self.verdicts else {
            return Vec::new();
        };
        let mut groups: BTreeMap<(usize, u32), (String, usize, usize)> = BTreeMap::new();
        for r in self.records {
            let rank = tag_order.iter().position(|t| *t == r.model_tag).unwrap_or(usize::MAX);
            let g = groups
                .entry((rank, r.run_id))
                .or_insert_with(|| (r.model_tag.clone(), 0, 0));
            g.1 += 1;
            if verdicts.get(&r.summary_id).is_some_and(|v| !v.is_valid) {
                g.2 += 1;
            }
        }
        groups
            .into_iter()
            .map(|((_, run_id), (model_tag, total, invalid))| ValidityRow {
                model_tag,
                run_id,
                total,
                invalid,
                proportion_invalid: invalid as f64 / total as f64,
            })
            .collect()
    }

    fn confusion_summary(&self) -> Option<ConfusionSummary> {
        let (verdicts, labels) = (self.verdicts.as_ref()?, self.validity_labels?);
        let mut labelled: Vec<ValidityVerdict> = verdicts
            .values()
            .filter(|v| labels.contains_key(&v.summary_id))
            .cloned()
            .collect();
        labelled.sort_by(|a, b| a.summary_id.cmp(&b.summary_id));
        let matrix = validity::confusion(&labelled, labels).ok()?;
        let rates = validity::rates(&matrix).ok();
        Some(ConfusionSummary {
            matrix,
            false_positive_rate: rates.map(|r| r.0),
            false_negative_rate: rates.map(|r| r.1),
        })
    }

    fn usefulness_table(&self, metrics: &[String], by_id: &HashMap<&str, &SummaryRecord>) -> Option<UsefulnessTable> {
        let labels = self.usefulness?;
        // summary -> metric -> value, own pairs only
        let mut values: HashMap<&str, HashMap<&str, f64>> = HashMap::new();
        for s in &self.scores {
            let own = by_id
                .get(s.summary_id.as_str())
                .is_some_and(|r| r.article_id == s.article_id);
            if own {
                values
                    .entry(s.summary_id.as_str())
                    .or_default()
                    .insert(s.metric_name.as_str(), s.value);
            }
        }
        let row = |class: String, members: &BTreeSet<&str>| {
            let means = metrics
                .iter()
                .map(|m| {
                    let xs: Vec<f64> = members
                        .iter()
                        .filter_map(|id| values.get(id).and_then(|v| v.get(m.as_str())).copied())
                        .collect();
                    aggregate(&xs).ok().map(|s| s.mean)
                })
                .collect();
            UsefulnessRow {
                class,
                n: members.len(),
                means,
            }
        };
        let members = |pred: &dyn Fn(u8) -> bool| -> BTreeSet<&str> {
            labels
                .iter()
                .filter(|(_, &u)| pred(u))
                .map(|(id, _)| id.as_str())
                .collect()
        };
        let binary = vec![
            row("Not Useful".into(), &members(&|u| u == 0)),
            row("Useful".into(), &members(&|u| u >= 1)),
        ];
        let graded = (0..=2u8)
            .map(|g| row(format!("Useful Rated: {g}"), &members(&|u| u == g)))
            .collect();
        Some(UsefulnessTable {
            metrics: metrics.to_vec(),
            binary,
            graded,
        })
    }
}

type EffectKey = (String, String, String);

fn filter_effects(rows: &[AggregateRow]) -> Vec<FilterEffect> {
    let mut groups: Vec<(EffectKey, Vec<&AggregateRow>)> = Vec::new();
    for row in rows {
        let key = (row.label.clone(), row.model_tag.clone(), row.metric.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((label, model_tag, metric), rows)| {
            let avg = |filter: Filter, pick: fn(&Stats) -> f64| -> Option<f64> {
                let xs: Option<Vec<f64>> = rows
                    .iter()
                    .filter(|r| r.filter == filter)
                    .map(|r| r.stats.as_ref().map(pick))
                    .collect();
                xs.and_then(|xs| aggregate(&xs).ok()).map(|s| s.mean)
            };
            let change = |pick: fn(&Stats) -> f64| {
                let (before, after) = (avg(Filter::All, pick)?, avg(Filter::ValidOnly, pick)?);
                let pct = percent_change(before, after).ok();
                if pct.is_none() {
                    log::warn!("percent_change skipped label=\"{label}\" metric={metric} reason=zero_baseline");
                }
                pct
            };
            FilterEffect {
                mean_change_pct: change(|s| s.mean),
                stddev_change_pct: change(|s| s.stddev),
                label: label.clone(),
                model_tag,
                metric,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

pub fn metric_display_name(metric: &str) -> String {
    match metric.to_lowercase().as_str() {
        "ts" => "TS".into(),
        "rouge1" | "rouge-1" => "ROUGE-1".into(),
        "rouge2" | "rouge-2" => "ROUGE-2".into(),
        "rougel" | "rouge-l" => "ROUGE-L".into(),
        "bleu" => "BLEU".into(),
        "meteor" => "METEOR".into(),
        "alignscore" => "AlignScore".into(),
        "bertscore" => "BERTScore".into(),
        _ => metric.to_string(),
    }
}

/// `m±s` with two decimals.
pub fn format_cell(stats: Option<&Stats>) -> String {
    match stats {
        Some(s) => format!("{:.2}±{:.2}", s.mean, s.stddev),
        None => "n/a".into(),
    }
}

fn opt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

pub fn render(report: &EvaluationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => render_csv(report).into_bytes(),
        Format::Markdown => render_markdown(report).into_bytes(),
    }
}

pub fn parse_json(bytes: &[u8]) -> Result<EvaluationReport> {
    Ok(serde_json::from_slice(bytes)?)
}

fn render_csv(report: &EvaluationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "section",
        "label",
        "model_tag",
        "run_id",
        "metric",
        "filter",
        "mean",
        "stddev",
        "n",
    ];
    w.write_record(header).expect("in-memory csv");
    for r in &report.rows {
        let filter = match r.filter {
            Filter::All => "all",
            Filter::ValidOnly => "valid_only",
        };
        let (mean, sd, n) = match &r.stats {
            Some(s) => (s.mean.to_string(), s.stddev.to_string(), s.n.to_string()),
            None => (String::new(), String::new(), "0".into()),
        };
        w.write_record([
            "aggregate",
            &r.label,
            &r.model_tag,
            &r.run_id.to_string(),
            &r.metric,
            filter,
            &mean,
            &sd,
            &n,
        ])
        .expect("in-memory csv");
    }
    for v in &report.validity {
        w.write_record([
            "invalid_proportion",
            "",
            &v.model_tag,
            &v.run_id.to_string(),
            "invalid",
            "all",
            &v.proportion_invalid.to_string(),
            "",
            &v.total.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::from("# Evaluation report\n\n");
    if report.rows.is_empty() {
        out.push_str("| Comparison |\n|---|\n");
    }
    for metric in &report.metrics {
        let name = metric_display_name(metric);
        for (filter, suffix) in [(Filter::All, "w/ invalid"), (Filter::ValidOnly, "(w/o invalid)")] {
            let rows: Vec<&AggregateRow> = report
                .rows
                .iter()
                .filter(|r| &r.metric == metric && r.filter == filter)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let runs: BTreeSet<u32> = rows.iter().map(|r| r.run_id).collect();
            let mut labels: Vec<(String, String, PairKind)> = Vec::new();
            for r in &rows {
                let key = (r.label.clone(), r.model_tag.clone(), r.kind);
                if !labels.contains(&key) {
                    labels.push(key);
                }
            }
            let random_tags = labels.iter().filter(|l| l.2 == PairKind::Random).count();

            let _ = write!(out, "| Mean±Stddev of {name} {suffix} |");
            for run in &runs {
                let _ = write!(out, " Run {run} |");
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(runs.len()));
            out.push('\n');
            for (label, tag, kind) in &labels {
                let shown = if *kind == PairKind::Random && random_tags > 1 {
                    format!("{label} ({tag})")
                } else {
                    label.clone()
                };
                let _ = write!(out, "| {shown} |");
                for run in &runs {
                    let cell = rows
                        .iter()
                        .find(|r| &r.label == label && &r.model_tag == tag && r.run_id == *run);
                    let _ = write!(out, " {} |", format_cell(cell.and_then(|r| r.stats.as_ref())));
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }

    if !report.validity.is_empty() {
        out.push_str(
            "| Proportion of invalid summaries | Run | Invalid | Total | Proportion |\n|---|---|---|---|---|\n",
        );
        for v in &report.validity {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.2} |",
                v.model_tag, v.run_id, v.invalid, v.total, v.proportion_invalid
            );
        }
        out.push('\n');
    }

    if let Some(c) = &report.confusion {
        let m = c.matrix;
        let _ = writeln!(
            out,
            "Invalid summary detector: True Positives = {}, False Positives = {}, True Negatives = {}, False Negatives = {}. False Positive Rate = {}, False Negative Rate = {}.\n",
            m.tp,
            m.fp,
            m.tn,
            m.fn_,
            opt2(c.false_positive_rate),
            opt2(c.false_negative_rate)
        );
    }

    if !report.filter_effects.is_empty() {
        out.push_str(
            "| Effect of removing invalid summaries | Metric | Mean change | Stddev change |\n|---|---|---|---|\n",
        );
        for e in &report.filter_effects {
            let pct = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |x| format!("{x:+.1}%"));
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                e.label,
                metric_display_name(&e.metric),
                pct(e.mean_change_pct),
                pct(e.stddev_change_pct)
            );
        }
        out.push('\n');
    }

    if let Some(u) = &report.usefulness {
        for (title, rows) in [("Categorization I", &u.binary), ("Categorization II", &u.graded)] {
            let _ = write!(out, "| {title} | n |");
            for m in &u.metrics {
                let _ = write!(out, " {} |", metric_display_name(m));
            }
            out.push_str("\n|---|---|");
            out.push_str(&"---|".repeat(u.metrics.len()));
            out.push('\n');
            for r in rows {
                let _ = write!(out, "| {} | {} |", r.class, r.n);
                for v in &r.means {
                    let _ = write!(out, " {} |", opt2(*v));
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}
