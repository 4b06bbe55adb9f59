//! The `sumeval` command line: every pipeline stage as a subcommand driven
//! by one JSON config file.
//!
//! Exit codes: 0 on success, 1 on data or runtime errors, 2 on configuration
//! errors (unreadable or invalid config, missing paths, bad flags).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{self, ChunkParams, CleaningThresholds, CorpusFormat, Dictionary, Document, LoadOptions};
use crate::genclient::{self, GenerationConfig, Generator};
use crate::metrics::{self, BleuOptions, ScoreRecord, Smoothing};
use crate::report::{self, Format, ReportBuilder, SummaryRecord, TS_METRIC};
use crate::topics::{self, LdaParams, TopicModel, VocabOptions};
use crate::validity::{self, Detector, ValidityVerdict};

#[derive(Debug, Parser)]
#[command(name = "sumeval", version, about = "Summarization evaluation pipeline")]
pub struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override every seed in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Format printed to standard output by `evaluate` and `report`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Skip the valid-only rows of the report.
    #[arg(long, global = true)]
    pub no_filter: bool,
    /// Keep summaries with no in-vocabulary tokens in Topic Similarity aggregates.
    #[arg(long, global = true)]
    pub include_oov_pairs: bool,
    /// Override a config value, e.g. `--set lda.topics=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter OCR noise; writes the kept corpus and a cleaning CSV.
    Clean,
    /// Split train/test and cut training documents into overlapping chunks.
    Chunk,
    /// Run the invalid-summary heuristics over the summaries.
    Validate,
    /// Fit LDA jointly over articles and summaries.
    LdaFit,
    /// Print the top words of every topic of a fitted model.
    LdaTopics {
        /// Words per topic.
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Score summaries and write the report in every format.
    Evaluate,
    /// Generate summaries through the configured endpoint.
    Generate,
    /// Re-render a previously written report.
    Report,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSource {
    pub path: Option<PathBuf>,
    pub format: CorpusFormat,
    pub keep_empty: bool,
}

impl Default for CorpusSource {
    fn default() -> Self {
        CorpusSource {
            path: None,
            format: CorpusFormat::Jsonl,
            keep_empty: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningSection {
    pub alnum_threshold: f64,
    pub dict_threshold: f64,
}

impl Default for CleaningSection {
    fn default() -> Self {
        let t = CleaningThresholds::default();
        CleaningSection {
            alnum_threshold: t.alnum,
            dict_threshold: t.dict,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub topics: usize,
    pub iterations: usize,
    /// Defaults to `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Defaults to the global seed.
    pub seed: Option<u64>,
    pub min_doc_freq: usize,
    /// Extra stopword file, one word per line.
    pub stopwords: Option<PathBuf>,
    pub builtin_stopwords: bool,
    /// Defaults to `<output_dir>/model.json`.
    pub model_path: Option<PathBuf>,
}

impl Default for LdaSection {
    fn default() -> Self {
        LdaSection {
            topics: 8,
            iterations: topics::DEFAULT_ITERATIONS,
            alpha: None,
            beta: topics::DEFAULT_BETA,
            seed: None,
            min_doc_freq: 1,
            stopwords: None,
            builtin_stopwords: true,
            model_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BleuSection {
    pub max_n: usize,
    pub smoothing: Smoothing,
    /// Also write pooled corpus-level BLEU per model and run.
    pub corpus_level: bool,
}

impl Default for BleuSection {
    fn default() -> Self {
        let d = BleuOptions::default();
        BleuSection {
            max_n: d.max_n,
            smoothing: d.smoothing,
            corpus_level: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub enabled: bool,
    /// Summaries used for random pairing; defaults to the first
    /// non-reference model tag.
    pub model_tag: Option<String>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            enabled: true,
            model_tag: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub runs: u32,
    pub model_tag: String,
    /// Defaults to `<output_dir>/summaries.jsonl`.
    pub output: Option<PathBuf>,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection {
            runs: 3,
            model_tag: "foundation".into(),
            output: None,
        }
    }
}

pub const METRIC_NAMES: &[&str] = &["ts", "rouge1", "rouge2", "rougeL", "bleu", "meteor"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub corpus: CorpusSource,
    pub dictionary: Option<PathBuf>,
    pub cleaning: CleaningSection,
    pub chunking: ChunkParams,
    pub split: SplitSection,
    pub lda: LdaSection,
    pub metrics: Vec<String>,
    pub bleu: BleuSection,
    pub summaries: Vec<PathBuf>,
    pub reference_tag: String,
    pub external_scores: Vec<PathBuf>,
    pub validity_labels: Option<PathBuf>,
    pub usefulness_labels: Option<PathBuf>,
    pub random_baseline: BaselineSection,
    pub filter_invalid: bool,
    pub include_oov_pairs: bool,
    pub output_dir: PathBuf,
    pub generation: GenerationConfig,
    pub generate: GenerateSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            corpus: CorpusSource::default(),
            dictionary: None,
            cleaning: CleaningSection::default(),
            chunking: ChunkParams::default(),
            split: SplitSection::default(),
            lda: LdaSection::default(),
            metrics: METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
            bleu: BleuSection::default(),
            summaries: Vec::new(),
            reference_tag: "reference".into(),
            external_scores: Vec::new(),
            validity_labels: None,
            usefulness_labels: None,
            random_baseline: BaselineSection::default(),
            filter_invalid: true,
            include_oov_pairs: false,
            output_dir: PathBuf::from("sumeval-out"),
            generation: GenerationConfig::default(),
            generate: GenerateSection::default(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Sets `dotted.key` in a JSON object. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: `{part}` is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Config(format!("--set: empty key in `{assignment}`")))
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut config: PipelineConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // Relative paths resolve against the config file's directory.
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix_opt(&mut self.corpus.path);
        fix_opt(&mut self.dictionary);
        fix_opt(&mut self.lda.stopwords);
        fix_opt(&mut self.lda.model_path);
        fix_opt(&mut self.validity_labels);
        fix_opt(&mut self.usefulness_labels);
        fix_opt(&mut self.generate.output);
        self.summaries.iter_mut().for_each(fix);
        self.external_scores.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
    }

    pub fn lda_seed(&self) -> u64 {
        self.lda.seed.unwrap_or(self.seed)
    }

    pub fn model_path(&self) -> PathBuf {
        self.lda
            .model_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("model.json"))
    }

    fn require_path(field: &str, path: Option<&PathBuf>) -> CliResult<PathBuf> {
        let path = path.ok_or_else(|| CliError::Config(format!("`{field}` is not set")))?;
        if !path.exists() {
            return Err(CliError::Config(format!(
                "`{field}` path {} does not exist",
                path.display()
            )));
        }
        Ok(path.clone())
    }

    fn check_optional(&self) -> CliResult<()> {
        for (field, p) in [
            ("lda.stopwords", &self.lda.stopwords),
            ("validity_labels", &self.validity_labels),
            ("usefulness_labels", &self.usefulness_labels),
        ] {
            if p.is_some() {
                Self::require_path(field, p.as_ref())?;
            }
        }
        for p in &self.external_scores {
            Self::require_path("external_scores", Some(p))?;
        }
        Ok(())
    }

    fn validate_for(&self, command: &Command) -> CliResult<()> {
        let corpus = || Self::require_path("corpus.path", self.corpus.path.as_ref());
        let summaries = || {
            if self.summaries.is_empty() {
                return Err(CliError::Config("`summaries` is empty".into()));
            }
            self.summaries
                .iter()
                .try_for_each(|p| Self::require_path("summaries", Some(p)).map(drop))
        };
        match command {
            Command::Clean => {
                corpus()?;
                Self::require_path("dictionary", self.dictionary.as_ref())?;
                for t in [self.cleaning.alnum_threshold, self.cleaning.dict_threshold] {
                    if !(0.0..=1.0).contains(&t) {
                        return Err(CliError::Config(format!("cleaning threshold {t} outside [0, 1]")));
                    }
                }
            }
            Command::Chunk => {
                corpus()?;
                self.chunking
                    .validate()
                    .map_err(|e| CliError::Config(format!("chunking: {e}")))?;
                let f = self.split.test_fraction;
                if !(f > 0.0 && f < 1.0) {
                    return Err(CliError::Config(format!("split.test_fraction {f} outside (0, 1)")));
                }
            }
            Command::Validate => {
                summaries()?;
                self.check_optional()?;
            }
            Command::LdaFit => {
                corpus()?;
                self.check_optional()?;
                for p in &self.summaries {
                    Self::require_path("summaries", Some(p))?;
                }
            }
            Command::LdaTopics { .. } => {
                Self::require_path("lda.model_path", Some(&self.model_path()))?;
            }
            Command::Evaluate => {
                corpus()?;
                summaries()?;
                self.check_optional()?;
                for m in &self.metrics {
                    if !METRIC_NAMES.contains(&m.as_str()) {
                        return Err(CliError::Config(format!(
                            "unknown metric `{m}` (known: {})",
                            METRIC_NAMES.join(", ")
                        )));
                    }
                }
            }
            Command::Generate => {
                corpus()?;
                self.generation
                    .validate()
                    .map_err(|e| CliError::Config(format!("generation: {e}")))?;
                if self.generate.runs == 0 {
                    return Err(CliError::Config("generate.runs must be at least 1".into()));
                }
            }
            Command::Report => {
                Self::require_path("report", Some(&self.output_dir.join("report.json")))?;
            }
        }
        Ok(())
    }
}

fn init_logging() {
    let _ = env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .parse_default_env()
        .format(|buf, record| writeln!(buf, "{} {}", record.level(), record.args()))
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = PipelineConfig::load(config_path, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.lda.seed = None;
    }
    if let Some(out) = &cli.output {
        config.output_dir = out.clone();
    }
    if cli.no_filter {
        config.filter_invalid = false;
    }
    if cli.include_oov_pairs {
        config.include_oov_pairs = true;
    }
    config.validate_for(&cli.command)?;
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| CliError::Config(format!("output_dir {}: {e}", config.output_dir.display())))?;

    match &cli.command {
        Command::Clean => cmd_clean(&config),
        Command::Chunk => cmd_chunk(&config),
        Command::Validate => cmd_validate(&config),
        Command::LdaFit => cmd_lda_fit(&config).map(drop),
        Command::LdaTopics { k } => cmd_lda_topics(&config, *k),
        Command::Evaluate => cmd_evaluate(&config, cli.format.unwrap_or(Format::Markdown)),
        Command::Generate => cmd_generate(&config),
        Command::Report => cmd_report(&config, cli.format.unwrap_or(Format::Markdown)),
    }
}

fn load_documents(config: &PipelineConfig) -> CliResult<Vec<Document>> {
    let path = config.corpus.path.as_ref().expect("validated");
    let options = LoadOptions {
        keep_empty: config.corpus.keep_empty,
    };
    corpus::load_corpus(path, config.corpus.format, options).map_err(data)
}

fn load_summaries(config: &PipelineConfig) -> CliResult<Vec<SummaryRecord>> {
    let mut all = Vec::new();
    let mut ids = HashSet::new();
    let mut keys = HashSet::new();
    for path in &config.summaries {
        for rec in report::read_summaries(path).map_err(data)? {
            if !ids.insert(rec.summary_id.clone()) || !keys.insert(rec.key()) {
                return Err(CliError::Data(format!(
                    "summary `{}` appears in more than one summaries file",
                    rec.summary_id
                )));
            }
            all.push(rec);
        }
    }
    Ok(all)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

fn cmd_clean(config: &PipelineConfig) -> CliResult<()> {
    let docs = load_documents(config)?;
    let dictionary = Dictionary::from_file(config.dictionary.as_ref().expect("validated")).map_err(data)?;
    if dictionary.is_empty() {
        return Err(CliError::Config("`dictionary` contains no words".into()));
    }
    let thresholds = CleaningThresholds {
        alnum: config.cleaning.alnum_threshold,
        dict: config.cleaning.dict_threshold,
    };
    let (kept, report) = corpus::filter_clean(docs, thresholds, &dictionary).map_err(data)?;
    let dir = config.output_dir.join("clean");
    fs::create_dir_all(&dir).map_err(data)?;
    corpus::write_jsonl(&dir.join("kept.jsonl"), &kept).map_err(data)?;
    write_file(&dir.join("cleaning.csv"), report.to_csv().as_bytes())?;
    log::info!(
        "clean kept={} rejected={} alnum_threshold={} dict_threshold={}",
        report.kept_count,
        report.rejected_count,
        thresholds.alnum,
        thresholds.dict
    );
    println!("kept={} rejected={}", report.kept_count, report.rejected_count);
    Ok(())
}

fn cmd_chunk(config: &PipelineConfig) -> CliResult<()> {
    let docs = load_documents(config)?;
    log::info!(
        "chunk seed={} test_fraction={}",
        config.seed,
        config.split.test_fraction
    );
    let (train, test) = corpus::split_train_test(&docs, config.split.test_fraction, config.seed).map_err(data)?;
    let mut chunks = Vec::new();
    for doc in &train {
        chunks.extend(corpus::chunk_tokens(&doc.id, &corpus::tokenize(&doc.text), config.chunking).map_err(data)?);
    }
    let dir = config.output_dir.join("chunk");
    fs::create_dir_all(&dir).map_err(data)?;
    corpus::write_jsonl(&dir.join("train.jsonl"), &train).map_err(data)?;
    corpus::write_jsonl(&dir.join("test.jsonl"), &test).map_err(data)?;
    write_file(&dir.join("train_chunks.jsonl"), &jsonl(&chunks))?;
    println!(
        "train={} test={} train_chunks={}",
        train.len(),
        test.len(),
        chunks.len()
    );
    Ok(())
}

fn verdicts_for(records: &[SummaryRecord]) -> Vec<ValidityVerdict> {
    let detector = Detector::standard();
    records.iter().map(|r| detector.check(&r.summary_id, &r.text)).collect()
}

fn cmd_validate(config: &PipelineConfig) -> CliResult<()> {
    let records = load_summaries(config)?;
    let verdicts = verdicts_for(&records);
    write_file(&config.output_dir.join("verdicts.jsonl"), &jsonl(&verdicts))?;
    let report = ReportBuilder::new(&records).verdicts(&verdicts).build().map_err(data)?;
    for row in &report.validity {
        println!(
            "model_tag={} run={} invalid={} total={} proportion={:.4}",
            row.model_tag, row.run_id, row.invalid, row.total, row.proportion_invalid
        );
    }
    if let Some(path) = &config.validity_labels {
        let labels = validity::read_validity_labels(path).map_err(data)?;
        let labelled: Vec<ValidityVerdict> = verdicts
            .iter()
            .filter(|v| labels.contains_key(&v.summary_id))
            .cloned()
            .collect();
        let m = validity::confusion(&labelled, &labels).map_err(data)?;
        let rates = validity::rates(&m).ok();
        let summary = serde_json::json!({
            "matrix": m,
            "false_positive_rate": rates.map(|r| r.0),
            "false_negative_rate": rates.map(|r| r.1),
        });
        write_file(
            &config.output_dir.join("confusion.json"),
            serde_json::to_string_pretty(&summary).expect("json").as_bytes(),
        )?;
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
        println!(
            "tp={} fp={} tn={} fn={} fpr={} fnr={}",
            m.tp,
            m.fp,
            m.tn,
            m.fn_,
            fmt(rates.map(|r| r.0)),
            fmt(rates.map(|r| r.1))
        );
    }
    Ok(())
}

fn vocab_options(config: &PipelineConfig) -> CliResult<VocabOptions> {
    let mut options = if config.lda.builtin_stopwords {
        VocabOptions::english()
    } else {
        VocabOptions {
            require_letter: true,
            ..Default::default()
        }
    };
    options.min_doc_freq = config.lda.min_doc_freq;
    if let Some(path) = &config.lda.stopwords {
        let text = fs::read_to_string(path).map_err(data)?;
        let before = options.stopwords.len();
        options.stopwords.extend(
            text.lines()
                .map(str::trim)
                .filter(|w| !w.is_empty() && !w.starts_with('#'))
                .map(str::to_lowercase),
        );
        log::info!("lda extra_stopwords={}", options.stopwords.len() - before);
    }
    Ok(options)
}

fn lda_params(config: &PipelineConfig) -> LdaParams {
    let k = config.lda.topics;
    let mut params = LdaParams::new(k)
        .with_iterations(config.lda.iterations)
        .with_seed(config.lda_seed());
    params.beta = config.lda.beta;
    if let Some(alpha) = config.lda.alpha {
        params.alpha = alpha;
    }
    params
}

fn fit_joint(config: &PipelineConfig, articles: &[Document], summaries: &[SummaryRecord]) -> CliResult<TopicModel> {
    let docs: Vec<Vec<String>> = articles
        .iter()
        .map(|d| corpus::tokenize_lower(&d.text))
        .chain(summaries.iter().map(|s| corpus::tokenize_lower(&s.text)))
        .collect();
    let params = lda_params(config);
    log::info!(
        "lda-fit seed={} topics={} iterations={} alpha={} beta={} documents={}",
        params.seed,
        params.topics,
        params.iterations,
        params.alpha,
        params.beta,
        docs.len()
    );
    topics::fit_lda(&docs, &vocab_options(config)?, params).map_err(data)
}

fn cmd_lda_fit(config: &PipelineConfig) -> CliResult<TopicModel> {
    let articles = load_documents(config)?;
    let summaries = if config.summaries.is_empty() {
        Vec::new()
    } else {
        load_summaries(config)?
    };
    let model = fit_joint(config, &articles, &summaries)?;
    let path = config.model_path();
    model.save(&path).map_err(data)?;
    println!(
        "model={} topics={} vocabulary={}",
        path.display(),
        model.topics,
        model.vocab_size()
    );
    Ok(model)
}

fn cmd_lda_topics(config: &PipelineConfig, k: usize) -> CliResult<()> {
    let model = TopicModel::load(&config.model_path()).map_err(data)?;
    for (i, words) in model.top_words(k).iter().enumerate() {
        let words: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        println!("Topic {i}: {}", words.join(" "));
    }
    Ok(())
}

fn random_baseline_tag<'a>(config: &'a PipelineConfig, records: &'a [SummaryRecord]) -> Option<&'a str> {
    config.random_baseline.model_tag.as_deref().or_else(|| {
        records
            .iter()
            .map(|r| r.model_tag.as_str())
            .find(|t| *t != config.reference_tag)
    })
}

struct Scored {
    scores: Vec<ScoreRecord>,
    oov: Vec<(String, String)>,
}

fn topic_similarity_scores(
    config: &PipelineConfig,
    model: &TopicModel,
    articles: &[Document],
    records: &[SummaryRecord],
) -> CliResult<Scored> {
    let article_vecs: HashMap<&str, topics::Inference> = articles
        .par_iter()
        .map(|a| (a.id.as_str(), model.infer(&corpus::tokenize_lower(&a.text))))
        .collect();
    let summary_vecs: HashMap<&str, topics::Inference> = records
        .par_iter()
        .map(|r| (r.summary_id.as_str(), model.infer(&corpus::tokenize_lower(&r.text))))
        .collect();

    let mut pairs: Vec<(String, String)> = records
        .iter()
        .filter(|r| article_vecs.contains_key(r.article_id.as_str()))
        .map(|r| (r.article_id.clone(), r.summary_id.clone()))
        .collect();

    if config.random_baseline.enabled {
        if let Some(tag) = random_baseline_tag(config, records) {
            let mut runs: Vec<u32> = records
                .iter()
                .filter(|r| r.model_tag == tag)
                .map(|r| r.run_id)
                .collect();
            runs.sort_unstable();
            runs.dedup();
            for run in runs {
                let group: Vec<SummaryRecord> = records
                    .iter()
                    .filter(|r| {
                        r.model_tag == tag && r.run_id == run && article_vecs.contains_key(r.article_id.as_str())
                    })
                    .cloned()
                    .collect();
                let ids: Vec<String> = group.iter().map(|r| r.article_id.clone()).collect();
                if ids.len() < 2 {
                    log::warn!("random_baseline skipped model_tag={tag} run={run} reason=fewer_than_2_articles");
                    continue;
                }
                let seed = config.seed.wrapping_add(u64::from(run));
                log::info!("random_baseline model_tag={tag} run={run} seed={seed}");
                pairs.extend(report::random_pairing(&ids, &group, seed).map_err(data)?);
            }
        }
    }

    let mut scored = Scored {
        scores: Vec::with_capacity(pairs.len()),
        oov: Vec::new(),
    };
    for (article_id, summary_id) in pairs {
        let a = &article_vecs[article_id.as_str()];
        let s = &summary_vecs[summary_id.as_str()];
        let ts = topics::topic_similarity(&a.vector, &s.vector).map_err(data)?;
        if a.oov_fallback || s.oov_fallback {
            scored.oov.push((article_id.clone(), summary_id.clone()));
        }
        scored
            .scores
            .push(ScoreRecord::new(&article_id, &summary_id, TS_METRIC, ts));
    }
    Ok(scored)
}

fn reference_scores(config: &PipelineConfig, records: &[SummaryRecord]) -> CliResult<(Vec<ScoreRecord>, Vec<Value>)> {
    let wanted = |m: &str| config.metrics.iter().any(|x| x == m);
    let mut references: HashMap<&str, Vec<String>> = HashMap::new();
    for r in records.iter().filter(|r| r.model_tag == config.reference_tag) {
        references
            .entry(r.article_id.as_str())
            .or_insert_with(|| corpus::tokenize_lower(&r.text));
    }
    let candidates: Vec<&SummaryRecord> = records
        .iter()
        .filter(|r| r.model_tag != config.reference_tag && references.contains_key(r.article_id.as_str()))
        .collect();
    let bleu_options = BleuOptions {
        max_n: config.bleu.max_n,
        smoothing: config.bleu.smoothing,
    };
    let per_pair: Vec<Vec<ScoreRecord>> = candidates
        .par_iter()
        .map(|rec| -> CliResult<Vec<ScoreRecord>> {
            let cand = corpus::tokenize_lower(&rec.text);
            let reference = &references[rec.article_id.as_str()];
            let mut out = Vec::new();
            let mut push = |name: &str, v: f64| out.push(ScoreRecord::new(&rec.article_id, &rec.summary_id, name, v));
            for (name, n) in [("rouge1", 1), ("rouge2", 2)] {
                if wanted(name) {
                    push(name, metrics::rouge_n(&cand, reference, n).map_err(data)?.f1);
                }
            }
            if wanted("rougeL") {
                push("rougeL", metrics::rouge_l(&cand, reference).f1);
            }
            if wanted("bleu") {
                push(
                    "bleu",
                    metrics::bleu(&cand, std::slice::from_ref(reference), bleu_options)
                        .map_err(data)?
                        .score,
                );
            }
            if wanted("meteor") {
                push("meteor", metrics::meteor(&cand, reference).score);
            }
            Ok(out)
        })
        .collect::<CliResult<_>>()?;

    let mut corpus_level = Vec::new();
    if config.bleu.corpus_level && wanted("bleu") {
        type Pair = (Vec<String>, Vec<Vec<String>>);
        let mut groups: BTreeMap<(String, u32), Vec<Pair>> = BTreeMap::new();
        for rec in &candidates {
            groups.entry((rec.model_tag.clone(), rec.run_id)).or_default().push((
                corpus::tokenize_lower(&rec.text),
                vec![references[rec.article_id.as_str()].clone()],
            ));
        }
        for ((tag, run), pairs) in groups {
            let score = metrics::corpus_bleu(&pairs, bleu_options).map_err(data)?;
            corpus_level.push(serde_json::json!({"model_tag": tag, "run_id": run, "bleu": score.score}));
        }
    }
    Ok((per_pair.into_iter().flatten().collect(), corpus_level))
}

fn cmd_evaluate(config: &PipelineConfig, stdout_format: Format) -> CliResult<()> {
    let articles = load_documents(config)?;
    let records = load_summaries(config)?;
    let article_ids: HashSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    let unknown = records
        .iter()
        .filter(|r| !article_ids.contains(r.article_id.as_str()))
        .count();
    if unknown > 0 {
        log::warn!("evaluate summaries_without_article={unknown}");
    }
    let verdicts = verdicts_for(&records);

    let mut scores = Vec::new();
    let mut oov = Vec::new();
    if config.metrics.iter().any(|m| m == TS_METRIC) {
        let model = fit_joint(config, &articles, &records)?;
        model.save(&config.model_path()).map_err(data)?;
        let ts = topic_similarity_scores(config, &model, &articles, &records)?;
        scores.extend(ts.scores);
        oov = ts.oov;
    }
    let (classical, corpus_bleu) = reference_scores(config, &records)?;
    scores.extend(classical);

    let mut external = Vec::new();
    for path in &config.external_scores {
        external.extend(metrics::ingest_external_scores(path).map_err(data)?);
    }
    let usefulness = match &config.usefulness_labels {
        Some(p) => Some(validity::read_usefulness_labels(p).map_err(data)?),
        None => None,
    };
    let labels = match &config.validity_labels {
        Some(p) => Some(validity::read_validity_labels(p).map_err(data)?),
        None => None,
    };

    let mut builder = ReportBuilder::new(&records)
        .verdicts(&verdicts)
        .valid_only_rows(config.filter_invalid)
        .scores(&scores)
        .scores(&external);
    if let Some(u) = &usefulness {
        builder = builder.usefulness(u);
    }
    if let Some(l) = &labels {
        builder = builder.validity_labels(l);
    }
    if !config.include_oov_pairs {
        for (a, s) in &oov {
            builder = builder.exclude(a, s, TS_METRIC);
        }
    }
    if !oov.is_empty() {
        log::warn!("evaluate oov_pairs={} included={}", oov.len(), config.include_oov_pairs);
    }
    let report = builder.build().map_err(data)?;

    let dir = &config.output_dir;
    write_file(&dir.join("verdicts.jsonl"), &jsonl(&verdicts))?;
    write_file(&dir.join("scores.jsonl"), &jsonl(&scores))?;
    if !corpus_bleu.is_empty() {
        write_file(
            &dir.join("corpus_bleu.json"),
            serde_json::to_string_pretty(&corpus_bleu).expect("json").as_bytes(),
        )?;
    }
    for format in [Format::Json, Format::Csv, Format::Markdown] {
        write_file(
            &dir.join(format!("report.{}", format.extension())),
            &report::render(&report, format),
        )?;
    }
    log::info!(
        "evaluate articles={} summaries={} scores={} external={} seed={}",
        articles.len(),
        records.len(),
        scores.len(),
        external.len(),
        config.seed
    );
    std::io::stdout()
        .write_all(&report::render(&report, stdout_format))
        .map_err(data)
}

fn cmd_generate(config: &PipelineConfig) -> CliResult<()> {
    let articles = load_documents(config)?;
    let generator = Generator::new(config.generation.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let output = config
        .generate
        .output
        .clone()
        .unwrap_or_else(|| config.output_dir.join("summaries.jsonl"));
    let outcome = genclient::batch_generate(
        &generator,
        &articles,
        config.generate.runs,
        &config.generate.model_tag,
        &output,
    )
    .map_err(data)?;
    println!(
        "records={} requested={} failed={} output={}",
        outcome.records.len(),
        outcome.requested,
        outcome.failed,
        output.display()
    );
    if outcome.failed > 0 {
        return Err(CliError::Data(format!(
            "{} of {} generation requests failed (network or endpoint error; see log)",
            outcome.failed, outcome.requested
        )));
    }
    Ok(())
}

fn cmd_report(config: &PipelineConfig, format: Format) -> CliResult<()> {
    let path = config.output_dir.join("report.json");
    let bytes = fs::read(&path).map_err(data)?;
    let report = report::parse_json(&bytes).map_err(data)?;
    std::io::stdout()
        .write_all(&report::render(&report, format))
        .map_err(data)
}
