//! Summary generation against an OpenAI-style HTTP completion endpoint.
//!
//! Requests are paced by a rate limit shared by all workers, transient
//! failures (HTTP 429, 5xx, timeouts, refused connections) are retried with
//! exponential backoff, and every generated summary is appended to a JSONL
//! file as soon as it arrives so interrupted batches can resume.

use std::collections::HashSet;
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::Document;
use crate::report::{read_summaries, ReportError, SummaryRecord};

pub const DEFAULT_MAX_INPUT_CHARS: usize = 5000;
pub const DEFAULT_API_KEY_ENV: &str = "SUMEVAL_API_KEY";

const PROMPT_HEAD: &str = "Write a summary of the following text \n\
delimited by triple backticks. Return \n\
your response which covers the key points \n\
of the text.\n";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("giving up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("unparseable response: {0}")]
    Unparseable(String),
    #[error(transparent)]
    Output(#[from] ReportError),
    #[error("cannot write {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GenError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyShape {
    /// `{"prompt": ...}`; completion read from `choices[0].text`.
    #[default]
    Prompt,
    /// `{"messages": [{"role": "user", ...}]}`; completion read from
    /// `choices[0].message.content`.
    Messages,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub max_input_chars: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_retries: u32,
    pub request_timeout_secs: f64,
    /// Requests per second across all workers; 0 disables pacing.
    pub rate_limit: f64,
    pub concurrency: usize,
    pub initial_backoff_ms: u64,
    pub body_shape: BodyShape,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Environment variable that overrides `api_key`.
    pub api_key_env: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            endpoint_url: String::new(),
            model_name: String::new(),
            max_input_chars: DEFAULT_MAX_INPUT_CHARS,
            temperature: 0.7,
            max_tokens: 256,
            max_retries: 3,
            request_timeout_secs: 60.0,
            rate_limit: 4.0,
            concurrency: 4,
            initial_backoff_ms: 500,
            body_shape: BodyShape::Prompt,
            api_key: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
        }
    }
}

impl fmt::Debug for GenerationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenerationConfig")
            .field("endpoint_url", &self.endpoint_url)
            .field("model_name", &self.model_name)
            .field("max_input_chars", &self.max_input_chars)
            .field("temperature", &self.temperature)
            .field("max_tokens", &self.max_tokens)
            .field("max_retries", &self.max_retries)
            .field("request_timeout_secs", &self.request_timeout_secs)
            .field("rate_limit", &self.rate_limit)
            .field("concurrency", &self.concurrency)
            .field("body_shape", &self.body_shape)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl GenerationConfig {
    // Negated comparisons so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.endpoint_url.is_empty() {
            return bad("endpoint_url is empty");
        }
        if self.max_input_chars == 0 {
            return bad("max_input_chars must be positive");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be non-negative");
        }
        if !(self.request_timeout_secs > 0.0) {
            return bad("request_timeout_secs must be positive");
        }
        if !(self.rate_limit >= 0.0) {
            return bad("rate_limit must be non-negative");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        Ok(())
    }

    pub fn resolved_api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .or_else(|| self.api_key.clone())
    }
}

/// The summarization prompt with the first `max_input_chars` characters of
/// the article between triple backticks.
pub fn build_prompt(article_text: &str, max_input_chars: usize) -> String {
    let text: String = article_text.chars().take(max_input_chars).collect();
    format!("{PROMPT_HEAD}```{text}```\nSUMMARY:")
}

struct Pacer {
    interval: Option<Duration>,
    next: Mutex<Instant>,
}

impl Pacer {
    fn new(rate: f64) -> Self {
        Pacer {
            interval: (rate > 0.0).then(|| Duration::from_secs_f64(1.0 / rate)),
            next: Mutex::new(Instant::now()),
        }
    }

    fn wait(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let slot = {
            let mut next = self.next.lock().unwrap();
            let slot = (*next).max(Instant::now());
            *next = slot + interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

enum Failure {
    Transient(String),
    Fatal(GenError),
}

/// An HTTP client bound to one endpoint configuration.
pub struct Generator {
    config: GenerationConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    pacer: Pacer,
    attempts: AtomicUsize,
}

impl Generator {
    pub fn new(config: GenerationConfig) -> Result<Self> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout_secs))
            .build()
            .map_err(|e| GenError::Config(e.to_string()))?;
        Ok(Generator {
            api_key: config.resolved_api_key(),
            pacer: Pacer::new(config.rate_limit),
            config,
            client,
            attempts: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    /// HTTP requests issued so far, retries included.
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }

    fn body(&self, prompt: &str) -> Value {
        let c = &self.config;
        match c.body_shape {
            BodyShape::Prompt => json!({
                "model": c.model_name,
                "prompt": prompt,
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
            BodyShape::Messages => json!({
                "model": c.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
        }
    }

    fn attempt(&self, prompt: &str) -> std::result::Result<String, Failure> {
        self.pacer.wait();
        let n = self.attempts.fetch_add(1, Ordering::SeqCst) + 1;
        log::debug!("request attempt={n} endpoint={}", self.config.endpoint_url);
        let mut request = self.client.post(&self.config.endpoint_url).json(&self.body(prompt));
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                Failure::Transient(format!("network error: {e}"))
            } else {
                Failure::Fatal(GenError::Network(e.to_string()))
            }
        })?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| Failure::Transient(format!("reading body: {e}")))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Transient(format!("HTTP {}", status.as_u16())));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(GenError::Http {
                status: status.as_u16(),
                body: body.chars().take(200).collect(),
            }));
        }
        parse_completion(&body).map_err(Failure::Fatal)
    }

    /// Sends `prompt` and returns the completion text, retrying transient
    /// failures up to `max_retries` times.
    pub fn request_summary(&self, prompt: &str) -> Result<String> {
        let mut last = String::new();
        for retry in 0..=self.config.max_retries {
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    log::warn!("request transient_failure=\"{msg}\" retry={retry}");
                    last = msg;
                    if retry < self.config.max_retries {
                        let backoff = self.config.initial_backoff_ms.saturating_mul(1 << retry.min(16));
                        thread::sleep(Duration::from_millis(backoff));
                    }
                }
            }
        }
        Err(GenError::RetriesExhausted {
            attempts: self.config.max_retries + 1,
            last,
        })
    }
}

/// Reads `choices[0].text` or `choices[0].message.content`.
pub fn parse_completion(body: &str) -> Result<String> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| GenError::Unparseable(format!("{e}: {}", body.chars().take(80).collect::<String>())))?;
    let choice = value.pointer("/choices/0");
    choice
        .and_then(|c| c.get("text").or_else(|| c.pointer("/message/content")))
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| GenError::Unparseable("no choices[0].text or choices[0].message.content".into()))
}

pub fn request_summary(config: &GenerationConfig, prompt: &str) -> Result<String> {
    Generator::new(config.clone())?.request_summary(prompt)
}

pub fn summary_id(article_id: &str, model_tag: &str, run_id: u32) -> String {
    format!("{article_id}-{model_tag}-r{run_id}")
}

#[derive(Debug, Clone, Default)]
pub struct BatchOutcome {
    /// Every record for the requested articles, previously stored or new,
    /// ordered by article then run.
    pub records: Vec<SummaryRecord>,
    pub requested: usize,
    pub failed: usize,
}

/// Generates `runs` summaries per article, skipping keys already present in
/// `output_path`. Failed requests are logged and skipped.
pub fn batch_generate(
    generator: &Generator,
    articles: &[Document],
    runs: u32,
    model_tag: &str,
    output_path: &Path,
) -> Result<BatchOutcome> {
    if runs == 0 {
        return Err(GenError::Config("runs must be at least 1".into()));
    }
    let existing = if output_path.exists() {
        read_summaries(output_path)?
    } else {
        Vec::new()
    };
    let have: HashSet<(String, u32, String)> = existing.iter().map(SummaryRecord::key).collect();
    let jobs: Vec<(&Document, u32)> = articles
        .iter()
        .flat_map(|a| (0..runs).map(move |r| (a, r)))
        .filter(|(a, r)| !have.contains(&(a.id.clone(), *r, model_tag.to_string())))
        .collect();
    log::info!(
        "generate articles={} runs={runs} model_tag={model_tag} existing={} pending={}",
        articles.len(),
        existing.len(),
        jobs.len()
    );

    let out = Mutex::new(OpenOptions::new().create(true).append(true).open(output_path)?);
    let next = AtomicUsize::new(0);
    let produced = Mutex::new(Vec::new());
    let failed = AtomicUsize::new(0);
    let write_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    let workers = generator.config.concurrency.min(jobs.len()).max(1);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(article, run)) = jobs.get(i) else {
                    break;
                };
                let prompt = build_prompt(&article.text, generator.config.max_input_chars);
                match generator.request_summary(&prompt) {
                    Ok(text) => {
                        let rec = SummaryRecord {
                            article_id: article.id.clone(),
                            summary_id: summary_id(&article.id, model_tag, run),
                            run_id: run,
                            model_tag: model_tag.to_string(),
                            text,
                        };
                        let line = serde_json::to_string(&rec).expect("record serializes");
                        let mut file = out.lock().unwrap();
                        if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                            write_error.lock().unwrap().get_or_insert(e);
                            break;
                        }
                        drop(file);
                        produced.lock().unwrap().push(rec);
                    }
                    Err(e) => {
                        failed.fetch_add(1, Ordering::SeqCst);
                        log::error!("generate article={} run={run} error=\"{e}\"", article.id);
                    }
                }
            });
        }
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e.into());
    }

    let order: std::collections::HashMap<&str, usize> =
        articles.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let mut records: Vec<SummaryRecord> = existing
        .into_iter()
        .filter(|r| r.model_tag == model_tag && r.run_id < runs && order.contains_key(r.article_id.as_str()))
        .chain(produced.into_inner().unwrap())
        .collect();
    records.sort_by_key(|r| (order[r.article_id.as_str()], r.run_id));
    Ok(BatchOutcome {
        records,
        requested: jobs.len(),
        failed: failed.into_inner(),
    })
}

/// A minimal local HTTP endpoint that speaks the completion JSON shape.
///
/// Intended for tests and offline demos: every request body is recorded and
/// answered by a caller-supplied handler.
pub mod stub {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::{Arc, Mutex};
    use std::thread::{self, JoinHandle};

    use serde_json::{json, Value};

    pub struct Reply {
        pub status: u16,
        pub body: String,
    }

    impl Reply {
        pub fn completion(text: &str) -> Self {
            Reply {
                status: 200,
                body: json!({"choices": [{"text": text, "message": {"role": "assistant", "content": text}}]})
                    .to_string(),
            }
        }

        pub fn status(status: u16) -> Self {
            Reply {
                status,
                body: json!({"error": {"message": "stub error"}}).to_string(),
            }
        }

        pub fn raw(status: u16, body: &str) -> Self {
            Reply {
                status,
                body: body.to_string(),
            }
        }
    }

    type Handler = dyn Fn(usize, &Value) -> Reply + Send + Sync;

    pub struct StubServer {
        addr: std::net::SocketAddr,
        requests: Arc<Mutex<Vec<Value>>>,
        stop: Arc<AtomicBool>,
        handle: Option<JoinHandle<()>>,
    }

    impl StubServer {
        /// `handler` receives the zero-based request index and the JSON body.
        pub fn start(handler: impl Fn(usize, &Value) -> Reply + Send + Sync + 'static) -> std::io::Result<Self> {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let requests = Arc::new(Mutex::new(Vec::new()));
            let stop = Arc::new(AtomicBool::new(false));
            let handler: Arc<Handler> = Arc::new(handler);
            let handle = {
                let (requests, stop) = (requests.clone(), stop.clone());
                thread::spawn(move || {
                    for stream in listener.incoming() {
                        if stop.load(Ordering::SeqCst) {
                            break;
                        }
                        let Ok(stream) = stream else { continue };
                        let (requests, handler) = (requests.clone(), handler.clone());
                        thread::spawn(move || {
                            let _ = serve(stream, &requests, handler.as_ref());
                        });
                    }
                })
            };
            Ok(StubServer {
                addr,
                requests,
                stop,
                handle: Some(handle),
            })
        }

        /// Always answers with `text`.
        pub fn fixed(text: &str) -> std::io::Result<Self> {
            let text = text.to_string();
            Self::start(move |_, _| Reply::completion(&text))
        }

        /// Answers with the first `words` words of the text between the
        /// prompt's triple backticks.
        pub fn extractive(words: usize) -> std::io::Result<Self> {
            Self::start(move |_, body| {
                let prompt = body
                    .get("prompt")
                    .and_then(Value::as_str)
                    .or_else(|| body.pointer("/messages/0/content").and_then(Value::as_str))
                    .unwrap_or("");
                let inner = prompt.split("```").nth(1).unwrap_or("");
                let summary: Vec<&str> = inner.split_whitespace().take(words).collect();
                Reply::completion(&summary.join(" "))
            })
        }

        pub fn url(&self) -> String {
            format!("http://{}/v1/completions", self.addr)
        }

        /// Bodies of all requests received so far.
        pub fn requests(&self) -> Vec<Value> {
            self.requests.lock().unwrap().clone()
        }

        pub fn request_count(&self) -> usize {
            self.requests.lock().unwrap().len()
        }
    }

    impl Drop for StubServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    fn serve(stream: TcpStream, requests: &Mutex<Vec<Value>>, handler: &Handler) -> std::io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut content_length = 0usize;
        let mut line = String::new();
        reader.read_line(&mut line)?;
        if line.is_empty() {
            return Ok(());
        }
        loop {
            line.clear();
            reader.read_line(&mut line)?;
            let header = line.trim_end();
            if header.is_empty() {
                break;
            }
            if let Some((name, value)) = header.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    content_length = value.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0u8; content_length];
        reader.read_exact(&mut body)?;
        let value: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let index = {
            let mut log = requests.lock().unwrap();
            log.push(value.clone());
            log.len() - 1
        };
        let reply = handler(index, &value);
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            reply.status,
            reply.body.len(),
            reply.body
        )?;
        stream.flush()
    }
}
