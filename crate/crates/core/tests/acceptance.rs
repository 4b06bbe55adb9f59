//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line (bypassing
//! the harness's output capture) and fails if the criterion is not met.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumeval::corpus::{self, ChunkParams, Document};
use sumeval::genclient::{self, stub::StubServer, GenerationConfig, Generator};
use sumeval::metrics::{self, BleuOptions, Smoothing};
use sumeval::report::{self, SummaryRecord};
use sumeval::topics::{self, synthetic, GibbsSampler, LdaParams, TopicVector, VocabOptions};
use sumeval::validity::{self, ConfusionMatrix, Detector};

type Check = Result<String, String>;

fn report_line(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> Check) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:?}, budget {budget:?}")),
        other => other,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!("[criterion {id:>2}] {tag} {name}: {detail} ({:.1?})\n", elapsed);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    if let Err(d) = outcome {
        panic!("criterion {id} failed: {d}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn criterion_01_confusion_rates() {
    report_line(1, "confusion arithmetic", Duration::from_secs(1), || {
        let m = ConfusionMatrix {
            tp: 32,
            fp: 5,
            tn: 56,
            fn_: 7,
        };
        let (fpr, fnr) = validity::rates(&m).map_err(|e| e.to_string())?;
        ensure((fpr - 5.0 / 61.0).abs() <= 1e-12, || format!("fpr {fpr}"))?;
        ensure((fnr - 7.0 / 39.0).abs() <= 1e-12, || format!("fnr {fnr}"))?;
        ensure(
            format!("{fpr:.4}") == "0.0820" && format!("{fnr:.4}") == "0.1795",
            || format!("4dp mismatch {fpr:.4} {fnr:.4}"),
        )?;
        ensure(format!("{fpr:.2}") == "0.08" && format!("{fnr:.2}") == "0.18", || {
            "2dp mismatch".into()
        })?;
        Ok(format!("FPR={fpr:.4} FNR={fnr:.4}"))
    });
}

#[test]
fn criterion_02_percent_change() {
    report_line(2, "percent-change reproduction", Duration::from_secs(1), || {
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let ts =
            report::percent_change(mean(&[0.69, 0.70, 0.69]), mean(&[0.90, 0.88, 0.89])).map_err(|e| e.to_string())?;
        let r1 = report::percent_change(0.36, 0.45).map_err(|e| e.to_string())?;
        let bleu = report::percent_change(0.08, 0.19).map_err(|e| e.to_string())?;
        ensure((ts - 28.0).abs() <= 1.0, || format!("TS change {ts:.2}%"))?;
        ensure((r1 - 25.0).abs() <= 0.5, || format!("ROUGE-1 change {r1:.2}%"))?;
        ensure((bleu - 138.0).abs() <= 2.0, || format!("BLEU change {bleu:.2}%"))?;
        Ok(format!("TS {ts:+.1}%, ROUGE-1 {r1:+.1}%, BLEU {bleu:+.1}%"))
    });
}

#[test]
fn criterion_03_validity_fixtures() {
    report_line(3, "validity fixtures", Duration::from_secs(1), || {
        let detector = Detector::standard();
        let read = |name: &str| -> Vec<serde_json::Value> {
            std::fs::read_to_string(fixtures().join(name))
                .unwrap()
                .lines()
                .map(|l| serde_json::from_str(l).unwrap())
                .collect()
        };
        let invalid = read("invalid_examples.jsonl");
        ensure(invalid.len() == 5, || "expected five invalid examples".into())?;
        let mut fired = Vec::new();
        for ex in &invalid {
            let id = ex["id"].as_str().unwrap();
            let expected = ex["expected_rule"].as_str().unwrap();
            let v = detector.check(id, ex["text"].as_str().unwrap());
            ensure(!v.is_valid, || format!("{id} classified valid"))?;
            ensure(v.triggered_rules.iter().any(|r| r.0 == expected), || {
                format!("{id} expected {expected}, got {:?}", v.triggered_rules)
            })?;
            fired.push(format!("{id}->{expected}"));
        }
        let clean = read("clean_summaries.jsonl");
        ensure(clean.len() == 10, || "expected ten clean summaries".into())?;
        for ex in &clean {
            let v = detector.check(ex["id"].as_str().unwrap(), ex["text"].as_str().unwrap());
            ensure(v.is_valid, || {
                format!("{} triggered {:?}", v.summary_id, v.triggered_rules)
            })?;
        }
        Ok(format!("{}; 10 clean summaries trigger nothing", fired.join(" ")))
    });
}

// Brute-force n-gram multiset intersection.
fn rouge_n_oracle(c: &[u8], r: &[u8], n: usize) -> (f64, f64) {
    let grams = |s: &[u8]| -> HashMap<Vec<u8>, usize> {
        let mut m = HashMap::new();
        if s.len() >= n {
            for i in 0..=s.len() - n {
                *m.entry(s[i..i + n].to_vec()).or_insert(0) += 1;
            }
        }
        m
    };
    let (gc, gr) = (grams(c), grams(r));
    let overlap: usize = gc.iter().map(|(g, &k)| k.min(*gr.get(g).unwrap_or(&0))).sum();
    let tc: usize = gc.values().sum();
    let tr: usize = gr.values().sum();
    let p = if tc == 0 { 0.0 } else { overlap as f64 / tc as f64 };
    let rr = if tr == 0 { 0.0 } else { overlap as f64 / tr as f64 };
    (p, rr)
}

// Longest subsequence of `a` (enumerated by bitmask) that is also a
// subsequence of `b`.
fn lcs_oracle(a: &[u8], b: &[u8]) -> usize {
    let is_subseq = |s: &[u8]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<u8> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
        if sub.len() > best && is_subseq(&sub) {
            best = sub.len();
        }
    }
    best
}

#[test]
fn criterion_04_metric_oracles() {
    report_line(4, "metric oracles", Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..1000 {
            let vocab = rng.random_range(1..=8u8);
            let mut seq = |max: usize| -> Vec<u8> {
                let len = rng.random_range(0..=max);
                (0..len).map(|_| rng.random_range(0..vocab)).collect()
            };
            let (c, r) = (seq(12), seq(12));
            for n in 1..=3 {
                let got = metrics::rouge_n(&c, &r, n).map_err(|e| e.to_string())?;
                let (p, rr) = rouge_n_oracle(&c, &r, n);
                ensure(got.precision == p && got.recall == rr, || {
                    format!("trial {trial} n={n}: {got:?} vs oracle P={p} R={rr}")
                })?;
            }
            let (a, b) = (seq(10), seq(10));
            let want = lcs_oracle(&a, &b);
            ensure(metrics::lcs_len(&a, &b) == want, || {
                format!("trial {trial}: LCS {a:?} {b:?} != {want}")
            })?;
            let l = metrics::rouge_l(&a, &b);
            let p = if a.is_empty() {
                0.0
            } else {
                want as f64 / a.len() as f64
            };
            ensure(l.precision == p, || format!("trial {trial}: rouge_l precision"))?;
        }
        let none = |max_n| BleuOptions {
            max_n,
            smoothing: Smoothing::None,
        };
        let cases = [
            ("the cat sat on the mat", "the cat sat on the mat", 4, 1.0),
            ("a b c d", "a b x d", 2, 0.5),
            ("the the the the", "the cat", 1, 0.25),
        ];
        for (c, r, n, want) in cases {
            let got = metrics::bleu(&words(c), &[words(r)], none(n))
                .map_err(|e| e.to_string())?
                .score;
            ensure((got - want).abs() <= 1e-9, || {
                format!("bleu({c:?}, {r:?}) = {got}, want {want}")
            })?;
        }
        Ok("1000 random pairs agree with rouge_n/LCS oracles; 3 BLEU examples within 1e-9".into())
    });
}

#[test]
fn criterion_05_meteor_formula() {
    report_line(5, "METEOR formula", Duration::from_secs(1), || {
        for m in 1..=20usize {
            let text: Vec<String> = (0..m).map(|i| format!("w{i}")).collect();
            let got = metrics::meteor(&text, &text);
            let fmean = 10.0 * 1.0 * 1.0 / (1.0 + 9.0);
            let want = fmean * (1.0 - 0.5 * (1.0 / m as f64).powi(3));
            ensure((got.score - want).abs() <= 1e-9, || {
                format!("m={m}: {} vs {want}", got.score)
            })?;
        }
        let cat = metrics::meteor(&words("the cat sat"), &words("the cat sat")).score;
        ensure((cat - 0.981).abs() <= 0.001, || format!("\"the cat sat\" scored {cat}"))?;
        Ok(format!(
            "identical texts m=1..20 within 1e-9; \"the cat sat\" = {cat:.4}"
        ))
    });
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// Unnormalized collapsed posterior p(z | w) from rising factorials.
fn collapsed_weight(docs: &[Vec<usize>], z: &[usize], k: usize, v: usize, alpha: f64, beta: f64) -> f64 {
    let rising = |x: f64, n: u32| (0..n).map(|i| x + i as f64).product::<f64>();
    let mut ndk = vec![vec![0u32; k]; docs.len()];
    let mut nkw = vec![vec![0u32; v]; k];
    let mut nk = vec![0u32; k];
    let mut pos = 0;
    for (d, doc) in docs.iter().enumerate() {
        for &w in doc {
            let t = z[pos];
            ndk[d][t] += 1;
            nkw[t][w] += 1;
            nk[t] += 1;
            pos += 1;
        }
    }
    let mut weight = 1.0;
    for row in &ndk {
        for &c in row {
            weight *= rising(alpha, c);
        }
    }
    for t in 0..k {
        for &c in &nkw[t] {
            weight *= rising(beta, c);
        }
        weight /= rising(v as f64 * beta, nk[t]);
    }
    weight
}

#[test]
fn criterion_06_lda_separability_and_gibbs() {
    report_line(
        6,
        "LDA separability and Gibbs correctness",
        Duration::from_secs(70),
        || {
            let sep_start = Instant::now();
            let mut details = Vec::new();
            for seed in 0..5u64 {
                let docs = synthetic::disjoint_corpus(2, 10, 50, 20, 1000 + seed);
                let tokens: Vec<Vec<String>> = docs.iter().map(|d| d.tokens.clone()).collect();
                let params = LdaParams::new(2)
                    .with_priors(0.1, 0.01)
                    .with_iterations(30)
                    .with_seed(seed);
                let model = topics::fit_lda(&tokens, &VocabOptions::default(), params).map_err(|e| e.to_string())?;
                let vecs: Vec<TopicVector> = tokens.iter().map(|t| model.infer(t).vector).collect();
                let (mut within, mut cross) = (Vec::new(), Vec::new());
                for i in 0..docs.len() {
                    for j in i + 1..docs.len() {
                        let ts = topics::topic_similarity(&vecs[i], &vecs[j]).map_err(|e| e.to_string())?;
                        if docs[i].class == docs[j].class {
                            within.push(ts);
                        } else {
                            cross.push(ts);
                        }
                    }
                }
                let (w, c) = (mean(&within), mean(&cross));
                ensure(w >= 0.9 && c <= 0.2, || {
                    format!("seed {seed}: within {w:.3}, cross {c:.3}")
                })?;
                details.push(format!("{w:.3}/{c:.3}"));
            }
            ensure(sep_start.elapsed() < Duration::from_secs(10), || {
                format!("separability took {:?}", sep_start.elapsed())
            })?;

            let docs = vec![vec![0, 1], vec![1, 2], vec![2, 2]];
            let (k, v, alpha, beta) = (2usize, 3usize, 1.0, 0.5);
            let n_tokens: usize = docs.iter().map(Vec::len).sum();
            let states = k.pow(n_tokens as u32);
            let decode = |mut s: usize| -> Vec<usize> {
                (0..n_tokens)
                    .map(|_| {
                        let t = s % k;
                        s /= k;
                        t
                    })
                    .collect()
            };
            let weights: Vec<f64> = (0..states)
                .map(|s| collapsed_weight(&docs, &decode(s), k, v, alpha, beta))
                .collect();
            let total: f64 = weights.iter().sum();
            let exact: Vec<f64> = weights.iter().map(|w| w / total).collect();

            let params = LdaParams::new(k).with_priors(alpha, beta).with_seed(6);
            let mut sampler = GibbsSampler::new(docs.clone(), v, params).map_err(|e| e.to_string())?;
            for _ in 0..100 {
                sampler.sweep();
            }
            let sweeps = 10_000;
            let mut hist = vec![0usize; states];
            for _ in 0..sweeps {
                sampler.sweep();
                let flat: Vec<usize> = sampler.assignments().iter().flatten().copied().collect();
                let index = flat.iter().rev().fold(0, |acc, &t| acc * k + t);
                hist[index] += 1;
            }
            let tv: f64 = 0.5
                * hist
                    .iter()
                    .zip(&exact)
                    .map(|(&h, &p)| (h as f64 / sweeps as f64 - p).abs())
                    .sum::<f64>();
            ensure(tv <= 0.05, || format!("TV distance {tv:.4}"))?;
            Ok(format!(
                "within/cross TS per seed [{}]; Gibbs TV={tv:.4} over {states} states",
                details.join(", ")
            ))
        },
    );
}

#[test]
fn criterion_07_ts_properties() {
    report_line(7, "TS properties", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10_000 {
            let dim = rng.random_range(1..=32);
            let mut draw = || -> Vec<f64> {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                v[rng.random_range(0..dim)] += 1e-3;
                v
            };
            let (a, b) = (draw(), draw());
            let mut dot = 0.0;
            let (mut aa, mut bb) = (0.0, 0.0);
            for i in 0..dim {
                dot += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            let want = dot / aa.sqrt() / bb.sqrt();
            let got = topics::cosine(&a, &b).map_err(|e| e.to_string())?;
            ensure((got - want.min(1.0)).abs() <= 1e-12, || {
                format!("trial {trial}: {got} vs {want}")
            })?;
            ensure((0.0..=1.0).contains(&got), || {
                format!("trial {trial}: out of range {got}")
            })?;
            let self_sim = topics::cosine(&a, &a).map_err(|e| e.to_string())?;
            ensure((self_sim - 1.0).abs() <= 1e-12, || {
                format!("trial {trial}: TS(v,v)={self_sim}")
            })?;

            let counts: Vec<f64> = (0..dim).map(|_| rng.random_range(0..20u32) as f64 + 1.0).collect();
            let scaled: Vec<f64> = counts.iter().map(|c| c * 3.5).collect();
            let tv = TopicVector::from_weights(counts.clone()).map_err(|e| e.to_string())?;
            let via_probs = topics::topic_similarity(&tv, &TopicVector::from_weights(b.clone()).unwrap())
                .map_err(|e| e.to_string())?;
            let raw = topics::cosine(&counts, &b).map_err(|e| e.to_string())?;
            let raw_scaled = topics::cosine(&scaled, &b).map_err(|e| e.to_string())?;
            ensure(
                (via_probs - raw).abs() <= 1e-12 && (raw - raw_scaled).abs() <= 1e-12,
                || format!("trial {trial}: scale dependence {via_probs} {raw} {raw_scaled}"),
            )?;
        }
        Ok("10000 random vectors agree with the cosine oracle to 1e-12; TS(v,v)=1; scale invariant".into())
    });
}

#[test]
fn criterion_08_random_baseline_ordering() {
    report_line(8, "random-summary baseline ordering", Duration::from_secs(30), || {
        let mut gaps = Vec::new();
        for seed in 0..5u64 {
            let docs = synthetic::disjoint_corpus(4, 12, 25, 40, 800 + seed);
            let articles: Vec<Document> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| Document::new(format!("doc{i}"), d.tokens.join(" ")))
                .collect();
            let summaries: Vec<SummaryRecord> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let id = format!("doc{i}");
                    SummaryRecord::new(
                        &id,
                        &format!("{id}-extractive-r0"),
                        0,
                        "extractive",
                        &d.tokens[..10].join(" "),
                    )
                })
                .collect();
            let mut all: Vec<Vec<String>> = articles.iter().map(|a| corpus::tokenize_lower(&a.text)).collect();
            all.extend(summaries.iter().map(|s| corpus::tokenize_lower(&s.text)));
            let params = LdaParams::new(4)
                .with_priors(0.1, 0.01)
                .with_iterations(30)
                .with_seed(seed);
            let model = topics::fit_lda(&all, &VocabOptions::default(), params).map_err(|e| e.to_string())?;

            let article_vec: HashMap<&str, TopicVector> = articles
                .iter()
                .map(|a| (a.id.as_str(), model.infer(&corpus::tokenize_lower(&a.text)).vector))
                .collect();
            let summary_vec: HashMap<&str, TopicVector> = summaries
                .iter()
                .map(|s| {
                    (
                        s.summary_id.as_str(),
                        model.infer(&corpus::tokenize_lower(&s.text)).vector,
                    )
                })
                .collect();
            let ts = |a: &str, s: &str| topics::topic_similarity(&article_vec[a], &summary_vec[s]).unwrap();
            let own = mean(
                &summaries
                    .iter()
                    .map(|s| ts(&s.article_id, &s.summary_id))
                    .collect::<Vec<_>>(),
            );
            let ids: Vec<String> = articles.iter().map(|a| a.id.clone()).collect();
            let pairs = report::random_pairing(&ids, &summaries, seed).map_err(|e| e.to_string())?;
            ensure(pairs.iter().all(|(a, s)| !s.starts_with(&format!("{a}-"))), || {
                "random pairing kept an article's own summary".into()
            })?;
            let random = mean(&pairs.iter().map(|(a, s)| ts(a, s)).collect::<Vec<_>>());
            ensure(own - random >= 0.3, || {
                format!("seed {seed}: own {own:.3}, random {random:.3}")
            })?;
            gaps.push(format!("{own:.2}-{random:.2}"));
        }
        Ok(format!("own-random TS per seed [{}]", gaps.join(", ")))
    });
}

// Slides a window until it reaches the end of the sequence.
fn window_starts_oracle(len: usize, length: usize, overlap: usize) -> Vec<usize> {
    let mut starts = vec![0];
    let mut s = 0;
    while s + length < len {
        s += length - overlap;
        starts.push(s);
    }
    starts
}

#[test]
fn criterion_09_chunking() {
    report_line(9, "chunking", Duration::from_secs(30), || {
        let mut cases = 0;
        for len in 0..=200usize {
            let tokens: Vec<String> = (0..len).map(|i| i.to_string()).collect();
            for length in 1..=20 {
                for overlap in 0..length {
                    let params = ChunkParams::new(length, overlap).map_err(|e| e.to_string())?;
                    let chunks = corpus::chunk_tokens("d", &tokens, params).map_err(|e| e.to_string())?;
                    let starts: Vec<usize> = chunks.iter().map(|c| c.start_offset).collect();
                    let want = window_starts_oracle(len, length, overlap);
                    ensure(starts == want, || {
                        format!("len={len} L={length} o={overlap}: {starts:?} vs {want:?}")
                    })?;
                    let covered: usize = chunks.last().map_or(0, |c| c.start_offset + c.tokens.len());
                    ensure(covered == len, || {
                        format!("len={len} L={length} o={overlap}: tail uncovered")
                    })?;
                    cases += 1;
                }
            }
        }
        let starts = ChunkParams::new(512, 64).unwrap().starts(1000);
        ensure(starts == [0, 448, 896], || format!("(1000, 512, 64) gave {starts:?}"))?;
        Ok(format!(
            "{cases} parameter combinations match the oracle; (1000,512,64) -> {starts:?}"
        ))
    });
}

#[test]
fn criterion_10_end_to_end_determinism() {
    report_line(
        10,
        "end-to-end determinism and generation",
        Duration::from_secs(30),
        || {
            let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
            let config = fixtures().join("pipeline.json");
            let mut reports = Vec::new();
            for run in 0..2 {
                let out = tmp.path().join(format!("run{run}"));
                let status = Command::new(env!("CARGO_BIN_EXE_sumeval"))
                    .arg("--config")
                    .arg(&config)
                    .arg("--output")
                    .arg(&out)
                    .arg("evaluate")
                    .output()
                    .map_err(|e| e.to_string())?;
                ensure(status.status.success(), || {
                    format!("evaluate failed: {}", String::from_utf8_lossy(&status.stderr))
                })?;
                reports.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
            }
            ensure(reports[0] == reports[1], || "report.json differs between runs".into())?;

            let server = StubServer::extractive(12).map_err(|e| e.to_string())?;
            let generator = Generator::new(GenerationConfig {
                endpoint_url: server.url(),
                model_name: "stub".into(),
                rate_limit: 0.0,
                ..Default::default()
            })
            .map_err(|e| e.to_string())?;
            let articles = corpus::load_corpus(
                &fixtures().join("articles.jsonl"),
                corpus::CorpusFormat::Jsonl,
                Default::default(),
            )
            .map_err(|e| e.to_string())?;
            let output = tmp.path().join("generated.jsonl");
            let runs = 3;
            let first = genclient::batch_generate(&generator, &articles[..2], runs, "stub", &output)
                .map_err(|e| e.to_string())?;
            ensure(first.records.len() == 2 * runs as usize, || {
                format!("{} records after partial", first.records.len())
            })?;
            let full =
                genclient::batch_generate(&generator, &articles, runs, "stub", &output).map_err(|e| e.to_string())?;
            let expected = runs as usize * articles.len();
            ensure(full.failed == 0 && full.records.len() == expected, || {
                format!("{} records, {} failed", full.records.len(), full.failed)
            })?;
            ensure(full.requested == expected - first.records.len(), || {
                format!("resume re-requested {} jobs", full.requested)
            })?;
            let stored = report::read_summaries(&output).map_err(|e| e.to_string())?;
            ensure(stored.len() == expected, || format!("{} lines on disk", stored.len()))?;
            ensure(server.request_count() == expected, || {
                format!("{} requests sent", server.request_count())
            })?;
            Ok(format!(
            "report.json byte-identical across 2 runs; {expected} records = {runs} runs x {} articles, resume added no duplicates",
            articles.len()
        ))
        },
    );
}
