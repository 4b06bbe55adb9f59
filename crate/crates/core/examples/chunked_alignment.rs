//! Scores a short summary against a long article by splitting the article
//! into overlapping chunks and keeping the best chunk score.

use sumeval::corpus::{tokenize_lower, ChunkParams};
use sumeval::metrics::{self, AggregationMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut article = String::new();
    for i in 0..40 {
        article.push_str(&format!("Section {i} covers routine administrative matters. "));
    }
    article.push_str("Auditors found that the bridge program spent funds on repairs that were never completed. ");
    article.push_str("The office also reported staff shortages. ");
    let article = tokenize_lower(&article);
    let summary = tokenize_lower(
        "Bridge repair funds were spent on repairs that were never completed. Staff shortages were reported.",
    );

    let scorer = |chunk: &[String], cand: &[String]| metrics::rouge_l(cand, chunk).f1;
    println!("whole article ROUGE-L F1: {:.3}", scorer(&article, &summary));

    let params = ChunkParams::new(32, 8)?;
    for mode in [AggregationMode::GlobalMax, AggregationMode::MaxThenMean] {
        let s = metrics::chunked_aggregate(scorer, &article, &summary, params, mode)?;
        println!("{mode:?}: {s:.3}");
    }
    Ok(())
}
