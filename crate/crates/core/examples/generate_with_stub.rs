//! Batch generation against a local stand-in endpoint, including a resume
//! that only requests the missing runs.

use sumeval::corpus::Document;
use sumeval::genclient::{self, stub::StubServer, GenerationConfig, Generator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = StubServer::extractive(10)?;
    let generator = Generator::new(GenerationConfig {
        endpoint_url: server.url(),
        model_name: "local-stub".into(),
        rate_limit: 20.0,
        ..Default::default()
    })?;

    let articles = vec![
        Document::new(
            "gao-1",
            "The agency reviewed grant spending across states and found gaps in tracking.",
        ),
        Document::new(
            "gao-2",
            "Highway funds were spent on bridge repairs without documenting results.",
        ),
    ];
    println!("{}\n", genclient::build_prompt(&articles[0].text, 5000));

    let dir = std::env::temp_dir().join(format!("sumeval-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("summaries.jsonl");

    let first = genclient::batch_generate(&generator, &articles, 2, "stub", &out)?;
    println!(
        "first pass: {} records, {} requested",
        first.records.len(),
        first.requested
    );
    let second = genclient::batch_generate(&generator, &articles, 3, "stub", &out)?;
    println!(
        "resume to 3 runs: {} records, {} requested",
        second.records.len(),
        second.requested
    );
    for r in &second.records {
        println!("{} run {}: {}", r.article_id, r.run_id, r.text);
    }
    println!("endpoint saw {} requests", server.request_count());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
