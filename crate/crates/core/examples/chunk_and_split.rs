//! Train/test split followed by 512-token windows with 64 tokens of overlap.

use sumeval::corpus::{self, ChunkParams, Document};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs: Vec<Document> = (0..10)
        .map(|i| {
            let words: Vec<String> = (0..200 * (i + 1)).map(|w| format!("w{w}")).collect();
            Document::new(format!("doc{i}"), words.join(" "))
        })
        .collect();

    let (train, test) = corpus::split_train_test(&docs, 0.2, 42)?;
    println!("train={} test={}", train.len(), test.len());

    let params = ChunkParams::default();
    for doc in &train {
        let tokens = corpus::tokenize(&doc.text);
        let chunks = corpus::chunk_tokens(&doc.id, &tokens, params)?;
        let starts: Vec<usize> = chunks.iter().map(|c| c.start_offset).collect();
        println!("{:<6} {:>5} tokens -> starts {:?}", doc.id, tokens.len(), starts);
    }
    Ok(())
}
