//! Drops OCR-noise documents from a small corpus.
//!
//! cargo run --example clean_corpus [-- <dir-of-txt-files>]

use std::path::PathBuf;

use sumeval::corpus::{self, CleaningThresholds, CorpusFormat, Dictionary, Document, LoadOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = match std::env::args().nth(1) {
        Some(dir) => corpus::load_corpus(&PathBuf::from(dir), CorpusFormat::Directory, LoadOptions::default())?,
        None => vec![
            Document::new(
                "memo",
                "The committee reviewed the budget request and approved the plan for the new office.",
            ),
            Document::new("scan", "~~ |||| 0x3F#@ ..,, ]]]] 1l1l @@@ ### qzxv wprt"),
            Document::new("table", "Tbl 4b ... qrt yy zz 1999 2000 xx ww vv kk"),
        ],
    };

    let dictionary = Dictionary::default_english();
    let (kept, report) = corpus::filter_clean(docs, CleaningThresholds::default(), &dictionary)?;

    for e in &report.per_document {
        println!(
            "{:<8} alnum={:.2} dict={:.2} {}",
            e.id,
            e.alnum_fraction,
            e.dict_fraction,
            if e.kept { "kept" } else { "dropped" }
        );
    }
    println!("kept {} of {}", kept.len(), report.kept_count + report.rejected_count);
    Ok(())
}
