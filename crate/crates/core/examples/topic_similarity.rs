//! Fits LDA over articles and their summaries, then compares Topic
//! Similarity for matched and mismatched pairs.

use sumeval::corpus;
use sumeval::topics::{self, LdaParams, VocabOptions};

const ARTICLES: [&str; 3] = [
    "Farmers who grow wheat and corn received crop loans. Loan rates for wheat fell while crop insurance costs rose for farmers.",
    "The water agency manages dams and reservoirs. Drought reduced reservoir storage and several dams need repairs.",
    "Rural clinics billed for patient care that doctors did not provide. Nurses reported staff shortages at rural hospitals.",
];
const SUMMARIES: [&str; 3] = [
    "Wheat and corn farmers face low loan rates and higher crop insurance costs.",
    "Drought cut reservoir storage and dams need repairs.",
    "Clinics billed for care doctors never gave, and rural hospitals lack nurses.",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs: Vec<Vec<String>> = ARTICLES
        .iter()
        .chain(SUMMARIES.iter())
        .map(|t| corpus::tokenize_lower(t))
        .collect();
    let params = LdaParams::new(3)
        .with_priors(0.1, 0.01)
        .with_iterations(200)
        .with_seed(1);
    let model = topics::fit_lda(&docs, &VocabOptions::english(), params)?;

    for (k, words) in model.top_words(5).iter().enumerate() {
        let words: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
        println!("topic {k}: {}", words.join(", "));
    }

    println!("\nTS      {:>8} {:>8} {:>8}", "sum0", "sum1", "sum2");
    for (i, article) in docs[..3].iter().enumerate() {
        let a = model.infer(article).vector;
        let row: Vec<String> = docs[3..]
            .iter()
            .map(|s| topics::topic_similarity(&a, &model.infer(s).vector).map(|ts| format!("{ts:>8.3}")))
            .collect::<Result<_, _>>()?;
        println!("art{i}    {}", row.join(" "));
    }
    Ok(())
}
