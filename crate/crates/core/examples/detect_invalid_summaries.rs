//! Flags garbage summaries and scores the detector against human labels.

use std::collections::HashMap;

use sumeval::validity::{self, Detector, FnRule, HumanLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let summaries = [
        (
            "s1",
            "The agency cut water deliveries after the drought and plans dam repairs.",
        ),
        ("s2", "def parse_report(self):\n    return None"),
        ("s3", "Summary: the summary below is a summary of the summary."),
        ("s4", "If you dont have Adobe Reader, click here to download."),
        ("s5", "----------------------------------------"),
        ("s6", "<Block id=\"1\" name=\"Part_8\"/>"),
        ("s7", "Lorem ipsum dolor sit amet."),
    ];

    // Extra rules can sit alongside the five standard ones.
    let detector = Detector::standard().with_rule(FnRule::new("LOREM", "placeholder text", |t| {
        t.to_lowercase().contains("lorem ipsum")
    }));

    let verdicts: Vec<_> = summaries.iter().map(|(id, text)| detector.check(id, text)).collect();
    for v in &verdicts {
        println!("{}", v.to_json_line());
    }

    let labels: HashMap<String, HumanLabel> = [
        ("s1", HumanLabel::Valid),
        ("s2", HumanLabel::Invalid),
        ("s3", HumanLabel::Invalid),
        ("s4", HumanLabel::Invalid),
        ("s5", HumanLabel::Invalid),
        ("s6", HumanLabel::Valid),
        ("s7", HumanLabel::Invalid),
    ]
    .into_iter()
    .map(|(id, l)| (id.to_string(), l))
    .collect();
    let m = validity::confusion(&verdicts, &labels)?;
    let (fpr, fnr) = validity::rates(&m)?;
    println!(
        "TP={} FP={} TN={} FN={} FPR={fpr:.2} FNR={fnr:.2}",
        m.tp, m.fp, m.tn, m.fn_
    );
    Ok(())
}
