//! Builds a report from per-pair scores: mean±stddev per run, the
//! random-summary baseline, and the effect of removing invalid summaries.

use sumeval::metrics::ScoreRecord;
use sumeval::report::{self, Format, ReportBuilder, SummaryRecord};
use sumeval::validity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts = [
        ("a1", "Loan rates for wheat farmers were set too low."),
        ("a2", "Drought cut reservoir storage and dams need repairs."),
        ("a3", "Download Adobe Reader to view this file."),
        ("a4", "Aircraft programs exceeded their cost estimates."),
    ];
    let records: Vec<SummaryRecord> = texts
        .iter()
        .map(|(a, t)| SummaryRecord::new(a, &format!("{a}-foundation-r0"), 0, "foundation", t))
        .collect();
    let verdicts: Vec<_> = records
        .iter()
        .map(|r| validity::check(&r.summary_id, &r.text))
        .collect();

    let own = [0.92, 0.88, 0.15, 0.81];
    let mut scores: Vec<ScoreRecord> = records
        .iter()
        .zip(own)
        .map(|(r, v)| ScoreRecord::new(&r.article_id, &r.summary_id, "ts", v))
        .collect();

    let ids: Vec<String> = records.iter().map(|r| r.article_id.clone()).collect();
    for (i, (article, summary)) in report::random_pairing(&ids, &records, 7)?.into_iter().enumerate() {
        scores.push(ScoreRecord::new(&article, &summary, "ts", [0.12, 0.20, 0.08, 0.15][i]));
    }

    let built = ReportBuilder::new(&records)
        .verdicts(&verdicts)
        .scores(&scores)
        .build()?;
    print!("{}", String::from_utf8(report::render(&built, Format::Markdown))?);
    Ok(())
}
