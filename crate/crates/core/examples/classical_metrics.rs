//! ROUGE, BLEU and METEOR for one candidate/reference pair.

use sumeval::corpus::tokenize_lower;
use sumeval::metrics::{self, BleuOptions, Smoothing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = tokenize_lower("The agency cut water deliveries to cities after the drought.");
    let candidate = tokenize_lower("After the drought, the agency reduced deliveries of water to cities.");

    for n in 1..=2 {
        let p = metrics::rouge_n(&candidate, &reference, n)?;
        println!("ROUGE-{n}  P={:.3} R={:.3} F1={:.3}", p.precision, p.recall, p.f1);
    }
    let l = metrics::rouge_l(&candidate, &reference);
    println!("ROUGE-L  P={:.3} R={:.3} F1={:.3}", l.precision, l.recall, l.f1);

    for smoothing in [Smoothing::None, Smoothing::AddEpsilon] {
        let b = metrics::bleu(
            &candidate,
            std::slice::from_ref(&reference),
            BleuOptions { max_n: 4, smoothing },
        )?;
        println!(
            "BLEU ({smoothing:?})  {:.4}  precisions={:.3?} BP={:.3}",
            b.score, b.precisions, b.brevity_penalty
        );
    }

    let m = metrics::meteor(&candidate, &reference);
    println!(
        "METEOR   {:.4}  matches={} chunks={} penalty={:.4}",
        m.score, m.matches, m.chunks, m.penalty
    );
    Ok(())
}
