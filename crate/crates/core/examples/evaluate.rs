//! Retrieval, panel, text and interval metrics on small hand-made inputs.

use patharchive::eval::{
    bleu4, evaluate_ranks, paired_bootstrap, panel_metrics, readability, rouge, wilson, PanelCase, RankLog, RougeVariant,
    DEFAULT_Z,
};

fn main() -> patharchive::Result<()> {
    // 32 queries; rank of the target report or None when not retrieved.
    let mut ranks = vec![Some(1); 26];
    ranks.extend([Some(2), Some(3), Some(3), Some(7), Some(9), Some(10)]);
    for m in evaluate_ranks(&RankLog::from_ranks(&ranks)?, &[1, 3, 10], 200)? {
        match (m.ci_low, m.ci_high) {
            (Some(lo), Some(hi)) => println!("{:<10} {:.5} [{lo:.3}, {hi:.3}]", m.name, m.value),
            _ => println!("{:<10} {:.5}", m.name, m.value),
        }
    }

    let (lo, hi) = wilson(50, 50, DEFAULT_Z)?;
    println!("50/50 correct: [{lo:.3}, {hi:.3}]");

    let cases = vec![
        PanelCase { case_id: "c1".into(), recommended: vec!["TTF-1".into(), "CK7".into(), "p40".into()], truth: vec!["TTF-1".into(), "Napsin A".into()] },
        PanelCase { case_id: "c2".into(), recommended: vec!["CK20".into(), "CDX2".into()], truth: vec!["CDX2".into(), "SATB2".into(), "CK20".into()] },
    ];
    println!("{:?}", panel_metrics(&cases)?);

    let a: Vec<f64> = (0..120).map(|i| 0.6 + 0.3 * ((i * 37 % 17) as f64 / 17.0)).collect();
    let b: Vec<f64> = (0..120).map(|i| 0.5 + 0.3 * ((i * 11 % 13) as f64 / 13.0)).collect();
    let d = paired_bootstrap(&a, &b, 2000, 42)?;
    println!("mean difference {:.4} [{:.4}, {:.4}]", d.value, d.ci_low.unwrap_or(f64::NAN), d.ci_high.unwrap_or(f64::NAN));

    let (cand, refr) = ("margins are negative for carcinoma", "all surgical margins are negative for carcinoma");
    println!(
        "ROUGE-1 {:.3}  ROUGE-2 {:.3}  ROUGE-L {:.3}  BLEU-4 {:.3}",
        rouge(cand, refr, RougeVariant::One).value,
        rouge(cand, refr, RougeVariant::Two).value,
        rouge(cand, refr, RougeVariant::L).value,
        bleu4(cand, refr).value
    );
    let r = readability("We found cancer in the sample. It has not spread to the edges.")?;
    println!("FK grade {:.2}, reading ease {:.2}", r.fk_grade, r.reading_ease);
    Ok(())
}
