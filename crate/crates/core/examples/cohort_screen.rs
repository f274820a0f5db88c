//! Cohort screening over a synthetic archive with a rule-driven stub model,
//! with and without a retrieval prefilter.

use patharchive::rag::{run_cohort, CohortSpec, RagConfig, StubLlm};
use patharchive::synth::synth_engine;

fn main() -> patharchive::Result<()> {
    let (engine, _) = synth_engine(80, 3, 128)?;
    // Stand-in for the model: include colorectal primaries.
    let llm = StubLlm::rule(|report| report.contains("Colon,")).failing("S00004", 1);
    let cfg = RagConfig::default();
    let spec = CohortSpec::new("Primary colorectal adenocarcinoma", "Benign polyps").with_concurrency(8);
    let progress = |done: usize, total: usize| {
        if done == total {
            println!("judged {done}/{total}");
        }
    };

    let outcome = run_cohort(&spec, engine.corpus(), Some(&engine), &llm, &cfg, &progress)?;
    println!("included: {:?}", outcome.included());
    println!("stats: {:?}", outcome.stats);
    for d in outcome.decisions.iter().filter(|d| d.attempts > 1) {
        println!("retried {}: {:?} after {} attempts", d.case_number, d.parse_status, d.attempts);
    }

    let narrowed = spec.with_prefilter("colon adenocarcinoma", 0.3);
    let outcome = run_cohort(&narrowed, engine.corpus(), Some(&engine), &llm, &cfg, &|_, _| {})?;
    println!("with prefilter: {} candidates, {} llm calls", outcome.stats.candidates, outcome.stats.llm_calls);
    Ok(())
}
