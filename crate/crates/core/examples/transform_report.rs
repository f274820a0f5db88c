//! Five audience renderings of one report, scored for readability.

use patharchive::eval::readability;
use patharchive::rag::{transform_report, RagConfig, Rendering, StubLlm};
use patharchive::synth::synth_corpus;

fn main() -> patharchive::Result<()> {
    let (corpus, _) = synth_corpus(10, 2)?;
    let doc = &corpus.docs()[0];
    let cfg = RagConfig::default();
    for kind in Rendering::ALL {
        let llm = if kind == Rendering::Synoptic { StubLlm::structured() } else { StubLlm::simplify() };
        let text = transform_report(doc, kind, &llm, &cfg)?;
        let grade = readability(&text).map(|r| format!("{:.1}", r.fk_grade)).unwrap_or_else(|_| "-".into());
        println!("== {kind} (FK grade {grade})\n{text}\n");
    }
    Ok(())
}
