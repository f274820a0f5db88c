//! IHC panel recommendation: the report is masked, similar cases supply
//! the candidate markers and the model orders within them.

use patharchive::ingest::{MarkerLexicon, SectionLabel};
use patharchive::rag::{recommend_ihc_for_report, RagConfig, StubLlm};
use patharchive::synth::synth_engine;

fn main() -> patharchive::Result<()> {
    let (engine, reports) = synth_engine(200, 21, 256)?;
    let lexicon = MarkerLexicon::default();
    let llm = StubLlm::structured();
    let cfg = RagConfig { canonical_panel: vec!["Ki-67".into()], ..RagConfig::default() };

    let target = reports.iter().find(|r| !r.ihc_panel.is_empty()).expect("a report with IHC");
    let doc = engine.corpus().doc(&target.raw.report_id).expect("indexed");
    println!("{} ({}) actual panel: {:?}", doc.report_id, target.entity.key, target.ihc_panel);
    println!("IHC section: {:?}", doc.section(SectionLabel::Immunohistochemistry).map(|s| &s.text));

    let rec = recommend_ihc_for_report(doc, &engine, &llm, 5, &lexicon, &cfg)?;
    println!("neighbors: {:?}", rec.neighbors);
    println!("candidates: {:?}", rec.candidate_vocabulary);
    for m in &rec.markers {
        println!("  {:<12} {}", m.name, m.rationale);
    }
    let sent = llm.captured().pop().expect("one prompt");
    assert!(!lexicon.contains_marker(sent.block("CASE DETAILS").unwrap_or_default()));
    println!("model never saw the report's own markers");
    Ok(())
}
