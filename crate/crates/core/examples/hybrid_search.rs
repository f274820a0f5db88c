//! Fused doc-dense / chunk-dense / BM25 search with per-component scores,
//! and how the weights move the ranking.

use patharchive::retrieval::{FusionWeights, SearchRequest};
use patharchive::synth::synth_engine;

fn main() -> patharchive::Result<()> {
    let (engine, _) = synth_engine(300, 11, 256)?;
    let query = "clear cell renal cell carcinoma sinus fat";

    println!("{:<8} {:>7} {:>7} {:>7} {:>7}  section / snippet", "report", "doc", "chunk", "bm25", "fused");
    for h in engine.search(&SearchRequest::new(query, 5))? {
        println!(
            "{:<8} {:>7.4} {:>7.4} {:>7.4} {:>7.4}  {:?}: {}",
            h.report_id,
            h.s_doc,
            h.s_chunk,
            h.s_bm25,
            h.fused,
            h.best_chunk_section,
            h.snippet.chars().take(60).collect::<String>()
        );
    }

    for w in [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)] {
        let weights = FusionWeights::new(w.0, w.1, w.2)?;
        let ids: Vec<String> =
            engine.search(&SearchRequest::new(query, 5).with_weights(weights))?.into_iter().map(|h| h.report_id).collect();
        println!("weights {w:?}: {}", ids.join(" "));
    }
    Ok(())
}
