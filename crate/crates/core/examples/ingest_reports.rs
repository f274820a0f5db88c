//! Normalization, section parsing, chunking and IHC masking of raw reports,
//! then the JSONL corpus artifacts.

use patharchive::ingest::{
    emit_corpus, ingest_reports, mask_ihc, Chunker, MarkerLexicon, Normalizer, RawReport, ReportDoc,
};

const RAW: &str = "CASE A-17
FINAL DIAGNOSIS:
Liver, segment 6, partial hepatectomy:
Hepatocellular carcinoma, moderately differentiated. Tumor size is 4.2 cm.
Surgical margins are negative for tumor.

MICROSCOPIC DESCRIPTION:
Thickened trabeculae of atypical hepato-
cytes are lined by sinusoidal endothelium. Pseudoglandular structures contain bile.
=== PAGE 2 ===
The background liver shows established cirrhosis.

IMMUNOHISTOCHEMISTRY:
The tumor cells are positive for HepPar-1, Arginase-1 and Glypican-3. They are negative for CK7.

COMMENT:
Findings were discussed with Dr. Rivera on 3/14.";

fn main() -> patharchive::Result<()> {
    let raw = RawReport { report_id: "A-17".into(), raw_text: RAW.into(), source_path: "scan/A-17.txt".into(), wsi_id: None };
    let doc = ReportDoc::from_raw(&raw, &Normalizer::default())?;
    for s in &doc.sections {
        println!("[{:?}] {}", s.label, s.text);
    }

    let chunker = Chunker::new(20, 60)?;
    for c in chunker.chunk(&doc) {
        println!("{} {:?} ~{} tokens flag={:?}", c.chunk_id, c.section_label, c.token_estimate, c.flag);
    }

    let lexicon = MarkerLexicon::default();
    let masked = mask_ihc(&doc, &lexicon);
    println!("\nmasked:\n{}", masked.clean_text);
    assert!(!lexicon.contains_marker(&masked.clean_text));

    let (docs, chunks) = ingest_reports(&[raw], &Normalizer::default(), &chunker, Some(&lexicon))?;
    let dir = std::env::temp_dir().join("patharchive-ingest-example");
    let manifest = emit_corpus(&docs, &chunks, &dir)?;
    println!("\n{} docs, {} chunks -> {}", manifest.docs, manifest.chunks, dir.display());
    for (file, digest) in &manifest.files {
        println!("  {file} sha256={}", &digest[..16]);
    }
    Ok(())
}
