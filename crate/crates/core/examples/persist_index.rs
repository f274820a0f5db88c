//! Build the three indices, write them with digests, reload and compare.

use std::sync::Arc;

use patharchive::embed::MockEncoder;
use patharchive::ingest::emit_corpus;
use patharchive::retrieval::{Corpus, Engine, IndexBuildConfig, IndexSet, SearchRequest};
use patharchive::synth::synth_corpus;

fn main() -> patharchive::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let (corpus, _) = synth_corpus(120, 5)?;
    emit_corpus(corpus.docs(), corpus.chunks(), &dir.path().join("corpus")).map(|_| ())?;

    let encoder = Arc::new(MockEncoder::new(128, 5));
    let indices = IndexSet::build(&corpus, encoder.as_ref(), &IndexBuildConfig::default())?;
    let index_dir = dir.path().join("index");
    std::fs::create_dir_all(&index_dir).expect("index dir");
    for (file, digest) in indices.persist(&index_dir)? {
        println!("{file}: {digest}");
    }

    let reloaded = Corpus::load(&dir.path().join("corpus"))?;
    let a = Engine::new(Arc::new(corpus), Arc::new(indices), encoder.clone(), Default::default())?;
    let b = Engine::new(Arc::new(reloaded), Arc::new(IndexSet::load(&index_dir)?), encoder, Default::default())?;
    let req = SearchRequest::new("mucinous adenocarcinoma cecum", 5);
    assert_eq!(a.search(&req)?, b.search(&req)?);
    println!("reloaded engine returns identical hits");

    let bm25 = index_dir.join("lexical.bm25");
    let mut bytes = std::fs::read(&bm25).expect("read");
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&bm25, bytes).expect("write");
    match IndexSet::load(&index_dir) {
        Err(e) => println!("corrupted index rejected: {e}"),
        Ok(_) => unreachable!("digest check must fail"),
    }
    Ok(())
}
