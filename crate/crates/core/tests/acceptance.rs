//! Acceptance run: one PASS/FAIL line per criterion. Every expected value
//! comes from an oracle written here, not from the library under test.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::error::Error as StdError;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use patharchive::eval::{
    bleu4, evaluate_ranks, paired_bootstrap, read_rank_log, readability, recall_at_k, rouge, wilson, RankLog,
    RougeVariant, DEFAULT_Z,
};
use patharchive::index::{digest_path, load_index, persist_index, Bm25Index, Bm25Params, DenseIndex};
use patharchive::ingest::{ingest_reports, Chunk, ChunkFlag, Chunker, MarkerLexicon, Normalizer, ReportDoc, SectionLabel};
use patharchive::rag::{
    recommend_ihc, recommend_ihc_for_report, run_cohort, write_cohort_results, CohortSpec, GenerationParams, LlmClient,
    ParseStatus, PromptBundle, RagConfig, StubLlm, Task, DECISIONS_FILE,
};
use patharchive::embed::MockEncoder;
use patharchive::retrieval::{Corpus, Engine, IndexBuildConfig, FusionWeights, SearchRequest, DEFAULT_K_BACKEND};
use patharchive::service::{serve, AppState, EngineConfig};
use patharchive::synth::{generate_reports, synth_corpus, synth_engine, SynthOptions, SynthReport};
use patharchive::Error;

type Outcome = Result<String, Box<dyn StdError>>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+).into());
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- oracles

/// Whitespace split, edge punctuation trimmed, lowercased.
fn oracle_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Closed-form BM25 with k1 = 1.2, b = 0.75.
struct Bm25Oracle {
    ids: Vec<String>,
    tf: Vec<HashMap<String, usize>>,
    len: Vec<usize>,
    avg: f64,
}

impl Bm25Oracle {
    fn new(docs: &[(String, Vec<String>)]) -> Self {
        let ids = docs.iter().map(|d| d.0.clone()).collect();
        let mut tf = Vec::new();
        let mut len = Vec::new();
        for (_, toks) in docs {
            let mut m = HashMap::new();
            for t in toks {
                *m.entry(t.clone()).or_insert(0) += 1;
            }
            tf.push(m);
            len.push(toks.len());
        }
        let avg = len.iter().sum::<usize>() as f64 / docs.len() as f64;
        Bm25Oracle { ids, tf, len, avg }
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.tf.iter().filter(|m| m.contains_key(term)).count() as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// `None` when the document has no query term at all.
    fn score(&self, d: usize, query: &[String]) -> Option<f64> {
        let mut s = 0.0;
        let mut matched = false;
        for q in query {
            if let Some(&tf) = self.tf[d].get(q) {
                matched = true;
                let tf = tf as f64;
                let norm = 1.2 * (1.0 - 0.75 + 0.75 * self.len[d] as f64 / self.avg);
                s += self.idf(q) * tf / (tf + norm);
            }
        }
        matched.then_some(s)
    }
}

fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// (id, owner, score) sorted by score descending, id ascending.
fn sort_desc(v: &mut [(String, String, f64)]) {
    v.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
}

fn brute_dense(index: &DenseIndex, q: &[f32]) -> Vec<(String, String, f64)> {
    let mut v: Vec<_> = (0..index.len())
        .map(|i| (index.ids()[i].clone(), index.owners()[i].clone(), dot64(index.row(i), q)))
        .collect();
    sort_desc(&mut v);
    v
}

fn brute_bm25(oracle: &Bm25Oracle, query: &[String]) -> Vec<(String, String, f64)> {
    let mut v: Vec<_> = (0..oracle.ids.len())
        .filter_map(|d| oracle.score(d, query).map(|s| (oracle.ids[d].clone(), oracle.ids[d].clone(), s)))
        .collect();
    sort_desc(&mut v);
    v
}

/// Best score per owner; ties on score go to the smaller item id.
fn per_owner_max(list: &[(String, String, f64)]) -> BTreeMap<String, (f64, String)> {
    let mut out: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for (id, owner, s) in list {
        let e = out.entry(owner.clone()).or_insert((*s, id.clone()));
        if *s > e.0 || (*s == e.0 && *id < e.1) {
            *e = (*s, id.clone());
        }
    }
    out
}

#[derive(Debug)]
struct OracleHit {
    id: String,
    s_doc: f64,
    s_chunk: f64,
    s_bm25: f64,
    fused: f64,
    best_chunk: Option<String>,
}

fn oracle_search(engine: &Engine, bm: &Bm25Oracle, query: &str, k: usize, kb: usize, w: &FusionWeights) -> Vec<OracleHit> {
    let qv = engine.encode_query(query).unwrap();
    let mut doc = brute_dense(&engine.indices().doc, &qv);
    let mut chunk = brute_dense(&engine.indices().chunk, &qv);
    let mut lex = brute_bm25(bm, &oracle_tokens(query));
    doc.truncate(kb);
    chunk.truncate(kb);
    lex.truncate(kb);
    let doc = per_owner_max(&doc);
    let chunk = per_owner_max(&chunk);
    let lex = per_owner_max(&lex);
    let max_bm = lex.values().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let ids: BTreeSet<&String> = doc.keys().chain(chunk.keys()).chain(lex.keys()).collect();
    let mut hits: Vec<OracleHit> = ids
        .into_iter()
        .map(|id| {
            let s_doc = doc.get(id).map_or(0.0, |v| v.0);
            let s_chunk = chunk.get(id).map_or(0.0, |v| v.0);
            let s_bm25 = match lex.get(id) {
                Some(v) if max_bm > 0.0 => v.0 / max_bm,
                _ => 0.0,
            };
            OracleHit {
                id: id.clone(),
                s_doc,
                s_chunk,
                s_bm25,
                fused: w.alpha_doc * s_doc + w.alpha_chunk * s_chunk + w.alpha_bm25 * s_bm25,
                best_chunk: chunk.get(id).map(|v| v.1.clone()),
            }
        })
        .collect();
    hits.sort_by(|a, b| b.fused.total_cmp(&a.fused).then_with(|| a.id.cmp(&b.id)));
    hits.truncate(k);
    hits
}

fn corpus_bm25(engine: &Engine) -> Bm25Oracle {
    let docs: Vec<(String, Vec<String>)> =
        engine.corpus().docs().iter().map(|d| (d.report_id.clone(), oracle_tokens(&d.clean_text))).collect();
    Bm25Oracle::new(&docs)
}

fn random_queries(reports: &[SynthReport], rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let r = reports.choose(rng).unwrap();
            match i % 4 {
                0 => r.query(),
                1 => {
                    let words: Vec<&str> = r.raw.raw_text.split_whitespace().collect();
                    let len = rng.random_range(2..=8).min(words.len());
                    let start = rng.random_range(0..=words.len() - len);
                    words[start..start + len].join(" ")
                }
                2 => format!("{} qzxv", r.entity.diagnosis.to_lowercase()),
                _ => {
                    let a = reports.choose(rng).unwrap();
                    format!("{} {}", a.entity.site, r.entity.micro.choose(rng).unwrap().split_whitespace().take(4).collect::<Vec<_>>().join(" "))
                }
            }
        })
        .collect()
}

// ---------------------------------------------------------------- criteria

fn fusion_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let (engine, reports) = synth_engine(200, 101, 256)?;
    let bm = corpus_bm25(&engine);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let weights = FusionWeights::default();
    let mut max_dev: f64 = 0.0;
    let queries = random_queries(&reports, &mut rng, 100);
    for q in &queries {
        let got = engine.search(&SearchRequest::new(q.clone(), 10))?;
        let want = oracle_search(&engine, &bm, q, 10, DEFAULT_K_BACKEND, &weights);
        ensure!(got.len() == want.len(), "{q:?}: {} hits vs oracle {}", got.len(), want.len());
        for (rank, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure!(g.report_id == w.id, "{q:?} rank {rank}: {} vs oracle {}", g.report_id, w.id);
            ensure!(g.best_chunk_id == w.best_chunk, "{q:?} {}: best chunk {:?} vs {:?}", w.id, g.best_chunk_id, w.best_chunk);
            for (name, a, b) in
                [("s_doc", g.s_doc, w.s_doc), ("s_chunk", g.s_chunk, w.s_chunk), ("s_bm25", g.s_bm25, w.s_bm25), ("fused", g.fused, w.fused)]
            {
                max_dev = max_dev.max((a - b).abs());
                ensure!(close(a, b, 1e-9), "{q:?} {}: {name} {a} vs oracle {b}", w.id);
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("100 queries, top-10 identical, max deviation {max_dev:.1e}"))
}

fn weight_degeneracy() -> Outcome {
    let (engine, reports) = synth_engine(200, 101, 256)?;
    let bm = corpus_bm25(&engine);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = 20;
    for q in random_queries(&reports, &mut rng, 20) {
        let qv = engine.encode_query(&q)?;
        let pure_doc: Vec<String> = per_owner_ranking(&brute_dense(&engine.indices().doc, &qv));
        let pure_chunk: Vec<String> = per_owner_ranking(&brute_dense(&engine.indices().chunk, &qv));
        let pure_bm: Vec<String> = brute_bm25(&bm, &oracle_tokens(&q)).into_iter().map(|h| h.0).collect();
        for (w, pure) in [((1.0, 0.0, 0.0), &pure_doc), ((0.0, 1.0, 0.0), &pure_chunk), ((0.0, 0.0, 1.0), &pure_bm)] {
            let weights = FusionWeights::new(w.0, w.1, w.2)?;
            let got: Vec<String> = engine
                .search(&SearchRequest::new(q.clone(), k).with_weights(weights))?
                .into_iter()
                .map(|h| h.report_id)
                .collect();
            let n = k.min(pure.len());
            ensure!(got.len() >= n, "{q:?} {w:?}: {} hits", got.len());
            ensure!(got[..n] == pure[..n], "{q:?} weights {w:?}: {:?} vs pure {:?}", &got[..n], &pure[..n]);
        }
    }
    Ok("20 queries x 3 unit weightings match single-backend rankings".into())
}

fn per_owner_ranking(list: &[(String, String, f64)]) -> Vec<String> {
    let mut v: Vec<(String, String, f64)> =
        per_owner_max(list).into_iter().map(|(owner, (s, _))| (owner.clone(), owner, s)).collect();
    sort_desc(&mut v);
    v.into_iter().map(|h| h.0).collect()
}

fn recall_at_k_replay() -> Outcome {
    // 32 queries: semantic hits 26 at 1, 29 within 3, 32 within 10;
    // keyword hits 6, 10 and 13.
    let mut semantic = vec![Some(1); 26];
    semantic.extend([Some(2), Some(3), Some(3), Some(5), Some(8), Some(10)]);
    let mut keyword = vec![Some(1); 6];
    keyword.extend([Some(2), Some(2), Some(3), Some(3), Some(4), Some(7), Some(9)]);
    keyword.extend(vec![None; 19]);
    let expected = [(&semantic, [0.8125, 0.90625, 1.0]), (&keyword, [0.1875, 0.3125, 0.40625])];
    let dir = tempfile::tempdir()?;
    for (i, (ranks, want)) in expected.iter().enumerate() {
        ensure!(ranks.len() == 32, "log has {} entries", ranks.len());
        let log = RankLog::from_ranks(ranks)?;
        for (k, w) in [1, 3, 10].iter().zip(want) {
            let oracle = ranks.iter().filter(|r| matches!(r, Some(x) if x <= k)).count() as f64 / 32.0;
            ensure!(oracle == *w, "oracle recall@{k} {oracle} vs published {w}");
            let got = recall_at_k(&log, *k)?;
            ensure!(got == *w, "recall@{k} = {got}, expected {w}");
        }
        // same values through the file path
        let path = dir.path().join(format!("ranks{i}.jsonl"));
        let body: String = log.entries.iter().map(|e| serde_json::to_string(e).unwrap() + "\n").collect();
        std::fs::write(&path, body)?;
        let reports = evaluate_ranks(&read_rank_log(&path)?, &[1, 3, 10], 200)?;
        for (k, w) in [1, 3, 10].iter().zip(want) {
            let name = format!("recall@{k}");
            let r = reports.iter().find(|r| r.name == name).ok_or(format!("no {name} in report"))?;
            ensure!(r.value == *w && r.n == 32, "{name} via file = {} (n={})", r.value, r.n);
        }
    }
    Ok("0.8125/0.90625/1.0 and 0.1875/0.3125/0.40625 exact".into())
}

fn wilson_interval_replay() -> Outcome {
    let published = [
        (50, "0.929", "1.000"),
        (37, "0.604", "0.841"),
        (46, "0.812", "0.968"),
        (35, "0.562", "0.809"),
        (33, "0.522", "0.776"),
        (41, "0.692", "0.902"),
    ];
    for (s, lo, hi) in published {
        let (l, h) = wilson(s, 50, DEFAULT_Z)?;
        // closed form, written out independently
        let (n, p, z) = (50.0, s as f64 / 50.0, 1.96_f64);
        let centre = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n);
        ensure!(close(l, (centre - half).max(0.0), 1e-12), "{s}/50 low {l} vs closed form");
        ensure!(close(h, (centre + half).min(1.0), 1e-12), "{s}/50 high {h} vs closed form");
        ensure!(format!("{l:.3}") == lo && format!("{h:.3}") == hi, "{s}/50 -> [{l:.3}, {h:.3}], published [{lo}, {hi}]");
    }
    Ok("six intervals at n=50 reproduce to 3 decimals".into())
}

fn bm25_formula_oracle() -> Outcome {
    let texts = [
        "Invasive ductal carcinoma of the breast, grade 2.",
        "Adenocarcinoma, colon; margins negative. Adenocarcinoma invades muscularis propria.",
        "Benign breast tissue with fibrocystic change.",
        "Squamous cell carcinoma, lung, moderately differentiated carcinoma.",
        "Tubular adenoma of the colon with low-grade dysplasia.",
    ];
    let docs: Vec<(String, String)> = texts.iter().enumerate().map(|(i, t)| (format!("D{i}"), t.to_string())).collect();
    let index = Bm25Index::build(&docs, Bm25Params::default())?;
    let tokenized: Vec<(String, Vec<String>)> = docs.iter().map(|(id, t)| (id.clone(), oracle_tokens(t))).collect();
    let oracle = Bm25Oracle::new(&tokenized);
    let queries = [
        "carcinoma",
        "breast carcinoma",
        "colon adenocarcinoma",
        "Adenocarcinoma, COLON!",
        "low-grade dysplasia",
        "margins",
        "lung squamous carcinoma carcinoma",
        "melanoma",
        "the of with",
        "tubular adenoma colon tissue",
    ];
    let mut compared = 0;
    for q in queries {
        let toks = oracle_tokens(q);
        let got = index.topk(&toks, docs.len())?;
        let want = brute_bm25(&oracle, &toks);
        ensure!(got.len() == want.len(), "{q:?}: {} hits vs oracle {}", got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            ensure!(g.id == w.0, "{q:?}: order {} vs oracle {}", g.id, w.0);
            ensure!(close(g.score, w.2, 1e-9), "{q:?} {}: {} vs oracle {}", g.id, g.score, w.2);
            compared += 1;
        }
    }

    // Term-frequency monotonicity with the other statistics held fixed.
    let vocab: Vec<String> = "tumor gland margin node cell stroma duct lobule nucleus mitosis capsule vessel"
        .split(' ')
        .map(String::from)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let score_of = |docs: &[(String, Vec<String>)], d: usize, q: &[String]| -> Result<f64, Error> {
        let idx = Bm25Index::build_from_tokens(docs, Bm25Params::default())?;
        Ok(idx.score_all(q).get(&d).copied().unwrap_or(0.0))
    };
    let random_docs = |rng: &mut ChaCha8Rng| -> Vec<(String, Vec<String>)> {
        let n = rng.random_range(3..8);
        (0..n)
            .map(|i| {
                let len = rng.random_range(4..30);
                (format!("M{i}"), (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect())
            })
            .collect()
    };
    for trial in 0..100 {
        // replace one non-query token with a query term: length unchanged
        let docs = random_docs(&mut rng);
        let nq = rng.random_range(2..5);
        let q: Vec<String> = vocab.choose_multiple(&mut rng, nq).cloned().collect();
        let d = rng.random_range(0..docs.len());
        let Some(pos) = docs[d].1.iter().position(|t| !q.contains(t)) else { continue };
        let term = q.choose(&mut rng).unwrap().clone();
        // keep document frequency fixed: the term must already occur in d
        if !docs[d].1.contains(&term) {
            continue;
        }
        let before = score_of(&docs, d, &q)?;
        let mut more = docs.clone();
        more[d].1[pos] = term.clone();
        // the replaced token's df may drop, which only affects non-query terms
        let after = score_of(&more, d, &q)?;
        ensure!(after.total_cmp(&before).is_gt(), "substitution trial {trial}: {before} -> {after} for {term}");
    }
    for trial in 0..100 {
        // single-term query, append one more occurrence
        let docs = random_docs(&mut rng);
        let term = vocab.choose(&mut rng).unwrap().clone();
        let d = rng.random_range(0..docs.len());
        if !docs[d].1.contains(&term) {
            continue;
        }
        let q = vec![term.clone()];
        let before = score_of(&docs, d, &q)?;
        let mut more = docs.clone();
        more[d].1.push(term.clone());
        let after = score_of(&more, d, &q)?;
        ensure!(after.total_cmp(&before).is_gt(), "append trial {trial}: {before} -> {after}");
    }
    Ok(format!("{compared} scores within 1e-9; tf monotone over randomized trials"))
}

fn non_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn chunker_properties() -> Outcome {
    let opts = SynthOptions { long_sentence_rate: 0.15, max_filler: 14, ..SynthOptions::default() };
    let raws: Vec<_> = generate_reports(1000, 2024, &opts).into_iter().map(|r| r.raw).collect();
    let normalizer = Normalizer::default();
    let chunker = Chunker::new(40, 380)?;
    let runs: Vec<(Vec<ReportDoc>, Vec<Chunk>)> =
        (0..3).map(|_| ingest_reports(&raws, &normalizer, &chunker, None)).collect::<Result<_, _>>()?;
    ensure!(runs[0] == runs[1] && runs[1] == runs[2], "chunking differs between runs");
    let (docs, chunks) = &runs[0];
    ensure!(docs.len() == 1000, "{} docs ingested", docs.len());

    let mut by_report: HashMap<&str, Vec<&Chunk>> = HashMap::new();
    for c in chunks {
        by_report.entry(c.report_id.as_str()).or_default().push(c);
    }
    let (mut oversized, mut undersized) = (0, 0);
    for doc in docs {
        let cs = by_report.get(doc.report_id.as_str()).cloned().unwrap_or_default();
        for (i, c) in cs.iter().enumerate() {
            ensure!(c.chunk_id == format!("{}#{i}", doc.report_id), "chunk id {} at position {i}", c.chunk_id);
            let (a, b) = c.char_span;
            ensure!(doc.clean_text.get(a..b) == Some(c.text.as_str()), "{}: text differs from its span", c.chunk_id);
            let inside = doc.sections.iter().any(|s| s.label == c.section_label && s.char_span.0 <= a && b <= s.char_span.1);
            ensure!(inside, "{} crosses a section boundary", c.chunk_id);
            let chars = c.text.chars().count();
            let est = chars.div_ceil(4).max(1);
            ensure!(c.token_estimate == est, "{}: estimate {} vs {est}", c.chunk_id, c.token_estimate);
            match c.flag {
                None => ensure!((40..=380).contains(&est), "{}: {est} tokens without a flag", c.chunk_id),
                Some(ChunkFlag::Oversized) => {
                    oversized += 1;
                    ensure!(est > 380, "{} flagged oversized at {est}", c.chunk_id);
                }
                Some(ChunkFlag::Undersized) => {
                    undersized += 1;
                    ensure!(est < 40, "{} flagged undersized at {est}", c.chunk_id);
                }
            }
        }
        for s in &doc.sections {
            let joined: String = cs
                .iter()
                .filter(|c| c.section_label == s.label && s.char_span.0 <= c.char_span.0 && c.char_span.1 <= s.char_span.1)
                .map(|c| non_ws(&c.text))
                .collect();
            ensure!(joined == non_ws(&s.text), "{} {:?}: chunk characters differ from section", doc.report_id, s.label);
        }
    }
    ensure!(oversized > 0, "no oversized sentence was generated; the exception path is untested");
    Ok(format!("1000 reports, {} chunks ({oversized} oversized, {undersized} undersized), 3 identical runs", chunks.len()))
}

fn cohort_end_to_end() -> Outcome {
    let (corpus, reports) = synth_corpus(50, 77)?;
    let truth: BTreeMap<String, bool> =
        reports.iter().map(|r| (r.raw.report_id.clone(), r.entity.site.starts_with("Colon"))).collect();
    let ids: Vec<&String> = truth.keys().collect();
    let (one, two) = (ids[3].clone(), ids[17].clone());
    let cfg = RagConfig::default();
    let spec = CohortSpec::new("Primary colon resection or biopsy", "").with_concurrency(8);
    let llm = StubLlm::rule(|report| report.contains("Colon,")).failing(&one, 1).failing(&two, 2);
    let seen = Mutex::new(Vec::new());
    let progress = |done: usize, total: usize| seen.lock().unwrap().push((done, total));
    let started = Instant::now();
    let outcome = run_cohort(&spec, &corpus, None, &llm, &cfg, &progress)?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    ensure!(outcome.decisions.len() == 50, "{} decisions", outcome.decisions.len());
    ensure!(truth.values().filter(|v| **v).count() > 0, "no colon cases in the sample");
    for d in &outcome.decisions {
        let want = u8::from(truth[&d.case_number]);
        ensure!(d.decision == Some(want), "{}: {:?} vs oracle {want}", d.case_number, d.decision);
        let (status, attempts) = if d.case_number == one {
            (ParseStatus::RetriedOk, 2)
        } else if d.case_number == two {
            (ParseStatus::RetriedOk, 3)
        } else {
            (ParseStatus::Ok, 1)
        };
        ensure!(d.parse_status == status && d.attempts == attempts, "{}: {:?} after {}", d.case_number, d.parse_status, d.attempts);
    }
    ensure!(outcome.stats.llm_calls == 53 && llm.calls() == 53, "llm calls {} / {}", outcome.stats.llm_calls, llm.calls());
    ensure!(outcome.stats.failures == 0, "{} failures", outcome.stats.failures);
    let seen = seen.into_inner().unwrap();
    ensure!(seen.len() == 50 && seen.contains(&(50, 50)), "progress callbacks {seen:?}");

    let dir = tempfile::tempdir()?;
    write_cohort_results(dir.path(), &outcome)?;
    let lines = std::fs::read_to_string(dir.path().join(DECISIONS_FILE))?.lines().count();
    ensure!(lines == 50, "{lines} lines written");

    let stubborn = StubLlm::rule(|report| report.contains("Colon,")).failing(&one, 3);
    let outcome = run_cohort(&spec, &corpus, None, &stubborn, &cfg, &|_, _| {})?;
    let d = outcome.decisions.iter().find(|d| d.case_number == one).ok_or("case missing")?;
    ensure!(d.decision.is_none() && d.parse_status == ParseStatus::Failed && d.attempts == 3, "exhausted case: {d:?}");
    ensure!(outcome.stats.failures == 1 && outcome.stats.llm_calls == 52, "stats {:?}", outcome.stats);
    Ok(format!("50/50 decisions match the site oracle; 53 calls; {elapsed:.2?}"))
}

/// Replies with random marker names, junk and duplicates.
#[derive(Debug)]
struct ChaoticLlm {
    rng: Mutex<ChaCha8Rng>,
    names: Vec<String>,
}

impl LlmClient for ChaoticLlm {
    fn complete(&self, _bundle: &PromptBundle, _params: &GenerationParams) -> patharchive::Result<String> {
        let mut rng = self.rng.lock().unwrap();
        if rng.random_bool(0.15) {
            return Ok("no idea {{{ [".into());
        }
        let pool = ["Vimentin-X", "HER2/neu?", "", "BRAFV600E", "ck7", "cd 20", "Ki-67"];
        let markers: Vec<Value> = (0..rng.random_range(0..12))
            .map(|_| {
                let name = if rng.random_bool(0.6) {
                    self.names.choose(&mut *rng).unwrap().clone()
                } else {
                    pool.choose(&mut *rng).unwrap().to_string()
                };
                json!({ "name": name, "rationale": "because" })
            })
            .collect();
        Ok(format!("Sure.\n{}", json!({ "markers": markers })))
    }
}

fn ihc_leakage_guard() -> Outcome {
    let (engine, reports) = synth_engine(200, 55, 128)?;
    let lexicon = MarkerLexicon::default();
    let cfg = RagConfig::default();
    let with_ihc: Vec<&SynthReport> = reports.iter().filter(|r| !r.ihc_panel.is_empty()).take(20).collect();
    ensure!(with_ihc.len() == 20, "only {} reports carry IHC", with_ihc.len());
    for r in &with_ihc {
        let doc = engine.corpus().doc(&r.raw.report_id).ok_or("missing doc")?;
        let ihc_text = &doc.section(SectionLabel::Immunohistochemistry).ok_or("no IHC section")?.text;
        let llm = StubLlm::structured();
        let rec = recommend_ihc_for_report(doc, &engine, &llm, 5, &lexicon, &cfg).map_err(|e| format!("{}: {e}", r.raw.report_id))?;
        let prompts = llm.captured();
        ensure!(prompts.len() == 1, "{} prompts", prompts.len());
        let case = prompts[0].block("CASE DETAILS").ok_or("no CASE DETAILS block")?;
        // independent scan: every lexicon name, case-insensitive, whole word
        let lower = case.to_lowercase();
        for name in lexicon.names() {
            let n = name.to_lowercase();
            let leaked = lower.match_indices(&n).any(|(i, _)| {
                let before = lower[..i].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
                let after = lower[i + n.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric());
                before && after
            });
            ensure!(!leaked, "{}: marker {name} reached the prompt", r.raw.report_id);
        }
        ensure!(!prompts[0].render().contains(ihc_text.as_str()), "{}: own IHC text in prompt", r.raw.report_id);
        ensure!(!rec.neighbors.contains(&r.raw.report_id), "{} is its own neighbor", r.raw.report_id);
    }

    let doc = engine.corpus().doc(&with_ihc[0].raw.report_id).unwrap();
    let llm = StubLlm::structured();
    let res = recommend_ihc(&doc.clean_text, &engine, &llm, 5, &lexicon, &cfg, None);
    ensure!(matches!(res, Err(Error::UnmaskedInput(_))), "unmasked input gave {res:?}");
    ensure!(llm.calls() == 0, "model was called on unmasked input");

    let chaotic = ChaoticLlm {
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(9)),
        names: lexicon.names().iter().map(|s| s.to_string()).collect(),
    };
    // neighbors without any IHC leave nothing to rank unless a panel is configured
    let plain: Vec<_> = generate_reports(60, 5, &SynthOptions::default())
        .into_iter()
        .filter(|r| r.entity.positive.is_empty() && r.entity.negative.is_empty())
        .map(|r| r.raw)
        .collect();
    ensure!(plain.len() >= 2, "only {} reports without IHC", plain.len());
    let (docs, chunks) = ingest_reports(&plain, &Normalizer::default(), &Chunker::new(40, 380)?, None)?;
    let plain_engine = Engine::build(Corpus::new(docs, chunks)?, Arc::new(MockEncoder::new(64, 0)), IndexBuildConfig::default())?;
    let lone = &plain_engine.corpus().docs()[0];
    let res = recommend_ihc_for_report(lone, &plain_engine, &chaotic, 3, &lexicon, &cfg);
    ensure!(matches!(res, Err(Error::EmptyCandidateSet)), "no candidates gave {res:?}");
    let cfg = RagConfig { canonical_panel: vec!["CK7".into(), "CK20".into(), "Ki-67".into()], ..cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..100 {
        let doc = &engine.corpus().docs()[rng.random_range(0..200)];
        let k = rng.random_range(1..=8);
        let rec = recommend_ihc_for_report(doc, &engine, &chaotic, k, &lexicon, &cfg)?;
        let names: Vec<&String> = rec.markers.iter().map(|m| &m.name).collect();
        let unique: BTreeSet<&String> = names.iter().copied().collect();
        ensure!(unique.len() == names.len(), "trial {trial}: duplicates {names:?}");
        ensure!(names.len() <= k, "trial {trial}: {} markers for k={k}", names.len());
        ensure!(names.len() == k.min(rec.candidate_vocabulary.len()), "trial {trial}: {} markers, vocabulary {}", names.len(), rec.candidate_vocabulary.len());
        ensure!(names.iter().all(|n| rec.candidate_vocabulary.contains(*n)), "trial {trial}: {names:?} outside vocabulary");
    }
    Ok("20 masked prompts clean; unmasked rejected; 100 adversarial replies stay in vocabulary".into())
}

/// Counts n-grams as joined strings and matches them off a multiset.
fn oracle_overlap(c: &[&str], r: &[&str], n: usize) -> (usize, usize, usize) {
    let grams = |w: &[&str]| -> Vec<String> { if w.len() < n { vec![] } else { w.windows(n).map(|g| g.join(" ")).collect() } };
    let (cg, mut rg) = (grams(c), grams(r));
    let mut m = 0;
    for g in &cg {
        if let Some(p) = rg.iter().position(|x| x == g) {
            rg.swap_remove(p);
            m += 1;
        }
    }
    (m, cg.len(), grams(r).len())
}

fn oracle_lcs(a: &[&str], b: &[&str]) -> usize {
    let mut t = vec![vec![0; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

fn f1(m: f64, c: f64, r: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else {
        2.0 * (m / c) * (m / r) / (m / c + m / r)
    }
}

fn oracle_syllables(word: &str) -> usize {
    let w: String = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    let vowel = |c: char| "aeiouy".contains(c);
    let chars: Vec<char> = w.chars().collect();
    let mut groups = 0;
    for (i, c) in chars.iter().enumerate() {
        if vowel(*c) && (i == 0 || !vowel(chars[i - 1])) {
            groups += 1;
        }
    }
    let silent = w.ends_with('e') && chars.len() >= 2 && !vowel(chars[chars.len() - 2]);
    let le = w.ends_with("le") && chars.len() >= 3 && !vowel(chars[chars.len() - 3]);
    if silent && !le && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

fn text_metric_oracles() -> Outcome {
    let identical = ["the cat sat on the mat", "Margins are negative.", "carcinoma", "two words"];
    for t in identical {
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            ensure!(rouge(t, t, v).value == 1.0, "rouge {v:?} of {t:?} with itself");
        }
        ensure!(close(bleu4(t, t).value, 1.0, 1e-12), "bleu of {t:?} with itself = {}", bleu4(t, t).value);
    }

    let (r1, r2, rl) = (
        rouge("the cat sat on the mat", "the cat is on the mat", RougeVariant::One).value,
        rouge("the cat sat on the mat", "the cat is on the mat", RougeVariant::Two).value,
        rouge("the cat sat on the mat", "the cat is on the mat", RougeVariant::L).value,
    );
    ensure!(close(r1, 5.0 / 6.0, 1e-12) && close(r2, 0.6, 1e-12) && close(rl, 5.0 / 6.0, 1e-12), "hand pair: {r1} {r2} {rl}");

    let pairs = [
        ("the cat sat on the mat", "the cat is on the mat"),
        ("tumor is present at the margin", "the margin is free of tumor"),
        ("no carcinoma identified", "benign tissue with no carcinoma identified in the sample"),
        ("grade 2 invasive ductal carcinoma of the left breast", "invasive ductal carcinoma grade 2 left breast"),
        ("lymph nodes negative negative negative", "lymph nodes are negative"),
    ];
    for (c, r) in pairs {
        let cw: Vec<String> = c.split_whitespace().map(|w| w.to_lowercase()).collect();
        let rw: Vec<String> = r.split_whitespace().map(|w| w.to_lowercase()).collect();
        let (cw, rw): (Vec<&str>, Vec<&str>) = (cw.iter().map(String::as_str).collect(), rw.iter().map(String::as_str).collect());
        for (n, v) in [(1, RougeVariant::One), (2, RougeVariant::Two)] {
            let (m, ct, rt) = oracle_overlap(&cw, &rw, n);
            let want = f1(m as f64, ct as f64, rt as f64);
            let got = rouge(c, r, v).value;
            ensure!(close(got, want, 1e-9), "rouge-{n} {c:?}: {got} vs {want}");
        }
        let want = f1(oracle_lcs(&cw, &rw) as f64, cw.len() as f64, rw.len() as f64);
        ensure!(close(rouge(c, r, RougeVariant::L).value, want, 1e-9), "rouge-L {c:?}");
        let mut log_p = 0.0;
        for n in 1..=4 {
            let (m, ct, _) = oracle_overlap(&cw, &rw, n);
            log_p += if ct == 0 { 1e-9_f64.ln() } else if m == 0 { (1e-9 / ct as f64).ln() } else { (m as f64 / ct as f64).ln() };
        }
        let bp = if cw.len() > rw.len() { 1.0 } else { (1.0 - rw.len() as f64 / cw.len() as f64).exp() };
        let want = bp * (log_p / 4.0).exp();
        let got = bleu4(c, r).value;
        ensure!(close(got, want, 1e-9), "bleu {c:?}: {got} vs {want}");
    }

    let texts = [
        "The specimen shows invasive ductal carcinoma. Margins are free! Is the node negative?",
        "We looked at your sample. The test found a change in the cells.",
        "Sections demonstrate a well-differentiated adenocarcinoma invading the muscularis propria; little table.",
    ];
    for t in texts {
        let words: Vec<&str> = t.split_whitespace().filter(|w| w.chars().any(char::is_alphabetic)).collect();
        let syllables: usize = words.iter().map(|w| oracle_syllables(w)).sum();
        let sentences = t
            .split(['.', '!', '?'])
            .filter(|s| s.split_whitespace().any(|w| w.chars().any(char::is_alphabetic)))
            .count();
        let (w, s, y) = (words.len() as f64, sentences as f64, syllables as f64);
        let fk = 0.39 * (w / s) + 11.8 * (y / w) - 15.59;
        let ease = 206.835 - 1.015 * (w / s) - 84.6 * (y / w);
        let got = readability(t)?;
        ensure!(close(got.fk_grade, fk, 1e-9) && close(got.reading_ease, ease, 1e-9), "readability {t:?}: {got:?} vs {fk} {ease}");
    }
    Ok("identity = 1; 5 pairs and 3 texts match counting oracles".into())
}

fn bootstrap_behavior() -> Outcome {
    let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64 / 7.0).collect();
    let same = paired_bootstrap(&a, &a, 2000, 1)?;
    ensure!(same.value == 0.0 && same.ci_low == Some(0.0) && same.ci_high == Some(0.0), "a = b: {same:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b: Vec<f64> = (0..100).map(|_| rng.random()).collect();
    let r1 = paired_bootstrap(&a, &b, 2000, 42)?;
    let r2 = paired_bootstrap(&a, &b, 2000, 42)?;
    let r3 = paired_bootstrap(&a, &b, 2000, 43)?;
    ensure!(r1 == r2, "same seed gave different results");
    ensure!(r1.ci_low != r3.ci_low || r1.ci_high != r3.ci_high, "seed has no effect");

    let trials = 500;
    let mut covered = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + t);
        let base: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let x: Vec<f64> = base.iter().map(|v| v + rng.random_range(-0.2..0.4)).collect();
        let r = paired_bootstrap(&x, &base, 2000, t)?;
        let (lo, hi) = (r.ci_low.unwrap(), r.ci_high.unwrap());
        if lo <= 0.1 && 0.1 <= hi {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    ensure!(coverage.total_cmp(&0.93).is_ge(), "coverage {coverage:.3}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..300).map(|_| rng.random()).collect();
    let y: Vec<f64> = (0..300).map(|_| rng.random()).collect();
    let started = Instant::now();
    paired_bootstrap(&x, &y, 2000, 0)?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "2000 resamples took {elapsed:?}");
    Ok(format!("coverage {coverage:.3} over {trials} trials; 2000 x 300 in {elapsed:.2?}"))
}

fn index_persistence() -> Outcome {
    let (engine, reports) = synth_engine(120, 31, 128)?;
    let dir = tempfile::tempdir()?;
    let idx = engine.indices();
    let paths = [dir.path().join("docs.dvec"), dir.path().join("chunks.dvec"), dir.path().join("lexical.bm25")];
    persist_index(&idx.doc, &paths[0])?;
    persist_index(&idx.chunk, &paths[1])?;
    persist_index(&idx.lexical, &paths[2])?;
    let doc: DenseIndex = load_index(&paths[0])?;
    let chunk: DenseIndex = load_index(&paths[1])?;
    let lexical: Bm25Index = load_index(&paths[2])?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for q in random_queries(&reports, &mut rng, 10) {
        let qv = engine.encode_query(&q)?;
        ensure!(idx.doc.topk(&qv, 20)? == doc.topk(&qv, 20)?, "{q:?}: doc top-k differs after reload");
        ensure!(idx.chunk.topk(&qv, 20)? == chunk.topk(&qv, 20)?, "{q:?}: chunk top-k differs after reload");
        let toks = oracle_tokens(&q);
        ensure!(idx.lexical.topk(&toks, 20)? == lexical.topk(&toks, 20)?, "{q:?}: bm25 top-k differs after reload");
    }

    let mut rejected = 0;
    for path in &paths {
        let original = std::fs::read(path)?;
        let mut flipped = original.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x20;
        let truncated = original[..original.len() * 2 / 3].to_vec();
        for (what, bytes) in [("flip", flipped), ("truncate", truncated)] {
            std::fs::write(path, &bytes)?;
            let err = if path.extension().is_some_and(|e| e == "bm25") {
                load_index::<Bm25Index>(path).err()
            } else {
                load_index::<DenseIndex>(path).err()
            };
            ensure!(matches!(err, Some(Error::CorruptIndex { .. })), "{what} {}: {err:?}", path.display());
            rejected += 1;
        }
        std::fs::write(path, &original)?;
        std::fs::write(digest_path(path), "0".repeat(64))?;
        let err = load_index::<DenseIndex>(path).err().or_else(|| load_index::<Bm25Index>(path).err());
        ensure!(matches!(err, Some(Error::CorruptIndex { .. })), "digest mismatch {}: {err:?}", path.display());
        rejected += 1;
    }
    Ok(format!("10 probes identical after reload; {rejected} corruptions rejected"))
}

// ---------------------------------------------------------------- service

/// Cohort prompts go to a rule stub, everything else to a structured stub.
#[derive(Debug)]
struct Routed {
    cohort: StubLlm,
    other: Arc<StubLlm>,
}

impl LlmClient for Routed {
    fn complete(&self, bundle: &PromptBundle, params: &GenerationParams) -> patharchive::Result<String> {
        match bundle.task {
            Task::Cohort { .. } => self.cohort.complete(bundle, params),
            _ => self.other.complete(bundle, params),
        }
    }
}

struct Server {
    base: String,
    _rt: tokio::runtime::Runtime,
}

fn start_server(engine: Engine, llm: Arc<dyn LlmClient>) -> Result<Server, Box<dyn StdError>> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    let state = AppState::new(engine, Some(llm), EngineConfig::default())?;
    rt.spawn(serve(listener, state));
    Ok(Server { base, _rt: rt })
}

fn call(client: &reqwest::blocking::Client, method: &str, url: &str, body: Option<Value>) -> Result<(u16, Value), Box<dyn StdError>> {
    let req = match method {
        "GET" => client.get(url),
        _ => client.post(url),
    };
    let req = match body {
        Some(b) => req.json(&b),
        None => req,
    };
    let resp = req.send()?;
    let status = resp.status().as_u16();
    let text = resp.text()?;
    let value = serde_json::from_str(&text).map_err(|e| format!("{method} {url}: non-JSON body {text:?}: {e}"))?;
    Ok((status, value))
}

fn error_shape(v: &Value) -> bool {
    v["code"].is_string() && v["message"].is_string()
}

fn service_contract() -> Outcome {
    let (engine, reports) = synth_engine(10, 12, 64)?;
    let (degraded_engine, _) = synth_engine(10, 12, 64)?;
    let truth: BTreeMap<String, u8> =
        reports.iter().map(|r| (r.raw.report_id.clone(), u8::from(r.entity.site.starts_with("Colon")))).collect();
    let with_ihc = reports.iter().find(|r| !r.ihc_panel.is_empty()).ok_or("no IHC report in the toy corpus")?;
    let structured = Arc::new(StubLlm::structured());
    let llm = Routed { cohort: StubLlm::rule(|t| t.contains("Colon,")), other: structured.clone() };
    let server = start_server(engine, Arc::new(llm))?;
    let degraded = start_server(degraded_engine, Arc::new(StubLlm::unavailable()))?;
    let c = reqwest::blocking::Client::builder().timeout(Duration::from_secs(20)).build()?;
    let url = |p: &str| format!("{}{p}", server.base);

    let (s, v) = call(&c, "GET", &url("/healthz"), None)?;
    ensure!(s == 200 && v["reports"] == 10, "healthz {s} {v}");

    let (s, v) = call(&c, "POST", &url("/v1/search"), Some(json!({"query": reports[0].query(), "k": 5})))?;
    ensure!(s == 200, "search {s} {v}");
    let hits = v["hits"].as_array().ok_or("hits missing")?;
    ensure!(!hits.is_empty() && hits.len() <= 5, "{} hits", hits.len());
    for h in hits {
        let f = |k: &str| h[k].as_f64().ok_or(format!("{k} missing in {h}"));
        let want = 0.5 * f("s_doc")? + 0.3 * f("s_chunk")? + 0.2 * f("s_bm25")?;
        ensure!(close(f("fused")?, want, 1e-9), "fused {} vs {want}", f("fused")?);
    }
    ensure!(v["answer"].is_null(), "answer without generate");

    let (s, v) = call(&c, "POST", &url("/v1/search"), Some(json!({"query": "colon adenocarcinoma", "k": 3, "generate": true})))?;
    ensure!(s == 200 && v["answer"].as_str().is_some_and(|a| a.contains("colon adenocarcinoma")), "generated search {s} {v}");

    let (s, v) = call(&c, "POST", &url("/v1/search"), Some(json!({"query": "   ", "k": 5})))?;
    ensure!(s == 400 && error_shape(&v), "empty query {s} {v}");

    let (s, v) = call(&c, "POST", &format!("{}/v1/search", degraded.base), Some(json!({"query": "colon", "k": 5, "generate": true})))?;
    ensure!(s == 200 && v["answer"].is_null() && v["warning"].is_string() && !v["hits"].as_array().unwrap().is_empty(), "degraded {s} {v}");

    let (s, v) = call(&c, "POST", &url("/v1/cohorts"), Some(json!({"inclusion_criteria": "colon primary", "exclusion_criteria": ""})))?;
    ensure!(s == 202 && v["state"].is_string(), "cohort submit {s} {v}");
    let job = v["job_id"].as_str().ok_or("job_id missing")?.to_string();
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut last_done = 0;
    let status = loop {
        let (s, v) = call(&c, "GET", &url(&format!("/v1/cohorts/{job}")), None)?;
        ensure!(s == 200, "job status {s} {v}");
        let done = v["progress"]["done"].as_u64().unwrap_or(0);
        ensure!(done >= last_done, "progress went back from {last_done} to {done}");
        last_done = done;
        if v["state"] == "done" || v["state"] == "failed" {
            break v;
        }
        ensure!(Instant::now() < deadline, "job still {} after 10 s", v["state"]);
        std::thread::sleep(Duration::from_millis(20));
    };
    ensure!(status["state"] == "done", "job ended {status}");
    let decisions = status["decisions"].as_array().ok_or("decisions missing")?;
    ensure!(decisions.len() == 10, "{} decisions", decisions.len());
    for d in decisions {
        let id = d["case_number"].as_str().unwrap_or_default();
        ensure!(d["decision"].as_u64() == truth.get(id).map(|t| *t as u64), "{id}: {} vs oracle {:?}", d["decision"], truth.get(id));
    }
    ensure!(status["stats"]["llm_calls"] == 10 && status["progress"]["done"] == 10, "stats {}", status["stats"]);

    let (s, v) = call(&c, "GET", &url("/v1/cohorts/cohort-424242"), None)?;
    ensure!(s == 404 && error_shape(&v), "unknown job {s} {v}");
    let (s, v) = call(&c, "POST", &url("/v1/cohorts"), Some(json!({"inclusion_criteria": "", "exclusion_criteria": " "})))?;
    ensure!(s == 422 && error_shape(&v), "empty criteria {s} {v}");

    let id = &reports[0].raw.report_id;
    let (s, v) = call(&c, "POST", &url("/v1/transform"), Some(json!({"report_id": id, "kind": "synoptic"})))?;
    ensure!(s == 200 && v["text"].as_str().is_some_and(|t| !t.is_empty()), "synoptic {s} {v}");
    let (s, v) = call(&c, "POST", &url("/v1/transform"), Some(json!({"report_id": id, "kind": "haiku"})))?;
    ensure!(s == 422 && error_shape(&v), "haiku {s} {v}");
    let (s, v) = call(&c, "POST", &url("/v1/transform"), Some(json!({"report_id": "NOPE", "kind": "synoptic"})))?;
    ensure!(s == 404 && error_shape(&v), "unknown report {s} {v}");

    let before = structured.captured().len();
    let (s, v) = call(&c, "POST", &url("/v1/ihc"), Some(json!({"report_id": with_ihc.raw.report_id, "k": 3})))?;
    ensure!(s == 200 && v["markers"].as_array().is_some_and(|m| !m.is_empty() && m.len() <= 3), "ihc {s} {v}");
    let prompts = structured.captured();
    ensure!(prompts.len() == before + 1, "expected one IHC prompt");
    let case = prompts[before].block("CASE DETAILS").ok_or("no CASE DETAILS")?;
    let leaked = MarkerLexicon::default().find_markers(case);
    ensure!(leaked.is_empty(), "IHC prompt leaked {leaked:?}");

    let (s, v) = call(&c, "GET", &url(&format!("/v1/reports/{id}")), None)?;
    ensure!(s == 200 && v["report_id"] == json!(id), "report {s}");
    let (s, v) = call(&c, "GET", &url("/v1/reports/NOPE"), None)?;
    ensure!(s == 404 && error_shape(&v), "missing report {s} {v}");

    let resp = c.post(url("/v1/search")).header("content-type", "application/json").body("{\"query\": ").send()?;
    let s = resp.status().as_u16();
    let v: Value = resp.json()?;
    ensure!(s == 400 && error_shape(&v), "malformed body {s} {v}");
    let (s, v) = call(&c, "GET", &url("/v2/nothing"), None)?;
    ensure!(s == 404 && error_shape(&v), "unknown route {s} {v}");
    Ok("search, cohort lifecycle, transform, IHC, reports and error bodies conform".into())
}

// ---------------------------------------------------------------- runner

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("fusion_oracle_equivalence", fusion_oracle_equivalence),
        ("weight_degeneracy", weight_degeneracy),
        ("recall_at_k_replay", recall_at_k_replay),
        ("wilson_interval_replay", wilson_interval_replay),
        ("bm25_formula_oracle", bm25_formula_oracle),
        ("chunker_properties", chunker_properties),
        ("cohort_end_to_end", cohort_end_to_end),
        ("ihc_leakage_guard", ihc_leakage_guard),
        ("text_metric_oracles", text_metric_oracles),
        ("bootstrap_behavior", bootstrap_behavior),
        ("index_persistence", index_persistence),
        ("service_contract", service_contract),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| Err(panic_message(p).into()));
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{:.2?}]", started.elapsed()),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
