use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::decision::first_object;
use super::llm::{generate, LlmClient};
use super::prompt::ihc_prompt;
use super::{fit_text, RagConfig};
use crate::error::{Error, Result};
use crate::ingest::{mask_ihc, parse_sections, MarkerLexicon, ReportDoc, SectionLabel, REDACTED};
use crate::retrieval::{Engine, SearchRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendedMarker {
    pub name: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IhcRecommendation {
    pub markers: Vec<RecommendedMarker>,
    pub candidate_vocabulary: BTreeSet<String>,
    /// Neighbor report ids in retrieval order.
    pub neighbors: Vec<String>,
}

/// Rejects text that still carries immunohistochemistry content: an IHC
/// section with anything but the redaction token, or any lexicon marker.
pub fn ensure_masked(text: &str, lexicon: &MarkerLexicon) -> Result<()> {
    let leaked_section = parse_sections(text)
        .iter()
        .any(|s| s.label == SectionLabel::Immunohistochemistry && !s.text.is_empty() && s.text != REDACTED);
    if leaked_section {
        return Err(Error::UnmaskedInput("case context has an unmasked immunohistochemistry section".into()));
    }
    let found = lexicon.find_markers(text);
    if !found.is_empty() {
        return Err(Error::UnmaskedInput(format!("case context names IHC markers: {}", found.join(", "))));
    }
    Ok(())
}

#[derive(Deserialize)]
struct MarkerReply {
    markers: Vec<MarkerItem>,
}

#[derive(Deserialize)]
struct MarkerItem {
    name: String,
    #[serde(default)]
    rationale: String,
}

/// Ranks up to `k` IHC markers for a masked case. Candidates are the
/// markers found in the IHC sections of the `cfg.ihc_neighbors` most
/// similar reports plus `cfg.canonical_panel`, ordered by how many
/// neighbors used them. The model reorders within the candidates; slots it
/// leaves empty are filled in prior order. `exclude` drops one report id
/// (the case itself) from the neighbors.
pub fn recommend_ihc(
    case_context: &str,
    engine: &Engine,
    llm: &dyn LlmClient,
    k: usize,
    lexicon: &MarkerLexicon,
    cfg: &RagConfig,
    exclude: Option<&str>,
) -> Result<IhcRecommendation> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if case_context.trim().is_empty() {
        return Err(Error::EmptyInput("case context".into()));
    }
    ensure_masked(case_context, lexicon)?;
    cfg.validate()?;

    let m = cfg.ihc_neighbors;
    let neighbors: Vec<&ReportDoc> = if engine.corpus().is_empty() {
        Vec::new()
    } else {
        engine
            .search(&SearchRequest::new(case_context, m + 1))?
            .iter()
            .filter(|h| Some(h.report_id.as_str()) != exclude)
            .take(m)
            .filter_map(|h| engine.corpus().doc(&h.report_id))
            .collect()
    };

    let panels: Vec<(String, Vec<String>)> = neighbors
        .iter()
        .map(|d| {
            let markers = d.section(SectionLabel::Immunohistochemistry).map_or_else(Vec::new, |s| lexicon.find_markers(&s.text));
            (d.report_id.clone(), markers)
        })
        .collect();

    // prior: neighbor frequency, then first appearance
    let mut freq: HashMap<String, (usize, usize)> = HashMap::new();
    let mut order = 0;
    for (_, markers) in &panels {
        for name in markers {
            let e = freq.entry(name.clone()).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            e.0 += 1;
        }
    }
    for name in &cfg.canonical_panel {
        let name = lexicon.canonical_name(name).map_or_else(|| name.trim().to_string(), str::to_string);
        if !name.is_empty() {
            freq.entry(name).or_insert_with(|| {
                order += 1;
                (0, order)
            });
        }
    }
    if freq.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let mut prior: Vec<(String, usize, usize)> = freq.into_iter().map(|(n, (f, o))| (n, f, o)).collect();
    prior.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let note = |f: usize| {
        if f == 0 {
            "canonical panel marker".to_string()
        } else {
            format!("ordered in {f} of {} similar cases", panels.len())
        }
    };
    let candidates: Vec<(String, String)> = prior.iter().map(|(n, f, _)| (n.clone(), note(*f))).collect();
    let vocabulary: BTreeSet<String> = prior.iter().map(|(n, _, _)| n.clone()).collect();

    let est = cfg.estimator();
    let bundle = fit_text(case_context, cfg.prompt_budget(), |t| ihc_prompt(t, &panels, &candidates, k, &est))?;
    let reply = generate(&bundle, llm, &cfg.generation, cfg.context_budget)?;

    let mut markers: Vec<RecommendedMarker> = Vec::new();
    let parsed = first_object(&reply).and_then(|raw| serde_json::from_str::<MarkerReply>(raw).ok());
    for item in parsed.map(|p| p.markers).unwrap_or_default() {
        let name = lexicon.canonical_name(&item.name).map_or_else(|| item.name.trim().to_string(), str::to_string);
        if markers.len() < k && vocabulary.contains(&name) && !markers.iter().any(|m| m.name == name) {
            let rationale = item.rationale.lines().next().unwrap_or("").trim().to_string();
            let rationale = if rationale.is_empty() { note(0) } else { rationale };
            markers.push(RecommendedMarker { name, rationale });
        }
    }
    for (name, f, _) in &prior {
        if markers.len() >= k {
            break;
        }
        if !markers.iter().any(|m| &m.name == name) {
            markers.push(RecommendedMarker { name: name.clone(), rationale: note(*f) });
        }
    }
    Ok(IhcRecommendation {
        markers,
        candidate_vocabulary: vocabulary,
        neighbors: neighbors.iter().map(|d| d.report_id.clone()).collect(),
    })
}

/// Masks the report, then recommends with the report itself excluded from
/// its neighbors.
pub fn recommend_ihc_for_report(
    doc: &ReportDoc,
    engine: &Engine,
    llm: &dyn LlmClient,
    k: usize,
    lexicon: &MarkerLexicon,
    cfg: &RagConfig,
) -> Result<IhcRecommendation> {
    let masked = mask_ihc(doc, lexicon);
    recommend_ihc(&masked.clean_text, engine, llm, k, lexicon, cfg, Some(&doc.report_id))
}
