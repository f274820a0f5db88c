//! Seeded synthetic pathology reports for tests, demos and benchmarks.
//!
//! Reports follow common surgical-pathology layout with optional OCR
//! artifacts (page markers, end-of-line hyphenation). Each report records
//! the facts used to generate it so callers can build oracles.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::MockEncoder;
use crate::error::Result;
use crate::ingest::{ingest_reports, Chunker, Normalizer, RawReport, DEFAULT_MAX_TOKENS, DEFAULT_MIN_TOKENS};
use crate::retrieval::{Corpus, Engine, IndexBuildConfig};

#[derive(Debug, Clone, Copy)]
pub struct Entity {
    pub key: &'static str,
    pub site: &'static str,
    pub procedure: &'static str,
    pub diagnosis: &'static str,
    pub micro: &'static [&'static str],
    pub positive: &'static [&'static str],
    pub negative: &'static [&'static str],
    pub malignant: bool,
}

pub const ENTITIES: [Entity; 12] = [
    Entity {
        key: "lung_adenocarcinoma",
        site: "Lung, right upper lobe",
        procedure: "lobectomy",
        diagnosis: "Invasive adenocarcinoma, acinar predominant",
        micro: &[
            "Sections show malignant glands infiltrating alveolar parenchyma.",
            "Tumor cells have enlarged nuclei with prominent nucleoli.",
            "Lepidic growth is present at the periphery of the tumor.",
            "Visceral pleural invasion is not identified.",
        ],
        positive: &["TTF-1", "Napsin A", "CK7"],
        negative: &["p40", "CK20"],
        malignant: true,
    },
    Entity {
        key: "lung_squamous",
        site: "Lung, left lower lobe",
        procedure: "wedge resection",
        diagnosis: "Squamous cell carcinoma, keratinizing, moderately differentiated",
        micro: &[
            "Nests of atypical squamous cells show keratin pearls.",
            "Intercellular bridges are readily identified.",
            "Tumor necrosis is focally present.",
        ],
        positive: &["p40", "CK5/6", "p63"],
        negative: &["TTF-1", "Napsin A"],
        malignant: true,
    },
    Entity {
        key: "colon_adenocarcinoma",
        site: "Colon, sigmoid",
        procedure: "segmental resection",
        diagnosis: "Invasive adenocarcinoma, moderately differentiated",
        micro: &[
            "Malignant glands with dirty necrosis invade through the muscularis propria.",
            "Tumor budding is low.",
            "Lymphovascular invasion is identified.",
            "The adjacent mucosa shows a residual tubulovillous adenoma.",
        ],
        positive: &["CK20", "CDX2", "SATB2"],
        negative: &["CK7"],
        malignant: true,
    },
    Entity {
        key: "colon_mucinous",
        site: "Colon, cecum",
        procedure: "right hemicolectomy",
        diagnosis: "Mucinous adenocarcinoma",
        micro: &[
            "Pools of extracellular mucin contain floating strips of malignant epithelium.",
            "More than half of the tumor volume is composed of mucin.",
            "The tumor extends into pericolonic adipose tissue.",
        ],
        positive: &["CK20", "CDX2"],
        negative: &["CK7"],
        malignant: true,
    },
    Entity {
        key: "breast_ductal",
        site: "Breast, left",
        procedure: "lumpectomy",
        diagnosis: "Invasive ductal carcinoma, Nottingham grade 2",
        micro: &[
            "Infiltrating nests and cords of tumor cells are set in a desmoplastic stroma.",
            "Tubule formation is present in less than ten percent of the tumor.",
            "Ductal carcinoma in situ of intermediate nuclear grade is present.",
            "Microcalcifications are associated with the in situ component.",
        ],
        positive: &["ER", "PR", "GATA3"],
        negative: &["HER2"],
        malignant: true,
    },
    Entity {
        key: "prostate_adenocarcinoma",
        site: "Prostate",
        procedure: "radical prostatectomy",
        diagnosis: "Prostatic adenocarcinoma, Gleason score 3+4=7",
        micro: &[
            "Small crowded glands lacking basal cells infiltrate between benign glands.",
            "Perineural invasion is present.",
            "Extraprostatic extension is not identified.",
        ],
        positive: &["NKX3.1", "AMACR", "PSA"],
        negative: &["p63"],
        malignant: true,
    },
    Entity {
        key: "melanoma",
        site: "Skin, upper back",
        procedure: "excision",
        diagnosis: "Invasive melanoma, superficial spreading type",
        micro: &[
            "Atypical melanocytes show pagetoid spread within the epidermis.",
            "Dermal mitoses are identified.",
            "Ulceration is absent.",
        ],
        positive: &["SOX10", "Melan-A", "S100"],
        negative: &["AE1/AE3"],
        malignant: true,
    },
    Entity {
        key: "hepatocellular",
        site: "Liver, segment 6",
        procedure: "partial hepatectomy",
        diagnosis: "Hepatocellular carcinoma, moderately differentiated",
        micro: &[
            "Thickened trabeculae of atypical hepatocytes are lined by sinusoidal endothelium.",
            "Pseudoglandular structures contain bile.",
            "The background liver shows established cirrhosis.",
        ],
        positive: &["HepPar-1", "Arginase-1", "Glypican-3"],
        negative: &["CK7"],
        malignant: true,
    },
    Entity {
        key: "renal_clear_cell",
        site: "Kidney, left",
        procedure: "radical nephrectomy",
        diagnosis: "Clear cell renal cell carcinoma, grade 2",
        micro: &[
            "Nests of tumor cells with clear cytoplasm are separated by a delicate vascular network.",
            "Nucleoli are visible at high magnification.",
            "Renal sinus fat invasion is not identified.",
        ],
        positive: &["PAX8", "CD10"],
        negative: &["CK7"],
        malignant: true,
    },
    Entity {
        key: "lymphoma",
        site: "Lymph node, left cervical",
        procedure: "excisional biopsy",
        diagnosis: "Diffuse large B-cell lymphoma",
        micro: &[
            "The nodal architecture is effaced by sheets of large atypical lymphoid cells.",
            "Numerous apoptotic bodies and mitoses are present.",
            "A residual rim of small lymphocytes is seen.",
        ],
        positive: &["CD20", "CD45", "Ki-67"],
        negative: &["CD3"],
        malignant: true,
    },
    Entity {
        key: "tubular_adenoma",
        site: "Colon, transverse",
        procedure: "polypectomy",
        diagnosis: "Tubular adenoma with low-grade dysplasia",
        micro: &[
            "Crowded tubular glands show elongated hyperchromatic nuclei.",
            "High-grade dysplasia is not identified.",
        ],
        positive: &[],
        negative: &[],
        malignant: false,
    },
    Entity {
        key: "seborrheic_keratosis",
        site: "Skin, left cheek",
        procedure: "shave biopsy",
        diagnosis: "Seborrheic keratosis, irritated type",
        micro: &[
            "The epidermis shows acanthosis with horn pseudocysts.",
            "Squamous eddies are present.",
        ],
        positive: &[],
        negative: &[],
        malignant: false,
    },
];

const FILLER: [&str; 8] = [
    "The specimen was processed routinely and entirely submitted for histologic examination.",
    "Representative sections were reviewed at multiple levels.",
    "The findings were discussed with the submitting clinician.",
    "Special stains were reviewed with appropriate controls.",
    "The tissue is well fixed and adequately oriented.",
    "Background tissue shows no additional significant abnormality.",
    "Correlation with imaging findings is recommended.",
    "A second pathologist reviewed the case and concurs.",
];

#[derive(Debug, Clone)]
pub struct SynthReport {
    pub raw: RawReport,
    pub entity: Entity,
    /// Markers named in the IHC section (positive then negative).
    pub ihc_panel: Vec<String>,
    pub size_cm: f64,
    pub nodes_positive: usize,
    pub nodes_examined: usize,
}

impl SynthReport {
    /// Short natural-language query aimed at this report's entity.
    pub fn query(&self) -> String {
        format!("{} {}", self.entity.site.to_lowercase(), self.entity.diagnosis.to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub page_markers: bool,
    pub hyphenation: bool,
    /// Probability of adding a very long run-on sentence.
    pub long_sentence_rate: f64,
    pub max_filler: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { page_markers: true, hyphenation: true, long_sentence_rate: 0.02, max_filler: 8 }
    }
}

fn hyphenate(line: &str, rng: &mut ChaCha8Rng) -> String {
    // break one long lowercase word across lines
    let words: Vec<&str> = line.split(' ').collect();
    let Some(pos) = words.iter().position(|w| w.len() >= 9 && w.chars().all(|c| c.is_ascii_lowercase())) else {
        return line.to_string();
    };
    let cut = rng.random_range(3..words[pos].len() - 3);
    let (a, b) = words[pos].split_at(cut);
    let mut out = words[..pos].join(" ");
    if !out.is_empty() {
        out.push(' ');
    }
    out.push_str(&format!("{a}-\n{b}"));
    for w in &words[pos + 1..] {
        out.push(' ');
        out.push_str(w);
    }
    out
}

pub fn generate_report(id: &str, rng: &mut ChaCha8Rng, opts: &SynthOptions) -> SynthReport {
    let entity = *ENTITIES.choose(rng).expect("entities");
    let size_cm = f64::from(rng.random_range(3..95u32)) / 10.0;
    let nodes_examined = rng.random_range(0..25usize);
    let nodes_positive = if entity.malignant && nodes_examined > 0 { rng.random_range(0..=nodes_examined.min(6)) } else { 0 };
    let margin = if rng.random_bool(0.8) { "negative" } else { "positive" };

    let mut lines = vec![format!("CASE {id}"), "FINAL DIAGNOSIS:".to_string()];
    lines.push(format!("{}, {}:", entity.site, entity.procedure));
    lines.push(format!("{}.", entity.diagnosis));
    if entity.malignant {
        lines.push(format!("Tumor size is {size_cm:.1} cm. Surgical margins are {margin} for tumor."));
        if nodes_examined > 0 {
            lines.push(format!("Metastatic carcinoma in {nodes_positive} of {nodes_examined} lymph nodes."));
        }
        let t = if size_cm < 2.0 { 1 } else if size_cm < 5.0 { 2 } else { 3 };
        let n = match nodes_positive { 0 => 0, 1..=3 => 1, _ => 2 };
        lines.push(format!("Pathologic stage pT{t} N{n}."));
    }
    lines.push(String::new());
    lines.push("GROSS DESCRIPTION:".into());
    lines.push(format!(
        "Received in formalin labeled with the patient name is {} {} specimen measuring {:.1} x {:.1} x {:.1} cm.",
        if entity.procedure.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" },
        entity.procedure,
        size_cm + 2.0,
        size_cm + 1.0,
        size_cm
    ));
    lines.push(String::new());
    lines.push("MICROSCOPIC DESCRIPTION:".into());
    let mut micro: Vec<&str> = entity.micro.to_vec();
    micro.truncate(rng.random_range(1..=micro.len()));
    for _ in 0..rng.random_range(0..=opts.max_filler) {
        micro.push(FILLER.choose(rng).expect("filler"));
    }
    let mut micro: Vec<String> = micro.into_iter().map(str::to_string).collect();
    if rng.random_bool(opts.long_sentence_rate) {
        let clause = "with scattered inflammatory cells and reactive stromal change";
        micro.push(format!("The lesion is composed of cells {}.", vec![clause; 40].join(" and ")));
    }
    let micro_text = micro.join(" ");
    lines.push(if opts.hyphenation { hyphenate(&micro_text, rng) } else { micro_text });

    let mut ihc_panel = Vec::new();
    if !entity.positive.is_empty() && rng.random_bool(0.85) {
        lines.push(String::new());
        lines.push("IMMUNOHISTOCHEMISTRY:".into());
        let pos: Vec<String> = entity.positive.iter().map(|s| s.to_string()).collect();
        let neg: Vec<String> = entity.negative.iter().map(|s| s.to_string()).collect();
        let mut s = format!("The tumor cells are positive for {}.", pos.join(", "));
        if !neg.is_empty() {
            s.push_str(&format!(" They are negative for {}.", neg.join(", ")));
        }
        lines.push(s);
        ihc_panel.extend(pos);
        ihc_panel.extend(neg);
    }
    lines.push(String::new());
    lines.push("COMMENT:".into());
    lines.push(
        if entity.malignant {
            "The findings support the diagnosis above. Clinical follow-up is recommended."
        } else {
            "No malignancy is identified. Routine follow-up is appropriate."
        }
        .into(),
    );
    if opts.page_markers && lines.len() > 8 {
        let at = rng.random_range(4..lines.len() - 2);
        if !lines[at].is_empty() && !lines[at - 1].is_empty() {
            lines.insert(at, "=== PAGE 2 ===".into());
        }
    }
    SynthReport {
        raw: RawReport { report_id: id.to_string(), raw_text: lines.join("\n"), source_path: format!("synthetic/{id}.txt"), wsi_id: None },
        entity,
        ihc_panel,
        size_cm,
        nodes_positive,
        nodes_examined,
    }
}

/// `n` reports with ids `S00000`, `S00001`, ...
pub fn generate_reports(n: usize, seed: u64, opts: &SynthOptions) -> Vec<SynthReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| generate_report(&format!("S{i:05}"), &mut rng, opts)).collect()
}

/// Normalized, parsed and chunked corpus of `n` synthetic reports.
pub fn synth_corpus(n: usize, seed: u64) -> Result<(Corpus, Vec<SynthReport>)> {
    let reports = generate_reports(n, seed, &SynthOptions::default());
    let normalizer = Normalizer::default();
    let chunker = Chunker::new(DEFAULT_MIN_TOKENS, DEFAULT_MAX_TOKENS)?;
    let raws: Vec<RawReport> = reports.iter().map(|r| r.raw.clone()).collect();
    let (docs, chunks) = ingest_reports(&raws, &normalizer, &chunker, None)?;
    Ok((Corpus::new(docs, chunks)?, reports))
}

/// In-memory engine over a synthetic corpus with the mock encoder.
pub fn synth_engine(n: usize, seed: u64, dim: usize) -> Result<(Engine, Vec<SynthReport>)> {
    let (corpus, reports) = synth_corpus(n, seed)?;
    let engine = Engine::build(corpus, Arc::new(MockEncoder::new(dim, seed)), IndexBuildConfig::default())?;
    Ok((engine, reports))
}
