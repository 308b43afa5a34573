//! Deterministic fixture world for end-to-end tests.
//!
//! Builds a complete offline workspace in a temp directory: recorded
//! arXiv feed pages and citation batches for the replay transport, an
//! exclusion list, affiliation files, and a config with a pinned
//! timestamp. Everything is derived from a fixed seed, so two builds
//! produce byte-identical inputs and the pipeline output can be frozen
//! as a golden file.

// Compiled once per test target; each target uses a different slice.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use citetrend_core::affiliations::{
    region_for_country, AffiliationRecord, PaperAffiliationMap, Sector,
};
use citetrend_core::citations::{batch_request, CitationFetchConfig};
use citetrend_core::ingest::{page_request, QuerySpec, DEFAULT_ARXIV_URL};
use citetrend_core::model::DateWindow;
use citetrend_core::transport::record_response;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WINDOW_START: &str = "2023-01-01";
pub const WINDOW_END: &str = "2023-06-30";
pub const PINNED_TIME: &str = "2023-10-26T00:00:00Z";
pub const PAGE_SIZE: usize = 50;
pub const BATCH_SIZE: usize = 100;
/// Papers in the feed and in the saved corpus.
pub const RAW_PAPERS: usize = 203;
/// Papers left for analysis after the exclusion list.
pub const ANALYSIS_PAPERS: usize = 200;

const SEED: u64 = 0x5EED_C17E;

pub struct FixturePaper {
    pub id: String,
    pub date: NaiveDate,
    pub hour: u32,
    pub title: String,
    pub abstract_text: String,
    pub comment: Option<String>,
    pub authors: Vec<String>,
    pub primary: String,
    pub categories: Vec<String>,
    /// `None` means the citation API does not know the paper.
    pub citations: Option<u64>,
}

pub struct FixtureWorld {
    pub root: tempfile::TempDir,
    pub config: PathBuf,
    pub replay: PathBuf,
    pub papers: Vec<FixturePaper>,
    pub excluded: Vec<String>,
}

const SUBJECTS: &[&str] = &[
    "ChatGPT",
    "GPT-4",
    "LLaMA Models",
    "Large Language Models",
    "Multimodal Transformers",
    "Graph Neural Networks",
    "Diffusion Models",
    "Federated Learning",
    "Offline Reinforcement Learning",
    "Vision Transformers",
    "Speech Recognition Systems",
    "Neural Machine Translation",
    "Convex Optimization Methods",
    "Variational Quantum Circuits",
];

const TEMPLATES: &[&str] = &[
    "{} for Low-Resource Domains",
    "A Survey of {}",
    "Benchmarking {} at Scale",
    "On the Robustness of {}",
    "{} in Clinical Text Processing",
    "Efficient Training of {}",
    "Prompting Strategies for {}",
    "An Empirical Study of {}",
    "Calibrating {} under Distribution Shift",
    "Rethinking Evaluation of {}",
];

const ABSTRACT_DETAILS: &[&str] = &[
    "We report consistent gains across three public benchmarks.",
    "Ablations isolate the contribution of each component.",
    "Our analysis covers both zero-shot and fine-tuned settings.",
    "The approach needs an order of magnitude less labeled data.",
    "We release code and evaluation scripts for reproducibility.",
    "Results hold across five random seeds and two model sizes.",
];

const GIVEN_NAMES: &[&str] = &[
    "Wei", "Ana", "Tomas", "Lena", "Ravi", "Mia", "Jun", "Sara", "Ivan", "Noa", "Kai", "Omar",
    "Elif", "Hugo", "Yuki", "Priya", "Leo", "Nina", "Samir", "Ada",
];

const FAMILY_NAMES: &[&str] = &[
    "Chen", "Garcia", "Novak", "Singh", "Tanaka", "Okafor", "Kim", "Weber", "Rossi", "Haddad",
    "Park", "Nguyen", "Silva", "Ivanov", "Mori", "Patel", "Larsen", "Costa", "Zhou", "Berg",
];

/// Primary categories with selection weights. Entries outside the query
/// set get cross-listed into one queried category below.
const PRIMARIES: &[(&str, u32)] = &[
    ("cs.CL", 30),
    ("cs.LG", 24),
    ("cs.AI", 14),
    ("cs.CV", 14),
    ("stat.ML", 6),
    ("math.OC", 5),
    ("quant-ph", 4),
    ("physics.comp-ph", 3),
];

const QUERY_CATEGORIES: [&str; 4] = ["cs.AI", "cs.CL", "cs.CV", "cs.LG"];

const EXTRA_CATEGORIES: &[&str] = &["cs.IR", "cs.SE", "cs.HC", "cs.RO"];

const COMMENTS: &[&str] = &[
    "Accepted to ACL 2023",
    "Accepted at NeurIPS 2023",
    "Camera-ready for EMNLP 2023",
    "Accepted to ICML 2023",
    "Work in progress",
];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, pool: &[(&'a str, u32)]) -> &'a str {
    let total: u32 = pool.iter().map(|(_, w)| w).sum();
    let mut roll = rng.random_range(0..total);
    for (value, weight) in pool {
        if roll < *weight {
            return value;
        }
        roll -= weight;
    }
    unreachable!("weights sum to total")
}

fn gen_paper(rng: &mut ChaCha8Rng, date: NaiveDate) -> FixturePaper {
    let subject = pick(rng, SUBJECTS);
    let title = pick(rng, TEMPLATES).replace("{}", subject);
    let abstract_text = format!(
        "We study {} with an emphasis on practical deployment. {}",
        subject.to_lowercase(),
        pick(rng, ABSTRACT_DETAILS)
    );

    let author_count = 1 + rng.random_range(0..8);
    let authors = (0..author_count)
        .map(|_| format!("{} {}", pick(rng, GIVEN_NAMES), pick(rng, FAMILY_NAMES)))
        .collect();

    let primary = pick_weighted(rng, PRIMARIES).to_owned();
    let mut categories = vec![primary.clone()];
    if !QUERY_CATEGORIES.contains(&primary.as_str()) {
        categories.push(QUERY_CATEGORIES[rng.random_range(0..4)].to_owned());
    }
    if rng.random_range(0..100) < 25 {
        categories.push(pick(rng, EXTRA_CATEGORIES).to_owned());
    }

    let comment = if rng.random_range(0..100) < 40 {
        let roll = rng.random_range(0..100);
        Some(if roll < 60 {
            pick(rng, COMMENTS).to_owned()
        } else {
            format!(
                "{} pages, {} figures",
                rng.random_range(4..30),
                rng.random_range(1..12)
            )
        })
    } else {
        None
    };

    let citations = if rng.random_range(0..100) < 3 {
        None
    } else {
        let roll = rng.random_range(0..100);
        Some(match roll {
            0..55 => rng.random_range(0..15),
            55..85 => rng.random_range(15..120),
            85..97 => rng.random_range(120..800),
            _ => rng.random_range(800..2600),
        })
    };

    FixturePaper {
        id: String::new(),
        date,
        hour: rng.random_range(0..24),
        title,
        abstract_text,
        comment,
        authors,
        primary,
        categories,
        citations,
    }
}

/// The 203 in-window fixture papers, date-sorted with month-scoped
/// sequential arXiv ids. Pure function of the seed.
pub fn fixture_papers() -> Vec<FixturePaper> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
    let mut papers: Vec<FixturePaper> = (0..RAW_PAPERS)
        .map(|_| {
            let date = start + chrono::Days::new(rng.random_range(0..181));
            gen_paper(&mut rng, date)
        })
        .collect();
    papers.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.title.cmp(&b.title)));

    let mut sequence: BTreeMap<u32, u32> = BTreeMap::new();
    for paper in &mut papers {
        let month = paper.date.month();
        let seq = sequence.entry(month).or_insert(0);
        *seq += 1;
        paper.id = format!("23{:02}.{:05}", month, seq);
    }

    // One paper that would rank near the top; it goes on the exclusion
    // list to show exclusions bite.
    papers[150].citations = Some(2400);
    papers
}

fn excluded_ids(papers: &[FixturePaper]) -> Vec<String> {
    [10usize, 100, 150]
        .iter()
        .map(|&i| papers[i].id.clone())
        .collect()
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn entry_xml(paper: &FixturePaper) -> String {
    let mut xml = String::new();
    let _ = writeln!(xml, "  <entry>");
    let _ = writeln!(xml, "    <id>http://arxiv.org/abs/{}v1</id>", paper.id);
    let _ = writeln!(
        xml,
        "    <published>{}T{:02}:15:00Z</published>",
        paper.date, paper.hour
    );
    let _ = writeln!(xml, "    <title>{}</title>", xml_escape(&paper.title));
    let _ = writeln!(
        xml,
        "    <summary>{}</summary>",
        xml_escape(&paper.abstract_text)
    );
    for author in &paper.authors {
        let _ = writeln!(
            xml,
            "    <author><name>{}</name></author>",
            xml_escape(author)
        );
    }
    if let Some(comment) = &paper.comment {
        let _ = writeln!(
            xml,
            "    <arxiv:comment>{}</arxiv:comment>",
            xml_escape(comment)
        );
    }
    let _ = writeln!(
        xml,
        "    <arxiv:primary_category term=\"{}\"/>",
        paper.primary
    );
    for category in &paper.categories {
        let _ = writeln!(xml, "    <category term=\"{category}\"/>");
    }
    let _ = writeln!(xml, "  </entry>");
    xml
}

fn out_of_window_entry(id: &str, published: &str) -> String {
    format!(
        "  <entry>\n    <id>http://arxiv.org/abs/{id}v1</id>\n    \
         <published>{published}</published>\n    <title>Announced Off Schedule</title>\n    \
         <summary>Outside the submission window.</summary>\n    \
         <author><name>Late Author</name></author>\n    \
         <category term=\"cs.CL\"/>\n  </entry>\n"
    )
}

fn page_xml(total: usize, start: usize, entries: &[String]) -> String {
    let mut xml = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<feed xmlns=\"http://www.w3.org/2005/Atom\" \
         xmlns:opensearch=\"http://a9.com/-/spec/opensearch/1.1/\" \
         xmlns:arxiv=\"http://arxiv.org/schemas/atom\">\n",
    );
    let _ = writeln!(
        xml,
        "  <opensearch:totalResults>{total}</opensearch:totalResults>"
    );
    let _ = writeln!(xml, "  <opensearch:startIndex>{start}</opensearch:startIndex>");
    let _ = writeln!(
        xml,
        "  <opensearch:itemsPerPage>{}</opensearch:itemsPerPage>",
        entries.len()
    );
    for entry in entries {
        xml.push_str(entry);
    }
    xml.push_str("</feed>\n");
    xml
}

fn query_spec() -> QuerySpec {
    QuerySpec {
        categories: QUERY_CATEGORIES.iter().map(|c| (*c).to_owned()).collect(),
        window: DateWindow::new(
            WINDOW_START.parse().unwrap(),
            WINDOW_END.parse().unwrap(),
        )
        .unwrap(),
        page_size: PAGE_SIZE,
        max_retries: 2,
    }
}

/// Records the paged feed: the 203 papers plus two exact duplicates and
/// two entries announced outside the window, 207 feed entries total.
fn record_feed(replay: &Path, papers: &[FixturePaper]) {
    let mut entries = Vec::with_capacity(RAW_PAPERS + 4);
    entries.push(out_of_window_entry("2212.09990", "2022-12-29T10:00:00Z"));
    for (index, paper) in papers.iter().enumerate() {
        entries.push(entry_xml(paper));
        if index == 20 || index == 120 {
            entries.push(entry_xml(paper));
        }
    }
    entries.push(out_of_window_entry("2307.00101", "2023-07-04T10:00:00Z"));

    let total = entries.len();
    let spec = query_spec();
    for (page_index, chunk) in entries.chunks(PAGE_SIZE).enumerate() {
        let start = page_index * PAGE_SIZE;
        let body = page_xml(total, start, chunk);
        let request = page_request(DEFAULT_ARXIV_URL, &spec, start).unwrap();
        record_response(replay, &request, body.as_bytes()).unwrap();
    }
}

/// Records citation batches over the sorted corpus ids, mirroring how
/// the fetcher chunks them.
fn record_citations(replay: &Path, papers: &[FixturePaper]) {
    let by_id: BTreeMap<&str, Option<u64>> = papers
        .iter()
        .map(|p| (p.id.as_str(), p.citations))
        .collect();
    let ids: Vec<String> = by_id.keys().map(|id| (*id).to_owned()).collect();
    let config = CitationFetchConfig {
        batch_size: BATCH_SIZE,
        ..CitationFetchConfig::default()
    };
    for batch in ids.chunks(BATCH_SIZE) {
        let entries: Vec<serde_json::Value> = batch
            .iter()
            .map(|id| match by_id[id.as_str()] {
                Some(count) => serde_json::json!({ "citationCount": count }),
                None => serde_json::Value::Null,
            })
            .collect();
        let body = serde_json::Value::Array(entries).to_string();
        let request = batch_request(batch, &config);
        record_response(replay, &request, body.as_bytes()).unwrap();
    }
}

/// Institution pool: (id, name, sector, country). Regions derive from
/// the country mapping.
const INSTITUTIONS: &[(&str, &str, Sector, &str)] = &[
    ("stanford", "Stanford University", Sector::Academia, "US"),
    ("mit", "MIT", Sector::Academia, "US"),
    ("berkeley", "UC Berkeley", Sector::Academia, "US"),
    ("tsinghua", "Tsinghua University", Sector::Academia, "CN"),
    ("pku", "Peking University", Sector::Academia, "CN"),
    ("eth-zurich", "ETH Zurich", Sector::Academia, "CH"),
    ("tu-berlin", "TU Berlin", Sector::Academia, "DE"),
    ("kaist", "KAIST", Sector::Academia, "KR"),
    ("google", "Google Research", Sector::Industry, "US"),
    ("meta", "Meta AI", Sector::Industry, "US"),
    ("microsoft", "Microsoft Research", Sector::Industry, "US"),
    ("baidu", "Baidu Research", Sector::Industry, "CN"),
    ("deepmind", "Google DeepMind", Sector::Industry, "GB"),
    ("ai2", "Allen Institute for AI", Sector::Other, "US"),
];

fn write_registry(path: &Path) {
    let mut lines = String::new();
    for (id, name, sector, country) in INSTITUTIONS {
        let record = AffiliationRecord {
            institution_id: (*id).to_owned(),
            display_name: (*name).to_owned(),
            sector: *sector,
            country: (*country).to_owned(),
            region: region_for_country(country),
        };
        lines.push_str(&serde_json::to_string(&record).unwrap());
        lines.push('\n');
    }
    fs::write(path, lines).unwrap();
}

/// Affiliation maps for every seventh paper (29 in all, none excluded).
/// One paper carries an `ai2` author to exercise the other-sector path.
fn write_affiliation_maps(path: &Path, papers: &[&FixturePaper]) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xAFF1);
    let weighted: &[(&str, u32)] = &[
        ("google", 14),
        ("microsoft", 12),
        ("stanford", 12),
        ("meta", 10),
        ("mit", 10),
        ("tsinghua", 10),
        ("berkeley", 8),
        ("pku", 5),
        ("eth-zurich", 5),
        ("tu-berlin", 4),
        ("kaist", 4),
        ("baidu", 4),
        ("deepmind", 2),
    ];

    let mut lines = String::new();
    for (pick_index, paper) in papers.iter().step_by(7).enumerate() {
        let mut author_affiliations: Vec<BTreeSet<String>> = paper
            .authors
            .iter()
            .map(|_| {
                let mut set = BTreeSet::new();
                set.insert(pick_weighted(&mut rng, weighted).to_owned());
                if rng.random_range(0..100) < 10 {
                    set.insert(pick_weighted(&mut rng, weighted).to_owned());
                }
                set
            })
            .collect();
        if pick_index == 3 {
            author_affiliations[0] = BTreeSet::from(["ai2".to_owned()]);
        }
        let map = PaperAffiliationMap {
            base_id: paper.id.clone(),
            author_affiliations,
        };
        lines.push_str(&serde_json::to_string(&map).unwrap());
        lines.push('\n');
    }
    fs::write(path, lines).unwrap();
}

fn write_config(path: &Path) {
    let config = format!(
        r#"categories = ["cs.AI", "cs.CL", "cs.CV", "cs.LG"]
window_start = "{WINDOW_START}"
window_end = "{WINDOW_END}"
top_n = 40
std_convention = "population"
split_day = "monday"
report_categories = ["cs.CL", "cs.LG"]
smoothing_window = 8
smoothing_order = 3
page_size = {PAGE_SIZE}
batch_size = {BATCH_SIZE}
max_retries = 2
exclusions = "exclusions.txt"
affiliation_registry = "registry.jsonl"
affiliation_maps = "affiliations.jsonl"
corpus_file = "corpus.jsonl"
cache_dir = "cache"
snapshot_dir = "snapshots"
output_dir = "out"
timestamp = "{PINNED_TIME}"
"#
    );
    fs::write(path, config).unwrap();
}

/// Builds the whole offline workspace. Identical on every call.
pub fn build_fixture_world() -> FixtureWorld {
    let root = tempfile::tempdir().unwrap();
    let replay = root.path().join("replay");
    fs::create_dir_all(&replay).unwrap();

    let papers = fixture_papers();
    record_feed(&replay, &papers);
    record_citations(&replay, &papers);

    let excluded = excluded_ids(&papers);
    let exclusion_lines: String = excluded
        .iter()
        .map(|id| format!("{id} # curated out\n"))
        .collect();
    fs::write(root.path().join("exclusions.txt"), exclusion_lines).unwrap();

    let analysis: Vec<&FixturePaper> = papers
        .iter()
        .filter(|p| !excluded.contains(&p.id))
        .collect();
    assert_eq!(analysis.len(), ANALYSIS_PAPERS);

    write_registry(&root.path().join("registry.jsonl"));
    write_affiliation_maps(&root.path().join("affiliations.jsonl"), &analysis);

    let config = root.path().join("citetrend.toml");
    write_config(&config);

    FixtureWorld {
        root,
        config,
        replay,
        papers,
        excluded,
    }
}
