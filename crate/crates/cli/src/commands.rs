//! Subcommand implementations.
//!
//! Each subcommand reads its inputs, runs the relevant analyses and
//! writes its artifacts into the configured directories; nothing outside
//! the cache, snapshot and output directories (plus the corpus file) is
//! touched.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::Utc;
use citetrend_core::affiliations::{
    self, AffiliationData, AffiliationRegistry, PaperAffiliationMap,
};
use citetrend_core::citations::{self, CitationFetchConfig};
use citetrend_core::correlation;
use citetrend_core::ingest::{self, QuerySpec};
use citetrend_core::model::{apply_exclusions, Corpus, SnapshotSet};
use citetrend_core::report::{
    self, CorpusSummary, CorrelationSection, InstitutionsSection, RankingSection, ReportInputs,
    SnapshotSummary, TrendsSection, WeeklySection,
};
use citetrend_core::stats;
use citetrend_core::store;
use citetrend_core::transport::{HttpTransport, ReplayTransport, Transport};
use citetrend_core::trends::{self, TopicRule};
use citetrend_core::zscore::{self, SplitSpec};
use citetrend_core::{Error, Result};

use crate::cli::{Cli, Command, Overrides};
use crate::config::RunConfig;

/// Environment variable holding the citation API key. The key never
/// appears in config files or flags.
pub const API_KEY_VAR: &str = "CITETREND_API_KEY";

/// arXiv asks clients to wait three seconds between requests.
const ARXIV_PACING: Duration = Duration::from_secs(3);
const CITATION_PACING: Duration = Duration::from_secs(1);

pub fn run(args: &Cli) -> Result<()> {
    let config = RunConfig::load(&args.config, &args.overrides)?;
    match args.command {
        Command::Fetch => fetch(&config, &args.overrides),
        Command::Citations => fetch_citations(&config, &args.overrides),
        Command::Rank => rank(&config, &args.overrides),
        Command::Correlate => correlate(&config, &args.overrides),
        Command::Trends => trend_series(&config),
        Command::Institutions => institutions(&config),
        Command::Report => report(&config, &args.overrides),
    }
}

fn make_transport(
    config: &RunConfig,
    replay_dir: Option<&Path>,
    pacing: Duration,
    api_key: Option<String>,
) -> Result<Box<dyn Transport>> {
    match replay_dir {
        Some(dir) => Ok(Box::new(ReplayTransport::new(dir))),
        None => {
            let transport = HttpTransport::new(&config.cache_dir, pacing, config.max_retries)?
                .with_api_key(api_key);
            Ok(Box::new(transport))
        }
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Loads the corpus file and drops excluded papers when an exclusion
/// list is configured.
fn load_analysis_corpus(config: &RunConfig) -> Result<Corpus> {
    let corpus = store::load_corpus(&config.corpus_file)?;
    match &config.exclusions {
        Some(path) => {
            let excluded = store::load_exclusions(path)?;
            let (kept, dropped) = apply_exclusions(&corpus, &excluded);
            if !dropped.is_empty() {
                log::info!("excluded {} papers: {}", dropped.len(), dropped.join(", "));
            }
            Ok(kept)
        }
        None => Ok(corpus),
    }
}

/// Picks the snapshot to analyse: the `--snapshot-file` override, or the
/// newest file in the snapshot directory (file names embed the UTC
/// retrieval time, so lexicographic order is age order). `Ok(None)`
/// means no snapshot exists yet.
fn resolve_snapshot(
    config: &RunConfig,
    overrides: &Overrides,
) -> Result<Option<(SnapshotSet, PathBuf)>> {
    if let Some(path) = &overrides.snapshot_file {
        return store::load_snapshots(path).map(|set| Some((set, path.clone())));
    }
    let dir = &config.snapshot_dir;
    if !dir.is_dir() {
        return Ok(None);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut newest: Option<PathBuf> = None;
    for entry in entries {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?
            .path();
        if path.extension().is_some_and(|ext| ext == "jsonl")
            && newest.as_ref().is_none_or(|best| path > *best)
        {
            newest = Some(path);
        }
    }
    match newest {
        Some(path) => store::load_snapshots(&path).map(|set| Some((set, path))),
        None => Ok(None),
    }
}

fn require_snapshot(config: &RunConfig, overrides: &Overrides) -> Result<(SnapshotSet, PathBuf)> {
    resolve_snapshot(config, overrides)?.ok_or_else(|| {
        Error::Validation(format!(
            "no citation snapshot in {}; run `citetrend citations` first",
            config.snapshot_dir.display()
        ))
    })
}

fn topic_rules(config: &RunConfig) -> Result<Vec<TopicRule>> {
    match &config.topic_rules {
        Some(path) => trends::load_topic_rules(path),
        None => Ok(trends::builtin_topics()),
    }
}

fn fetch(config: &RunConfig, overrides: &Overrides) -> Result<()> {
    let spec = QuerySpec {
        categories: config.categories.clone(),
        window: config.window,
        page_size: config.page_size,
        max_retries: config.max_retries,
    };
    let transport = make_transport(config, overrides.replay_dir.as_deref(), ARXIV_PACING, None)?;
    let corpus = ingest::fetch_corpus(
        &spec,
        transport.as_ref(),
        ingest::DEFAULT_ARXIV_URL,
        config.effective_time(),
    )?;
    ensure_parent(&config.corpus_file)?;
    store::save_corpus(&corpus, &config.corpus_file)?;
    println!(
        "fetched {} papers ({} to {}) into {}",
        corpus.len(),
        corpus.window.start,
        corpus.window.end,
        config.corpus_file.display()
    );
    Ok(())
}

fn fetch_citations(config: &RunConfig, overrides: &Overrides) -> Result<()> {
    let corpus = store::load_corpus(&config.corpus_file)?;
    let ids: Vec<String> = corpus.ids().map(str::to_owned).collect();
    let transport = make_transport(
        config,
        overrides.replay_dir.as_deref(),
        CITATION_PACING,
        std::env::var(API_KEY_VAR).ok(),
    )?;
    let fetch_config = CitationFetchConfig {
        batch_size: config.batch_size,
        ..CitationFetchConfig::default()
    };
    ensure_dir(&config.snapshot_dir)?;
    let (set, path) = citations::fetch_citations(
        &ids,
        transport.as_ref(),
        &fetch_config,
        &config.snapshot_dir,
        config.effective_time(),
    )?;
    println!(
        "snapshot of {} papers ({} not found upstream) into {}",
        set.len(),
        set.not_found_ids().len(),
        path.display()
    );
    Ok(())
}

/// Reads the previous ranking (when given) into the (rank, id) pairs
/// that movement deltas are computed against.
fn previous_ranking(overrides: &Overrides) -> Result<Option<Vec<(usize, String)>>> {
    match &overrides.previous {
        Some(path) => {
            let rows = report::read_ranking_csv(path)?;
            Ok(Some(
                rows.into_iter().map(|(rank, id, _)| (rank, id)).collect(),
            ))
        }
        None => Ok(None),
    }
}

fn rank(config: &RunConfig, overrides: &Overrides) -> Result<()> {
    let corpus = load_analysis_corpus(config)?;
    let (snapshots, _) = require_snapshot(config, overrides)?;
    snapshots.check_covers(&corpus)?;
    let entries = zscore::rank_top_n(
        &corpus,
        &snapshots,
        config.top_n,
        config.std_convention,
        config.split_day,
    )?;
    let deltas = previous_ranking(overrides)?
        .map(|previous| zscore::rank_deltas(&entries, &previous));
    ensure_dir(&config.output_dir)?;
    let path = config.output_dir.join("topN.csv");
    report::write_ranking_csv(&entries, deltas.as_ref(), &path)?;
    println!("wrote top-{} ranking to {}", entries.len(), path.display());
    Ok(())
}

/// Stable scores and single-grid scores for the same corpus, as maps.
fn score_maps(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    config: &RunConfig,
) -> Result<(BTreeMap<String, f64>, BTreeMap<String, f64>)> {
    let stable: BTreeMap<String, f64> =
        zscore::stable_zscores(corpus, snapshots, config.std_convention)?
            .into_iter()
            .map(|r| (r.base_id, r.stable_z))
            .collect();
    let split = SplitSpec::new(config.split_day, corpus.window.start);
    let single = zscore::zscores_for_split(corpus, snapshots, split, config.std_convention)?;
    Ok((stable, single))
}

fn correlation_section(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    config: &RunConfig,
) -> Result<CorrelationSection> {
    let (stable, single) = score_maps(corpus, snapshots, config)?;
    let grid = correlation::default_grid(corpus.len());
    let points = correlation::prefix_sweep(&stable, &single, &grid)?;

    let n = config.top_n.min(corpus.len());
    let top_overlap = if n >= 1 {
        let stable_top =
            zscore::rank_top_n(corpus, snapshots, n, config.std_convention, config.split_day)?;
        let single_top = zscore::rank_by_split(
            corpus,
            snapshots,
            n,
            config.std_convention,
            config.split_day,
        )?;
        let ids = |list: &[zscore::RankedEntry]| -> Vec<String> {
            list.iter().map(|e| e.base_id.clone()).collect()
        };
        Some((
            correlation::overlap_count(&ids(&stable_top), &ids(&single_top)),
            n,
        ))
    } else {
        None
    };

    Ok(CorrelationSection {
        points,
        reference_label: format!("stable z-score ({} std)", config.std_convention),
        other_label: format!("single {:?}-week z-score", config.split_day),
        top_overlap,
    })
}

fn correlate(config: &RunConfig, overrides: &Overrides) -> Result<()> {
    let corpus = load_analysis_corpus(config)?;
    let (snapshots, _) = require_snapshot(config, overrides)?;
    snapshots.check_covers(&corpus)?;
    let section = correlation_section(&corpus, &snapshots, config)?;
    ensure_dir(&config.output_dir)?;
    let path = config.output_dir.join("correlations.csv");
    report::write_correlations_csv(Some(&section), &path)?;
    println!(
        "wrote {} correlation points to {}",
        section.points.len(),
        path.display()
    );
    if let Some((shared, size)) = section.top_overlap {
        println!("top-{size} lists share {shared} papers");
    }
    Ok(())
}

fn trend_sections(corpus: &Corpus, config: &RunConfig) -> Result<Vec<(String, trends::TrendSeries)>> {
    let rules = topic_rules(config)?;
    let split = SplitSpec::new(config.split_day, corpus.window.start);
    let mut series = Vec::with_capacity(rules.len());
    for rule in &rules {
        let raw = trends::weekly_topic_share(corpus, rule, split)?;
        let smoothed =
            trends::smooth_series(&raw, config.smoothing_window, config.smoothing_order)?;
        series.push((rule.name.clone(), smoothed));
    }
    Ok(series)
}

fn trend_series(config: &RunConfig) -> Result<()> {
    let corpus = load_analysis_corpus(config)?;
    let series = trend_sections(&corpus, config)?;
    let section = TrendsSection {
        series,
        list_shares: None,
    };
    ensure_dir(&config.output_dir)?;
    let path = config.output_dir.join("trends.csv");
    report::write_trends_csv(Some(&section), &path)?;
    println!(
        "wrote {} topic series to {}",
        section.series.len(),
        path.display()
    );
    Ok(())
}

/// Loads registry and maps when both are configured. Configuring only
/// one of the two is an error rather than a silent no-op.
fn load_affiliation_inputs(
    config: &RunConfig,
) -> Result<Option<(AffiliationRegistry, AffiliationData)>> {
    match (&config.affiliation_registry, &config.affiliation_maps) {
        (Some(registry), Some(maps)) => Ok(Some((
            affiliations::load_registry(registry)?,
            affiliations::load_affiliation_maps(maps)?,
        ))),
        (None, None) => Ok(None),
        _ => Err(Error::Validation(
            "affiliation_registry and affiliation_maps must be configured together".to_owned(),
        )),
    }
}

fn institutions_section(
    registry: &AffiliationRegistry,
    data: &AffiliationData,
) -> Result<InstitutionsSection> {
    let maps: Vec<&PaperAffiliationMap> = data.maps().collect();
    if maps.is_empty() {
        return Err(Error::Validation(
            "affiliation map file lists no papers".to_owned(),
        ));
    }
    let collaboration = affiliations::collaboration_breakdown(&maps, registry)?;
    let author_stats = affiliations::author_count_stats(&maps, registry)?;

    let mut fractional_per_paper = BTreeMap::new();
    let mut proportional_per_paper = BTreeMap::new();
    for map in &maps {
        fractional_per_paper.insert(map.base_id.clone(), affiliations::fractional_scores(map)?);
        proportional_per_paper.insert(map.base_id.clone(), affiliations::proportional_counts(map)?);
    }
    let fractional = affiliations::sector_region_percentages(&fractional_per_paper, registry)?;
    let proportional = affiliations::sector_region_percentages(&proportional_per_paper, registry)?;

    Ok(InstitutionsSection {
        collaboration,
        author_stats,
        fractional,
        proportional,
    })
}

fn institutions(config: &RunConfig) -> Result<()> {
    let (registry, data) = load_affiliation_inputs(config)?.ok_or_else(|| {
        Error::Validation(
            "institutions needs affiliation_registry and affiliation_maps in the config".to_owned(),
        )
    })?;
    let section = institutions_section(&registry, &data)?;
    ensure_dir(&config.output_dir)?;
    let path = config.output_dir.join("institutions.csv");
    report::write_institutions_csv(Some(&section), &path)?;
    println!(
        "wrote institution tables over {} papers to {}",
        data.len(),
        path.display()
    );
    Ok(())
}

fn report(config: &RunConfig, overrides: &Overrides) -> Result<()> {
    let corpus = load_analysis_corpus(config)?;
    let mut inputs = ReportInputs::empty(config.timestamp.unwrap_or_else(Utc::now));
    inputs.corpus = Some(CorpusSummary {
        papers: corpus.len(),
        window: corpus.window,
        categories: corpus.query_categories.iter().cloned().collect(),
        retrieval_time: corpus.retrieval_time,
    });
    inputs.distribution = Some(stats::category_distribution(&corpus)?);

    let snapshot = resolve_snapshot(config, overrides)?;
    if snapshot.is_none() {
        log::warn!(
            "no citation snapshot in {}; the ranking, weekly, and correlation sections will be empty",
            config.snapshot_dir.display()
        );
    }
    let mut ranked_ids: Option<Vec<String>> = None;
    if let Some((snapshots, _)) = &snapshot {
        snapshots.check_covers(&corpus)?;
        inputs.snapshot = Some(SnapshotSummary {
            source: snapshots.source.to_string(),
            retrieved_at: snapshots.retrieved_at,
            not_found: snapshots.not_found_ids(),
        });

        let entries = zscore::rank_top_n(
            &corpus,
            snapshots,
            config.top_n,
            config.std_convention,
            config.split_day,
        )?;
        ranked_ids = Some(entries.iter().map(|e| e.base_id.clone()).collect());
        let deltas = previous_ranking(overrides)?
            .map(|previous| zscore::rank_deltas(&entries, &previous));
        inputs.ranking = Some(RankingSection {
            entries,
            deltas,
            score_label: format!("stable z-score ({} std)", config.std_convention),
        });

        let split = SplitSpec::new(config.split_day, corpus.window.start);
        inputs.weekly = Some(WeeklySection {
            rows: stats::weekly_mean_std(&corpus, snapshots, split, &config.report_categories)?,
            categories: config.report_categories.clone(),
        });

        inputs.correlations = Some(correlation_section(&corpus, snapshots, config)?);
    }

    let series = trend_sections(&corpus, config)?;
    let list_shares = match &ranked_ids {
        Some(ids) => Some(trends::topic_share_of_list(ids, &corpus, &topic_rules(config)?)?),
        None => None,
    };
    inputs.trends = Some(TrendsSection {
        series,
        list_shares,
    });

    if let Some((registry, data)) = load_affiliation_inputs(config)? {
        inputs.institutions = Some(institutions_section(&registry, &data)?);
    }

    let files = report::emit_report(&inputs, &config.output_dir)?;
    println!(
        "wrote report bundle ({} files) to {}",
        files.len(),
        config.output_dir.display()
    );
    Ok(())
}
