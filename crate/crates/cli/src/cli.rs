//! Command-line surface.

use std::path::PathBuf;
use std::sync::LazyLock;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use citetrend_core::store::{CORPUS_SCHEMA, SNAPSHOT_SCHEMA};

use crate::config::RawConfig;

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (file schemas: {CORPUS_SCHEMA}, {SNAPSHOT_SCHEMA})",
        env!("CARGO_PKG_VERSION")
    )
});

#[derive(Debug, Parser)]
#[command(
    name = "citetrend",
    version = VERSION.as_str(),
    about = "Citation-trend pipeline over arXiv metadata and citation snapshots",
    propagate_version = true
)]
pub struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "citetrend.toml")]
    pub config: PathBuf,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Flag overrides for every config field. Relative paths given here are
/// taken relative to the working directory.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Query categories, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    /// First submission date included, YYYY-MM-DD.
    #[arg(long, global = true)]
    pub window_start: Option<NaiveDate>,
    /// Last submission date included, YYYY-MM-DD.
    #[arg(long, global = true)]
    pub window_end: Option<NaiveDate>,
    /// Ranking length.
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    /// Standard deviation divisor: population or sample.
    #[arg(long, global = true)]
    pub std_convention: Option<String>,
    /// Week grid used for labels and single-grid scores, monday..sunday.
    #[arg(long, global = true)]
    pub split_day: Option<String>,
    /// Primary categories broken out in the weekly table, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub report_categories: Option<Vec<String>>,
    /// Smoothing window length in weeks.
    #[arg(long, global = true)]
    pub smoothing_window: Option<usize>,
    /// Smoothing polynomial order.
    #[arg(long, global = true)]
    pub smoothing_order: Option<usize>,
    /// Feed entries requested per page.
    #[arg(long, global = true)]
    pub page_size: Option<usize>,
    /// Ids per citation batch request.
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Network retries before giving up.
    #[arg(long, global = true)]
    pub max_retries: Option<u32>,
    /// JSON file with topic rules (defaults to the built-in topics).
    #[arg(long, global = true)]
    pub topic_rules: Option<PathBuf>,
    /// Institution registry, line-delimited JSON.
    #[arg(long, global = true)]
    pub affiliation_registry: Option<PathBuf>,
    /// Per-paper author-affiliation maps, line-delimited JSON.
    #[arg(long, global = true)]
    pub affiliation_maps: Option<PathBuf>,
    /// Paper ids to drop before analysis, one per line.
    #[arg(long, global = true)]
    pub exclusions: Option<PathBuf>,
    /// Corpus file read and written by the pipeline.
    #[arg(long, global = true)]
    pub corpus_file: Option<PathBuf>,
    /// Raw API response cache.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Where citation snapshots are stored.
    #[arg(long, global = true)]
    pub snapshot_dir: Option<PathBuf>,
    /// Where reports and CSVs are written.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Pinned timestamp (e.g. 2023-10-26T00:00:00Z) for reproducible runs.
    #[arg(long, global = true)]
    pub timestamp: Option<String>,
    /// Serve all API requests from this directory instead of the network.
    #[arg(long, global = true)]
    pub replay_dir: Option<PathBuf>,
    /// Use this snapshot file instead of the newest one.
    #[arg(long, global = true)]
    pub snapshot_file: Option<PathBuf>,
    /// Previous ranking CSV; adds a movement column to the new ranking.
    #[arg(long, global = true)]
    pub previous: Option<PathBuf>,
}

impl Overrides {
    /// Applies every set flag onto the parsed config file.
    pub fn apply(&self, raw: &mut RawConfig) {
        if let Some(v) = &self.categories {
            raw.categories = v.clone();
        }
        if let Some(v) = self.window_start {
            raw.window_start = v;
        }
        if let Some(v) = self.window_end {
            raw.window_end = v;
        }
        if let Some(v) = self.top_n {
            raw.top_n = v;
        }
        if let Some(v) = &self.std_convention {
            raw.std_convention = v.clone();
        }
        if let Some(v) = &self.split_day {
            raw.split_day = v.clone();
        }
        if let Some(v) = &self.report_categories {
            raw.report_categories = v.clone();
        }
        if let Some(v) = self.smoothing_window {
            raw.smoothing_window = v;
        }
        if let Some(v) = self.smoothing_order {
            raw.smoothing_order = v;
        }
        if let Some(v) = self.page_size {
            raw.page_size = v;
        }
        if let Some(v) = self.batch_size {
            raw.batch_size = v;
        }
        if let Some(v) = self.max_retries {
            raw.max_retries = v;
        }
        if let Some(v) = &self.topic_rules {
            raw.topic_rules = Some(v.clone());
        }
        if let Some(v) = &self.affiliation_registry {
            raw.affiliation_registry = Some(v.clone());
        }
        if let Some(v) = &self.affiliation_maps {
            raw.affiliation_maps = Some(v.clone());
        }
        if let Some(v) = &self.exclusions {
            raw.exclusions = Some(v.clone());
        }
        if let Some(v) = &self.corpus_file {
            raw.corpus_file = v.clone();
        }
        if let Some(v) = &self.cache_dir {
            raw.cache_dir = v.clone();
        }
        if let Some(v) = &self.snapshot_dir {
            raw.snapshot_dir = v.clone();
        }
        if let Some(v) = &self.output_dir {
            raw.output_dir = v.clone();
        }
        if let Some(v) = &self.timestamp {
            raw.timestamp = Some(v.clone());
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download the paper corpus from the arXiv API into the corpus file.
    Fetch,
    /// Fetch citation counts for every corpus paper into a dated snapshot.
    Citations,
    /// Rank papers by stable z-score and write the top-N CSV.
    Rank,
    /// Correlate the single-grid ranking against the stable one.
    Correlate,
    /// Weekly topic shares, raw and smoothed.
    Trends,
    /// Institutional contributions: collaboration classes and
    /// sector/region shares.
    Institutions,
    /// Run every analysis and write the full report bundle.
    Report,
}
