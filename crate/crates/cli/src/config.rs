//! Run configuration: a TOML file plus total flag overrides.
//!
//! Every field of [`RunConfig`] can come from the config file or be
//! overridden by a command-line flag; relative paths in the file are
//! resolved against the file's directory, while paths given as flags
//! resolve against the working directory as usual.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc, Weekday};
use citetrend_core::model::DateWindow;
use citetrend_core::timefmt;
use citetrend_core::zscore::StdConvention;
use citetrend_core::{Error, Result};
use serde::Deserialize;

use crate::cli::Overrides;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub categories: Vec<String>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_std_convention")]
    pub std_convention: String,
    #[serde(default = "default_split_day")]
    pub split_day: String,
    /// Primary categories broken out as columns in the weekly table.
    #[serde(default = "default_report_categories")]
    pub report_categories: Vec<String>,
    #[serde(default = "default_smoothing_window")]
    pub smoothing_window: usize,
    #[serde(default = "default_smoothing_order")]
    pub smoothing_order: usize,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    pub topic_rules: Option<PathBuf>,
    pub affiliation_registry: Option<PathBuf>,
    pub affiliation_maps: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    #[serde(default = "default_corpus_file")]
    pub corpus_file: PathBuf,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_snapshot_dir")]
    pub snapshot_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Pinned report/retrieval timestamp, e.g. "2023-10-26T00:00:00Z".
    /// Unset means the current time.
    pub timestamp: Option<String>,
}

fn default_top_n() -> usize {
    40
}
fn default_std_convention() -> String {
    "population".to_owned()
}
fn default_split_day() -> String {
    "monday".to_owned()
}
fn default_report_categories() -> Vec<String> {
    vec!["cs.CL".to_owned(), "cs.LG".to_owned()]
}
fn default_smoothing_window() -> usize {
    8
}
fn default_smoothing_order() -> usize {
    3
}
fn default_page_size() -> usize {
    100
}
fn default_batch_size() -> usize {
    100
}
fn default_max_retries() -> u32 {
    5
}
fn default_corpus_file() -> PathBuf {
    PathBuf::from("corpus.jsonl")
}
fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}
fn default_snapshot_dir() -> PathBuf {
    PathBuf::from("snapshots")
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Validated, override-merged configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub categories: BTreeSet<String>,
    pub window: DateWindow,
    pub top_n: usize,
    pub std_convention: StdConvention,
    pub split_day: Weekday,
    pub report_categories: Vec<String>,
    pub smoothing_window: usize,
    pub smoothing_order: usize,
    pub page_size: usize,
    pub batch_size: usize,
    pub max_retries: u32,
    pub topic_rules: Option<PathBuf>,
    pub affiliation_registry: Option<PathBuf>,
    pub affiliation_maps: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub corpus_file: PathBuf,
    pub cache_dir: PathBuf,
    pub snapshot_dir: PathBuf,
    pub output_dir: PathBuf,
    pub timestamp: Option<DateTime<Utc>>,
}

impl RunConfig {
    pub fn load(config_path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(config_path).map_err(|e| {
            Error::Validation(format!("cannot read config {}: {e}", config_path.display()))
        })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| {
            Error::Validation(format!("config {}: {e}", config_path.display()))
        })?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        Self::from_raw(raw, base, overrides)
    }

    fn from_raw(mut raw: RawConfig, base: &Path, overrides: &Overrides) -> Result<Self> {
        overrides.apply(&mut raw);

        let window = DateWindow::new(raw.window_start, raw.window_end)?;
        if raw.categories.is_empty() {
            return Err(Error::Validation("config lists no categories".to_owned()));
        }
        if raw.top_n == 0 {
            return Err(Error::Validation("top_n must be at least 1".to_owned()));
        }
        if raw.page_size == 0 || raw.batch_size == 0 {
            return Err(Error::Validation(
                "page_size and batch_size must be at least 1".to_owned(),
            ));
        }
        if raw.smoothing_window < 2 || raw.smoothing_order >= raw.smoothing_window {
            return Err(Error::Validation(format!(
                "smoothing window {} with order {} is not usable",
                raw.smoothing_window, raw.smoothing_order
            )));
        }

        let std_convention = StdConvention::from_str(&raw.std_convention)?;
        let split_day = parse_weekday(&raw.split_day)?;
        let timestamp = match &raw.timestamp {
            Some(text) => Some(timefmt::parse(text).map_err(Error::Validation)?),
            None => None,
        };

        let resolve = |p: PathBuf| -> PathBuf {
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let cache_dir = resolve(raw.cache_dir);
        let snapshot_dir = resolve(raw.snapshot_dir);
        let output_dir = resolve(raw.output_dir);
        for (a, name_a, b, name_b) in [
            (&cache_dir, "cache_dir", &snapshot_dir, "snapshot_dir"),
            (&cache_dir, "cache_dir", &output_dir, "output_dir"),
            (&snapshot_dir, "snapshot_dir", &output_dir, "output_dir"),
        ] {
            if a == b {
                return Err(Error::Validation(format!(
                    "{name_a} and {name_b} must be distinct directories, both are {}",
                    a.display()
                )));
            }
        }

        Ok(RunConfig {
            categories: raw.categories.into_iter().collect(),
            window,
            top_n: raw.top_n,
            std_convention,
            split_day,
            report_categories: raw.report_categories,
            smoothing_window: raw.smoothing_window,
            smoothing_order: raw.smoothing_order,
            page_size: raw.page_size,
            batch_size: raw.batch_size,
            max_retries: raw.max_retries,
            topic_rules: raw.topic_rules.map(&resolve),
            affiliation_registry: raw.affiliation_registry.map(&resolve),
            affiliation_maps: raw.affiliation_maps.map(&resolve),
            exclusions: raw.exclusions.map(&resolve),
            corpus_file: resolve(raw.corpus_file),
            cache_dir,
            snapshot_dir,
            output_dir,
            timestamp,
        })
    }

    /// The pinned timestamp, or the current time.
    pub fn effective_time(&self) -> DateTime<Utc> {
        self.timestamp.unwrap_or_else(Utc::now)
    }
}

pub fn parse_weekday(s: &str) -> Result<Weekday> {
    Weekday::from_str(s).map_err(|_| {
        Error::Validation(format!(
            "unknown weekday {s:?}, expected monday..sunday"
        ))
    })
}
