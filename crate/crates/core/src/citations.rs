//! Citation-count retrieval and cross-source discrepancy.
//!
//! Counts come from a batch REST endpoint: ids are POSTed in chunks and
//! the response array is aligned with the request order, with `null` for
//! papers the source does not know. Unknown papers stay in the snapshot
//! with count 0 and a flag, so downstream weekly statistics keep their
//! denominators honest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::arxiv_id::normalize_arxiv_id;
use crate::error::{Error, Result};
use crate::model::{CitationSnapshot, CitationSource, SnapshotSet};
use crate::store::save_snapshots;
use crate::transport::{ApiRequest, Transport};

/// Semantic Scholar batch endpoint, asking only for citation counts.
pub const DEFAULT_CITATION_URL: &str =
    "https://api.semanticscholar.org/graph/v1/paper/batch?fields=citationCount";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationFetchConfig {
    pub source: CitationSource,
    pub batch_size: usize,
    pub api_url: String,
}

impl Default for CitationFetchConfig {
    fn default() -> Self {
        CitationFetchConfig {
            source: CitationSource::SemanticScholar,
            batch_size: 100,
            api_url: DEFAULT_CITATION_URL.to_owned(),
        }
    }
}

impl CitationFetchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=500).contains(&self.batch_size) {
            return Err(Error::Validation(format!(
                "batch size {} outside 1..=500",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Request for one id batch. Shared with the replay fixture generator so
/// both sides hash identical requests.
pub fn batch_request(ids: &[String], config: &CitationFetchConfig) -> ApiRequest {
    let prefixed: Vec<String> = ids.iter().map(|id| format!("arXiv:{id}")).collect();
    let body = serde_json::json!({ "ids": prefixed }).to_string();
    ApiRequest::post(config.api_url.clone(), body)
}

#[derive(Deserialize)]
struct BatchEntry {
    #[serde(rename = "citationCount")]
    citation_count: Option<u64>,
}

fn parse_batch(bytes: &[u8], expected: usize) -> Result<Vec<Option<u64>>> {
    let entries: Vec<Option<BatchEntry>> = serde_json::from_slice(bytes)
        .map_err(|e| Error::Integrity(format!("bad citation batch response: {e}")))?;
    if entries.len() != expected {
        return Err(Error::Integrity(format!(
            "citation batch answered {} entries for {expected} ids",
            entries.len()
        )));
    }
    Ok(entries
        .into_iter()
        .map(|entry| entry.and_then(|e| e.citation_count))
        .collect())
}

/// File a snapshot set is persisted to: source label plus timestamp.
pub fn snapshot_path(dir: &Path, source: &CitationSource, retrieved_at: DateTime<Utc>) -> PathBuf {
    dir.join(format!(
        "{source}-{}.jsonl",
        retrieved_at.format("%Y%m%dT%H%M%SZ")
    ))
}

/// Fetches citation counts for the given ids and persists the snapshot
/// before returning it (along with the file it was written to).
///
/// Ids are normalized, deduplicated and processed in sorted order, in
/// batches of `config.batch_size`. Every requested id appears in the
/// result; papers unknown upstream get count 0 and the not-found flag.
/// If a batch fails after the transport's retries, the snapshots
/// gathered so far are still persisted and the error lists the ids left
/// uncounted.
pub fn fetch_citations(
    ids: &[String],
    transport: &dyn Transport,
    config: &CitationFetchConfig,
    snapshot_dir: &Path,
    retrieved_at: DateTime<Utc>,
) -> Result<(SnapshotSet, PathBuf)> {
    config.validate()?;
    if ids.is_empty() {
        return Err(Error::Validation(
            "citation fetch needs at least one id".to_owned(),
        ));
    }
    let unique: BTreeSet<String> = ids
        .iter()
        .map(|id| normalize_arxiv_id(id))
        .collect::<Result<_>>()?;
    let ordered: Vec<String> = unique.into_iter().collect();

    let mut set = SnapshotSet::new(config.source.clone(), retrieved_at);
    let path = snapshot_path(snapshot_dir, &config.source, retrieved_at);
    for batch in ordered.chunks(config.batch_size) {
        let request = batch_request(batch, config);
        let counts = match transport.fetch(&request).and_then(|bytes| {
            parse_batch(&bytes, batch.len())
        }) {
            Ok(counts) => counts,
            Err(e) => {
                let missing: Vec<&str> = ordered
                    .iter()
                    .filter(|id| set.get(id).is_none())
                    .map(String::as_str)
                    .collect();
                save_snapshots(&set, &path)?;
                return Err(Error::Network(format!(
                    "{e}; partial snapshot of {} papers saved to {}; {} ids uncounted: {}",
                    set.len(),
                    path.display(),
                    missing.len(),
                    missing.join(", ")
                )));
            }
        };
        for (id, count) in batch.iter().zip(counts) {
            set.insert(CitationSnapshot {
                base_id: id.clone(),
                count: count.unwrap_or(0),
                source: config.source.clone(),
                retrieved_at,
                not_found: count.is_none(),
            })?;
        }
    }
    save_snapshots(&set, &path)?;
    Ok((set, path))
}

/// Relative difference of two counts against the first, `|r - o| / r`.
/// The reference count must be positive.
pub fn relative_discrepancy(reference: u64, other: u64) -> Result<f64> {
    if reference == 0 {
        return Err(Error::Validation(
            "relative discrepancy undefined for a zero reference count".to_owned(),
        ));
    }
    Ok((reference.abs_diff(other)) as f64 / reference as f64)
}
