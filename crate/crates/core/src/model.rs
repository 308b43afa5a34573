//! In-memory corpus and citation-snapshot model.
//!
//! A [`Corpus`] is the set of papers matching one query window, keyed by
//! base arXiv id. Citation counts live apart from the corpus in
//! [`SnapshotSet`]s so that the same paper set can be re-counted at later
//! dates and the resulting rankings compared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::arxiv_id::normalize_arxiv_id;
use crate::error::{Error, Result};
use crate::timefmt;

/// One author as listed on the paper, with the ids of the institutions the
/// author reports. Affiliation ids refer to an
/// [`AffiliationRegistry`](crate::affiliations::AffiliationRegistry) and may
/// be empty when affiliations are unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affiliation_ids: Vec<String>,
}

impl AuthorRef {
    pub fn new(name: impl Into<String>) -> Self {
        AuthorRef {
            name: name.into(),
            affiliation_ids: Vec::new(),
        }
    }
}

/// One paper. `first_submitted` is the v1 submission time; revisions never
/// move a paper between weeks. `categories` keeps feed order, holds no
/// duplicates and always contains `primary_category`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub base_id: String,
    pub title: String,
    pub abstract_text: String,
    pub primary_category: String,
    pub categories: Vec<String>,
    #[serde(with = "timefmt")]
    pub first_submitted: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub authors: Vec<AuthorRef>,
}

impl PaperRecord {
    /// Checks the structural invariants that persistence and ingestion rely
    /// on. Loaders call this on every record before accepting it.
    pub fn validate(&self) -> Result<()> {
        let normalized = normalize_arxiv_id(&self.base_id)?;
        if normalized != self.base_id {
            return Err(Error::Validation(format!(
                "paper id {:?} carries a version suffix; base id is {normalized:?}",
                self.base_id
            )));
        }
        if self.title.trim().is_empty() {
            return Err(Error::Validation(format!("paper {}: empty title", self.base_id)));
        }
        if self.primary_category.is_empty() {
            return Err(Error::Validation(format!(
                "paper {}: empty primary category",
                self.base_id
            )));
        }
        if !self.categories.contains(&self.primary_category) {
            return Err(Error::Validation(format!(
                "paper {}: primary category {:?} missing from category list",
                self.base_id, self.primary_category
            )));
        }
        let mut seen = BTreeSet::new();
        for cat in &self.categories {
            if !seen.insert(cat) {
                return Err(Error::Validation(format!(
                    "paper {}: duplicate category {cat:?}",
                    self.base_id
                )));
            }
        }
        for author in &self.authors {
            let mut seen = BTreeSet::new();
            for id in &author.affiliation_ids {
                if !seen.insert(id) {
                    return Err(Error::Validation(format!(
                        "paper {}: author {:?} lists affiliation {id:?} twice",
                        self.base_id, author.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Closed date range, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::Validation(format!(
                "window start {start} is after end {end}"
            )));
        }
        Ok(DateWindow { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Paper set for one query. Insertion enforces the membership invariants,
/// so every corpus in the system is consistent by construction: ids are
/// unique base ids, submission dates lie inside the window, and every
/// record matches at least one queried category.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: BTreeMap<String, PaperRecord>,
    pub window: DateWindow,
    pub query_categories: BTreeSet<String>,
    pub retrieval_time: DateTime<Utc>,
}

impl Corpus {
    pub fn new(
        window: DateWindow,
        query_categories: BTreeSet<String>,
        retrieval_time: DateTime<Utc>,
    ) -> Result<Self> {
        if query_categories.is_empty() {
            return Err(Error::Validation("query category set is empty".to_owned()));
        }
        Ok(Corpus {
            records: BTreeMap::new(),
            window,
            query_categories,
            retrieval_time,
        })
    }

    /// Adds a record. Returns `Ok(true)` when stored, `Ok(false)` when a
    /// record with the same base id is already present (first record wins).
    pub fn insert(&mut self, record: PaperRecord) -> Result<bool> {
        record.validate()?;
        let date = record.first_submitted.date_naive();
        if !self.window.contains(date) {
            return Err(Error::Validation(format!(
                "paper {}: submitted {date}, outside window {}..{}",
                record.base_id, self.window.start, self.window.end
            )));
        }
        if !record
            .categories
            .iter()
            .any(|c| self.query_categories.contains(c))
        {
            return Err(Error::Validation(format!(
                "paper {}: no category in common with the query set",
                record.base_id
            )));
        }
        if self.records.contains_key(&record.base_id) {
            return Ok(false);
        }
        self.records.insert(record.base_id.clone(), record);
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, base_id: &str) -> bool {
        self.records.contains_key(base_id)
    }

    pub fn get(&self, base_id: &str) -> Option<&PaperRecord> {
        self.records.get(base_id)
    }

    /// Records in ascending base-id order.
    pub fn records(&self) -> impl Iterator<Item = &PaperRecord> {
        self.records.values()
    }

    /// Base ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }
}

/// Returns a corpus without the excluded ids, plus the excluded ids that
/// were not present (callers usually warn about those). Corpus metadata is
/// carried over unchanged.
pub fn apply_exclusions(corpus: &Corpus, excluded: &BTreeSet<String>) -> (Corpus, Vec<String>) {
    let mut out = Corpus {
        records: BTreeMap::new(),
        window: corpus.window,
        query_categories: corpus.query_categories.clone(),
        retrieval_time: corpus.retrieval_time,
    };
    for record in corpus.records() {
        if !excluded.contains(&record.base_id) {
            out.records.insert(record.base_id.clone(), record.clone());
        }
    }
    let missing = excluded
        .iter()
        .filter(|id| !corpus.contains(id))
        .cloned()
        .collect();
    (out, missing)
}

/// Where a citation count came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CitationSource {
    SemanticScholar,
    GoogleScholar,
    Other(String),
}

impl fmt::Display for CitationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CitationSource::SemanticScholar => f.write_str("semantic-scholar"),
            CitationSource::GoogleScholar => f.write_str("google-scholar"),
            CitationSource::Other(label) => f.write_str(label),
        }
    }
}

impl FromStr for CitationSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(Error::Validation("empty citation source label".to_owned()));
        }
        Ok(match trimmed {
            "semantic-scholar" => CitationSource::SemanticScholar,
            "google-scholar" => CitationSource::GoogleScholar,
            other => CitationSource::Other(other.to_owned()),
        })
    }
}

impl Serialize for CitationSource {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CitationSource {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Citation count for one paper at one retrieval time. `not_found` marks
/// papers the citation service did not know; their count is zero so they
/// still participate in ranking, and reports flag them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationSnapshot {
    pub base_id: String,
    pub count: u64,
    pub source: CitationSource,
    #[serde(with = "timefmt")]
    pub retrieved_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_found: bool,
}

/// Citation counts for a paper set, all taken from the same source in the
/// same run.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    snapshots: BTreeMap<String, CitationSnapshot>,
    pub source: CitationSource,
    pub retrieved_at: DateTime<Utc>,
}

impl SnapshotSet {
    pub fn new(source: CitationSource, retrieved_at: DateTime<Utc>) -> Self {
        SnapshotSet {
            snapshots: BTreeMap::new(),
            source,
            retrieved_at,
        }
    }

    /// Adds a snapshot; the source must match the set's source. A repeated
    /// base id replaces the earlier entry.
    pub fn insert(&mut self, snapshot: CitationSnapshot) -> Result<()> {
        if snapshot.source != self.source {
            return Err(Error::Validation(format!(
                "snapshot for {} labeled {}, set labeled {}",
                snapshot.base_id, snapshot.source, self.source
            )));
        }
        normalize_arxiv_id(&snapshot.base_id).and_then(|normalized| {
            if normalized == snapshot.base_id {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "snapshot id {:?} carries a version suffix",
                    snapshot.base_id
                )))
            }
        })?;
        self.snapshots.insert(snapshot.base_id.clone(), snapshot);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn get(&self, base_id: &str) -> Option<&CitationSnapshot> {
        self.snapshots.get(base_id)
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &CitationSnapshot> {
        self.snapshots.values()
    }

    /// Counts keyed by base id, for the analysis stages.
    pub fn counts(&self) -> BTreeMap<String, u64> {
        self.snapshots
            .iter()
            .map(|(id, snap)| (id.clone(), snap.count))
            .collect()
    }

    /// Ids flagged as unknown to the citation source.
    pub fn not_found_ids(&self) -> Vec<String> {
        self.snapshots
            .values()
            .filter(|s| s.not_found)
            .map(|s| s.base_id.clone())
            .collect()
    }

    /// Confirms that every corpus paper has a snapshot and that no count
    /// predates its paper's submission. Returns the sorted list of corpus
    /// ids missing from the set as part of the error message when any are.
    pub fn check_covers(&self, corpus: &Corpus) -> Result<()> {
        let missing: Vec<&str> = corpus
            .ids()
            .filter(|id| !self.snapshots.contains_key(*id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Integrity(format!(
                "snapshot set is missing {} corpus papers: {}",
                missing.len(),
                missing.join(", ")
            )));
        }
        for record in corpus.records() {
            if let Some(snap) = self.snapshots.get(&record.base_id) {
                if snap.retrieved_at < record.first_submitted {
                    return Err(Error::Integrity(format!(
                        "paper {}: citation count retrieved {} before submission {}",
                        record.base_id,
                        snap.retrieved_at.format(timefmt::FORMAT),
                        record.first_submitted.format(timefmt::FORMAT)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    pub(crate) fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.from_utc_datetime(&date(y, m, d).and_hms_opt(12, 0, 0).unwrap())
    }

    fn sample_record(id: &str, day: u32) -> PaperRecord {
        PaperRecord {
            base_id: id.to_owned(),
            title: format!("Paper {id}"),
            abstract_text: "An abstract.".to_owned(),
            primary_category: "cs.CL".to_owned(),
            categories: vec!["cs.CL".to_owned(), "cs.LG".to_owned()],
            first_submitted: ts(2023, 1, day),
            comment: None,
            authors: vec![AuthorRef::new("A. Author")],
        }
    }

    fn sample_corpus() -> Corpus {
        Corpus::new(
            DateWindow::new(date(2023, 1, 1), date(2023, 9, 30)).unwrap(),
            ["cs.CL".to_owned(), "cs.LG".to_owned()].into(),
            ts(2023, 10, 26),
        )
        .unwrap()
    }

    #[test]
    fn insert_dedupes_first_wins() {
        let mut corpus = sample_corpus();
        let first = sample_record("2301.00001", 2);
        let mut second = sample_record("2301.00001", 3);
        second.title = "Different title".to_owned();
        assert!(corpus.insert(first.clone()).unwrap());
        assert!(!corpus.insert(second).unwrap());
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.get("2301.00001").unwrap().title, first.title);
    }

    #[test]
    fn insert_rejects_out_of_window() {
        let mut corpus = sample_corpus();
        let mut record = sample_record("2301.00001", 2);
        record.first_submitted = ts(2022, 12, 31);
        let err = corpus.insert(record).unwrap_err();
        assert_eq!(err.kind(), crate::error::ErrorKind::Validation);
    }

    #[test]
    fn insert_rejects_disjoint_categories() {
        let mut corpus = sample_corpus();
        let mut record = sample_record("2301.00001", 2);
        record.primary_category = "math.OC".to_owned();
        record.categories = vec!["math.OC".to_owned()];
        assert!(corpus.insert(record).is_err());
    }

    #[test]
    fn validate_rejects_versioned_id() {
        let mut record = sample_record("2301.00001", 2);
        record.base_id = "2301.00001v2".to_owned();
        assert!(record.validate().is_err());
    }

    #[test]
    fn validate_rejects_primary_not_listed() {
        let mut record = sample_record("2301.00001", 2);
        record.categories = vec!["cs.LG".to_owned()];
        assert!(record.validate().is_err());
    }

    #[test]
    fn exclusions_drop_records_and_report_unknown() {
        let mut corpus = sample_corpus();
        corpus.insert(sample_record("2301.00001", 2)).unwrap();
        corpus.insert(sample_record("2301.00002", 3)).unwrap();
        let excluded: BTreeSet<String> =
            ["2301.00002".to_owned(), "2399.99999".to_owned()].into();
        let (kept, missing) = apply_exclusions(&corpus, &excluded);
        assert_eq!(kept.len(), 1);
        assert!(kept.contains("2301.00001"));
        assert_eq!(missing, vec!["2399.99999".to_owned()]);
        assert_eq!(kept.window, corpus.window);
    }

    #[test]
    fn snapshot_set_enforces_source() {
        let mut set = SnapshotSet::new(CitationSource::SemanticScholar, ts(2023, 10, 26));
        let snap = CitationSnapshot {
            base_id: "2301.00001".to_owned(),
            count: 5,
            source: CitationSource::GoogleScholar,
            retrieved_at: ts(2023, 10, 26),
            not_found: false,
        };
        assert!(set.insert(snap).is_err());
    }

    #[test]
    fn check_covers_lists_missing_ids() {
        let mut corpus = sample_corpus();
        corpus.insert(sample_record("2301.00001", 2)).unwrap();
        corpus.insert(sample_record("2301.00002", 3)).unwrap();
        let mut set = SnapshotSet::new(CitationSource::SemanticScholar, ts(2023, 10, 26));
        set.insert(CitationSnapshot {
            base_id: "2301.00001".to_owned(),
            count: 5,
            source: CitationSource::SemanticScholar,
            retrieved_at: ts(2023, 10, 26),
            not_found: false,
        })
        .unwrap();
        let err = set.check_covers(&corpus).unwrap_err();
        assert!(err.to_string().contains("2301.00002"));
    }

    #[test]
    fn check_covers_rejects_counts_before_submission() {
        let mut corpus = sample_corpus();
        corpus.insert(sample_record("2301.00001", 2)).unwrap();
        let mut set = SnapshotSet::new(CitationSource::SemanticScholar, ts(2022, 6, 1));
        set.insert(CitationSnapshot {
            base_id: "2301.00001".to_owned(),
            count: 5,
            source: CitationSource::SemanticScholar,
            retrieved_at: ts(2022, 6, 1),
            not_found: false,
        })
        .unwrap();
        assert!(set.check_covers(&corpus).is_err());
    }

    #[test]
    fn source_labels_round_trip() {
        for label in ["semantic-scholar", "google-scholar", "openalex"] {
            let source: CitationSource = label.parse().unwrap();
            assert_eq!(source.to_string(), label);
        }
    }
}
