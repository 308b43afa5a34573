//! Institution-level contribution metrics.
//!
//! Affiliation data is curated by hand and arrives in two files: a
//! registry describing institutions (sector, country, region) and a
//! per-paper map assigning each author a set of institution ids. Two
//! credit metrics are computed from the map: fractional scores weight by
//! authorship (each author is one unit, split across their affiliations),
//! proportional counts weight by institution uniqueness (each distinct
//! institution gets 1/k). Both sum to one per paper.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arxiv_id::normalize_arxiv_id;
use crate::error::{Error, Result};
use crate::zscore::{mean, std_dev, StdConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Academia,
    Industry,
    /// Anything outside the academia/industry dichotomy, e.g. government
    /// labs or independent authors. Excluded from two-sector tables and
    /// flagged in their output.
    Other,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::Academia => f.write_str("academia"),
            Sector::Industry => f.write_str("industry"),
            Sector::Other => f.write_str("other"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "US")]
    Us,
    #[serde(rename = "CN")]
    Cn,
    Europe,
    Rest,
}

pub const REGIONS: [Region; 4] = [Region::Us, Region::Cn, Region::Europe, Region::Rest];

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Us => f.write_str("US"),
            Region::Cn => f.write_str("CN"),
            Region::Europe => f.write_str("Europe"),
            Region::Rest => f.write_str("Rest"),
        }
    }
}

/// Region a country code belongs to, per the shipped mapping table.
/// Unlisted countries fall in `Rest`.
pub fn region_for_country(country: &str) -> Region {
    static TABLE: &str = include_str!("../data/country_regions.tsv");
    for line in TABLE.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        if parts.next() == Some(country) {
            return match parts.next() {
                Some("US") => Region::Us,
                Some("CN") => Region::Cn,
                Some("Europe") => Region::Europe,
                _ => Region::Rest,
            };
        }
    }
    Region::Rest
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffiliationRecord {
    pub institution_id: String,
    pub display_name: String,
    pub sector: Sector,
    /// ISO 3166-1 alpha-2 code.
    pub country: String,
    pub region: Region,
}

impl AffiliationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.institution_id.trim().is_empty() {
            return Err(Error::Validation("institution with empty id".to_owned()));
        }
        if self.country.len() != 2 || !self.country.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(Error::Validation(format!(
                "institution {}: country {:?} is not a two-letter uppercase code",
                self.institution_id, self.country
            )));
        }
        let expected = region_for_country(&self.country);
        if self.region != expected {
            return Err(Error::Validation(format!(
                "institution {}: region {} does not match country {} (mapping says {})",
                self.institution_id, self.region, self.country, expected
            )));
        }
        Ok(())
    }
}

/// Institutions by id, loaded from a line-delimited JSON file.
#[derive(Debug, Clone, Default)]
pub struct AffiliationRegistry {
    records: BTreeMap<String, AffiliationRecord>,
}

impl AffiliationRegistry {
    pub fn insert(&mut self, record: AffiliationRecord) -> Result<()> {
        record.validate()?;
        if self.records.contains_key(&record.institution_id) {
            return Err(Error::Integrity(format!(
                "duplicate institution id {}",
                record.institution_id
            )));
        }
        self.records.insert(record.institution_id.clone(), record);
        Ok(())
    }

    pub fn get(&self, institution_id: &str) -> Option<&AffiliationRecord> {
        self.records.get(institution_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Looks up every id, failing with the full sorted list of unknown
    /// ids rather than the first.
    fn resolve<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        ids: I,
    ) -> Result<Vec<&AffiliationRecord>> {
        let mut found = Vec::new();
        let mut unknown = BTreeSet::new();
        for id in ids {
            match self.records.get(id) {
                Some(record) => found.push(record),
                None => {
                    unknown.insert(id);
                }
            }
        }
        if !unknown.is_empty() {
            let listed: Vec<&str> = unknown.into_iter().collect();
            return Err(Error::Integrity(format!(
                "institution ids missing from the registry: {}",
                listed.join(", ")
            )));
        }
        Ok(found)
    }
}

pub fn load_registry(path: &Path) -> Result<AffiliationRegistry> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut registry = AffiliationRegistry::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AffiliationRecord = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        registry
            .insert(record)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
    }
    Ok(registry)
}

/// Which institutions each author of one paper belongs to. One entry per
/// author, in author order; every entry is a non-empty set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperAffiliationMap {
    pub base_id: String,
    pub author_affiliations: Vec<BTreeSet<String>>,
}

impl PaperAffiliationMap {
    pub fn validate(&self) -> Result<()> {
        normalize_arxiv_id(&self.base_id)?;
        if self.author_affiliations.is_empty() {
            return Err(Error::Validation(format!(
                "paper {}: affiliation map lists no authors",
                self.base_id
            )));
        }
        for (idx, set) in self.author_affiliations.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Validation(format!(
                    "paper {}: author {} has no affiliation (curation gap)",
                    self.base_id,
                    idx + 1
                )));
            }
        }
        Ok(())
    }

    pub fn author_count(&self) -> usize {
        self.author_affiliations.len()
    }

    /// Distinct institutions across all authors.
    pub fn institutions(&self) -> BTreeSet<&str> {
        self.author_affiliations
            .iter()
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

/// Affiliation maps by paper id.
#[derive(Debug, Clone, Default)]
pub struct AffiliationData {
    maps: BTreeMap<String, PaperAffiliationMap>,
}

impl AffiliationData {
    pub fn insert(&mut self, map: PaperAffiliationMap) -> Result<()> {
        map.validate()?;
        if self.maps.contains_key(&map.base_id) {
            return Err(Error::Integrity(format!(
                "duplicate affiliation map for {}",
                map.base_id
            )));
        }
        self.maps.insert(map.base_id.clone(), map);
        Ok(())
    }

    pub fn get(&self, base_id: &str) -> Option<&PaperAffiliationMap> {
        self.maps.get(base_id)
    }

    /// All maps, in ascending base-id order.
    pub fn maps(&self) -> impl Iterator<Item = &PaperAffiliationMap> {
        self.maps.values()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Maps for the given papers, failing with the sorted list of papers
    /// that lack one.
    pub fn for_papers<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        ids: I,
    ) -> Result<Vec<&PaperAffiliationMap>> {
        let mut found = Vec::new();
        let mut missing = BTreeSet::new();
        for id in ids {
            match self.maps.get(id) {
                Some(map) => found.push(map),
                None => {
                    missing.insert(id);
                }
            }
        }
        if !missing.is_empty() {
            let listed: Vec<&str> = missing.into_iter().collect();
            return Err(Error::Integrity(format!(
                "papers without affiliation annotations: {}",
                listed.join(", ")
            )));
        }
        Ok(found)
    }
}

pub fn load_affiliation_maps(path: &Path) -> Result<AffiliationData> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut data = AffiliationData::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut map: PaperAffiliationMap = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        map.base_id = normalize_arxiv_id(&map.base_id)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        data.insert(map)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
    }
    Ok(data)
}

/// Authorship-weighted credit: each author contributes 1/(author count),
/// split equally across that author's affiliations. Sums to 1.
///
/// Author shares are accumulated as multiples of 1/k (k = that author's
/// affiliation count) and divided by the author count once at the end,
/// so single-affiliation papers come out as exactly 1.0 regardless of
/// author count.
pub fn fractional_scores(map: &PaperAffiliationMap) -> Result<BTreeMap<String, f64>> {
    map.validate()?;
    let authors = map.author_count() as f64;
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for affiliations in &map.author_affiliations {
        let share = 1.0 / affiliations.len() as f64;
        for id in affiliations {
            *scores.entry(id.clone()).or_insert(0.0) += share;
        }
    }
    for score in scores.values_mut() {
        *score /= authors;
    }
    Ok(scores)
}

/// Uniqueness-weighted credit: every distinct institution on the paper
/// receives 1/(distinct institutions). Sums to 1.
pub fn proportional_counts(map: &PaperAffiliationMap) -> Result<BTreeMap<String, f64>> {
    map.validate()?;
    let institutions = map.institutions();
    let share = 1.0 / institutions.len() as f64;
    Ok(institutions
        .into_iter()
        .map(|id| (id.to_owned(), share))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Sector,
    Region,
    Country,
    Institution,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sector" => Ok(GroupBy::Sector),
            "region" => Ok(GroupBy::Region),
            "country" => Ok(GroupBy::Country),
            "institution" => Ok(GroupBy::Institution),
            other => Err(Error::Validation(format!(
                "unknown grouping {other:?}, expected sector, region, country or institution"
            ))),
        }
    }
}

/// One aggregated row: total credit, papers touching the group, and the
/// group's share of the grand total.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub group: String,
    pub score: f64,
    pub papers: usize,
    pub percent: f64,
}

/// Sums per-paper institution credits into groups. Rows come back sorted
/// by descending score, ties by group name. Grouping by institution uses
/// the id as the key; display names never affect numbers.
pub fn aggregate(
    per_paper: &BTreeMap<String, BTreeMap<String, f64>>,
    registry: &AffiliationRegistry,
    group_by: GroupBy,
) -> Result<Vec<GroupRow>> {
    registry.resolve(
        per_paper
            .values()
            .flat_map(|credits| credits.keys())
            .map(String::as_str),
    )?;
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut papers: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (paper, credits) in per_paper {
        for (institution_id, score) in credits {
            let record = registry.get(institution_id).expect("resolved above");
            let key = match group_by {
                GroupBy::Sector => record.sector.to_string(),
                GroupBy::Region => record.region.to_string(),
                GroupBy::Country => record.country.clone(),
                GroupBy::Institution => record.institution_id.clone(),
            };
            *scores.entry(key.clone()).or_insert(0.0) += score;
            papers.entry(key).or_default().insert(paper);
        }
    }
    let total: f64 = scores.values().sum();
    if total <= 0.0 {
        return Err(Error::Validation(
            "nothing to aggregate: total credit is zero".to_owned(),
        ));
    }
    let mut rows: Vec<GroupRow> = scores
        .into_iter()
        .map(|(group, score)| GroupRow {
            papers: papers[&group].len(),
            percent: 100.0 * score / total,
            group,
            score,
        })
        .collect();
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.group.cmp(&b.group)));
    Ok(rows)
}

/// Collaboration classes, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CollabClass {
    IndustryIndependent,
    AcademiaIndependent,
    IndustryWithAcademia,
    AcademiaWithAcademia,
    IndustryWithIndustry,
}

pub const COLLAB_CLASSES: [CollabClass; 5] = [
    CollabClass::IndustryIndependent,
    CollabClass::AcademiaIndependent,
    CollabClass::IndustryWithAcademia,
    CollabClass::AcademiaWithAcademia,
    CollabClass::IndustryWithIndustry,
];

impl fmt::Display for CollabClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl CollabClass {
    pub fn label(&self) -> &'static str {
        match self {
            CollabClass::IndustryIndependent => "industry-independent",
            CollabClass::AcademiaIndependent => "academia-independent",
            CollabClass::IndustryWithAcademia => "industry-with-academia",
            CollabClass::AcademiaWithAcademia => "academia-with-academia",
            CollabClass::IndustryWithIndustry => "industry-with-industry",
        }
    }
}

/// Collaboration class counts over a paper set. Papers touching an
/// `other`-sector institution cannot be classified on the two-sector
/// axis; they are excluded and listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollaborationBreakdown {
    pub counts: BTreeMap<CollabClass, usize>,
    pub excluded: Vec<String>,
}

fn classify(map: &PaperAffiliationMap, registry: &AffiliationRegistry) -> Result<Option<CollabClass>> {
    let institutions = map.institutions();
    let records = registry.resolve(institutions.iter().copied())?;
    let sectors: BTreeSet<Sector> = records.iter().map(|r| r.sector).collect();
    if sectors.contains(&Sector::Other) {
        return Ok(None);
    }
    let class = if institutions.len() == 1 {
        if sectors.contains(&Sector::Industry) {
            CollabClass::IndustryIndependent
        } else {
            CollabClass::AcademiaIndependent
        }
    } else if sectors.len() == 2 {
        CollabClass::IndustryWithAcademia
    } else if sectors.contains(&Sector::Industry) {
        CollabClass::IndustryWithIndustry
    } else {
        CollabClass::AcademiaWithAcademia
    };
    Ok(Some(class))
}

/// Counts papers per collaboration class. "Independent" means exactly
/// one distinct institution on the paper.
pub fn collaboration_breakdown(
    maps: &[&PaperAffiliationMap],
    registry: &AffiliationRegistry,
) -> Result<CollaborationBreakdown> {
    let mut breakdown = CollaborationBreakdown::default();
    for map in maps {
        match classify(map, registry)? {
            Some(class) => *breakdown.counts.entry(class).or_insert(0) += 1,
            None => breakdown.excluded.push(map.base_id.clone()),
        }
    }
    Ok(breakdown)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthorCountStats {
    pub papers: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and population std of author counts within each collaboration
/// class. Classes without papers are omitted; excluded papers (see
/// [`collaboration_breakdown`]) are skipped here too.
pub fn author_count_stats(
    maps: &[&PaperAffiliationMap],
    registry: &AffiliationRegistry,
) -> Result<BTreeMap<CollabClass, AuthorCountStats>> {
    let mut per_class: BTreeMap<CollabClass, Vec<f64>> = BTreeMap::new();
    for map in maps {
        if let Some(class) = classify(map, registry)? {
            per_class
                .entry(class)
                .or_default()
                .push(map.author_count() as f64);
        }
    }
    Ok(per_class
        .into_iter()
        .map(|(class, counts)| {
            let stats = AuthorCountStats {
                papers: counts.len(),
                mean: mean(&counts),
                std: std_dev(&counts, StdConvention::Population),
            };
            (class, stats)
        })
        .collect())
}

/// Sector-by-region percentage table over two sectors and four regions.
/// Percentages are over the academia+industry total; credit on
/// `other`-sector institutions is pulled out beforehand and reported in
/// `excluded_score`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorRegionTable {
    /// Percentages, rows [academia, industry] by [`REGIONS`] columns.
    pub cells: [[f64; 4]; 2],
    pub sector_totals: [f64; 2],
    pub region_totals: [f64; 4],
    pub excluded_score: f64,
    pub excluded_institutions: Vec<String>,
}

pub fn sector_region_percentages(
    per_paper: &BTreeMap<String, BTreeMap<String, f64>>,
    registry: &AffiliationRegistry,
) -> Result<SectorRegionTable> {
    registry.resolve(
        per_paper
            .values()
            .flat_map(|credits| credits.keys())
            .map(String::as_str),
    )?;
    let mut raw = [[0.0f64; 4]; 2];
    let mut excluded_score = 0.0;
    let mut excluded_institutions = BTreeSet::new();
    for credits in per_paper.values() {
        for (institution_id, score) in credits {
            let record = registry.get(institution_id).expect("resolved above");
            let row = match record.sector {
                Sector::Academia => 0,
                Sector::Industry => 1,
                Sector::Other => {
                    excluded_score += score;
                    excluded_institutions.insert(record.institution_id.clone());
                    continue;
                }
            };
            let col = REGIONS
                .iter()
                .position(|r| *r == record.region)
                .expect("region is one of the four");
            raw[row][col] += score;
        }
    }
    let total: f64 = raw.iter().flatten().sum();
    if total <= 0.0 {
        return Err(Error::Validation(
            "no academia or industry credit to tabulate".to_owned(),
        ));
    }
    let mut table = SectorRegionTable {
        cells: [[0.0; 4]; 2],
        sector_totals: [0.0; 2],
        region_totals: [0.0; 4],
        excluded_score,
        excluded_institutions: excluded_institutions.into_iter().collect(),
    };
    for (row, scores) in raw.iter().enumerate() {
        for (col, score) in scores.iter().enumerate() {
            let pct = 100.0 * score / total;
            table.cells[row][col] = pct;
            table.sector_totals[row] += pct;
            table.region_totals[col] += pct;
        }
    }
    Ok(table)
}
