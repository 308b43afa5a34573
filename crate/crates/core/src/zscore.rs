//! Week-normalized citation scores and the stable ranking built on them.
//!
//! Raw citation counts are not comparable across submission weeks: papers
//! submitted earlier have had longer to accumulate citations. Counts are
//! therefore standardized within submission weeks (subtract the week mean,
//! divide by the week standard deviation). Because the result depends on
//! where week boundaries fall, the week grid is computed seven times, once
//! per starting weekday, and each paper's final score is the mean of its
//! seven z-scores minus their standard deviation. Penalizing the spread
//! rewards papers whose standing does not depend on the choice of grid.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::model::{Corpus, SnapshotSet};

/// Divisor used in standard deviations: `Population` divides by n,
/// `Sample` by n - 1. Population is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdConvention {
    #[default]
    Population,
    Sample,
}

impl FromStr for StdConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(StdConvention::Population),
            "sample" => Ok(StdConvention::Sample),
            other => Err(Error::Validation(format!(
                "unknown std convention {other:?}, expected \"population\" or \"sample\""
            ))),
        }
    }
}

impl fmt::Display for StdConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StdConvention::Population => f.write_str("population"),
            StdConvention::Sample => f.write_str("sample"),
        }
    }
}

/// Arithmetic mean. Panics on an empty slice; callers only group existing
/// observations.
pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "mean of empty slice");
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation under the given convention. Sample deviation of
/// fewer than two values is defined as zero.
pub fn std_dev(values: &[f64], convention: StdConvention) -> f64 {
    assert!(!values.is_empty(), "std of empty slice");
    let n = values.len() as f64;
    let m = mean(values);
    let sum_sq: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    match convention {
        StdConvention::Population => (sum_sq / n).sqrt(),
        StdConvention::Sample => {
            if values.len() < 2 {
                0.0
            } else {
                (sum_sq / (n - 1.0)).sqrt()
            }
        }
    }
}

/// One way of cutting the calendar into weeks: the grid whose weeks start
/// on `start_weekday`, positioned so that week 0 is the week containing
/// `epoch` (the corpus window start).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub start_weekday: Weekday,
    pub epoch: NaiveDate,
}

impl SplitSpec {
    pub fn new(start_weekday: Weekday, epoch: NaiveDate) -> Self {
        SplitSpec {
            start_weekday,
            epoch,
        }
    }

    /// The seven grids for one epoch, in Monday..Sunday order.
    pub fn all_seven(epoch: NaiveDate) -> [SplitSpec; 7] {
        [
            Weekday::Mon,
            Weekday::Tue,
            Weekday::Wed,
            Weekday::Thu,
            Weekday::Fri,
            Weekday::Sat,
            Weekday::Sun,
        ]
        .map(|d| SplitSpec::new(d, epoch))
    }

    /// First day of week 0: the latest occurrence of `start_weekday` on or
    /// before the epoch.
    pub fn anchor(&self) -> NaiveDate {
        let back = (self.epoch.weekday().num_days_from_monday() + 7
            - self.start_weekday.num_days_from_monday())
            % 7;
        self.epoch - Duration::days(back as i64)
    }

    /// Week index for a date. Dates before the anchor get negative
    /// indices; weeks cut short by the corpus window keep their index and
    /// are treated like any other week.
    pub fn assign_week(&self, date: NaiveDate) -> i64 {
        (date - self.anchor()).num_days().div_euclid(7)
    }

    /// First and last day of the week at `index`.
    pub fn week_bounds(&self, index: i64) -> (NaiveDate, NaiveDate) {
        let start = self.anchor() + Duration::days(7 * index);
        (start, start + Duration::days(6))
    }
}

/// Within-week z-scores for every corpus paper under one week grid.
/// Weeks whose counts are all equal have zero deviation; their papers
/// score 0. Every corpus paper must have a snapshot.
pub fn zscores_for_split(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    split: SplitSpec,
    convention: StdConvention,
) -> Result<BTreeMap<String, f64>> {
    let counts = counts_for(corpus, snapshots)?;
    let mut weeks: BTreeMap<i64, Vec<&str>> = BTreeMap::new();
    for record in corpus.records() {
        let week = split.assign_week(record.first_submitted.date_naive());
        weeks.entry(week).or_default().push(&record.base_id);
    }

    let mut scores = BTreeMap::new();
    for ids in weeks.values() {
        let values: Vec<f64> = ids.iter().map(|id| counts[*id] as f64).collect();
        let m = mean(&values);
        let s = std_dev(&values, convention);
        for (id, value) in ids.iter().zip(&values) {
            let z = if s > 0.0 { (value - m) / s } else { 0.0 };
            scores.insert((*id).to_owned(), z);
        }
    }
    Ok(scores)
}

fn counts_for<'a>(corpus: &'a Corpus, snapshots: &SnapshotSet) -> Result<BTreeMap<&'a str, u64>> {
    let mut counts = BTreeMap::new();
    let mut missing = Vec::new();
    for id in corpus.ids() {
        match snapshots.get(id) {
            Some(snap) => {
                counts.insert(id, snap.count);
            }
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Integrity(format!(
            "no citation snapshot for {} papers: {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok(counts)
}

/// Per-paper summary across the seven week grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreRecord {
    pub base_id: String,
    /// z-scores in Monday..Sunday grid order.
    pub per_split: [f64; 7],
    pub mean_z: f64,
    pub std_z: f64,
    /// `mean_z - std_z`.
    pub stable_z: f64,
}

/// Combines seven per-grid z-scores into the stable score.
pub fn stable_from_splits(per_split: &[f64; 7], convention: StdConvention) -> (f64, f64, f64) {
    let m = mean(per_split);
    let s = std_dev(per_split, convention);
    (m, s, m - s)
}

/// Stable z-scores for the whole corpus, sorted by base id. The week grids
/// are anchored at the corpus window start.
pub fn stable_zscores(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    convention: StdConvention,
) -> Result<Vec<ZScoreRecord>> {
    let splits = SplitSpec::all_seven(corpus.window.start);
    let mut per_split_maps = Vec::with_capacity(7);
    for split in splits {
        per_split_maps.push(zscores_for_split(corpus, snapshots, split, convention)?);
    }

    let mut records = Vec::with_capacity(corpus.len());
    for id in corpus.ids() {
        let mut per_split = [0.0f64; 7];
        for (slot, map) in per_split.iter_mut().zip(&per_split_maps) {
            *slot = map[id];
        }
        let (mean_z, std_z, stable_z) = stable_from_splits(&per_split, convention);
        records.push(ZScoreRecord {
            base_id: id.to_owned(),
            per_split,
            mean_z,
            std_z,
            stable_z,
        });
    }
    Ok(records)
}

/// One row of a ranked list. `stable_z` holds the score the list was
/// ranked by: the stable score from [`rank_top_n`], or a single grid's
/// z-score from [`rank_by_split`]. The week label places the paper's
/// submission on the labeling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub rank: usize,
    pub base_id: String,
    pub title: String,
    pub primary_category: String,
    pub citation_count: u64,
    pub stable_z: f64,
    pub week_start: NaiveDate,
    pub week_end: NaiveDate,
}

/// Top `n` papers by stable z-score. Ties break by citation count
/// (descending), then base id. When the corpus holds fewer than `n`
/// papers the full ranking is returned and a warning logged.
pub fn rank_top_n(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    n: usize,
    convention: StdConvention,
    label_day: Weekday,
) -> Result<Vec<RankedEntry>> {
    let scores: BTreeMap<String, f64> = stable_zscores(corpus, snapshots, convention)?
        .into_iter()
        .map(|r| (r.base_id, r.stable_z))
        .collect();
    rank_by_scores(corpus, snapshots, &scores, n, label_day)
}

/// Top `n` papers by the z-score of a single week grid, for comparing a
/// plain one-grid ranking against the stable one.
pub fn rank_by_split(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    n: usize,
    convention: StdConvention,
    split_day: Weekday,
) -> Result<Vec<RankedEntry>> {
    let split = SplitSpec::new(split_day, corpus.window.start);
    let scores = zscores_for_split(corpus, snapshots, split, convention)?;
    rank_by_scores(corpus, snapshots, &scores, n, split_day)
}

fn rank_by_scores(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    scores: &BTreeMap<String, f64>,
    n: usize,
    label_day: Weekday,
) -> Result<Vec<RankedEntry>> {
    if n == 0 {
        return Err(Error::Validation("ranking size must be at least 1".to_owned()));
    }
    if n > corpus.len() {
        log::warn!(
            "ranking asked for top {n} but the corpus holds {} papers; returning all of them",
            corpus.len()
        );
    }
    let label_split = SplitSpec::new(label_day, corpus.window.start);

    let mut order: Vec<&str> = corpus.ids().collect();
    order.sort_by(|a, b| {
        scores[*b]
            .total_cmp(&scores[*a])
            .then_with(|| {
                let ca = snapshots.get(a).map(|s| s.count).unwrap_or(0);
                let cb = snapshots.get(b).map(|s| s.count).unwrap_or(0);
                cb.cmp(&ca)
            })
            .then_with(|| a.cmp(b))
    });

    Ok(order
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, id)| {
            let record = corpus.get(id).expect("ranked id comes from the corpus");
            let week = label_split.assign_week(record.first_submitted.date_naive());
            let (week_start, week_end) = label_split.week_bounds(week);
            RankedEntry {
                rank: i + 1,
                base_id: id.to_owned(),
                title: record.title.clone(),
                primary_category: record.primary_category.clone(),
                citation_count: snapshots.get(id).map(|s| s.count).unwrap_or(0),
                stable_z: scores[id],
                week_start,
                week_end,
            }
        })
        .collect())
}

/// Movement of one paper between two rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankDelta {
    /// `previous rank - current rank`; positive means the paper moved up.
    Moved(i64),
    /// Absent from the previous ranking.
    New,
}

impl fmt::Display for RankDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankDelta::Moved(d) if *d > 0 => write!(f, "+{d}"),
            RankDelta::Moved(d) => write!(f, "{d}"),
            RankDelta::New => f.write_str("new"),
        }
    }
}

/// Deltas for the current ranking against a previous one, given the
/// previous (rank, base id) pairs.
pub fn rank_deltas(
    current: &[RankedEntry],
    previous: &[(usize, String)],
) -> BTreeMap<String, RankDelta> {
    let previous_ranks: BTreeMap<&str, usize> = previous
        .iter()
        .map(|(rank, id)| (id.as_str(), *rank))
        .collect();
    current
        .iter()
        .map(|entry| {
            let delta = match previous_ranks.get(entry.base_id.as_str()) {
                Some(prev) => RankDelta::Moved(*prev as i64 - entry.rank as i64),
                None => RankDelta::New,
            };
            (entry.base_id.clone(), delta)
        })
        .collect()
}
