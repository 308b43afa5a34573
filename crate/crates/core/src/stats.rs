//! Corpus-level descriptive statistics: weekly citation means, category
//! distribution, and comment keyword counts.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::{Corpus, SnapshotSet};
use crate::zscore::{mean, std_dev, SplitSpec, StdConvention};

/// arXiv archive prefixes merged into the single "math+physics" class in
/// category distributions. Everything math or physics flavored lands
/// here; the set is a prefix match against the primary category.
pub const MATH_PHYSICS_ARCHIVES: [&str; 14] = [
    "math.",
    "math-ph",
    "physics.",
    "astro-ph",
    "cond-mat",
    "gr-qc",
    "hep-ex",
    "hep-lat",
    "hep-ph",
    "hep-th",
    "nlin.",
    "nucl-ex",
    "nucl-th",
    "quant-ph",
];

/// Label used for the merged math/physics class.
pub const MATH_PHYSICS_LABEL: &str = "math+physics";

/// Label used for papers outside the configured report categories.
pub const OTHERS_LABEL: &str = "others";

/// Collapses a primary category into its distribution class: math and
/// physics archives merge into one label, everything else stays itself.
pub fn main_category(primary: &str) -> &str {
    if MATH_PHYSICS_ARCHIVES.iter().any(|p| primary.starts_with(p)) {
        MATH_PHYSICS_LABEL
    } else {
        primary
    }
}

/// Weekly citation statistics. `per_category_means` holds one entry per
/// requested category label plus [`OTHERS_LABEL`]; `None` marks a
/// category with no papers that week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyStatsRow {
    pub week_index: i64,
    pub week_start: NaiveDate,
    pub week_end: NaiveDate,
    pub paper_count: usize,
    pub overall_mean: f64,
    pub overall_std: f64,
    pub per_category_means: BTreeMap<String, Option<f64>>,
}

fn category_label<'a>(primary: &'a str, requested: &'a [String]) -> &'a str {
    let main = main_category(primary);
    for label in requested {
        if label == primary || label == main {
            return label;
        }
    }
    OTHERS_LABEL
}

/// Per-week mean and population standard deviation of citation counts,
/// plus per-category means over the requested primary-category labels
/// (the label [`MATH_PHYSICS_LABEL`] captures the whole merged class).
/// Rows cover populated weeks only, in week order.
pub fn weekly_mean_std(
    corpus: &Corpus,
    snapshots: &SnapshotSet,
    split: SplitSpec,
    categories: &[String],
) -> Result<Vec<WeeklyStatsRow>> {
    let mut weeks: BTreeMap<i64, Vec<(&str, u64)>> = BTreeMap::new();
    let mut missing = Vec::new();
    for record in corpus.records() {
        match snapshots.get(&record.base_id) {
            Some(snap) => {
                let week = split.assign_week(record.first_submitted.date_naive());
                weeks
                    .entry(week)
                    .or_default()
                    .push((record.primary_category.as_str(), snap.count));
            }
            None => missing.push(record.base_id.as_str()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Integrity(format!(
            "no citation snapshot for {} papers: {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let mut rows = Vec::with_capacity(weeks.len());
    for (week, papers) in weeks {
        let counts: Vec<f64> = papers.iter().map(|(_, c)| *c as f64).collect();
        let mut by_category: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (primary, count) in &papers {
            by_category
                .entry(category_label(primary, categories))
                .or_default()
                .push(*count as f64);
        }
        let mut per_category_means = BTreeMap::new();
        for label in categories.iter().map(String::as_str).chain([OTHERS_LABEL]) {
            let value = by_category.get(label).map(|counts| mean(counts));
            per_category_means.insert(label.to_owned(), value);
        }
        let (week_start, week_end) = split.week_bounds(week);
        rows.push(WeeklyStatsRow {
            week_index: week,
            week_start,
            week_end,
            paper_count: papers.len(),
            overall_mean: mean(&counts),
            overall_std: std_dev(&counts, StdConvention::Population),
            per_category_means,
        });
    }
    Ok(rows)
}

/// Share of each distribution class in the corpus, as percentages that
/// sum to 100.
pub fn category_distribution(corpus: &Corpus) -> Result<BTreeMap<String, f64>> {
    if corpus.is_empty() {
        return Err(Error::Validation(
            "cannot compute a category distribution of an empty corpus".to_owned(),
        ));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for record in corpus.records() {
        *counts.entry(main_category(&record.primary_category)).or_insert(0) += 1;
    }
    let total = corpus.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(label, count)| (label.to_owned(), 100.0 * count as f64 / total))
        .collect())
}

/// Comment keyword counts within one week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommentKeywordShare {
    pub week_index: i64,
    /// Papers whose comment contains the keyword.
    pub matching: usize,
    /// Papers that have a comment at all.
    pub with_comments: usize,
    /// All papers in the week.
    pub total: usize,
    pub percent_of_total: f64,
    pub percent_of_commented: f64,
}

/// Counts papers in the given week whose lowercased comment contains the
/// keyword. The keyword is lowercased before matching; an empty keyword
/// is rejected.
pub fn comment_keyword_share(
    corpus: &Corpus,
    split: SplitSpec,
    week_index: i64,
    keyword: &str,
) -> Result<CommentKeywordShare> {
    let keyword = keyword.trim().to_lowercase();
    if keyword.is_empty() {
        return Err(Error::Validation("empty comment keyword".to_owned()));
    }
    let mut share = CommentKeywordShare {
        week_index,
        matching: 0,
        with_comments: 0,
        total: 0,
        percent_of_total: 0.0,
        percent_of_commented: 0.0,
    };
    for record in corpus.records() {
        if split.assign_week(record.first_submitted.date_naive()) != week_index {
            continue;
        }
        share.total += 1;
        if let Some(comment) = &record.comment {
            share.with_comments += 1;
            if comment.to_lowercase().contains(&keyword) {
                share.matching += 1;
            }
        }
    }
    if share.total > 0 {
        share.percent_of_total = 100.0 * share.matching as f64 / share.total as f64;
    }
    if share.with_comments > 0 {
        share.percent_of_commented = 100.0 * share.matching as f64 / share.with_comments as f64;
    }
    Ok(share)
}
