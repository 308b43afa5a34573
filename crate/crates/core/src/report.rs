//! Report bundle emission.
//!
//! One directory per run: `report.md` for humans plus one CSV per
//! dataset (`topN.csv`, `weekly_stats.csv`, `categories.csv`,
//! `trends.csv`, `institutions.csv`, `correlations.csv`). All seven
//! files are always written; sections without data say so in the
//! Markdown and leave only a header row in the CSV. Output bytes are a
//! pure function of the inputs: every timestamp comes from the inputs
//! (the caller pins `generated_at` for reproducible bundles) and every
//! collection is emitted in a deterministic order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use crate::affiliations::{
    AuthorCountStats, CollabClass, CollaborationBreakdown, SectorRegionTable, COLLAB_CLASSES,
    REGIONS,
};
use crate::arxiv_id::{abs_link, base_id_from_link};
use crate::correlation::CorrelationPoint;
use crate::error::{Error, Result};
use crate::model::DateWindow;
use crate::stats::WeeklyStatsRow;
use crate::timefmt;
use crate::trends::TrendSeries;
use crate::zscore::{RankDelta, RankedEntry};

pub struct CorpusSummary {
    pub papers: usize,
    pub window: DateWindow,
    pub categories: Vec<String>,
    pub retrieval_time: DateTime<Utc>,
}

pub struct SnapshotSummary {
    pub source: String,
    pub retrieved_at: DateTime<Utc>,
    pub not_found: Vec<String>,
}

pub struct RankingSection {
    pub entries: Vec<RankedEntry>,
    /// Deltas against a previous ranking; `None` when no previous list
    /// was supplied (the delta column is then left empty).
    pub deltas: Option<BTreeMap<String, RankDelta>>,
    /// How the list was scored, e.g. "stable z-score (population std)".
    pub score_label: String,
}

pub struct WeeklySection {
    pub rows: Vec<WeeklyStatsRow>,
    pub categories: Vec<String>,
}

pub struct TrendsSection {
    pub series: Vec<(String, TrendSeries)>,
    /// Topic shares over the ranked list, when a ranking was available.
    pub list_shares: Option<BTreeMap<String, f64>>,
}

pub struct InstitutionsSection {
    pub collaboration: CollaborationBreakdown,
    pub author_stats: BTreeMap<CollabClass, AuthorCountStats>,
    pub fractional: SectorRegionTable,
    pub proportional: SectorRegionTable,
}

pub struct CorrelationSection {
    pub points: Vec<CorrelationPoint>,
    pub reference_label: String,
    pub other_label: String,
    /// Shared ids between the two top-n lists, when both were computed.
    pub top_overlap: Option<(usize, usize)>,
}

pub struct ReportInputs {
    pub generated_at: DateTime<Utc>,
    pub corpus: Option<CorpusSummary>,
    pub snapshot: Option<SnapshotSummary>,
    pub ranking: Option<RankingSection>,
    pub weekly: Option<WeeklySection>,
    pub distribution: Option<BTreeMap<String, f64>>,
    pub trends: Option<TrendsSection>,
    pub institutions: Option<InstitutionsSection>,
    pub correlations: Option<CorrelationSection>,
}

impl ReportInputs {
    pub fn empty(generated_at: DateTime<Utc>) -> Self {
        ReportInputs {
            generated_at,
            corpus: None,
            snapshot: None,
            ranking: None,
            weekly: None,
            distribution: None,
            trends: None,
            institutions: None,
            correlations: None,
        }
    }
}

fn ts(t: DateTime<Utc>) -> String {
    t.format(timefmt::FORMAT).to_string()
}

fn week_label(start: NaiveDate, end: NaiveDate) -> String {
    format!("{start}/{end}")
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_f6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn new_csv(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish_csv(mut writer: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes a ranked list as CSV. The delta column is filled from
/// `deltas` when given, otherwise left empty.
pub fn write_ranking_csv(
    entries: &[RankedEntry],
    deltas: Option<&BTreeMap<String, RankDelta>>,
    path: &Path,
) -> Result<()> {
    let mut writer = new_csv(path)?;
    writer
        .write_record([
            "rank",
            "title",
            "category",
            "link",
            "week",
            "citations",
            "stable_z",
            "delta",
        ])
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    for entry in entries {
        let delta = deltas
            .and_then(|d| d.get(&entry.base_id))
            .map(|d| d.to_string())
            .unwrap_or_default();
        writer
            .write_record([
                entry.rank.to_string(),
                entry.title.clone(),
                entry.primary_category.clone(),
                abs_link(&entry.base_id),
                week_label(entry.week_start, entry.week_end),
                entry.citation_count.to_string(),
                f6(entry.stable_z),
                delta,
            ])
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    finish_csv(writer, path)
}

/// Reads back a ranking CSV written by [`write_ranking_csv`]: (rank,
/// base id, score) per row, in file order.
pub fn read_ranking_csv(path: &Path) -> Result<Vec<(usize, String, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        Error::io(path, std::io::Error::other(e))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::record(path, 1, e.to_string()))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::record(path, 1, format!("missing column {name:?}")))
    };
    let (rank_col, link_col, z_col) = (find("rank")?, find("link")?, find("stable_z")?);

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::record(path, idx + 2, e.to_string()))?;
        let field = |col: usize| -> Result<&str> {
            record
                .get(col)
                .ok_or_else(|| Error::record(path, idx + 2, "short row"))
        };
        let rank: usize = field(rank_col)?
            .parse()
            .map_err(|_| Error::record(path, idx + 2, "non-numeric rank"))?;
        let base_id = base_id_from_link(field(link_col)?)
            .map_err(|e| Error::record(path, idx + 2, e.to_string()))?;
        let score: f64 = field(z_col)?
            .parse()
            .map_err(|_| Error::record(path, idx + 2, "non-numeric stable_z"))?;
        rows.push((rank, base_id, score));
    }
    Ok(rows)
}

pub fn write_weekly_csv(section: Option<&WeeklySection>, path: &Path) -> Result<()> {
    let mut writer = new_csv(path)?;
    let categories: &[String] = section.map(|s| s.categories.as_slice()).unwrap_or(&[]);
    let mut header = vec![
        "week_index".to_owned(),
        "week_start".to_owned(),
        "week_end".to_owned(),
        "papers".to_owned(),
        "mean".to_owned(),
        "std".to_owned(),
        "mean_plus_half_std".to_owned(),
    ];
    header.extend(categories.iter().map(|c| format!("mean_{c}")));
    header.push("mean_others".to_owned());
    writer
        .write_record(&header)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    if let Some(section) = section {
        for row in &section.rows {
            let mut fields = vec![
                row.week_index.to_string(),
                row.week_start.to_string(),
                row.week_end.to_string(),
                row.paper_count.to_string(),
                f6(row.overall_mean),
                f6(row.overall_std),
                f6(row.overall_mean + 0.5 * row.overall_std),
            ];
            for category in &section.categories {
                fields.push(opt_f6(row.per_category_means.get(category).copied().flatten()));
            }
            fields.push(opt_f6(
                row.per_category_means
                    .get(crate::stats::OTHERS_LABEL)
                    .copied()
                    .flatten(),
            ));
            writer
                .write_record(&fields)
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        }
    }
    finish_csv(writer, path)
}

pub fn write_categories_csv(distribution: Option<&BTreeMap<String, f64>>, path: &Path) -> Result<()> {
    let mut writer = new_csv(path)?;
    writer
        .write_record(["category", "percent"])
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    if let Some(distribution) = distribution {
        for (category, percent) in distribution {
            writer
                .write_record([category.clone(), f6(*percent)])
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        }
    }
    finish_csv(writer, path)
}

pub fn write_trends_csv(section: Option<&TrendsSection>, path: &Path) -> Result<()> {
    let mut writer = new_csv(path)?;
    writer
        .write_record(["week_start", "topic", "raw_percent", "smoothed_percent"])
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    if let Some(section) = section {
        for (topic, series) in &section.series {
            for (idx, week_start) in series.week_starts.iter().enumerate() {
                writer
                    .write_record([
                        week_start.to_string(),
                        topic.clone(),
                        opt_f6(series.raw_percent[idx]),
                        opt_f6(series.smoothed_percent[idx]),
                    ])
                    .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
            }
        }
    }
    finish_csv(writer, path)
}

pub fn write_institutions_csv(section: Option<&InstitutionsSection>, path: &Path) -> Result<()> {
    let mut writer = new_csv(path)?;
    let mut header = vec!["metric".to_owned(), "row".to_owned(), "total".to_owned()];
    header.extend(REGIONS.iter().map(|r| r.to_string()));
    writer
        .write_record(&header)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    if let Some(section) = section {
        for (metric, table) in [
            ("fractional", &section.fractional),
            ("proportional", &section.proportional),
        ] {
            for (row_idx, sector) in ["academia", "industry"].iter().enumerate() {
                let mut fields = vec![
                    metric.to_owned(),
                    (*sector).to_owned(),
                    f6(table.sector_totals[row_idx]),
                ];
                fields.extend(table.cells[row_idx].iter().map(|v| f6(*v)));
                writer
                    .write_record(&fields)
                    .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
            }
            let mut fields = vec![metric.to_owned(), "region_total".to_owned(), f6(100.0)];
            fields.extend(table.region_totals.iter().map(|v| f6(*v)));
            writer
                .write_record(&fields)
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        }
    }
    finish_csv(writer, path)
}

pub fn write_correlations_csv(section: Option<&CorrelationSection>, path: &Path) -> Result<()> {
    let mut writer = new_csv(path)?;
    writer
        .write_record(["n", "kendall_tau", "spearman_rho"])
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    if let Some(section) = section {
        for point in &section.points {
            writer
                .write_record([point.n.to_string(), f6(point.kendall_tau), f6(point.spearman_rho)])
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        }
    }
    finish_csv(writer, path)
}

fn push_md_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for cell in cells {
        out.push(' ');
        out.push_str(&cell.replace('|', "\\|"));
        out.push_str(" |");
    }
    out.push('\n');
}

fn push_md_header(out: &mut String, cells: &[&str]) {
    push_md_row(out, &cells.iter().map(|c| (*c).to_owned()).collect::<Vec<_>>());
    out.push('|');
    for _ in cells {
        out.push_str(" --- |");
    }
    out.push('\n');
}

const NO_DATA: &str = "_no data_\n";

fn render_markdown(inputs: &ReportInputs) -> String {
    let mut md = String::new();
    md.push_str("# Citation trend report\n\n");
    let _ = writeln!(md, "- Generated: {}", ts(inputs.generated_at));
    match &inputs.corpus {
        Some(c) => {
            let _ = writeln!(
                md,
                "- Corpus: {} papers, submitted {}..{}, categories {} (retrieved {})",
                c.papers,
                c.window.start,
                c.window.end,
                c.categories.join(", "),
                ts(c.retrieval_time)
            );
        }
        None => {
            let _ = writeln!(md, "- Corpus: none");
        }
    }
    match &inputs.snapshot {
        Some(s) => {
            let _ = writeln!(
                md,
                "- Citation snapshot: {}, retrieved {}",
                s.source,
                ts(s.retrieved_at)
            );
        }
        None => {
            let _ = writeln!(md, "- Citation snapshot: none");
        }
    }
    md.push('\n');

    md.push_str("## Ranking\n\n");
    match &inputs.ranking {
        Some(section) if !section.entries.is_empty() => {
            let _ = writeln!(md, "Scored by {}.\n", section.score_label);
            push_md_header(
                &mut md,
                &[
                    "rank", "title", "category", "link", "week", "citations", "stable_z", "delta",
                ],
            );
            for entry in &section.entries {
                let delta = section
                    .deltas
                    .as_ref()
                    .and_then(|d| d.get(&entry.base_id))
                    .map(|d| d.to_string())
                    .unwrap_or_default();
                push_md_row(
                    &mut md,
                    &[
                        entry.rank.to_string(),
                        entry.title.clone(),
                        entry.primary_category.clone(),
                        abs_link(&entry.base_id),
                        week_label(entry.week_start, entry.week_end),
                        entry.citation_count.to_string(),
                        format!("{:.2}", entry.stable_z),
                        delta,
                    ],
                );
            }
            if let Some(snapshot) = &inputs.snapshot {
                if !snapshot.not_found.is_empty() {
                    let _ = writeln!(
                        md,
                        "\nCounted as 0, unknown to the citation source: {}",
                        snapshot.not_found.join(", ")
                    );
                }
            }
        }
        _ => md.push_str(NO_DATA),
    }
    md.push('\n');

    md.push_str("## Weekly citation statistics\n\n");
    match &inputs.weekly {
        Some(section) if !section.rows.is_empty() => {
            let mut header = vec!["week", "papers", "mean", "std"];
            header.extend(section.categories.iter().map(String::as_str));
            header.push("others");
            push_md_header(&mut md, &header);
            for row in &section.rows {
                let mut cells = vec![
                    week_label(row.week_start, row.week_end),
                    row.paper_count.to_string(),
                    format!("{:.2}", row.overall_mean),
                    format!("{:.2}", row.overall_std),
                ];
                for category in &section.categories {
                    cells.push(
                        row.per_category_means
                            .get(category)
                            .copied()
                            .flatten()
                            .map(|m| format!("{m:.2}"))
                            .unwrap_or_default(),
                    );
                }
                cells.push(
                    row.per_category_means
                        .get(crate::stats::OTHERS_LABEL)
                        .copied()
                        .flatten()
                        .map(|m| format!("{m:.2}"))
                        .unwrap_or_default(),
                );
                push_md_row(&mut md, &cells);
            }
        }
        _ => md.push_str(NO_DATA),
    }
    md.push('\n');

    md.push_str("## Category distribution\n\n");
    match &inputs.distribution {
        Some(distribution) if !distribution.is_empty() => {
            push_md_header(&mut md, &["category", "percent"]);
            for (category, percent) in distribution {
                push_md_row(&mut md, &[category.clone(), format!("{percent:.1}")]);
            }
        }
        _ => md.push_str(NO_DATA),
    }
    md.push('\n');

    md.push_str("## Keyword topics\n\n");
    match &inputs.trends {
        Some(section) if !section.series.is_empty() => {
            if let Some(shares) = &section.list_shares {
                md.push_str("Share of ranked papers mentioning each topic:\n\n");
                push_md_header(&mut md, &["topic", "percent"]);
                for (topic, share) in shares {
                    push_md_row(&mut md, &[topic.clone(), format!("{share:.1}")]);
                }
                md.push('\n');
            }
            let _ = writeln!(
                md,
                "Weekly series for {} topics in `trends.csv`.",
                section.series.len()
            );
        }
        _ => md.push_str(NO_DATA),
    }
    md.push('\n');

    md.push_str("## Institutional contributions\n\n");
    match &inputs.institutions {
        Some(section) => {
            md.push_str("Collaboration classes (papers):\n\n");
            push_md_header(&mut md, &["class", "papers", "mean authors", "std authors"]);
            for class in COLLAB_CLASSES {
                let papers = section.collaboration.counts.get(&class).copied().unwrap_or(0);
                let (mean_authors, std_authors) = section
                    .author_stats
                    .get(&class)
                    .map(|s| (format!("{:.1}", s.mean), format!("{:.1}", s.std)))
                    .unwrap_or_default();
                push_md_row(
                    &mut md,
                    &[
                        class.to_string(),
                        papers.to_string(),
                        mean_authors,
                        std_authors,
                    ],
                );
            }
            if !section.collaboration.excluded.is_empty() {
                let _ = writeln!(
                    md,
                    "\nExcluded from the two-sector tables (out-of-scope sector): {}",
                    section.collaboration.excluded.join(", ")
                );
            }
            md.push('\n');
            for (label, table) in [
                ("fractional scores", &section.fractional),
                ("proportional counts", &section.proportional),
            ] {
                let _ = writeln!(md, "Sector and region shares by {label} (percent):\n");
                let mut header = vec!["sector", "total"];
                header.extend(REGIONS.iter().map(|r| match r {
                    crate::affiliations::Region::Us => "US",
                    crate::affiliations::Region::Cn => "CN",
                    crate::affiliations::Region::Europe => "Europe",
                    crate::affiliations::Region::Rest => "Rest",
                }));
                push_md_header(&mut md, &header);
                for (idx, sector) in ["academia", "industry"].iter().enumerate() {
                    let mut cells = vec![
                        (*sector).to_owned(),
                        format!("{:.1}", table.sector_totals[idx]),
                    ];
                    cells.extend(table.cells[idx].iter().map(|v| format!("{v:.1}")));
                    push_md_row(&mut md, &cells);
                }
                let mut cells = vec!["region total".to_owned(), "100.0".to_owned()];
                cells.extend(table.region_totals.iter().map(|v| format!("{v:.1}")));
                push_md_row(&mut md, &cells);
                if table.excluded_score > 0.0 {
                    let _ = writeln!(
                        md,
                        "\nExcluded credit {:.2} on: {}",
                        table.excluded_score,
                        table.excluded_institutions.join(", ")
                    );
                }
                md.push('\n');
            }
        }
        None => {
            md.push_str(NO_DATA);
            md.push('\n');
        }
    }

    md.push_str("## Ranking correlation\n\n");
    match &inputs.correlations {
        Some(section) if !section.points.is_empty() => {
            let _ = writeln!(
                md,
                "{} against {}, over top-n prefixes:\n",
                section.other_label, section.reference_label
            );
            push_md_header(&mut md, &["n", "kendall tau", "spearman rho"]);
            for point in &section.points {
                push_md_row(
                    &mut md,
                    &[
                        point.n.to_string(),
                        format!("{:.4}", point.kendall_tau),
                        format!("{:.4}", point.spearman_rho),
                    ],
                );
            }
            if let Some((shared, size)) = section.top_overlap {
                let _ = writeln!(md, "\nTop-{size} lists share {shared} papers.");
            }
        }
        _ => md.push_str(NO_DATA),
    }

    md
}

/// Writes the full bundle into `dir` (created if needed) and returns the
/// paths written, report first.
pub fn emit_report(inputs: &ReportInputs, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let md_path = dir.join("report.md");
    fs::write(&md_path, render_markdown(inputs)).map_err(|e| Error::io(&md_path, e))?;

    let top_path = dir.join("topN.csv");
    match &inputs.ranking {
        Some(section) => write_ranking_csv(&section.entries, section.deltas.as_ref(), &top_path)?,
        None => write_ranking_csv(&[], None, &top_path)?,
    }

    let weekly_path = dir.join("weekly_stats.csv");
    write_weekly_csv(inputs.weekly.as_ref(), &weekly_path)?;

    let categories_path = dir.join("categories.csv");
    write_categories_csv(inputs.distribution.as_ref(), &categories_path)?;

    let trends_path = dir.join("trends.csv");
    write_trends_csv(inputs.trends.as_ref(), &trends_path)?;

    let institutions_path = dir.join("institutions.csv");
    write_institutions_csv(inputs.institutions.as_ref(), &institutions_path)?;

    let correlations_path = dir.join("correlations.csv");
    write_correlations_csv(inputs.correlations.as_ref(), &correlations_path)?;

    Ok(vec![
        md_path,
        top_path,
        weekly_path,
        categories_path,
        trends_path,
        institutions_path,
        correlations_path,
    ])
}
