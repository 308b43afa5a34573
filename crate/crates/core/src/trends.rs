//! Keyword topic matching, weekly topic-share series, and smoothing.
//!
//! A topic is a bag of lowercase substrings; a paper belongs to the topic
//! when its lowercased title or abstract contains any of them. Matching is
//! deliberately plain substring containment rather than word-boundary
//! matching, so "chatgpt" always implies "gpt" and the GPT series bounds
//! the ChatGPT series from above. The weekly share series are smoothed
//! with a Savitzky–Golay filter that accepts even window lengths.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Corpus, PaperRecord};
use crate::zscore::SplitSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicRule {
    pub name: String,
    pub patterns: Vec<String>,
}

impl TopicRule {
    pub fn new(name: impl Into<String>, patterns: &[&str]) -> Result<Self> {
        let rule = TopicRule {
            name: name.into(),
            patterns: patterns.iter().map(|p| p.to_lowercase()).collect(),
        };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("topic rule with empty name".to_owned()));
        }
        if self.patterns.is_empty() {
            return Err(Error::Validation(format!(
                "topic {:?} has no patterns",
                self.name
            )));
        }
        if self.patterns.iter().any(|p| p.is_empty()) {
            return Err(Error::Validation(format!(
                "topic {:?} has an empty pattern",
                self.name
            )));
        }
        Ok(())
    }
}

/// The five built-in topics.
pub fn builtin_topics() -> Vec<TopicRule> {
    [
        (
            "LLM",
            &["llm", "llms", "large language model", "large language models"][..],
        ),
        ("ChatGPT", &["chatgpt", "chat-gpt"]),
        ("GPT", &["gpt"]),
        ("LLaMA", &["llama"]),
        (
            "Multimodality",
            &[
                "multimodal",
                "multimodality",
                "multi-modal",
                "multi-modality",
                "text-to-image",
                "visual-language",
                "captioning",
                "image-to-text",
            ],
        ),
    ]
    .into_iter()
    .map(|(name, patterns)| TopicRule::new(name, patterns).expect("built-in topics are valid"))
    .collect()
}

/// Loads topic rules from a JSON file: an array of objects with `name`
/// and `patterns`. Patterns are lowercased on load.
pub fn load_topic_rules(path: &Path) -> Result<Vec<TopicRule>> {
    #[derive(Deserialize)]
    struct RawRule {
        name: String,
        patterns: Vec<String>,
    }

    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<RawRule> = serde_json::from_str(&body)
        .map_err(|e| Error::record(path, 0, format!("bad topic rules: {e}")))?;
    if raw.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no topic rules defined",
            path.display()
        )));
    }
    raw.into_iter()
        .map(|r| {
            let rule = TopicRule {
                name: r.name,
                patterns: r.patterns.iter().map(|p| p.to_lowercase()).collect(),
            };
            rule.validate()?;
            Ok(rule)
        })
        .collect()
}

/// True when the lowercased title or abstract contains any pattern.
pub fn matches_topic(record: &PaperRecord, rule: &TopicRule) -> bool {
    let title = record.title.to_lowercase();
    let abstract_text = record.abstract_text.to_lowercase();
    rule.patterns
        .iter()
        .any(|p| title.contains(p) || abstract_text.contains(p))
}

/// Weekly share of one topic. Indices run over the contiguous week range
/// spanned by the corpus; `None` marks weeks without papers (a gap, not
/// zero). Raw values are percentages in [0, 100].
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSeries {
    pub week_starts: Vec<NaiveDate>,
    pub raw_percent: Vec<Option<f64>>,
    pub smoothed_percent: Vec<Option<f64>>,
}

/// Raw weekly shares of papers matching `rule`, on the week grid of
/// `split`, spanning the corpus from its first populated week to its
/// last. `smoothed_percent` comes back as all gaps; apply
/// [`smooth_series`] to fill it.
pub fn weekly_topic_share(corpus: &Corpus, rule: &TopicRule, split: SplitSpec) -> Result<TrendSeries> {
    if corpus.is_empty() {
        return Err(Error::Validation(
            "cannot compute topic shares of an empty corpus".to_owned(),
        ));
    }
    let mut totals: BTreeMap<i64, (u32, u32)> = BTreeMap::new();
    for record in corpus.records() {
        let week = split.assign_week(record.first_submitted.date_naive());
        let slot = totals.entry(week).or_insert((0, 0));
        slot.0 += 1;
        if matches_topic(record, rule) {
            slot.1 += 1;
        }
    }
    let first = *totals.keys().next().expect("corpus is non-empty");
    let last = *totals.keys().next_back().expect("corpus is non-empty");

    let mut series = TrendSeries {
        week_starts: Vec::new(),
        raw_percent: Vec::new(),
        smoothed_percent: Vec::new(),
    };
    for week in first..=last {
        series.week_starts.push(split.week_bounds(week).0);
        let raw = totals
            .get(&week)
            .map(|(total, matching)| 100.0 * f64::from(*matching) / f64::from(*total));
        series.raw_percent.push(raw);
        series.smoothed_percent.push(None);
    }
    Ok(series)
}

/// Savitzky–Golay filter: slides a `window`-sample least-squares fit of
/// the given polynomial order over the series and evaluates it at each
/// sample's own position.
///
/// The window reaches ⌈(w−1)/2⌉ samples left and ⌊(w−1)/2⌋ right of the
/// target, which for odd windows is the classical centered filter; near
/// the boundaries the window is shifted inward, keeping its full length,
/// and the fit is evaluated off-center. Fits use discrete orthogonal
/// polynomials built by the Stieltjes recurrence, so no linear system is
/// solved.
pub fn savitzky_golay(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Validation("window length must be positive".to_owned()));
    }
    if order >= window {
        return Err(Error::Validation(format!(
            "polynomial order {order} must be below window length {window}"
        )));
    }
    if window > series.len() {
        return Err(Error::Validation(format!(
            "window length {window} exceeds series length {}",
            series.len()
        )));
    }

    let n = series.len();
    let left = (window - 1).div_ceil(2);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(left).min(n - window);
        let nodes: Vec<f64> = (0..window).map(|j| (start + j) as f64 - i as f64).collect();
        let values = &series[start..start + window];
        out.push(fit_at_zero(&nodes, values, order));
    }
    Ok(out)
}

/// Least-squares polynomial fit over `(nodes, values)` evaluated at 0,
/// via orthogonal polynomials on the node set.
fn fit_at_zero(nodes: &[f64], values: &[f64], order: usize) -> f64 {
    let w = nodes.len();
    // π_k at the nodes, and at the evaluation point 0, for the current
    // and previous degree.
    let mut prev = vec![0.0; w];
    let mut cur = vec![1.0; w];
    let mut prev_at0 = 0.0;
    let mut cur_at0 = 1.0;
    let mut prev_norm = 0.0;

    let mut result = 0.0;
    for degree in 0..=order {
        let norm: f64 = cur.iter().map(|p| p * p).sum();
        let coeff: f64 = cur.iter().zip(values).map(|(p, y)| p * y).sum::<f64>() / norm;
        result += coeff * cur_at0;

        if degree == order {
            break;
        }
        let alpha: f64 = nodes.iter().zip(&cur).map(|(t, p)| t * p * p).sum::<f64>() / norm;
        let beta = if degree == 0 { 0.0 } else { norm / prev_norm };
        let next: Vec<f64> = nodes
            .iter()
            .zip(cur.iter().zip(&prev))
            .map(|(t, (p, q))| (t - alpha) * p - beta * q)
            .collect();
        let next_at0 = (0.0 - alpha) * cur_at0 - beta * prev_at0;

        prev = std::mem::replace(&mut cur, next);
        prev_at0 = cur_at0;
        cur_at0 = next_at0;
        prev_norm = norm;
    }
    result
}

/// Fills `smoothed_percent` by filtering the non-gap samples as one
/// contiguous series and scattering the result back; gaps stay gaps. The
/// window must fit into the number of non-gap samples.
pub fn smooth_series(series: &TrendSeries, window: usize, order: usize) -> Result<TrendSeries> {
    let present: Vec<(usize, f64)> = series
        .raw_percent
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let values: Vec<f64> = present.iter().map(|(_, v)| *v).collect();
    let smoothed = savitzky_golay(&values, window, order)?;

    let mut out = series.clone();
    for ((idx, _), value) in present.iter().zip(smoothed) {
        out.smoothed_percent[*idx] = Some(value);
    }
    Ok(out)
}

/// Share of the listed papers matching each rule, as percentages.
pub fn topic_share_of_list(
    ids: &[String],
    corpus: &Corpus,
    rules: &[TopicRule],
) -> Result<BTreeMap<String, f64>> {
    if ids.is_empty() {
        return Err(Error::Validation(
            "cannot compute topic shares of an empty list".to_owned(),
        ));
    }
    let missing: Vec<&str> = ids
        .iter()
        .filter(|id| !corpus.contains(id))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Integrity(format!(
            "listed papers missing from the corpus: {}",
            missing.join(", ")
        )));
    }
    let mut shares = BTreeMap::new();
    for rule in rules {
        let matching = ids
            .iter()
            .filter(|id| matches_topic(corpus.get(id).expect("checked above"), rule))
            .count();
        shares.insert(rule.name.clone(), 100.0 * matching as f64 / ids.len() as f64);
    }
    Ok(shares)
}
