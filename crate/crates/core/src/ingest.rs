//! Corpus retrieval: query construction and the paginated fetch loop.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use url::Url;

use crate::error::{Error, Result};
use crate::feed::parse_feed;
use crate::model::{Corpus, DateWindow};
use crate::transport::{ApiRequest, Transport};

/// Public arXiv query endpoint.
pub const DEFAULT_ARXIV_URL: &str = "http://export.arxiv.org/api/query";

/// What to fetch: category set, submission-date window, paging and retry
/// limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub categories: BTreeSet<String>,
    pub window: DateWindow,
    pub page_size: usize,
    pub max_retries: u32,
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::Validation("query needs at least one category".to_owned()));
        }
        if !(1..=2000).contains(&self.page_size) {
            return Err(Error::Validation(format!(
                "page size {} outside 1..=2000",
                self.page_size
            )));
        }
        Ok(())
    }
}

/// Query string for the arXiv API: a disjunction over the categories
/// (a paper matches if it lists any of them, cross-listed or primary)
/// AND the submission-date range. Deterministic: categories come from an
/// ordered set.
pub fn build_query(spec: &QuerySpec) -> Result<String> {
    spec.validate()?;
    let cats: Vec<String> = spec
        .categories
        .iter()
        .map(|c| format!("cat:{c}"))
        .collect();
    let cat_clause = if cats.len() == 1 {
        cats.into_iter().next().expect("one category")
    } else {
        format!("({})", cats.join(" OR "))
    };
    Ok(format!(
        "{cat_clause} AND submittedDate:[{}0000 TO {}2359]",
        spec.window.start.format("%Y%m%d"),
        spec.window.end.format("%Y%m%d")
    ))
}

/// URL of one result page. Shared between the fetch loop and the replay
/// fixture generator so both sides hash identical requests.
pub fn page_request(base_url: &str, spec: &QuerySpec, start: usize) -> Result<ApiRequest> {
    let query = build_query(spec)?;
    let mut url = Url::parse(base_url)
        .map_err(|e| Error::Validation(format!("bad API base URL {base_url:?}: {e}")))?;
    url.query_pairs_mut()
        .append_pair("search_query", &query)
        .append_pair("start", &start.to_string())
        .append_pair("max_results", &spec.page_size.to_string())
        .append_pair("sortBy", "submittedDate")
        .append_pair("sortOrder", "ascending");
    Ok(ApiRequest::get(String::from(url)))
}

/// Fetches and parses every result page into a corpus.
///
/// Records are filtered client-side to the submission window and the
/// queried categories, and deduplicated by base id (first page wins).
/// Entries the parser rejects are logged and skipped. A transport
/// failure aborts with a note of how far the fetch got.
pub fn fetch_corpus(
    spec: &QuerySpec,
    transport: &dyn Transport,
    base_url: &str,
    retrieval_time: DateTime<Utc>,
) -> Result<Corpus> {
    spec.validate()?;
    let mut corpus = Corpus::new(spec.window, spec.categories.clone(), retrieval_time)?;

    let mut start = 0usize;
    let mut pages = 0usize;
    loop {
        let request = page_request(base_url, spec, start)?;
        let bytes = transport.fetch(&request).map_err(|e| match e {
            Error::Network(message) => Error::Network(format!(
                "{message} (fetched {pages} pages, {} records so far)",
                corpus.len()
            )),
            other => other,
        })?;
        let page = parse_feed(&bytes)?;
        pages += 1;

        for entry_error in &page.entry_errors {
            log::warn!(
                "skipping feed entry {} of page {pages}: {}",
                entry_error.index,
                entry_error.message
            );
        }
        let seen = page.entries_seen();
        for record in page.records {
            let date = record.first_submitted.date_naive();
            if !spec.window.contains(date) {
                continue;
            }
            if !record.categories.iter().any(|c| spec.categories.contains(c)) {
                continue;
            }
            corpus.insert(record)?;
        }

        if seen == 0 {
            break;
        }
        start += seen;
        if start >= page.total_results {
            break;
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn spec(categories: &[&str]) -> QuerySpec {
        QuerySpec {
            categories: categories.iter().map(|c| (*c).to_owned()).collect(),
            window: DateWindow::new(
                NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2023, 9, 30).unwrap(),
            )
            .unwrap(),
            page_size: 200,
            max_retries: 5,
        }
    }

    #[test]
    fn single_category_query() {
        let q = build_query(&spec(&["cs.CL"])).unwrap();
        assert_eq!(
            q,
            "cat:cs.CL AND submittedDate:[202301010000 TO 202309302359]"
        );
    }

    #[test]
    fn four_way_disjunction_is_sorted() {
        let q = build_query(&spec(&["cs.CV", "cs.CL", "cs.AI", "cs.LG"])).unwrap();
        assert_eq!(
            q,
            "(cat:cs.AI OR cat:cs.CL OR cat:cs.CV OR cat:cs.LG) AND submittedDate:[202301010000 TO 202309302359]"
        );
    }

    #[test]
    fn duplicate_categories_collapse() {
        assert_eq!(
            build_query(&spec(&["cs.CL", "cs.CL"])).unwrap(),
            build_query(&spec(&["cs.CL"])).unwrap()
        );
    }

    #[test]
    fn page_request_is_deterministic() {
        let spec = spec(&["cs.CL"]);
        let a = page_request(DEFAULT_ARXIV_URL, &spec, 0).unwrap();
        let b = page_request(DEFAULT_ARXIV_URL, &spec, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.url.contains("start=0"));
        assert!(a.url.contains("max_results=200"));
    }

    #[test]
    fn rejects_invalid_spec() {
        let mut bad = spec(&["cs.CL"]);
        bad.page_size = 0;
        assert!(build_query(&bad).is_err());
        let empty = spec(&[]);
        assert!(empty.validate().is_err());
    }
}
