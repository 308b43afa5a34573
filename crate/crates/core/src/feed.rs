//! arXiv Atom feed parsing.
//!
//! The query API returns Atom XML: a feed element with OpenSearch paging
//! counters and one entry per paper. Parsing is a single streaming pass;
//! a broken document fails with the byte offset, while an entry that is
//! merely missing fields becomes a per-entry error so one bad record
//! cannot sink a page.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::arxiv_id::normalize_arxiv_id;
use crate::error::{Error, Result};
use crate::model::{AuthorRef, PaperRecord};
use crate::timefmt;

/// One parsed feed page.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeedPage {
    pub records: Vec<PaperRecord>,
    pub entry_errors: Vec<EntryError>,
    /// Total matches reported by the server, across all pages.
    pub total_results: usize,
    pub start_index: usize,
    pub items_per_page: usize,
}

impl FeedPage {
    /// Entries this page consumed, valid or not.
    pub fn entries_seen(&self) -> usize {
        self.records.len() + self.entry_errors.len()
    }
}

/// An entry that could not be turned into a record; `index` counts
/// entries within the page, starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryError {
    pub index: usize,
    pub message: String,
}

/// Collapses every run of whitespace (including newlines from wrapped
/// titles) into a single space and trims the ends.
fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn local_name(raw: &[u8]) -> &[u8] {
    match raw.iter().rposition(|b| *b == b':') {
        Some(pos) => &raw[pos + 1..],
        None => raw,
    }
}

#[derive(Default)]
struct EntryDraft {
    id: String,
    published: String,
    title: String,
    summary: String,
    comment: String,
    primary_category: Option<String>,
    categories: Vec<String>,
    authors: Vec<String>,
    current_author: String,
}

impl EntryDraft {
    fn finish(self) -> std::result::Result<PaperRecord, String> {
        if self.id.trim().is_empty() {
            return Err("entry without an id".to_owned());
        }
        let tail = self
            .id
            .trim()
            .rsplit_once("/abs/")
            .map(|(_, tail)| tail.to_owned())
            .unwrap_or_else(|| self.id.trim().to_owned());
        let base_id = normalize_arxiv_id(&tail).map_err(|e| e.to_string())?;

        if self.published.trim().is_empty() {
            return Err(format!("entry {base_id}: missing published date"));
        }
        let first_submitted =
            timefmt::parse(self.published.trim()).map_err(|e| format!("entry {base_id}: {e}"))?;

        let title = collapse_ws(&self.title);
        if title.is_empty() {
            return Err(format!("entry {base_id}: empty title"));
        }

        let mut categories: Vec<String> = Vec::new();
        for cat in self.categories {
            if !categories.contains(&cat) {
                categories.push(cat);
            }
        }
        let primary_category = match self.primary_category {
            Some(primary) => primary,
            None => categories
                .first()
                .cloned()
                .ok_or_else(|| format!("entry {base_id}: no categories"))?,
        };
        if !categories.contains(&primary_category) {
            categories.insert(0, primary_category.clone());
        }

        let comment = collapse_ws(&self.comment);
        let record = PaperRecord {
            base_id,
            title,
            abstract_text: collapse_ws(&self.summary),
            primary_category,
            categories,
            first_submitted,
            comment: (!comment.is_empty()).then_some(comment),
            authors: self
                .authors
                .into_iter()
                .map(|name| AuthorRef::new(collapse_ws(&name)))
                .collect(),
        };
        record.validate().map_err(|e| e.to_string())?;
        Ok(record)
    }
}

fn term_attribute(element: &BytesStart<'_>) -> Option<String> {
    element
        .try_get_attribute("term")
        .ok()
        .flatten()
        .and_then(|attr| attr.unescape_value().ok())
        .map(|v| v.into_owned())
}

/// Parses one Atom page. Malformed XML fails with its byte offset;
/// entries missing required fields are collected as [`EntryError`]s and
/// parsing continues.
pub fn parse_feed(bytes: &[u8]) -> Result<FeedPage> {
    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();

    let mut page = FeedPage::default();
    let mut draft: Option<EntryDraft> = None;
    let mut entry_index = 0usize;
    let mut path: Vec<Vec<u8>> = Vec::new();
    let mut in_author = false;
    let mut saw_feed = false;

    loop {
        let position = reader.buffer_position();
        match reader.read_event_into(&mut buf) {
            Err(e) => {
                return Err(Error::FeedParse {
                    offset: position,
                    message: e.to_string(),
                })
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => {
                let name = local_name(e.name().as_ref()).to_vec();
                match name.as_slice() {
                    b"feed" => saw_feed = true,
                    b"entry" => draft = Some(EntryDraft::default()),
                    b"author" if draft.is_some() => in_author = true,
                    b"category" | b"primary_category" => {
                        if let (Some(draft), Some(term)) = (draft.as_mut(), term_attribute(&e)) {
                            if name == b"primary_category" {
                                draft.primary_category = Some(term);
                            } else {
                                draft.categories.push(term);
                            }
                        }
                    }
                    _ => {}
                }
                path.push(name);
            }
            Ok(Event::Empty(e)) => {
                let name = local_name(e.name().as_ref()).to_vec();
                if let (Some(draft), Some(term)) = (draft.as_mut(), term_attribute(&e)) {
                    if name == b"primary_category" {
                        draft.primary_category = Some(term);
                    } else if name == b"category" {
                        draft.categories.push(term);
                    }
                }
            }
            Ok(Event::Text(t)) => {
                let text = t.unescape().map_err(|e| Error::FeedParse {
                    offset: position,
                    message: e.to_string(),
                })?;
                let leaf = path.last().map(Vec::as_slice).unwrap_or(b"");
                match draft.as_mut() {
                    Some(draft) => match leaf {
                        b"id" => draft.id.push_str(&text),
                        b"published" => draft.published.push_str(&text),
                        b"title" => draft.title.push_str(&text),
                        b"summary" => draft.summary.push_str(&text),
                        b"comment" => draft.comment.push_str(&text),
                        b"name" if in_author => draft.current_author.push_str(&text),
                        _ => {}
                    },
                    None => {
                        let counter = match leaf {
                            b"totalResults" => Some(&mut page.total_results),
                            b"startIndex" => Some(&mut page.start_index),
                            b"itemsPerPage" => Some(&mut page.items_per_page),
                            _ => None,
                        };
                        if let Some(slot) = counter {
                            *slot = text.trim().parse().map_err(|_| Error::FeedParse {
                                offset: position,
                                message: format!(
                                    "non-numeric paging counter {:?}",
                                    text.trim()
                                ),
                            })?;
                        }
                    }
                }
            }
            Ok(Event::End(e)) => {
                let name = local_name(e.name().as_ref()).to_vec();
                path.pop();
                match name.as_slice() {
                    b"author" => {
                        if let Some(draft) = draft.as_mut() {
                            let author = std::mem::take(&mut draft.current_author);
                            let author = collapse_ws(&author);
                            if !author.is_empty() {
                                draft.authors.push(author);
                            }
                        }
                        in_author = false;
                    }
                    b"entry" => {
                        if let Some(draft) = draft.take() {
                            match draft.finish() {
                                Ok(record) => page.records.push(record),
                                Err(message) => page.entry_errors.push(EntryError {
                                    index: entry_index,
                                    message,
                                }),
                            }
                            entry_index += 1;
                        }
                    }
                    _ => {}
                }
            }
            Ok(_) => {}
        }
        buf.clear();
    }

    if !saw_feed {
        return Err(Error::FeedParse {
            offset: 0,
            message: "document has no feed element".to_owned(),
        });
    }
    Ok(page)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_collapses_to_single_spaces() {
        assert_eq!(collapse_ws("  a\n  b\tc  "), "a b c");
        assert_eq!(collapse_ws("\n \n"), "");
    }

    #[test]
    fn local_names_drop_prefixes() {
        assert_eq!(local_name(b"arxiv:comment"), b"comment");
        assert_eq!(local_name(b"opensearch:totalResults"), b"totalResults");
        assert_eq!(local_name(b"entry"), b"entry");
    }
}
