//! Corpus and snapshot persistence.
//!
//! Both file kinds are line-delimited JSON: a header record carrying the
//! schema version and set-level metadata, then one record per line. Records
//! are written in ascending base-id order with a fixed field order and
//! timestamp format, so saving the same data twice produces identical
//! bytes. Exclusion lists are plain text, one base id per line, with `#`
//! comments.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::arxiv_id::normalize_arxiv_id;
use crate::error::{Error, Result};
use crate::model::{CitationSnapshot, CitationSource, Corpus, DateWindow, PaperRecord, SnapshotSet};
use crate::timefmt;

/// Schema version written to and required in corpus file headers.
pub const CORPUS_SCHEMA: &str = "corpus/v1";
/// Schema version written to and required in snapshot file headers.
pub const SNAPSHOT_SCHEMA: &str = "snapshot/v1";

#[derive(Serialize, Deserialize)]
struct CorpusHeader {
    schema: String,
    window_start: NaiveDate,
    window_end: NaiveDate,
    query_categories: Vec<String>,
    #[serde(with = "timefmt")]
    retrieval_time: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    schema: String,
    source: CitationSource,
    #[serde(with = "timefmt")]
    retrieved_at: DateTime<Utc>,
}

fn write_json_line<T: Serialize>(out: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string(value)
        .map_err(|e| Error::record(path, 0, format!("serialize: {e}")))?;
    out.write_all(body.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

fn write_lines<H: Serialize, T: Serialize>(
    path: &Path,
    header: &H,
    records: impl Iterator<Item = T>,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_json_line(&mut out, path, header)?;
    for record in records {
        write_json_line(&mut out, path, &record)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let header = CorpusHeader {
        schema: CORPUS_SCHEMA.to_owned(),
        window_start: corpus.window.start,
        window_end: corpus.window.end,
        query_categories: corpus.query_categories.iter().cloned().collect(),
        retrieval_time: corpus.retrieval_time,
    };
    write_lines(path, &header, corpus.records())
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::record(path, 1, "empty file, expected header record"))?;
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: CorpusHeader = serde_json::from_str(&first)
        .map_err(|e| Error::record(path, 1, format!("bad header: {e}")))?;
    if header.schema != CORPUS_SCHEMA {
        return Err(Error::Integrity(format!(
            "{}: schema {:?}, this build reads {CORPUS_SCHEMA:?}",
            path.display(),
            header.schema
        )));
    }

    let window = DateWindow::new(header.window_start, header.window_end)?;
    let mut corpus = Corpus::new(
        window,
        header.query_categories.into_iter().collect(),
        header.retrieval_time,
    )?;
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PaperRecord = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        let id = record.base_id.clone();
        let inserted = corpus
            .insert(record)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        if !inserted {
            return Err(Error::Integrity(format!(
                "{}: duplicate paper {id} at line {}",
                path.display(),
                idx + 1
            )));
        }
    }
    Ok(corpus)
}

pub fn save_snapshots(set: &SnapshotSet, path: &Path) -> Result<()> {
    let header = SnapshotHeader {
        schema: SNAPSHOT_SCHEMA.to_owned(),
        source: set.source.clone(),
        retrieved_at: set.retrieved_at,
    };
    write_lines(path, &header, set.snapshots())
}

pub fn load_snapshots(path: &Path) -> Result<SnapshotSet> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::record(path, 1, "empty file, expected header record"))?;
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: SnapshotHeader = serde_json::from_str(&first)
        .map_err(|e| Error::record(path, 1, format!("bad header: {e}")))?;
    if header.schema != SNAPSHOT_SCHEMA {
        return Err(Error::Integrity(format!(
            "{}: schema {:?}, this build reads {SNAPSHOT_SCHEMA:?}",
            path.display(),
            header.schema
        )));
    }

    let mut set = SnapshotSet::new(header.source, header.retrieved_at);
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let snapshot: CitationSnapshot = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        if set.get(&snapshot.base_id).is_some() {
            return Err(Error::Integrity(format!(
                "{}: duplicate snapshot for {} at line {}",
                path.display(),
                snapshot.base_id,
                idx + 1
            )));
        }
        set.insert(snapshot)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
    }
    Ok(set)
}

/// Reads an exclusion list. Blank lines and `#` comments are skipped;
/// everything else must normalize to a base id.
pub fn load_exclusions(path: &Path) -> Result<BTreeSet<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let entry = line.split('#').next().unwrap_or("").trim();
        if entry.is_empty() {
            continue;
        }
        let id = normalize_arxiv_id(entry)
            .map_err(|e| Error::record(path, idx + 1, e.to_string()))?;
        ids.insert(id);
    }
    Ok(ids)
}
