//! Citation-trend analysis for arXiv corpora.
//!
//! The pipeline: fetch paper metadata for a date window ([`ingest`]),
//! snapshot citation counts ([`citations`]), rank papers by a
//! week-normalized stable z-score ([`zscore`]), then compare rankings
//! ([`correlation`]), trace keyword topics over time ([`trends`]), credit
//! institutions ([`affiliations`]) and bundle everything into a report
//! ([`report`]). All remote traffic goes through [`transport`], which can
//! replay cached bytes for fully offline, deterministic runs.

pub mod affiliations;
pub mod arxiv_id;
pub mod citations;
pub mod correlation;
pub mod error;
pub mod feed;
pub mod ingest;
pub mod model;
pub mod report;
pub mod stats;
pub mod store;
pub mod timefmt;
pub mod transport;
pub mod trends;
pub mod zscore;

pub use error::{Error, ErrorKind, Result};
