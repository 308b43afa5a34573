//! HTTP transport with caching, pacing and replay.
//!
//! Both remote APIs are driven through the [`Transport`] trait so the
//! whole pipeline can run offline: [`HttpTransport`] talks to the network
//! and writes every raw response into a cache directory, and
//! [`ReplayTransport`] serves a directory with that same layout instead
//! of the network. Cache files are named by the SHA-256 of the request
//! (URL plus body); `index.tsv` maps hashes back to URLs for humans.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One API request: a GET, or a POST when `body` is present (sent as
/// JSON).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub url: String,
    pub body: Option<String>,
}

impl ApiRequest {
    pub fn get(url: impl Into<String>) -> Self {
        ApiRequest {
            url: url.into(),
            body: None,
        }
    }

    pub fn post(url: impl Into<String>, body: impl Into<String>) -> Self {
        ApiRequest {
            url: url.into(),
            body: Some(body.into()),
        }
    }

    /// Cache file name for this request: hex SHA-256 over the URL and
    /// body separated by a newline.
    pub fn cache_key(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.url.as_bytes());
        hasher.update(b"\n");
        if let Some(body) = &self.body {
            hasher.update(body.as_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub trait Transport {
    /// Returns the raw response bytes for a request, retrying and pacing
    /// as the implementation sees fit.
    fn fetch(&self, request: &ApiRequest) -> Result<Vec<u8>>;
}

/// Network transport: paced, retried with exponential backoff, and
/// caching every successful response body before returning it.
///
/// Retry policy: HTTP 429 and 5xx responses and plain transport failures
/// back off and retry (delay doubling per attempt); other 4xx responses
/// abort immediately with the server's message. At most one request is
/// in flight at a time.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    cache_dir: PathBuf,
    pacing: Duration,
    backoff_base: Duration,
    max_retries: u32,
    api_key: Option<String>,
    last_request: RefCell<Option<Instant>>,
}

impl HttpTransport {
    pub fn new(cache_dir: impl Into<PathBuf>, pacing: Duration, max_retries: u32) -> Result<Self> {
        let cache_dir = cache_dir.into();
        fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Network(format!("building HTTP client: {e}")))?;
        Ok(HttpTransport {
            client,
            cache_dir,
            pacing,
            backoff_base: Duration::from_secs(1),
            max_retries,
            api_key: None,
            last_request: RefCell::new(None),
        })
    }

    /// Base delay of the exponential backoff (doubled per retry).
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    /// Credential sent as the `x-api-key` header.
    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    fn pace(&self) {
        let mut last = self.last_request.borrow_mut();
        if let Some(at) = *last {
            let elapsed = at.elapsed();
            if elapsed < self.pacing {
                thread::sleep(self.pacing - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn send(&self, request: &ApiRequest) -> reqwest::Result<reqwest::blocking::Response> {
        let mut builder = match &request.body {
            Some(body) => self
                .client
                .post(&request.url)
                .header("content-type", "application/json")
                .body(body.clone()),
            None => self.client.get(&request.url),
        };
        if let Some(key) = &self.api_key {
            builder = builder.header("x-api-key", key);
        }
        builder.send()
    }

    fn store(&self, request: &ApiRequest, bytes: &[u8]) -> Result<()> {
        let key = request.cache_key();
        let path = self.cache_dir.join(&key);
        let new_entry = !path.exists();
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        if new_entry {
            let index = self.cache_dir.join("index.tsv");
            let line = format!("{key}\t{}\n", request.url);
            let mut existing = fs::read_to_string(&index).unwrap_or_default();
            existing.push_str(&line);
            fs::write(&index, existing).map_err(|e| Error::io(&index, e))?;
        }
        Ok(())
    }
}

impl Transport for HttpTransport {
    fn fetch(&self, request: &ApiRequest) -> Result<Vec<u8>> {
        let mut last_failure = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let delay = self.backoff_base * 2u32.pow(attempt - 1);
                log::warn!(
                    "retrying {} in {:.1}s ({last_failure})",
                    request.url,
                    delay.as_secs_f64()
                );
                thread::sleep(delay);
            }
            self.pace();
            match self.send(request) {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let bytes = response
                            .bytes()
                            .map_err(|e| Error::Network(format!("reading response body: {e}")))?
                            .to_vec();
                        self.store(request, &bytes)?;
                        return Ok(bytes);
                    }
                    let body = response.text().unwrap_or_default();
                    let summary = body.trim().chars().take(300).collect::<String>();
                    if status.as_u16() == 429 {
                        last_failure = format!("HTTP 429: {summary}");
                    } else if status.is_client_error() {
                        return Err(Error::Network(format!(
                            "{}: HTTP {status}: {summary}",
                            request.url
                        )));
                    } else {
                        last_failure = format!("HTTP {status}: {summary}");
                    }
                }
                Err(e) => last_failure = e.to_string(),
            }
        }
        Err(Error::Network(format!(
            "{}: giving up after {} retries ({last_failure})",
            request.url, self.max_retries
        )))
    }
}

/// Serves responses from a cache directory instead of the network.
/// Requests without a recorded response fail.
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayTransport { dir: dir.into() }
    }
}

impl Transport for ReplayTransport {
    fn fetch(&self, request: &ApiRequest) -> Result<Vec<u8>> {
        let key = request.cache_key();
        let path = self.dir.join(&key);
        fs::read(&path).map_err(|_| {
            Error::Network(format!(
                "no replayed response for {} (expected {})",
                request.url,
                path.display()
            ))
        })
    }
}

/// Writes a response into a replay/cache directory, using the same
/// layout [`HttpTransport`] maintains. Fixture generators use this.
pub fn record_response(dir: &Path, request: &ApiRequest, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let key = request.cache_key();
    let path = dir.join(&key);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    let index = dir.join("index.tsv");
    let mut existing = fs::read_to_string(&index).unwrap_or_default();
    if !existing.lines().any(|l| l.starts_with(&key)) {
        existing.push_str(&format!("{key}\t{}\n", request.url));
        fs::write(&index, existing).map_err(|e| Error::io(&index, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_depends_on_url_and_body() {
        let a = ApiRequest::get("http://example.org/x");
        let b = ApiRequest::get("http://example.org/y");
        let c = ApiRequest::post("http://example.org/x", "{}");
        assert_ne!(a.cache_key(), b.cache_key());
        assert_ne!(a.cache_key(), c.cache_key());
        assert_eq!(a.cache_key().len(), 64);
        assert_eq!(a.cache_key(), a.cache_key());
    }

    #[test]
    fn replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let request = ApiRequest::get("http://example.org/feed?page=1");
        record_response(dir.path(), &request, b"payload").unwrap();
        let replay = ReplayTransport::new(dir.path());
        assert_eq!(replay.fetch(&request).unwrap(), b"payload");
        let index = fs::read_to_string(dir.path().join("index.tsv")).unwrap();
        assert!(index.contains("http://example.org/feed?page=1"));
    }

    #[test]
    fn replay_misses_are_network_errors() {
        let dir = tempfile::tempdir().unwrap();
        let replay = ReplayTransport::new(dir.path());
        let err = replay
            .fetch(&ApiRequest::get("http://example.org/missing"))
            .unwrap_err();
        assert_eq!(err.kind(), crate::error::ErrorKind::Network);
        assert!(err.to_string().contains("example.org/missing"));
    }
}
