//! Metadata and citation harvesting with an on-disk response cache.
//!
//! Every raw response is written to the cache before it is parsed. In replay
//! mode the cache is the only data source, so a recorded harvest can be
//! re-run offline and produces identical results.
//!
//! Cache layout under `cache_dir`:
//!
//! ```text
//! metadata/request              first request URL of the harvest
//! metadata/page-<n>             raw OAI-PMH ListRecords pages, n = 0, 1, ...
//! citations/<paper_id>@<asof>   raw citation lookups ('/' in ids becomes '_')
//! ```

pub mod clock;
pub mod oai;
pub mod transport;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{split_version, Corpus, Field, PaperRecord};
use clock::{Clock, RateLimiter, SystemClock};
use oai::{ArxivEntry, OaiError};
use transport::{Fetcher, HttpTransport, OfflineTransport, RetriesExhausted, RetryPolicy, Transport};

pub const DEFAULT_METADATA_ENDPOINT: &str = "http://export.arxiv.org/oai2";
pub const DEFAULT_CITATION_ENDPOINT: &str = "https://api.semanticscholar.org/graph/v1/paper";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Live,
    Replay,
}

#[derive(Debug, Clone)]
pub struct HarvestConfig {
    pub metadata_endpoint: String,
    pub citation_endpoint: String,
    pub date_from: NaiveDate,
    pub date_to: NaiveDate,
    pub field: Field,
    pub max_requests_per_second: f64,
    pub max_retries: u32,
    pub cache_dir: PathBuf,
    pub mode: Mode,
    /// OAI set to list; records are then filtered to `field` by primary category.
    pub oai_set: String,
    /// Snapshot date for citation lookups. Live runs default to today; replay
    /// runs default to the latest recorded date per paper.
    pub asof: Option<NaiveDate>,
    /// Upper bound on concurrent citation lookups.
    pub concurrency: usize,
    pub backoff_base: Duration,
    pub api_key: Option<String>,
}

impl HarvestConfig {
    pub fn new(field: Field, date_from: NaiveDate, date_to: NaiveDate, cache_dir: impl Into<PathBuf>) -> Self {
        HarvestConfig {
            metadata_endpoint: DEFAULT_METADATA_ENDPOINT.into(),
            citation_endpoint: DEFAULT_CITATION_ENDPOINT.into(),
            date_from,
            date_to,
            field,
            max_requests_per_second: 1.0,
            max_retries: 3,
            cache_dir: cache_dir.into(),
            mode: Mode::Live,
            oai_set: "cs".into(),
            asof: None,
            concurrency: 4,
            backoff_base: Duration::from_secs(1),
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.date_from > self.date_to {
            return Err(HarvestError::Config(format!("--from {} is after --to {}", self.date_from, self.date_to)));
        }
        if !(self.max_requests_per_second > 0.0 && self.max_requests_per_second.is_finite()) {
            return Err(HarvestError::Config("request rate must be a positive number".into()));
        }
        if self.concurrency == 0 {
            return Err(HarvestError::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_retries: self.max_retries, base_delay: self.backoff_base }
    }
}

/// One paper's citation count as retrieved on `asof`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationSnapshot {
    pub paper_id: String,
    pub citation_count: u64,
    pub asof: NaiveDate,
}

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error("invalid harvest configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] RetriesExhausted),
    #[error("{url} answered HTTP {status}")]
    Http { url: String, status: u16 },
    #[error("OAI-PMH error {}: {}", .0.code, .0.message)]
    Oai(OaiError),
    #[error("cache: {0}")]
    Cache(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("corpus is empty; nothing to look up")]
    EmptyCorpus,
}

impl HarvestError {
    /// Failures caused by the network or filesystem rather than by user input.
    pub fn is_environmental(&self) -> bool {
        matches!(self, HarvestError::Network(_) | HarvestError::Http { .. } | HarvestError::Io { .. } | HarvestError::Oai(_))
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> HarvestError + '_ {
    move |source| HarvestError::Io { path: path.display().to_string(), source }
}

/// Writes via a temporary file and rename, so readers never see partial files.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarvestError> {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = path.parent().expect("cache paths have a parent");
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{}",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

fn read_if_exists(path: &Path) -> Result<Option<Vec<u8>>, HarvestError> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(HarvestError::Io { path: path.display().to_string(), source: e }),
    }
}

fn cache_key(paper_id: &str) -> String {
    paper_id.replace('/', "_")
}

pub fn metadata_page_path(cache_dir: &Path, page: usize) -> PathBuf {
    cache_dir.join("metadata").join(format!("page-{page}"))
}

pub fn citation_path(cache_dir: &Path, paper_id: &str, asof: NaiveDate) -> PathBuf {
    cache_dir.join("citations").join(format!("{}@{}", cache_key(paper_id), asof.format("%Y-%m-%d")))
}

/// What happened to the records of a metadata harvest besides the ones kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetadataReport {
    pub pages: usize,
    pub malformed_pages: Vec<(usize, String)>,
    pub malformed_records: Vec<String>,
    pub deleted: usize,
    pub other_field: usize,
    pub out_of_range: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MissReason {
    NotFound,
    NotCached,
    HttpStatus(u16),
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Miss {
    pub paper_id: String,
    pub reason: MissReason,
}

/// Papers without a citation snapshot, in paper_id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MissReport {
    pub misses: Vec<Miss>,
}

pub type SnapshotMap = BTreeMap<String, CitationSnapshot>;

pub struct Harvester {
    config: HarvestConfig,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
}

impl Harvester {
    /// Network-backed in live mode, cache-only in replay mode.
    pub fn new(config: HarvestConfig) -> Result<Self, HarvestError> {
        let transport: Arc<dyn Transport> = match config.mode {
            Mode::Live => Arc::new(HttpTransport::new().map_err(|e| HarvestError::Config(e.0))?),
            Mode::Replay => Arc::new(OfflineTransport),
        };
        Harvester::with_parts(config, transport, Arc::new(SystemClock::new()))
    }

    pub fn with_parts(config: HarvestConfig, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Result<Self, HarvestError> {
        config.validate()?;
        let limiter = RateLimiter::new(config.max_requests_per_second);
        Ok(Harvester { config, transport, clock, limiter })
    }

    pub fn config(&self) -> &HarvestConfig {
        &self.config
    }

    fn fetcher<'a>(&'a self, bearer: Option<&'a str>) -> Fetcher<'a> {
        Fetcher {
            transport: self.transport.as_ref(),
            clock: self.clock.as_ref(),
            limiter: &self.limiter,
            retry: self.config.retry_policy(),
            bearer,
        }
    }

    fn first_page_url(&self) -> String {
        let mut url =
            url::Url::parse(&self.config.metadata_endpoint).unwrap_or_else(|_| url::Url::parse("http://invalid.invalid/").unwrap());
        // OAI datestamps track the last modification, so only the lower bound
        // can be pushed to the server; creation dates are filtered locally.
        url.query_pairs_mut()
            .append_pair("verb", "ListRecords")
            .append_pair("metadataPrefix", "arXiv")
            .append_pair("set", &self.config.oai_set)
            .append_pair("from", &self.config.date_from.format("%Y-%m-%d").to_string());
        url.to_string()
    }

    fn resume_url(&self, token: &str) -> String {
        let mut url =
            url::Url::parse(&self.config.metadata_endpoint).unwrap_or_else(|_| url::Url::parse("http://invalid.invalid/").unwrap());
        url.query_pairs_mut().append_pair("verb", "ListRecords").append_pair("resumptionToken", token);
        url.to_string()
    }

    fn check_request_marker(&self, first_url: &str) -> Result<(), HarvestError> {
        let marker = self.config.cache_dir.join("metadata").join("request");
        match read_if_exists(&marker)? {
            Some(existing) if existing != first_url.as_bytes() => Err(HarvestError::Cache(format!(
                "{} holds a different harvest ({}); use a fresh cache directory",
                self.config.cache_dir.display(),
                String::from_utf8_lossy(&existing).trim()
            ))),
            Some(_) => Ok(()),
            None if self.config.mode == Mode::Replay => {
                Err(HarvestError::Cache(format!("no recorded metadata harvest under {}", self.config.cache_dir.display())))
            }
            None => write_atomic(&marker, first_url.as_bytes()),
        }
    }

    fn page_body(&self, page: usize, url: &str) -> Result<Vec<u8>, HarvestError> {
        let path = metadata_page_path(&self.config.cache_dir, page);
        if let Some(body) = read_if_exists(&path)? {
            return Ok(body);
        }
        if self.config.mode == Mode::Replay {
            return Err(HarvestError::Cache(format!("recorded harvest is incomplete: {} is missing", path.display())));
        }
        let resp = self.fetcher(None).get(url)?;
        if !resp.is_success() {
            return Err(HarvestError::Http { url: url.to_string(), status: resp.status });
        }
        write_atomic(&path, &resp.body)?;
        Ok(resp.body)
    }

    /// Follows the resumption-token chain and keeps records of the configured
    /// field created within the configured date range.
    ///
    /// Cached pages are reused, so a live run interrupted part-way resumes
    /// where it stopped.
    pub fn harvest_metadata(&self) -> Result<(Corpus, MetadataReport), HarvestError> {
        let first_url = self.first_page_url();
        self.check_request_marker(&first_url)?;

        let mut report = MetadataReport::default();
        let mut records: BTreeMap<String, PaperRecord> = BTreeMap::new();
        let mut url = first_url;
        let mut page = 0;
        loop {
            let body = self.page_body(page, &url)?;
            report.pages += 1;
            let parsed = match oai::parse_page(&body) {
                Ok(p) => p,
                Err(e) => {
                    // without a parseable page there is no token to continue from
                    report.malformed_pages.push((page, e));
                    break;
                }
            };
            if let Some(err) = parsed.error {
                if err.code == "noRecordsMatch" {
                    break;
                }
                return Err(HarvestError::Oai(err));
            }
            report.deleted += parsed.deleted;
            for entry in parsed.records {
                match entry {
                    Err(e) => report.malformed_records.push(e),
                    Ok(entry) => match self.admit(entry) {
                        Ok(record) => {
                            records.insert(record.paper_id.clone(), record);
                        }
                        Err(Rejected::OtherField) => report.other_field += 1,
                        Err(Rejected::OutOfRange) => report.out_of_range += 1,
                    },
                }
            }
            match parsed.resumption_token {
                Some(token) => {
                    url = self.resume_url(&token);
                    page += 1;
                }
                None => break,
            }
        }
        let corpus =
            Corpus::from_records(self.config.field, records.into_values()).expect("records are filtered to one field and keyed by id");
        Ok((corpus, report))
    }

    fn admit(&self, entry: ArxivEntry) -> Result<PaperRecord, Rejected> {
        let primary = entry.categories.first().map(String::as_str);
        if primary != Some(self.config.field.as_str()) {
            return Err(Rejected::OtherField);
        }
        if entry.created < self.config.date_from || entry.created > self.config.date_to {
            return Err(Rejected::OutOfRange);
        }
        Ok(PaperRecord {
            paper_id: split_version(&entry.id).0.to_string(),
            title: entry.title,
            abstract_text: entry.abstract_text,
            authors: entry.authors,
            field: self.config.field,
            submitted: entry.created,
            citation_count: None,
            citation_asof: None,
        })
    }

    fn citation_url(&self, paper_id: &str) -> String {
        format!("{}/arXiv:{}?fields=citationCount", self.config.citation_endpoint.trim_end_matches('/'), paper_id)
    }

    /// Looks up citation counts for every paper of `corpus`.
    ///
    /// Per-paper failures end up in the miss report. Only an endpoint that
    /// stays unreachable through all retries aborts the run.
    pub fn fetch_citations(&self, corpus: &Corpus) -> Result<(SnapshotMap, MissReport), HarvestError> {
        if corpus.is_empty() {
            return Err(HarvestError::EmptyCorpus);
        }
        let papers: Vec<&PaperRecord> = corpus.records().collect();
        let outcomes = match self.config.mode {
            Mode::Replay => self.replay_citations(&papers)?,
            Mode::Live => self.live_citations(&papers)?,
        };
        let mut map = SnapshotMap::new();
        let mut misses = MissReport::default();
        for (paper, outcome) in papers.iter().zip(outcomes) {
            match outcome {
                Ok(s) => {
                    map.insert(paper.paper_id.clone(), s);
                }
                Err(reason) => misses.misses.push(Miss { paper_id: paper.paper_id.clone(), reason }),
            }
        }
        Ok((map, misses))
    }

    fn replay_citations(&self, papers: &[&PaperRecord]) -> Result<Vec<Result<CitationSnapshot, MissReason>>, HarvestError> {
        let index = self.recorded_citations()?;
        papers
            .iter()
            .map(|p| {
                let recorded = index.get(&cache_key(&p.paper_id));
                let asof = match (self.config.asof, recorded) {
                    (Some(d), Some(dates)) if dates.contains(&d) => d,
                    (None, Some(dates)) => *dates.last().expect("index entries are non-empty"),
                    _ => return Ok(Err(MissReason::NotCached)),
                };
                let path = citation_path(&self.config.cache_dir, &p.paper_id, asof);
                let body = fs::read(&path).map_err(io_error(&path))?;
                Ok(parse_citation(&p.paper_id, asof, &body))
            })
            .collect()
    }

    /// Recorded snapshot dates per cache key, ascending.
    fn recorded_citations(&self) -> Result<BTreeMap<String, Vec<NaiveDate>>, HarvestError> {
        let dir = self.config.cache_dir.join("citations");
        let mut index: BTreeMap<String, Vec<NaiveDate>> = BTreeMap::new();
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(index),
            Err(e) => return Err(HarvestError::Io { path: dir.display().to_string(), source: e }),
        };
        for entry in entries {
            let entry = entry.map_err(io_error(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') {
                continue;
            }
            if let Some((key, date)) = name.rsplit_once('@') {
                if let Ok(d) = NaiveDate::parse_from_str(date, "%Y-%m-%d") {
                    index.entry(key.to_string()).or_default().push(d);
                }
            }
        }
        for dates in index.values_mut() {
            dates.sort();
        }
        Ok(index)
    }

    fn live_citations(&self, papers: &[&PaperRecord]) -> Result<Vec<Result<CitationSnapshot, MissReason>>, HarvestError> {
        let asof = self.config.asof.unwrap_or_else(|| Utc::now().date_naive());
        let bearer = self.config.api_key.as_deref();
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let results: Mutex<Vec<Option<Result<CitationSnapshot, MissReason>>>> = Mutex::new(vec![None; papers.len()]);
        let fatal: Mutex<Option<HarvestError>> = Mutex::new(None);

        let worker = || {
            let fetcher = self.fetcher(bearer);
            while !abort.load(Ordering::SeqCst) {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(paper) = papers.get(i) else { break };
                match self.lookup_one(&fetcher, &paper.paper_id, asof) {
                    Ok(outcome) => results.lock().unwrap()[i] = Some(outcome),
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        fatal.lock().unwrap().get_or_insert(e);
                    }
                }
            }
        };
        let workers = self.config.concurrency.min(papers.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(worker);
            }
        });
        if let Some(e) = fatal.into_inner().unwrap() {
            return Err(e);
        }
        Ok(results.into_inner().unwrap().into_iter().map(|r| r.expect("every paper was processed")).collect())
    }

    fn lookup_one(
        &self,
        fetcher: &Fetcher<'_>,
        paper_id: &str,
        asof: NaiveDate,
    ) -> Result<Result<CitationSnapshot, MissReason>, HarvestError> {
        let path = citation_path(&self.config.cache_dir, paper_id, asof);
        if let Some(body) = read_if_exists(&path)? {
            return Ok(parse_citation(paper_id, asof, &body));
        }
        let resp = fetcher.get(&self.citation_url(paper_id))?;
        match resp.status {
            200..=299 => {
                write_atomic(&path, &resp.body)?;
                Ok(parse_citation(paper_id, asof, &resp.body))
            }
            404 => Ok(Err(MissReason::NotFound)),
            status => Ok(Err(MissReason::HttpStatus(status))),
        }
    }
}

enum Rejected {
    OtherField,
    OutOfRange,
}

fn parse_citation(paper_id: &str, asof: NaiveDate, body: &[u8]) -> Result<CitationSnapshot, MissReason> {
    let value: serde_json::Value = serde_json::from_slice(body).map_err(|e| MissReason::Malformed(e.to_string()))?;
    let count = value
        .get("citationCount")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| MissReason::Malformed("no non-negative integer citationCount".into()))?;
    Ok(CitationSnapshot { paper_id: paper_id.to_string(), citation_count: count, asof })
}

/// Copies snapshot counts onto matching records. Returns the updated corpus
/// and the snapshot ids that matched no record, sorted.
pub fn attach_citations(corpus: &Corpus, snapshots: &SnapshotMap) -> (Corpus, Vec<String>) {
    let mut out = corpus.clone();
    for record in out.records_mut() {
        if let Some(s) = snapshots.get(&record.paper_id) {
            record.citation_count = Some(s.citation_count);
            record.citation_asof = Some(s.asof);
        }
    }
    let unknown = snapshots.keys().filter(|id| corpus.get(id).is_none()).cloned().collect();
    (out, unknown)
}

/// Snapshot maps are stored as one JSON object per line, in paper_id order.
pub fn write_snapshots<W: io::Write>(snapshots: &SnapshotMap, mut w: W) -> io::Result<()> {
    for s in snapshots.values() {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
