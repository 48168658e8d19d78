//! Shared helpers for the integration suites: fixture paths, random corpora
//! and a brute-force scoring oracle that shares no code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use rand::rngs::StdRng;
use rand::Rng;
use trendscope::corpus::{Corpus, Field, PaperRecord};
use trendscope::scoring::{ScoringConfig, StdMode};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn record(id: &str, submitted: NaiveDate, citations: Option<u64>) -> PaperRecord {
    PaperRecord {
        paper_id: id.to_string(),
        title: format!("Paper {id}"),
        abstract_text: String::new(),
        authors: vec![],
        field: Field::CsCl,
        submitted,
        citation_count: citations,
        citation_asof: citations.map(|_| date(2018, 12, 31)),
    }
}

/// Up to `max_papers` papers with counts uniform in [0, 300] (about one in ten
/// without citation data) and dates spread over at most 600 days.
pub fn random_corpus(rng: &mut StdRng, max_papers: usize) -> Corpus {
    let n = rng.random_range(0..=max_papers);
    let span = rng.random_range(0..600i64);
    let start = date(2017, 1, 1) + Duration::days(rng.random_range(0..365));
    let records = (0..n).map(|i| {
        let submitted = start + Duration::days(rng.random_range(0..=span));
        let citations = if rng.random_bool(0.1) { None } else { Some(rng.random_range(0..=300u64)) };
        record(&format!("{}.{:05}", 1700 + i / 10000, i), submitted, citations)
    });
    Corpus::from_records(Field::CsCl, records.collect::<Vec<_>>()).unwrap()
}

pub fn random_config(rng: &mut StdRng, case: usize) -> ScoringConfig {
    ScoringConfig {
        half_width_days: if rng.random_bool(0.5) { 10 } else { rng.random_range(0..40) },
        min_citations: rng.random_range(0..10),
        std_mode: if case.is_multiple_of(2) { StdMode::Population } else { StdMode::Sample },
        include_self: case % 4 < 2,
    }
}

/// Expected z-scores by paper id, computed straight from the definition.
pub fn oracle_scores(corpus: &Corpus, config: &ScoringConfig) -> BTreeMap<String, f64> {
    let papers: Vec<&PaperRecord> = corpus.records().collect();
    let mut out = BTreeMap::new();
    for p in &papers {
        let Some(c) = p.citation_count else { continue };
        if c < config.min_citations {
            continue;
        }
        let mut window = Vec::new();
        for q in &papers {
            let Some(qc) = q.citation_count else { continue };
            if q.paper_id == p.paper_id && !config.include_self {
                continue;
            }
            if (q.submitted - p.submitted).num_days().abs() <= i64::from(config.half_width_days) {
                window.push(qc as f64);
            }
        }
        let n = window.len() as f64;
        let dof = match config.std_mode {
            StdMode::Population => n,
            StdMode::Sample => n - 1.0,
        };
        if window.is_empty() || dof <= 0.0 || window.iter().all(|&x| x == window[0]) {
            continue;
        }
        let mean = window.iter().sum::<f64>() / n;
        let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / dof;
        out.insert(p.paper_id.clone(), (c as f64 - mean) / var.sqrt());
    }
    out
}

pub mod mock {
    use std::fs;
    use std::path::Path;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    use trendscope::harvest::transport::{HttpResponse, Transport, TransportError};

    /// Serves the recorded fixture cache as if it were the live endpoints.
    ///
    /// Listing requests with a resumption token get `page-1`, others `page-0`;
    /// citation lookups are answered from `citations/<id>@<date>` files, 404
    /// when absent. After `budget` successful responses every call fails.
    pub struct FixtureTransport {
        pages: [Vec<u8>; 2],
        citations: Vec<(String, Vec<u8>)>,
        budget: usize,
        pub calls: AtomicUsize,
        pub log: Mutex<Vec<String>>,
    }

    impl FixtureTransport {
        pub fn new(cache: &Path, budget: usize) -> Self {
            let pages = [fs::read(cache.join("metadata/page-0")).unwrap(), fs::read(cache.join("metadata/page-1")).unwrap()];
            let mut citations = Vec::new();
            for entry in fs::read_dir(cache.join("citations")).unwrap() {
                let entry = entry.unwrap();
                let name = entry.file_name().to_string_lossy().into_owned();
                let id = name.split('@').next().unwrap().to_string();
                citations.push((id, fs::read(entry.path()).unwrap()));
            }
            FixtureTransport { pages, citations, budget, calls: AtomicUsize::new(0), log: Mutex::new(Vec::new()) }
        }
    }

    impl Transport for FixtureTransport {
        fn get(&self, url: &str, _bearer: Option<&str>) -> Result<HttpResponse, TransportError> {
            self.log.lock().unwrap().push(url.to_string());
            if self.calls.fetch_add(1, Ordering::SeqCst) >= self.budget {
                return Err(TransportError("connection reset".into()));
            }
            if url.contains("verb=ListRecords") {
                let page = usize::from(url.contains("resumptionToken="));
                return Ok(HttpResponse::ok(self.pages[page].clone()));
            }
            let id = url.split("arXiv:").nth(1).and_then(|s| s.split('?').next()).unwrap_or_default();
            match self.citations.iter().find(|(k, _)| k == id) {
                Some((_, body)) => Ok(HttpResponse::ok(body.clone())),
                None => Ok(HttpResponse { status: 404, body: b"{\"error\":\"not found\"}".to_vec() }),
            }
        }
    }
}
