//! HTTP access behind a small trait, plus the retry loop.

use std::time::Duration;

use rand::Rng;

use super::clock::{Clock, RateLimiter};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        HttpResponse { status: 200, body: body.into() }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    fn is_retryable(&self) -> bool {
        self.status == 429 || self.status >= 500
    }
}

/// A connection-level failure (no HTTP status was received).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn get(&self, url: &str, bearer: Option<&str>) -> Result<HttpResponse, TransportError>;
}

/// Blocking HTTP client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("trendscope/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, bearer: Option<&str>) -> Result<HttpResponse, TransportError> {
        let mut req = self.client.get(url);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.bytes().map_err(|e| TransportError(e.to_string()))?.to_vec();
        Ok(HttpResponse { status, body })
    }
}

/// Transport for replay runs: any attempt to reach the network is an error.
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn get(&self, url: &str, _bearer: Option<&str>) -> Result<HttpResponse, TransportError> {
        Err(TransportError(format!("offline: refusing to fetch {url}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further retry.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    /// Backoff before retry number `retry` (0-based), with jitter in [50%, 100%].
    fn delay(&self, retry: u32) -> Duration {
        let full = self.base_delay.saturating_mul(1u32 << retry.min(16));
        full.mul_f64(rand::rng().random_range(0.5..=1.0))
    }
}

/// The endpoint could not be reached within the retry budget.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("giving up on {url} after {attempts} attempts: {last_error}")]
pub struct RetriesExhausted {
    pub url: String,
    pub attempts: u32,
    pub last_error: String,
}

/// Everything a request needs besides the URL.
pub struct Fetcher<'a> {
    pub transport: &'a dyn Transport,
    pub clock: &'a dyn Clock,
    pub limiter: &'a RateLimiter,
    pub retry: RetryPolicy,
    pub bearer: Option<&'a str>,
}

impl Fetcher<'_> {
    /// GETs `url`, retrying connection failures, 429 and 5xx responses.
    ///
    /// Other statuses (including 404) are returned to the caller as-is.
    pub fn get(&self, url: &str) -> Result<HttpResponse, RetriesExhausted> {
        let attempts = self.retry.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                self.clock.sleep(self.retry.delay(attempt - 1));
            }
            self.limiter.acquire(self.clock);
            match self.transport.get(url, self.bearer) {
                Ok(resp) if !resp.is_retryable() => return Ok(resp),
                Ok(resp) => last_error = format!("HTTP {}", resp.status),
                Err(e) => last_error = e.0,
            }
        }
        Err(RetriesExhausted { url: url.to_string(), attempts, last_error })
    }
}
