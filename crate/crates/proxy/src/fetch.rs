//! Outbound HTTP used by the proxy itself: linked policy documents and the
//! negotiation client.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dp_core::rdf::sha256_hex;
use dp_core::wire::{Transport, TransportResponse};

pub const LINK_TTL: Duration = Duration::from_secs(24 * 3600);

/// Fetches the policy document behind a `link` disposition.
pub trait LinkFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<String, String>;
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .proxy(None)
        .build()
        .into()
}

pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        HttpFetcher {
            agent: agent(timeout),
        }
    }
}

impl LinkFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, String> {
        let mut resp = self
            .agent
            .get(url)
            .header("Accept", "text/turtle, application/n-triples;q=0.9")
            .call()
            .map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("{url} answered {}", resp.status()));
        }
        resp.body_mut().read_to_string().map_err(|e| e.to_string())
    }
}

struct Cached {
    at: Instant,
    body: String,
    digest: String,
}

/// Caches successful fetches by URL for `ttl`, remembering the body digest.
pub struct CachingFetcher<F> {
    inner: F,
    ttl: Duration,
    cache: Mutex<HashMap<String, Cached>>,
}

impl<F: LinkFetcher> CachingFetcher<F> {
    pub fn new(inner: F, ttl: Duration) -> Self {
        CachingFetcher {
            inner,
            ttl,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// SHA-256 of the cached body for `url`, if still fresh.
    pub fn cached_digest(&self, url: &str) -> Option<String> {
        let cache = self.cache.lock().unwrap();
        cache
            .get(url)
            .filter(|c| c.at.elapsed() < self.ttl)
            .map(|c| c.digest.clone())
    }
}

impl<F: LinkFetcher> LinkFetcher for CachingFetcher<F> {
    fn fetch(&self, url: &str) -> Result<String, String> {
        if let Some(c) = self.cache.lock().unwrap().get(url) {
            if c.at.elapsed() < self.ttl {
                return Ok(c.body.clone());
            }
        }
        let body = self.inner.fetch(url)?;
        let digest = sha256_hex(body.as_bytes());
        self.cache.lock().unwrap().insert(
            url.to_string(),
            Cached {
                at: Instant::now(),
                body: body.clone(),
                digest,
            },
        );
        Ok(body)
    }
}

/// Blocking [`Transport`] for the negotiation client.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        HttpTransport {
            agent: agent(timeout),
        }
    }
}

impl Transport for HttpTransport {
    fn post(
        &self,
        url: &str,
        content_type: &str,
        body: &[u8],
    ) -> Result<TransportResponse, String> {
        let mut resp = self
            .agent
            .post(url)
            .header("Content-Type", content_type)
            .send(body)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_vec().map_err(|e| e.to_string())?;
        Ok(TransportResponse { status, body })
    }
}
