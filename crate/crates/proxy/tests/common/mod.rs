#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::{TimeZone, Utc};
use dp_core::policy::{
    ActionSet, PreferenceProfile, PreferenceRule, PurposeTaxonomy, RuleDecision,
};
use dp_core::rdf::Iri;
use dp_core::wire::{encode_request_header, PolicySource, Transport, TransportResponse};
use dp_proxy::config::{Clock, UidSource};
use dp_proxy::fetch::LinkFetcher;
use dp_proxy::log::ConsentLog;
use dp_proxy::state::{ConsentState, StateOptions};
use http::{HeaderMap, HeaderValue, Uri};

pub const GROOVESHARK: &str = include_str!("../../../core/tests/fixtures/grooveshark.ttl");
pub const DPV: &str = "https://w3id.org/dpv#";
pub const UNKNOWN_PURPOSE: &str = "http://example.org/purposes#Unlisted";

pub fn dpv(local: &str) -> Iri {
    Iri::new_unchecked(format!("{DPV}{local}"))
}

pub fn owner() -> Iri {
    Iri::new_unchecked("urn:user:test")
}

pub fn tax() -> &'static PurposeTaxonomy {
    PurposeTaxonomy::dpv_subset()
}

pub fn rule(purpose: &str, max: Option<u64>, decision: RuleDecision) -> PreferenceRule {
    PreferenceRule {
        purpose: dpv(purpose),
        actions: ActionSet::Any,
        max_retention: max,
        decision,
    }
}

pub fn profile(rules: Vec<PreferenceRule>, default: RuleDecision) -> PreferenceProfile {
    PreferenceProfile::new(owner(), default, rules, tax()).unwrap()
}

/// Allow Marketing for at most a year, ask otherwise.
pub fn marketing_p1y() -> PreferenceProfile {
    profile(
        vec![rule("Marketing", Some(31_536_000), RuleDecision::Allow)],
        RuleDecision::Ask,
    )
}

/// A one-permission request for `purpose` (full IRI) with oac actions.
pub fn request_ttl(uid: &str, purpose: &str, actions: &[&str], retention: Option<&str>) -> String {
    let actions: Vec<String> = actions.iter().map(|a| format!("oac:{a}")).collect();
    let retention = retention
        .map(|r| {
            format!(
                " ;\n    odrl:constraint [ odrl:leftOperand odrl:elapsedTime ; odrl:operator odrl:eq ; \
                 odrl:rightOperand \"{r}\"^^xsd:duration ]"
            )
        })
        .unwrap_or_default();
    format!(
        "@prefix odrl: <http://www.w3.org/ns/odrl/2/> .\n\
         @prefix oac: <https://w3id.org/oac#> .\n\
         @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n\
         <https://example.com/policy/{uid}> a odrl:Request ;\n  odrl:uid \"{uid}\" ;\n  odrl:profile oac: ;\n  \
         odrl:permission [\n    odrl:action {} ;\n    odrl:target <https://example.com/data/{uid}> ;\n    \
         odrl:constraint [ odrl:leftOperand oac:Purpose ; odrl:operator odrl:isA ; odrl:rightOperand <{purpose}> ]{retention}\n  ] .\n",
        actions.join(", ")
    )
}

pub fn inline(ttl: &str, cookie: Option<&str>) -> String {
    encode_request_header(&PolicySource::inline(ttl, cookie)).unwrap()
}

pub fn grooveshark_inline(cookie: &str) -> String {
    inline(GROOVESHARK, Some(cookie))
}

pub fn analytics_inline(cookie: &str) -> String {
    inline(
        &request_ttl(
            "analytics",
            &format!("{DPV}Analytics"),
            &["Store"],
            Some("P30D"),
        ),
        Some(cookie),
    )
}

pub fn unknown_inline(cookie: &str) -> String {
    inline(
        &request_ttl(
            "unknown",
            UNKNOWN_PURPOSE,
            &["Download", "Store"],
            Some("P90D"),
        ),
        Some(cookie),
    )
}

pub fn response_headers(set_cookies: &[&str], policies: &[String]) -> HeaderMap {
    let mut h = HeaderMap::new();
    for c in set_cookies {
        h.append(
            "set-cookie",
            HeaderValue::from_str(&format!("{c}=v-{c}; Path=/")).unwrap(),
        );
    }
    for p in policies {
        h.append("data-policy-request", HeaderValue::from_str(p).unwrap());
    }
    h
}

pub fn cookie_headers(cookie: &str) -> HeaderMap {
    let mut h = HeaderMap::new();
    h.insert("cookie", HeaderValue::from_str(cookie).unwrap());
    h
}

pub fn set_cookie_names(h: &HeaderMap) -> Vec<String> {
    h.get_all("set-cookie")
        .iter()
        .map(|v| v.to_str().unwrap().split('=').next().unwrap().to_string())
        .collect()
}

pub fn url(s: &str) -> Uri {
    s.parse().unwrap()
}

pub struct NoFetch;

impl LinkFetcher for NoFetch {
    fn fetch(&self, url: &str) -> Result<String, String> {
        Err(format!("{url} unreachable"))
    }
}

#[derive(Default)]
pub struct MapFetcher(pub HashMap<String, String>);

impl LinkFetcher for MapFetcher {
    fn fetch(&self, url: &str) -> Result<String, String> {
        self.0
            .get(url)
            .cloned()
            .ok_or_else(|| format!("{url} unreachable"))
    }
}

/// (url, body) of each POST seen.
pub type Posts = Arc<Mutex<Vec<(String, Vec<u8>)>>>;

/// Answers every POST with a fixed response and records the bodies. Clones
/// share the record.
#[derive(Clone)]
pub struct StubTransport {
    pub status: u16,
    pub body: Vec<u8>,
    pub seen: Posts,
}

impl StubTransport {
    pub fn new(status: u16, body: impl Into<Vec<u8>>) -> Self {
        StubTransport {
            status,
            body: body.into(),
            seen: Arc::default(),
        }
    }
}

impl Transport for StubTransport {
    fn post(&self, url: &str, _: &str, body: &[u8]) -> Result<TransportResponse, String> {
        self.seen
            .lock()
            .unwrap()
            .push((url.to_string(), body.to_vec()));
        Ok(TransportResponse {
            status: self.status,
            body: self.body.clone(),
        })
    }
}

pub struct Fixture {
    pub state: Arc<ConsentState>,
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn log_path(&self) -> PathBuf {
        self.dir.path().join("consent.jsonl")
    }
}

pub struct Setup {
    pub profile: PreferenceProfile,
    pub default_decision: RuleDecision,
    pub negotiate: bool,
    pub drop_unannotated: bool,
    pub fetcher: Box<dyn LinkFetcher>,
    pub transport: Box<dyn Transport + Send + Sync>,
}

impl Setup {
    pub fn new(profile: PreferenceProfile) -> Self {
        Setup {
            profile,
            default_decision: RuleDecision::Ask,
            negotiate: false,
            drop_unannotated: false,
            fetcher: Box::new(NoFetch),
            transport: Box::new(StubTransport::new(403, "")),
        }
    }

    pub fn build(self) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let prefs = dir.path().join("prefs.json");
        let opts = StateOptions {
            default_decision: self.default_decision,
            negotiate: self.negotiate,
            drop_unannotated: self.drop_unannotated,
            prefs_path: Some(prefs),
            clock: Clock::Fixed(Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap()),
            uids: UidSource::sequence("t"),
        };
        let log = ConsentLog::open(dir.path().join("consent.jsonl")).unwrap();
        let state = ConsentState::new(
            opts,
            tax().clone(),
            self.profile,
            log,
            self.fetcher,
            self.transport,
        );
        Fixture {
            state: Arc::new(state),
            dir,
        }
    }
}
