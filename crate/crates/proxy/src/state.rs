//! Consent state shared by the proxy listener and the control API.
//!
//! Lock order: origin, then pending items, then the log.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use dp_core::engine::{request_digest, EngineError, GrantedPermission, PendingQuestion};
use dp_core::policy::{
    normalize_actions, parse_odrl_agreement, parse_odrl_request, OdrlAgreement, OdrlRequest,
    Permission, PolicyError, PreferenceProfile, PurposeTaxonomy, RuleDecision,
};
use dp_core::rdf::{parse_turtle, serialize_canonical, sha256_hex, Iri};
use dp_core::wire::{
    decode_request_header, encode_agreement_header, negotiate, AgreementEnvelope, Disposition,
    NegotiationResult, PolicySource, RequestHeader, Transport, DATA_POLICY, DATA_POLICY_REQUEST,
};
use dp_core::{decide, evaluate_with, resolve_pending, Decision, EvalOptions, Outcome, UserChoice};
use http::header::{COOKIE, SET_COOKIE};
use http::{HeaderMap, HeaderValue, Uri};
use serde::Serialize;
use tokio::sync::broadcast;
use tracing::{debug, info, warn};

use crate::config::{save_profile, Clock, ConfigError, UidSource};
use crate::cookies::{join_cookie_header, parse_cookie_header, set_cookie_name};
use crate::fetch::LinkFetcher;
use crate::log::{read_records, verify_chain, ConsentLog, ConsentRecord, LogError, RecordSource};

/// Binding key for a policy without a `cookie` parameter.
pub const ALL_COOKIES: &str = "*";

#[derive(Debug, Clone)]
pub struct KnownPolicy {
    pub source: PolicySource,
    pub request_digest: String,
}

#[derive(Debug, Clone)]
pub struct StoredDecision {
    pub decision: Decision,
    pub request: OdrlRequest,
    pub source: RecordSource,
    /// Profile version the decision was computed under.
    pub profile_version: String,
    /// `Data-Policy` header value, for granted and partial decisions.
    pub header: Option<String>,
}

#[derive(Debug, Default)]
pub struct OriginState {
    pub origin: String,
    /// Cookie name (or [`ALL_COOKIES`]) to the policy bound to it.
    pub known_policies: BTreeMap<String, KnownPolicy>,
    /// Keyed by request digest.
    pub decisions: HashMap<String, StoredDecision>,
    /// Negotiation endpoints by binding key.
    pub negotiation: BTreeMap<String, Iri>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PendingStatus {
    Open,
    Resolved,
    Superseded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PendingItem {
    pub id: String,
    pub origin: String,
    pub cookie_names: Vec<String>,
    pub request_digest: String,
    pub questions: Vec<PendingQuestion>,
    /// The requested permissions, for rendering the prompt.
    pub permissions: Vec<Permission>,
    pub created_at: String,
    pub status: PendingStatus,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProxyEvent {
    Pending {
        item: PendingItem,
    },
    Resolved {
        id: String,
        origin: String,
        outcome: Outcome,
    },
}

impl ProxyEvent {
    pub fn name(&self) -> &'static str {
        match self {
            ProxyEvent::Pending { .. } => "pending",
            ProxyEvent::Resolved { .. } => "resolved",
        }
    }
}

/// What [`ConsentState::on_response`] did.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ResponseReport {
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub unannotated: Vec<String>,
    pub records: Vec<ConsentRecord>,
    pub pending: Vec<PendingItem>,
    pub warnings: Vec<String>,
}

/// What [`ConsentState::on_request`] did.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RequestReport {
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub agreements: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("no pending item {0}")]
    NotFound(String),
    #[error("pending item {0} is already {1:?}")]
    Conflict(String, PendingStatus),
    #[error(transparent)]
    Invalid(#[from] EngineError),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, thiserror::Error)]
pub enum PreferencesError {
    #[error(transparent)]
    Invalid(#[from] PolicyError),
    #[error(transparent)]
    Save(#[from] ConfigError),
}

pub struct StateOptions {
    pub default_decision: RuleDecision,
    pub negotiate: bool,
    pub drop_unannotated: bool,
    /// Where preference updates are written; `None` keeps them in memory.
    pub prefs_path: Option<std::path::PathBuf>,
    pub clock: Clock,
    pub uids: UidSource,
}

pub struct ConsentState {
    opts: StateOptions,
    taxonomy: PurposeTaxonomy,
    profile: RwLock<PreferenceProfile>,
    origins: Mutex<HashMap<String, Arc<Mutex<OriginState>>>>,
    pending: Mutex<Vec<PendingItem>>,
    log: Mutex<ConsentLog>,
    events: broadcast::Sender<ProxyEvent>,
    fetcher: Box<dyn LinkFetcher>,
    transport: Box<dyn Transport + Send + Sync>,
}

/// `scheme://host[:port]`, the port only when not the scheme default.
pub fn origin_of(url: &Uri) -> String {
    let scheme = url.scheme_str().unwrap_or("http").to_ascii_lowercase();
    let host = url.host().unwrap_or("").to_ascii_lowercase();
    match (scheme.as_str(), url.port_u16()) {
        ("http", Some(80)) | ("https", Some(443)) | (_, None) => format!("{scheme}://{host}"),
        (_, Some(p)) => format!("{scheme}://{host}:{p}"),
    }
}

fn agreement_header(d: &Decision) -> Option<String> {
    let a = d.agreement.as_ref()?;
    encode_agreement_header(&AgreementEnvelope::from_graph(&a.to_graph())).ok()
}

impl ConsentState {
    pub fn new(
        opts: StateOptions,
        taxonomy: PurposeTaxonomy,
        profile: PreferenceProfile,
        log: ConsentLog,
        fetcher: Box<dyn LinkFetcher>,
        transport: Box<dyn Transport + Send + Sync>,
    ) -> Self {
        ConsentState {
            opts,
            taxonomy,
            profile: RwLock::new(profile),
            origins: Mutex::new(HashMap::new()),
            pending: Mutex::new(Vec::new()),
            log: Mutex::new(log),
            events: broadcast::channel(256).0,
            fetcher,
            transport,
        }
    }

    pub fn taxonomy(&self) -> &PurposeTaxonomy {
        &self.taxonomy
    }

    pub fn profile(&self) -> PreferenceProfile {
        self.profile.read().unwrap().clone()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.opts.clock.now()
    }

    pub fn log_path(&self) -> std::path::PathBuf {
        self.log.lock().unwrap().path().to_path_buf()
    }

    /// All log records, oldest first. Holds the appender so no half-written
    /// line is read.
    pub fn records(&self) -> Result<Vec<ConsentRecord>, LogError> {
        let log = self.log.lock().unwrap();
        read_records(log.path())
    }

    pub fn verify_log(&self) -> Result<usize, LogError> {
        let log = self.log.lock().unwrap();
        verify_chain(log.path())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<ProxyEvent> {
        self.events.subscribe()
    }

    fn emit(&self, e: ProxyEvent) {
        // no subscribers is fine
        let _ = self.events.send(e);
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            unknown_purpose_decision: Some(self.opts.default_decision),
        }
    }

    /// Validates `profile`, writes it to the preferences file and makes it
    /// current. Decisions made under the old profile are recomputed the next
    /// time their policy is seen.
    pub fn set_profile(
        &self,
        profile: PreferenceProfile,
    ) -> Result<PreferenceProfile, PreferencesError> {
        let p = PreferenceProfile::new(
            profile.owner,
            profile.default_decision,
            profile.rules,
            &self.taxonomy,
        )?;
        if let Some(path) = &self.opts.prefs_path {
            save_profile(path, &p)?;
        }
        *self.profile.write().unwrap() = p.clone();
        info!(version = %p.version(), "preferences replaced");
        Ok(p)
    }

    pub fn origin(&self, origin: &str) -> Arc<Mutex<OriginState>> {
        let mut all = self.origins.lock().unwrap();
        all.entry(origin.to_string())
            .or_insert_with(|| {
                Arc::new(Mutex::new(OriginState {
                    origin: origin.to_string(),
                    ..Default::default()
                }))
            })
            .clone()
    }

    fn existing_origin(&self, origin: &str) -> Option<Arc<Mutex<OriginState>>> {
        self.origins.lock().unwrap().get(origin).cloned()
    }

    pub fn pending_items(&self) -> Vec<PendingItem> {
        self.pending
            .lock()
            .unwrap()
            .iter()
            .filter(|p| p.status == PendingStatus::Open)
            .cloned()
            .collect()
    }

    pub fn pending_item(&self, id: &str) -> Option<PendingItem> {
        self.pending
            .lock()
            .unwrap()
            .iter()
            .find(|p| p.id == id)
            .cloned()
    }

    fn append(&self, draft: ConsentRecord) -> Result<ConsentRecord, LogError> {
        self.log.lock().unwrap().append_next(draft)
    }

    fn record(
        &self,
        origin: &str,
        cookie_names: Vec<String>,
        d: &Decision,
        source: RecordSource,
    ) -> Result<ConsentRecord, LogError> {
        let turtle = d
            .agreement
            .as_ref()
            .map(|a| serialize_canonical(&a.to_graph()));
        self.append(ConsentRecord {
            ts: self
                .now()
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            origin: origin.to_string(),
            cookie_names,
            request_digest: d.request_digest.clone(),
            agreement_digest: turtle.as_ref().map(|t| sha256_hex(t.as_bytes())),
            agreement_turtle: turtle,
            source,
            outcome: d.outcome,
            prev_hash: String::new(),
            hash: String::new(),
        })
    }

    fn policy_text(&self, src: &PolicySource) -> Result<String, String> {
        match src.disposition {
            Disposition::Inline => Ok(src.policy.clone().unwrap_or_default()),
            Disposition::Link => {
                let href = src.href.as_ref().ok_or("link without href")?;
                self.fetcher.fetch(href.as_str())
            }
            Disposition::Negotiate => Err("negotiate carries no policy".into()),
        }
    }

    /// Runs the engine over the policies announced by a response and removes
    /// the `Set-Cookie` headers that are not consented to.
    pub fn on_response(
        &self,
        url: &Uri,
        headers: &mut HeaderMap,
    ) -> Result<ResponseReport, StateError> {
        let origin = origin_of(url);
        let base = url.to_string();
        let mut report = ResponseReport::default();

        let mut sources = Vec::new();
        for v in headers.get_all(DATA_POLICY_REQUEST) {
            let Ok(text) = v.to_str() else {
                report
                    .warnings
                    .push("non-ASCII Data-Policy-Request ignored".into());
                continue;
            };
            match decode_request_header(text) {
                Ok(RequestHeader::Source(s)) => sources.push(s),
                Ok(RequestHeader::Unrecognized { disposition }) => {
                    debug!(%origin, %disposition, "unrecognized disposition ignored")
                }
                Err(e) => report.warnings.push(format!("Data-Policy-Request: {e}")),
            }
        }
        let set_cookies: Vec<String> = headers
            .get_all(SET_COOKIE)
            .iter()
            .filter_map(|v| {
                v.to_str()
                    .ok()
                    .and_then(set_cookie_name)
                    .map(str::to_string)
            })
            .collect();
        if sources.is_empty() && set_cookies.is_empty() {
            return Ok(report);
        }

        let state = self.origin(&origin);
        let mut os = state.lock().unwrap();
        let profile = self.profile();
        let version = profile.version();

        for s in sources
            .iter()
            .filter(|s| s.disposition == Disposition::Negotiate)
        {
            let key = s.cookie_name.clone().unwrap_or_else(|| ALL_COOKIES.into());
            if let Some(href) = &s.href {
                os.negotiation.insert(key, href.clone());
            }
        }
        let explicit: BTreeSet<&str> = sources
            .iter()
            .filter_map(|s| s.cookie_name.as_deref())
            .collect();
        for s in sources
            .iter()
            .filter(|s| s.disposition != Disposition::Negotiate)
        {
            let key = s.cookie_name.clone().unwrap_or_else(|| ALL_COOKIES.into());
            let request = match self.policy_text(s).and_then(|t| {
                let g = parse_turtle(&t, Some(&base)).map_err(|e| e.to_string())?;
                parse_odrl_request(&g, None).map_err(|e| e.to_string())
            }) {
                Ok(r) => r,
                Err(e) => {
                    warn!(%origin, binding = %key, "policy treated as absent: {e}");
                    report.warnings.push(format!("policy for {key}: {e}"));
                    continue;
                }
            };
            let digest = request_digest(&request);
            os.known_policies.insert(
                key.clone(),
                KnownPolicy {
                    source: s.clone(),
                    request_digest: digest.clone(),
                },
            );
            let fresh = os
                .decisions
                .get(&digest)
                .is_some_and(|d| d.source != RecordSource::Auto || d.profile_version == version);
            if fresh {
                continue;
            }

            let cookie_names: Vec<String> = if key == ALL_COOKIES {
                set_cookies
                    .iter()
                    .filter(|c| !explicit.contains(c.as_str()))
                    .cloned()
                    .collect()
            } else {
                vec![key.clone()]
            };
            let uid = self.opts.uids.next();
            let mut decision = decide(
                &profile,
                &request,
                &self.taxonomy,
                &self.eval_options(),
                self.now(),
                &uid,
            )?;
            let mut source = RecordSource::Auto;
            if decision.outcome == Outcome::Denied && self.opts.negotiate {
                let endpoint = os
                    .negotiation
                    .get(&key)
                    .or_else(|| os.negotiation.get(ALL_COOKIES))
                    .cloned();
                if let Some(endpoint) = endpoint {
                    if let Some(d) =
                        self.try_negotiate(&endpoint, &request, &digest, &profile, &uid)
                    {
                        decision = d;
                        source = RecordSource::Negotiated;
                    }
                }
            }
            report
                .records
                .push(self.record(&origin, cookie_names.clone(), &decision, source)?);

            let mut pending = self.pending.lock().unwrap();
            for p in pending.iter_mut() {
                if p.origin == origin
                    && p.request_digest == digest
                    && p.status == PendingStatus::Open
                {
                    p.status = PendingStatus::Superseded;
                }
            }
            if decision.outcome == Outcome::Pending {
                let item = PendingItem {
                    id: self.opts.uids.next(),
                    origin: origin.clone(),
                    cookie_names,
                    request_digest: digest.clone(),
                    questions: decision.pending_questions.clone(),
                    permissions: request.permissions.clone(),
                    created_at: self
                        .now()
                        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    status: PendingStatus::Open,
                };
                pending.push(item.clone());
                report.pending.push(item.clone());
                self.emit(ProxyEvent::Pending { item });
            }
            drop(pending);
            let header = agreement_header(&decision);
            os.decisions.insert(
                digest,
                StoredDecision {
                    decision,
                    request,
                    source,
                    profile_version: version.clone(),
                    header,
                },
            );
        }

        let values: Vec<HeaderValue> = headers.get_all(SET_COOKIE).iter().cloned().collect();
        if values.is_empty() {
            return Ok(report);
        }
        headers.remove(SET_COOKIE);
        for v in values {
            let Some(name) = v
                .to_str()
                .ok()
                .and_then(set_cookie_name)
                .map(str::to_string)
            else {
                headers.append(SET_COOKIE, v);
                continue;
            };
            match binding_outcome(&os, &name) {
                Some(o) if o.permits_cookie() => {
                    report.kept.push(name);
                    headers.append(SET_COOKIE, v);
                }
                Some(_) => report.removed.push(name),
                None if self.opts.drop_unannotated => {
                    debug!(%origin, cookie = %name, "unannotated cookie dropped");
                    report.unannotated.push(name.clone());
                    report.removed.push(name);
                }
                None => {
                    debug!(%origin, cookie = %name, "unannotated cookie passed");
                    report.unannotated.push(name.clone());
                    report.kept.push(name);
                    headers.append(SET_COOKIE, v);
                }
            }
        }
        Ok(report)
    }

    /// Strips cookies without consent from the `Cookie` header and attaches
    /// one `Data-Policy` header per consented cookie, in cookie order.
    pub fn on_request(&self, url: &Uri, headers: &mut HeaderMap) -> RequestReport {
        let mut report = RequestReport::default();
        let Some(state) = self.existing_origin(&origin_of(url)) else {
            return report;
        };
        let os = state.lock().unwrap();
        let values: Vec<String> = headers
            .get_all(COOKIE)
            .iter()
            .filter_map(|v| v.to_str().ok().map(str::to_string))
            .collect();
        if values.is_empty() {
            return report;
        }
        let mut kept = Vec::new();
        let mut attach = Vec::new();
        for v in &values {
            for (name, value) in parse_cookie_header(v) {
                let stored = binding(&os, name).and_then(|k| os.decisions.get(&k.request_digest));
                match stored {
                    Some(d) if d.decision.outcome.permits_cookie() => {
                        kept.push((name, value));
                        report.kept.push(name.to_string());
                        if let Some(h) = &d.header {
                            attach.push(h.clone());
                        }
                    }
                    Some(_) => report.removed.push(name.to_string()),
                    None => {
                        kept.push((name, value));
                        report.kept.push(name.to_string());
                    }
                }
            }
        }
        headers.remove(COOKIE);
        if !kept.is_empty() {
            let joined = join_cookie_header(&kept);
            headers.insert(
                COOKIE,
                HeaderValue::from_str(&joined).expect("built from a header value"),
            );
        }
        report.agreements = attach.len();
        for h in attach {
            headers.append(
                DATA_POLICY,
                HeaderValue::from_str(&h).expect("header codec emits visible ASCII"),
            );
        }
        report
    }

    /// Applies the user's answers to a pending item.
    pub fn resolve(&self, id: &str, choices: &[UserChoice]) -> Result<Decision, ResolveError> {
        let item = self
            .pending_item(id)
            .ok_or_else(|| ResolveError::NotFound(id.to_string()))?;
        let state = self.origin(&item.origin);
        let mut os = state.lock().unwrap();
        {
            let pending = self.pending.lock().unwrap();
            let current = pending
                .iter()
                .find(|p| p.id == id)
                .expect("items are never removed");
            if current.status != PendingStatus::Open {
                return Err(ResolveError::Conflict(id.to_string(), current.status));
            }
        }
        let stored = os
            .decisions
            .get(&item.request_digest)
            .cloned()
            .ok_or_else(|| ResolveError::NotFound(id.into()))?;
        let owner = self.profile().owner;
        let uid = self.opts.uids.next();
        let d = resolve_pending(
            &stored.decision,
            choices,
            &stored.request,
            &owner,
            self.now(),
            &uid,
        )?;
        {
            let mut pending = self.pending.lock().unwrap();
            let current = pending
                .iter_mut()
                .find(|p| p.id == id)
                .expect("items are never removed");
            current.status = PendingStatus::Resolved;
        }
        self.record(
            &item.origin,
            item.cookie_names.clone(),
            &d,
            RecordSource::User,
        )?;
        let header = agreement_header(&d);
        os.decisions.insert(
            item.request_digest.clone(),
            StoredDecision {
                decision: d.clone(),
                source: RecordSource::User,
                header,
                ..stored
            },
        );
        self.emit(ProxyEvent::Resolved {
            id: id.to_string(),
            origin: item.origin.clone(),
            outcome: d.outcome,
        });
        Ok(d)
    }

    /// Offers an empty agreement to the site's negotiation endpoint. A
    /// counter-agreement is taken only if each of its permissions stays within
    /// the requested actions, target and retention, and the profile grants it
    /// exactly as offered. Purposes may differ from the request: that is what
    /// a site concedes by negotiating. Offers need a human and are left alone.
    fn try_negotiate(
        &self,
        endpoint: &Iri,
        request: &OdrlRequest,
        digest: &str,
        profile: &PreferenceProfile,
        uid: &str,
    ) -> Option<Decision> {
        let desired = OdrlAgreement {
            node: OdrlAgreement::node_for(uid),
            uid: uid.to_string(),
            issued: self
                .now()
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            assigner: profile.owner.clone(),
            request_digest: digest.to_string(),
            permissions: Vec::new(),
        };
        let result = match negotiate(endpoint, &desired.to_graph(), self.transport.as_ref()) {
            Ok(r) => r,
            Err(e) => {
                warn!(%endpoint, "negotiation failed: {e}");
                return None;
            }
        };
        let g = match result {
            NegotiationResult::Agreement(g) => g,
            NegotiationResult::Offers(o) => {
                info!(%endpoint, offers = o.len(), "negotiation returned offers; left to the user");
                return None;
            }
            NegotiationResult::Refused => return None,
        };
        let a = parse_odrl_agreement(&g, None).ok()?;
        if a.request_digest != digest
            || a.permissions.is_empty()
            || !self.acceptable(&a, request, profile)
        {
            warn!(%endpoint, "counter-agreement rejected");
            return None;
        }
        let full = a.permissions.len() == request.permissions.len()
            && a.permissions.iter().all(|(i, p)| {
                let asked = &request.permissions[*i];
                p.actions == asked.actions
                    && p.purposes(*i).ok() == asked.purposes(*i).ok()
                    && p.retention_bound().ok() == asked.retention_bound().ok()
            });
        Some(Decision {
            request_digest: digest.to_string(),
            outcome: if full {
                Outcome::Granted
            } else {
                Outcome::Partial
            },
            granted_permissions: a
                .permissions
                .iter()
                .map(|(i, p)| GrantedPermission {
                    index: *i,
                    permission: p.clone(),
                })
                .collect(),
            pending_questions: Vec::new(),
            agreement: Some(a),
        })
    }

    fn acceptable(
        &self,
        a: &OdrlAgreement,
        request: &OdrlRequest,
        profile: &PreferenceProfile,
    ) -> bool {
        let mut seen = BTreeSet::new();
        a.permissions.iter().all(|(i, p)| {
            let Some(asked) = request.permissions.get(*i) else {
                return false;
            };
            let narrows = seen.insert(*i)
                && !p.actions.is_empty()
                && normalize_actions(&p.actions).is_subset(&normalize_actions(&asked.actions))
                && p.target == asked.target
                && p.purposes(*i).is_ok_and(|ps| !ps.is_empty())
                && match (p.retention_bound(), asked.retention_bound()) {
                    (Ok(Some(x)), Ok(Some(y))) => x <= y,
                    (Ok(_), Ok(None)) => true,
                    _ => false,
                };
            let single = OdrlRequest {
                permissions: vec![p.clone()],
                ..request.clone()
            };
            narrows
                && evaluate_with(profile, &single, &self.taxonomy, &self.eval_options())
                    .is_ok_and(|d| d.outcome == Outcome::Granted)
        })
    }
}

fn binding<'a>(os: &'a OriginState, cookie: &str) -> Option<&'a KnownPolicy> {
    os.known_policies
        .get(cookie)
        .or_else(|| os.known_policies.get(ALL_COOKIES))
}

fn binding_outcome(os: &OriginState, cookie: &str) -> Option<Outcome> {
    binding(os, cookie)
        .and_then(|k| os.decisions.get(&k.request_digest))
        .map(|d| d.decision.outcome)
}
