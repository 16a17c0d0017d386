//! Data-Policy engine.
//!
//! Websites describe what they want to do with cookie data as ODRL requests
//! (or DToU app policies) carrying DPV purposes. This crate parses those
//! descriptions, matches them against a user's preference profile, narrows
//! them into agreements, and encodes requests and agreements for transport in
//! the `Data-Policy-Request` / `Data-Policy` HTTP header fields.
//!
//! Layers, bottom up:
//!
//! * [`rdf`]: graph model, Turtle subset, RDFa-Lite, canonical N-Triples and digests.
//! * [`policy`]: typed views (requests, app policies, taxonomies, profiles) and translation.
//! * [`engine`]: evaluation, agreement synthesis, DToU compliance and pending resolution.
//! * [`wire`]: header codecs and the negotiation client.

pub mod engine;
pub mod policy;
pub mod rdf;
pub mod wire;

pub use engine::{
    build_agreement, decide, dtou_compliance, dtou_compliance_with, evaluate, evaluate_with,
    resolve_pending, ComplianceResult, Decision, EvalOptions, Outcome, UserChoice,
};
pub use policy::{
    DtouAppPolicy, OdrlAgreement, OdrlRequest, Permission, PreferenceProfile, PurposeTaxonomy,
    RuleDecision,
};
pub use rdf::{Graph, Iri, Term, Triple};
