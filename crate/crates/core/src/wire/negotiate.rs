//! Negotiation client.
//!
//! `POST <endpoint>` with the desired agreement as canonical N-Triples.
//! The server answers 200 with an agreement, 409 with a JSON array of
//! offers, or 403 to refuse. An offer is taken with `POST <endpoint>/accept`
//! and body `{"offerId": "..."}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rdf::{parse_turtle, serialize_canonical, Graph, Iri};

pub const N_TRIPLES: &str = "application/n-triples";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Blocking HTTP POST. Implementations own timeouts.
pub trait Transport {
    fn post(&self, url: &str, content_type: &str, body: &[u8])
        -> Result<TransportResponse, String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NegotiationOffer {
    pub offer_id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NegotiationResult {
    Agreement(Graph),
    Offers(Vec<NegotiationOffer>),
    Refused,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NegotiationError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("non-conforming response: {0}")]
    NonConforming(String),
    #[error("unexpected status {0}")]
    UnexpectedStatus(u16),
}

fn agreement_body(body: &[u8]) -> Result<Graph, NegotiationError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| NegotiationError::NonConforming("body is not UTF-8".into()))?;
    parse_turtle(text, None).map_err(|e| NegotiationError::NonConforming(e.to_string()))
}

pub fn negotiate(
    endpoint: &Iri,
    desired: &Graph,
    transport: &dyn Transport,
) -> Result<NegotiationResult, NegotiationError> {
    let body = serialize_canonical(desired);
    let resp = transport
        .post(endpoint.as_str(), N_TRIPLES, body.as_bytes())
        .map_err(NegotiationError::Transport)?;
    match resp.status {
        200 => Ok(NegotiationResult::Agreement(agreement_body(&resp.body)?)),
        409 => {
            let offers: Vec<NegotiationOffer> = serde_json::from_slice(&resp.body)
                .map_err(|e| NegotiationError::NonConforming(e.to_string()))?;
            let mut ids = BTreeSet::new();
            if let Some(dup) = offers.iter().find(|o| !ids.insert(&o.offer_id)) {
                return Err(NegotiationError::NonConforming(format!(
                    "duplicate offerId {:?}",
                    dup.offer_id
                )));
            }
            Ok(NegotiationResult::Offers(offers))
        }
        403 => Ok(NegotiationResult::Refused),
        s => Err(NegotiationError::UnexpectedStatus(s)),
    }
}

/// Takes one of the offers returned by [`negotiate`].
pub fn accept_offer(
    endpoint: &Iri,
    offer_id: &str,
    transport: &dyn Transport,
) -> Result<NegotiationResult, NegotiationError> {
    let url = format!("{}/accept", endpoint.as_str().trim_end_matches('/'));
    let body = serde_json::json!({ "offerId": offer_id }).to_string();
    let resp = transport
        .post(&url, "application/json", body.as_bytes())
        .map_err(NegotiationError::Transport)?;
    match resp.status {
        200 => Ok(NegotiationResult::Agreement(agreement_body(&resp.body)?)),
        403 => Ok(NegotiationResult::Refused),
        s => Err(NegotiationError::UnexpectedStatus(s)),
    }
}
