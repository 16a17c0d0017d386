mod common;

use std::cell::RefCell;

use chrono::{TimeZone, Utc};
use common::*;
use dp_core::policy::{
    parse_odrl_agreement, ActionSet, PreferenceProfile, PreferenceRule, RuleDecision,
};
use dp_core::rdf::{parse_turtle, serialize_canonical, Graph, Iri};
use dp_core::wire::{
    accept_offer, negotiate, NegotiationError, NegotiationOffer, NegotiationResult, Transport,
    TransportResponse, N_TRIPLES,
};
use dp_core::{build_agreement, evaluate};

#[derive(Default)]
struct Scripted {
    replies: RefCell<Vec<TransportResponse>>,
    seen: RefCell<Vec<(String, String, Vec<u8>)>>,
}

impl Scripted {
    fn new(replies: Vec<TransportResponse>) -> Self {
        Scripted {
            replies: RefCell::new(replies),
            seen: RefCell::default(),
        }
    }
}

impl Transport for Scripted {
    fn post(
        &self,
        url: &str,
        content_type: &str,
        body: &[u8],
    ) -> Result<TransportResponse, String> {
        self.seen
            .borrow_mut()
            .push((url.to_string(), content_type.to_string(), body.to_vec()));
        let mut r = self.replies.borrow_mut();
        if r.is_empty() {
            return Err("connection refused".into());
        }
        Ok(r.remove(0))
    }
}

struct Echo;

impl Transport for Echo {
    fn post(&self, _: &str, _: &str, body: &[u8]) -> Result<TransportResponse, String> {
        Ok(TransportResponse {
            status: 200,
            body: body.to_vec(),
        })
    }
}

fn endpoint() -> Iri {
    Iri::new_unchecked("https://example.com/negotiate")
}

fn desired() -> Graph {
    let tax = toy_taxonomy();
    let p = PreferenceProfile::new(
        owner(),
        RuleDecision::Deny,
        vec![PreferenceRule {
            purpose: dpv("Marketing"),
            actions: ActionSet::Any,
            max_retention: None,
            decision: RuleDecision::Allow,
        }],
        &tax,
    )
    .unwrap();
    let req = grooveshark_request();
    let d = evaluate(&p, &req, &tax).unwrap();
    build_agreement(
        &d,
        &req,
        &owner(),
        Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
        "n-1",
    )
    .unwrap()
    .1
}

#[test]
fn echo_server_accepts_the_desired_agreement() {
    let g = desired();
    let NegotiationResult::Agreement(back) = negotiate(&endpoint(), &g, &Echo).unwrap() else {
        panic!()
    };
    assert_eq!(serialize_canonical(&back), serialize_canonical(&g));
}

const PAID: &str = r#"
@prefix odrl: <http://www.w3.org/ns/odrl/2/> .
@prefix oac: <https://w3id.org/oac#> .
@prefix dpv: <https://w3id.org/dpv#> .
@prefix dcterms: <http://purl.org/dc/terms/> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
<urn:app:agreement:paid> a odrl:Agreement ;
    odrl:uid "paid" ;
    dcterms:issued "2025-01-01T00:00:00Z"^^xsd:dateTime ;
    odrl:assigner <urn:user:test> ;
    odrl:permission <urn:app:agreement:paid#perm-0> .
<urn:app:agreement:paid#perm-0> odrl:action oac:Store ;
    odrl:target <https://example.com/grooveshark-cookie-data> ;
    odrl:constraint <urn:app:agreement:paid#perm-0-c0> .
<urn:app:agreement:paid#perm-0-c0> odrl:leftOperand oac:Purpose ;
    odrl:operator odrl:isA ;
    odrl:rightOperand dpv:ServiceProvision .
"#;

#[test]
fn offers_then_accept_pay() {
    let offers = r#"[
        {"offerId": "ads", "description": "Free, with personalised advertising"},
        {"offerId": "pay", "description": "No marketing cookies", "priceTag": "EUR 2.99/month"}
    ]"#;
    let paid = serialize_canonical(&parse_turtle(PAID, None).unwrap());
    let t = Scripted::new(vec![
        TransportResponse {
            status: 409,
            body: offers.as_bytes().to_vec(),
        },
        TransportResponse {
            status: 200,
            body: paid.into_bytes(),
        },
    ]);
    let NegotiationResult::Offers(list) = negotiate(&endpoint(), &desired(), &t).unwrap() else {
        panic!()
    };
    assert_eq!(list.len(), 2);
    assert_eq!(
        list[1],
        NegotiationOffer {
            offer_id: "pay".into(),
            description: "No marketing cookies".into(),
            policy: None,
            price_tag: Some("EUR 2.99/month".into()),
        }
    );
    let NegotiationResult::Agreement(g) = accept_offer(&endpoint(), "pay", &t).unwrap() else {
        panic!()
    };
    let a = parse_odrl_agreement(&g, None).unwrap();
    let marketing = a
        .permissions
        .iter()
        .filter(|(i, p)| {
            p.purposes(*i)
                .unwrap()
                .iter()
                .any(|x| toy_taxonomy().is_subpurpose(x, &dpv("Marketing")))
        })
        .count();
    assert_eq!(marketing, 0);
    assert_eq!(a.permissions.len(), 1);

    let seen = t.seen.borrow();
    assert_eq!(seen[0].0, "https://example.com/negotiate");
    assert_eq!(seen[0].1, N_TRIPLES);
    assert_eq!(seen[0].2, serialize_canonical(&desired()).into_bytes());
    assert_eq!(seen[1].0, "https://example.com/negotiate/accept");
    assert_eq!(seen[1].1, "application/json");
    let body: serde_json::Value = serde_json::from_slice(&seen[1].2).unwrap();
    assert_eq!(body, serde_json::json!({"offerId": "pay"}));
}

#[test]
fn refusal_and_failures() {
    let t = Scripted::new(vec![TransportResponse {
        status: 403,
        body: vec![],
    }]);
    assert_eq!(
        negotiate(&endpoint(), &desired(), &t).unwrap(),
        NegotiationResult::Refused
    );

    let t = Scripted::new(vec![TransportResponse {
        status: 500,
        body: vec![],
    }]);
    assert_eq!(
        negotiate(&endpoint(), &desired(), &t).unwrap_err(),
        NegotiationError::UnexpectedStatus(500)
    );

    let t = Scripted::new(vec![]);
    assert!(matches!(
        negotiate(&endpoint(), &desired(), &t),
        Err(NegotiationError::Transport(_))
    ));

    let t = Scripted::new(vec![TransportResponse {
        status: 409,
        body: b"{\"not\": \"a list\"}".to_vec(),
    }]);
    assert!(matches!(
        negotiate(&endpoint(), &desired(), &t),
        Err(NegotiationError::NonConforming(_))
    ));

    let dup = br#"[{"offerId": "a", "description": "x"}, {"offerId": "a", "description": "y"}]"#;
    let t = Scripted::new(vec![TransportResponse {
        status: 409,
        body: dup.to_vec(),
    }]);
    assert!(matches!(
        negotiate(&endpoint(), &desired(), &t),
        Err(NegotiationError::NonConforming(_))
    ));

    let t = Scripted::new(vec![TransportResponse {
        status: 200,
        body: b"<not turtle".to_vec(),
    }]);
    assert!(matches!(
        negotiate(&endpoint(), &desired(), &t),
        Err(NegotiationError::NonConforming(_))
    ));
}
