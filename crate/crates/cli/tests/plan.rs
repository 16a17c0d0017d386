//! Checkbox planning depends on the embedded triples and the checkbox ids,
//! not on how the page is laid out.

use dp_cli::{checkbox_id_for, plan_selections, CHECKBOX_PREFIX};
use dp_core::engine::EvalOptions;
use dp_core::policy::{parse_preferences, PreferenceProfile, PurposeTaxonomy};
use dp_core::rdf::html::{parse_html, Element, Node};
use dp_core::rdf::{extract_rdfa, parse_turtle, serialize_canonical, Iri};
use proptest::prelude::*;

const DIALOGUE: &str = include_str!("fixtures/dialogue.html");
const BASE: &str = "https://example.com/settings";
const VOID: &[&str] = &["input", "meta", "br", "img", "link", "hr"];
const RAW: &[&str] = &["script", "style"];

fn profile(file: &str) -> PreferenceProfile {
    let text = std::fs::read_to_string(format!(
        "{}/tests/fixtures/{file}",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    parse_preferences(
        &parse_turtle(&text, None).unwrap(),
        PurposeTaxonomy::dpv_subset(),
    )
    .unwrap()
}

fn escape(s: &str, quote: bool) -> String {
    let s = s
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;");
    if quote {
        s.replace('"', "&quot;")
    } else {
        s
    }
}

/// Re-serializes `e`, rotating each element's attributes by `rot` and adding
/// `pad` whitespace between children wherever no `property` can see it.
fn write(e: &Element, rot: usize, pad: &str, in_property: bool, out: &mut String) {
    let in_property = in_property || e.attr("property").is_some();
    out.push('<');
    out.push_str(&e.name);
    let mut attrs = e.attrs.clone();
    if !attrs.is_empty() {
        let k = rot % attrs.len();
        attrs.rotate_left(k);
    }
    for (k, v) in &attrs {
        out.push_str(&format!(" {k}=\"{}\"", escape(v, true)));
    }
    out.push('>');
    if VOID.contains(&e.name.as_str()) {
        return;
    }
    for c in &e.children {
        if !in_property {
            out.push_str(pad);
        }
        match c {
            Node::Text(t) if RAW.contains(&e.name.as_str()) => out.push_str(t),
            Node::Text(t) => out.push_str(&escape(t, false)),
            Node::Element(child) => write(child, rot + 1, pad, in_property, out),
        }
    }
    out.push_str(&format!("</{}>", e.name));
}

fn perturb(html: &str, rot: usize, pad: &str) -> String {
    let root = parse_html(html).unwrap();
    let mut out = String::new();
    for c in &root.children {
        match c {
            Node::Element(e) => write(e, rot, pad, false, &mut out),
            Node::Text(t) => out.push_str(&escape(t, false)),
        }
    }
    out
}

#[test]
fn grooveshark_id_is_pinned() {
    // sha256("https://example.com/cookie-policy-grooveshark"), first 16 hex digits
    let id = checkbox_id_for(&Iri::new_unchecked(
        "https://example.com/cookie-policy-grooveshark",
    ));
    assert_eq!(id, "data-policy-opt--2a4cc89df5ac4b77");
    assert_eq!(
        id,
        checkbox_id_for(&Iri::new_unchecked(
            "https://example.com/cookie-policy-grooveshark"
        ))
    );
}

#[test]
fn ids_do_not_collide_over_a_corpus() {
    let mut seen = std::collections::HashSet::new();
    for i in 0..20_000 {
        let id = checkbox_id_for(&Iri::new_unchecked(format!(
            "https://site{}.example/policy/{i}",
            i % 97
        )));
        assert!(id.starts_with(CHECKBOX_PREFIX));
        assert!(seen.insert(id), "collision at {i}");
    }
}

#[test]
fn plan_follows_the_profile() {
    let tax = PurposeTaxonomy::dpv_subset();
    let opts = EvalOptions::default();
    let allow = plan_selections(DIALOGUE, BASE, &profile("prefs-p1y.ttl"), tax, &opts).unwrap();
    assert_eq!(allow.entries.len(), 1);
    assert!(allow.entries[0].checked);
    let deny = plan_selections(DIALOGUE, BASE, &profile("prefs-deny.ttl"), tax, &opts).unwrap();
    assert!(!deny.entries[0].checked);
    assert_eq!(
        allow.entries[0].request_digest,
        deny.entries[0].request_digest
    );
}

#[test]
fn pending_requests_stay_unchecked() {
    let html = DIALOGUE.replace("dpv:Marketing", "dpv:Analytics");
    let plan = plan_selections(
        &html,
        BASE,
        &profile("prefs-p1y.ttl"),
        PurposeTaxonomy::dpv_subset(),
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(plan.entries[0].outcome, dp_core::Outcome::Pending);
    assert!(!plan.entries[0].checked);
}

#[test]
fn identity_perturbation_is_faithful() {
    let again = perturb(DIALOGUE, 0, "");
    assert_eq!(
        serialize_canonical(&extract_rdfa(&again, BASE).unwrap()),
        serialize_canonical(&extract_rdfa(DIALOGUE, BASE).unwrap())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_ignores_layout(rot in 0..8usize, pad in "[ \t\n]{0,3}", allow in any::<bool>()) {
        let tax = PurposeTaxonomy::dpv_subset();
        let p = profile(if allow { "prefs-p1y.ttl" } else { "prefs-deny.ttl" });
        let html = perturb(DIALOGUE, rot, &pad);
        prop_assert_eq!(
            serialize_canonical(&extract_rdfa(&html, BASE).unwrap()),
            serialize_canonical(&extract_rdfa(DIALOGUE, BASE).unwrap())
        );
        let opts = EvalOptions::default();
        prop_assert_eq!(
            plan_selections(&html, BASE, &p, tax, &opts).unwrap(),
            plan_selections(DIALOGUE, BASE, &p, tax, &opts).unwrap()
        );
    }
}
