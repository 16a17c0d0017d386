mod common;

use std::collections::BTreeSet;

use chrono::{DateTime, TimeZone, Utc};
use common::*;
use dp_core::engine::{Choice, Dimension, EngineError};
use dp_core::policy::{
    parse_odrl_agreement, translate_dtou_to_odrl, ActionSet, PreferenceProfile, PreferenceRule,
    PurposeTaxonomy, RuleDecision,
};
use dp_core::rdf::{graph_digest, serialize_canonical, vocab, Iri};
use dp_core::{
    build_agreement, decide, dtou_compliance, evaluate, resolve_pending, Decision, EvalOptions,
    Outcome, UserChoice,
};

fn now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap()
}

fn profile(
    rules: Vec<PreferenceRule>,
    default: RuleDecision,
    tax: &PurposeTaxonomy,
) -> PreferenceProfile {
    PreferenceProfile::new(owner(), default, rules, tax).unwrap()
}

fn rule(
    purpose: &str,
    actions: ActionSet,
    max: Option<u64>,
    decision: RuleDecision,
) -> PreferenceRule {
    PreferenceRule {
        purpose: dpv(purpose),
        actions,
        max_retention: max,
        decision,
    }
}

fn p1y(tax: &PurposeTaxonomy) -> PreferenceProfile {
    profile(
        vec![rule(
            "Marketing",
            ActionSet::Any,
            Some(31_536_000),
            RuleDecision::Allow,
        )],
        RuleDecision::Ask,
        tax,
    )
}

fn retention_of(d: &Decision, k: usize) -> (String, String) {
    let c = d.granted_permissions[k]
        .permission
        .retention_constraint()
        .unwrap()
        .clone();
    (
        c.operator.to_string(),
        c.right_operand.as_literal().unwrap().value().to_string(),
    )
}

#[test]
fn p1y_profile_narrows_retention() {
    let tax = toy_taxonomy();
    let req = grooveshark_request();
    let d = evaluate(&p1y(&tax), &req, &tax).unwrap();
    assert_eq!(d.outcome, Outcome::Partial);
    assert_eq!(d.granted_permissions.len(), 1);
    let g = &d.granted_permissions[0].permission;
    assert_eq!(g.actions, req.permissions[0].actions);
    assert_eq!(g.retention_bound().unwrap(), Some(31_536_000));
    assert_eq!(
        retention_of(&d, 0),
        (vocab::ODRL_LTEQ.to_string(), "P365D".to_string())
    );
    assert_eq!(
        as_oracle(&d),
        oracle_evaluate(
            &p1y(&tax),
            &req,
            &ClosureOracle::from_turtle(TOY_TAXONOMY),
            None
        )
    );
}

#[test]
fn vacuous_deny_profile_denies() {
    let tax = toy_taxonomy();
    let p = profile(vec![], RuleDecision::Deny, &tax);
    let d = decide(
        &p,
        &grooveshark_request(),
        &tax,
        &EvalOptions::default(),
        now(),
        "u",
    )
    .unwrap();
    assert_eq!(d.outcome, Outcome::Denied);
    assert!(d.granted_permissions.is_empty());
    assert!(d.agreement.is_none());
    assert!(matches!(
        build_agreement(&d, &grooveshark_request(), &owner(), now(), "u"),
        Err(EngineError::NotGrantable(Outcome::Denied))
    ));
}

#[test]
fn store_only_rule_keeps_one_action() {
    let tax = toy_taxonomy();
    let p = profile(
        vec![rule(
            "Marketing",
            ActionSet::Only(BTreeSet::from([oac("Store")])),
            None,
            RuleDecision::Allow,
        )],
        RuleDecision::Deny,
        &tax,
    );
    let req = grooveshark_request();
    let d = decide(&p, &req, &tax, &EvalOptions::default(), now(), "u").unwrap();
    assert_eq!(d.outcome, Outcome::Partial);
    let a = d.agreement.as_ref().unwrap();
    assert_eq!(a.permissions.len(), 1);
    assert_eq!(a.permissions[0].1.actions, BTreeSet::from([oac("Store")]));
    // retention is unchanged, so the request's lexical form survives
    assert_eq!(
        retention_of(&d, 0),
        (vocab::ODRL_LTEQ.to_string(), "P2Y".to_string())
    );
}

#[test]
fn root_ask_rule_leaves_one_question() {
    let tax = toy_taxonomy();
    let p = profile(
        vec![rule("Purpose", ActionSet::Any, None, RuleDecision::Ask)],
        RuleDecision::Allow,
        &tax,
    );
    let d = evaluate(&p, &grooveshark_request(), &tax).unwrap();
    assert_eq!(d.outcome, Outcome::Pending);
    assert_eq!(d.pending_questions.len(), 1);
    assert_eq!(d.pending_questions[0].permission, 0);
    assert_eq!(d.pending_questions[0].purpose, dpv("Marketing"));
}

#[test]
fn specific_rule_beats_general_rule() {
    let tax = toy_taxonomy();
    let p = profile(
        vec![
            rule("Purpose", ActionSet::Any, None, RuleDecision::Deny),
            rule("Marketing", ActionSet::Any, None, RuleDecision::Allow),
        ],
        RuleDecision::Deny,
        &tax,
    );
    assert_eq!(
        evaluate(&p, &grooveshark_request(), &tax).unwrap().outcome,
        Outcome::Granted
    );
}

#[test]
fn granted_agreement_mirrors_the_request() {
    let tax = toy_taxonomy();
    let p = profile(
        vec![rule("Marketing", ActionSet::Any, None, RuleDecision::Allow)],
        RuleDecision::Deny,
        &tax,
    );
    let req = grooveshark_request();
    let d = evaluate(&p, &req, &tax).unwrap();
    assert_eq!(d.outcome, Outcome::Granted);
    let (a, g) = build_agreement(&d, &req, &owner(), now(), "uid-1").unwrap();
    assert_eq!(a.node.as_str(), "urn:app:agreement:uid-1");
    assert_eq!(a.uid, "uid-1");
    assert_eq!(a.assigner, owner());
    assert_eq!(a.issued, "2025-03-01T12:00:00Z");
    assert_eq!(a.request_digest, d.request_digest);
    let mut expected = req.permissions[0].clone();
    for c in expected.constraints.iter_mut().filter(|c| c.is_retention()) {
        c.operator = Iri::new_unchecked(vocab::ODRL_LTEQ);
    }
    assert_eq!(a.permissions, vec![(0, expected)]);
    assert!(g
        .iter()
        .all(|t| !t.subject.is_blank() && !t.object.is_blank()));
    assert_eq!(parse_odrl_agreement(&g, None).unwrap(), a);
}

#[test]
fn agreements_are_deterministic() {
    let tax = toy_taxonomy();
    let req = grooveshark_request();
    let d = evaluate(&p1y(&tax), &req, &tax).unwrap();
    let (_, a) = build_agreement(&d, &req, &owner(), now(), "same").unwrap();
    let (_, b) = build_agreement(&d, &req, &owner(), now(), "same").unwrap();
    assert_eq!(serialize_canonical(&a), serialize_canonical(&b));
    assert_eq!(graph_digest(&a), graph_digest(&b));
    let (_, c) = build_agreement(&d, &req, &owner(), now(), "other").unwrap();
    assert_ne!(graph_digest(&a), graph_digest(&c));
}

#[test]
fn agreement_rejects_foreign_decision() {
    let tax = toy_taxonomy();
    let d = evaluate(&p1y(&tax), &grooveshark_request(), &tax).unwrap();
    let mut other = grooveshark_request();
    other.uid = "different".into();
    assert_eq!(
        build_agreement(&d, &other, &owner(), now(), "u").unwrap_err(),
        EngineError::DigestMismatch
    );
}

#[test]
fn compliance_examples() {
    let tax = toy_taxonomy();
    let app_policy = app_policy_policy();

    let r = dtou_compliance(&p1y(&tax), &app_policy, &tax);
    assert!(!r.compliant);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].dimension, Dimension::Duration);

    let p2y = profile(
        vec![rule(
            "Marketing",
            ActionSet::Any,
            Some(63_072_000),
            RuleDecision::Allow,
        )],
        RuleDecision::Deny,
        &tax,
    );
    assert!(dtou_compliance(&p2y, &app_policy, &tax).compliant);
    let translated = translate_dtou_to_odrl(&app_policy).unwrap();
    assert_eq!(
        evaluate(&p2y, &translated, &tax).unwrap().outcome,
        Outcome::Granted
    );

    let empty = profile(vec![], RuleDecision::Deny, &tax);
    let r = dtou_compliance(&empty, &app_policy, &tax);
    assert!(!r.compliant);
    assert!(r
        .violations
        .iter()
        .any(|v| v.input_spec == 0 && v.dimension == Dimension::Purpose));
    assert!(r.violations.iter().all(|v| v.input_spec == 0));
}

fn pending_grooveshark(tax: &PurposeTaxonomy) -> (PreferenceProfile, Decision) {
    let p = profile(vec![], RuleDecision::Ask, tax);
    let d = evaluate(&p, &grooveshark_request(), tax).unwrap();
    assert_eq!(d.outcome, Outcome::Pending);
    (p, d)
}

fn choice(decision: Choice, actions: Option<BTreeSet<Iri>>, retention: Option<u64>) -> UserChoice {
    UserChoice {
        permission: 0,
        decision,
        narrowed_actions: actions,
        narrowed_retention: retention,
    }
}

#[test]
fn resolving_with_allow_grants_as_asked() {
    let tax = toy_taxonomy();
    let req = grooveshark_request();
    let (_, d) = pending_grooveshark(&tax);
    let r = resolve_pending(
        &d,
        &[choice(Choice::Allow, None, None)],
        &req,
        &owner(),
        now(),
        "u",
    )
    .unwrap();
    assert_eq!(r.outcome, Outcome::Granted);
    let allow_all = profile(
        vec![rule("Marketing", ActionSet::Any, None, RuleDecision::Allow)],
        RuleDecision::Deny,
        &tax,
    );
    let direct = decide(&allow_all, &req, &tax, &EvalOptions::default(), now(), "u").unwrap();
    assert_eq!(r.agreement, direct.agreement);
}

#[test]
fn resolving_with_deny_denies() {
    let tax = toy_taxonomy();
    let (_, d) = pending_grooveshark(&tax);
    let r = resolve_pending(
        &d,
        &[choice(Choice::Deny, None, None)],
        &grooveshark_request(),
        &owner(),
        now(),
        "u",
    )
    .unwrap();
    assert_eq!(r.outcome, Outcome::Denied);
    assert!(r.agreement.is_none());
}

#[test]
fn resolving_with_a_narrowing() {
    let tax = toy_taxonomy();
    let (_, d) = pending_grooveshark(&tax);
    let c = choice(
        Choice::Allow,
        Some(BTreeSet::from([oac("Store")])),
        Some(2_592_000),
    );
    let r = resolve_pending(&d, &[c], &grooveshark_request(), &owner(), now(), "u").unwrap();
    assert_eq!(r.outcome, Outcome::Partial);
    assert_eq!(r.granted_permissions[0].permission.actions.len(), 1);
    assert_eq!(retention_of(&r, 0).1, "P30D");
    assert_eq!(
        r.agreement.as_ref().unwrap().permissions[0].1.actions,
        BTreeSet::from([oac("Store")])
    );
}

#[test]
fn resolving_checks_the_choices() {
    let tax = toy_taxonomy();
    let req = grooveshark_request();
    let (_, d) = pending_grooveshark(&tax);
    assert_eq!(
        resolve_pending(&d, &[], &req, &owner(), now(), "u").unwrap_err(),
        EngineError::MissingChoice(0)
    );
    let twice = [
        choice(Choice::Allow, None, None),
        choice(Choice::Deny, None, None),
    ];
    assert_eq!(
        resolve_pending(&d, &twice, &req, &owner(), now(), "u").unwrap_err(),
        EngineError::DuplicateChoice(0)
    );
    let wider = choice(Choice::Allow, Some(BTreeSet::from([oac("Use")])), None);
    assert!(matches!(
        resolve_pending(&d, &[wider], &req, &owner(), now(), "u"),
        Err(EngineError::NotANarrowing { permission: 0, .. })
    ));
    let longer = choice(Choice::Allow, None, Some(63_072_001));
    assert!(matches!(
        resolve_pending(&d, &[longer], &req, &owner(), now(), "u"),
        Err(EngineError::NotANarrowing { .. })
    ));
}

#[test]
fn unknown_purpose_uses_the_option_then_the_default() {
    let tax = toy_taxonomy();
    let mut req = grooveshark_request();
    req.permissions[0].constraints[0].right_operand =
        dp_core::rdf::Term::iri("http://example.org/purposes#Mystery");
    let allow = profile(vec![], RuleDecision::Allow, &tax);
    assert_eq!(
        evaluate(&allow, &req, &tax).unwrap().outcome,
        Outcome::Granted
    );
    let opts = EvalOptions {
        unknown_purpose_decision: Some(RuleDecision::Ask),
    };
    let d = dp_core::evaluate_with(&allow, &req, &tax, &opts).unwrap();
    assert_eq!(d.outcome, Outcome::Pending);
    assert!(d.pending_questions[0]
        .reason
        .contains("not in the taxonomy"));
}

#[test]
fn decision_json_shape() {
    let tax = toy_taxonomy();
    let d = decide(
        &p1y(&tax),
        &grooveshark_request(),
        &tax,
        &EvalOptions::default(),
        now(),
        "u",
    )
    .unwrap();
    let v = serde_json::to_value(&d).unwrap();
    assert_eq!(v["outcome"], "partial");
    assert_eq!(v["requestDigest"].as_str().unwrap().len(), 64);
    assert!(v["grantedPermissions"].is_array());
    assert!(v["pendingQuestions"].as_array().unwrap().is_empty());
}
