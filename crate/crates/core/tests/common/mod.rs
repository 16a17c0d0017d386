//! Fixtures, reference oracles and random generators shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use dp_core::policy::{
    load_taxonomy, parse_dtou_app_policy, parse_odrl_request, ActionSet, Constraint, DtouAppPolicy,
    OdrlRequest, Party, Permission, PreferenceProfile, PreferenceRule, PurposeTaxonomy,
    RuleDecision,
};
use dp_core::rdf::{parse_turtle, vocab, Iri, Term};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const GROOVESHARK: &str = include_str!("../fixtures/grooveshark.ttl");
pub const APP_POLICY: &str = include_str!("../fixtures/app-policy.ttl");
pub const TOY_TAXONOMY: &str = include_str!("../fixtures/toy-taxonomy.ttl");
pub const GROOVESHARK_BASE: &str = "file:///fixtures/grooveshark.ttl";

pub fn grooveshark_request() -> OdrlRequest {
    parse_odrl_request(
        &parse_turtle(GROOVESHARK, Some(GROOVESHARK_BASE)).unwrap(),
        None,
    )
    .unwrap()
}

pub fn app_policy_policy() -> DtouAppPolicy {
    parse_dtou_app_policy(&parse_turtle(APP_POLICY, None).unwrap(), None).unwrap()
}

pub fn toy_taxonomy() -> PurposeTaxonomy {
    load_taxonomy(&parse_turtle(TOY_TAXONOMY, None).unwrap()).unwrap()
}

pub fn dpv(local: &str) -> Iri {
    Iri::new_unchecked(format!("https://w3id.org/dpv#{local}"))
}

pub fn oac(local: &str) -> Iri {
    Iri::new_unchecked(format!("https://w3id.org/oac#{local}"))
}

pub fn owner() -> Iri {
    Iri::new_unchecked("urn:user:test")
}

/// Reflexive-transitive closure with shortest path lengths, computed by
/// Floyd–Warshall directly over the subclass edges of a Turtle file.
pub struct ClosureOracle {
    index: HashMap<String, usize>,
    dist: Vec<Vec<Option<usize>>>,
}

impl ClosureOracle {
    pub fn from_turtle(text: &str) -> Self {
        let g = parse_turtle(text, None).unwrap();
        let mut names: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let add = |names: &mut Vec<String>, s: &str| {
            if !names.iter().any(|n| n == s) {
                names.push(s.to_string());
            }
        };
        for t in g.iter() {
            let p = t.predicate.as_str();
            let Term::Iri(s) = &t.subject else { continue };
            if p == vocab::RDFS_SUBCLASS_OF || p == vocab::SKOS_BROADER {
                if let Term::Iri(o) = &t.object {
                    add(&mut names, s.as_str());
                    add(&mut names, o.as_str());
                    edges.push((s.to_string(), o.to_string()));
                }
            } else if [
                vocab::SKOS_PREF_LABEL,
                vocab::RDFS_LABEL,
                vocab::SKOS_DEFINITION,
                vocab::SKOS_SCOPE_NOTE,
            ]
            .contains(&p)
            {
                add(&mut names, s.as_str());
            }
        }
        let n = names.len();
        let index: HashMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut dist = vec![vec![None; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for (a, b) in &edges {
            let (i, j) = (index[a], index[b]);
            if i != j {
                dist[i][j] = Some(1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (dist[i][k], dist[k][j]) {
                        if dist[i][j].is_none_or(|c| a + b < c) {
                            dist[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        ClosureOracle { index, dist }
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.index.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn contains(&self, a: &str) -> bool {
        self.index.contains_key(a)
    }

    pub fn dist(&self, sub: &str, sup: &str) -> Option<usize> {
        match (self.index.get(sub), self.index.get(sup)) {
            (Some(&i), Some(&j)) => self.dist[i][j],
            _ => None,
        }
    }

    pub fn is_sub(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.dist(sub, sup).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDecision {
    pub outcome: &'static str,
    /// (permission index, granted actions, retention bound)
    pub granted: Vec<(usize, BTreeSet<String>, Option<u64>)>,
    /// (permission index, purpose)
    pub questions: Vec<(usize, String)>,
}

fn oracle_action(a: &str) -> String {
    match a.strip_prefix("https://w3id.org/oac#") {
        Some(local) => format!("https://w3id.org/dpv#{local}"),
        None => a.to_string(),
    }
}

fn oracle_bound(p: &Permission) -> Option<u64> {
    let c = p
        .constraints
        .iter()
        .find(|c| c.left_operand.as_str() == "http://www.w3.org/ns/odrl/2/elapsedTime")?;
    let v = dp_core::policy::duration_to_seconds(c.right_operand.as_literal()?.value()).unwrap();
    match c.operator.as_str().rsplit('/').next().unwrap() {
        "eq" | "lteq" => Some(v),
        "lt" => Some(v.saturating_sub(1)),
        _ => None,
    }
}

fn severity(d: RuleDecision) -> u8 {
    match d {
        RuleDecision::Allow => 0,
        RuleDecision::Ask => 1,
        RuleDecision::Deny => 2,
    }
}

/// Enumerates every rule for every purpose; no index, no early exit.
pub fn oracle_evaluate(
    profile: &PreferenceProfile,
    request: &OdrlRequest,
    c: &ClosureOracle,
    unknown: Option<RuleDecision>,
) -> OracleDecision {
    let mut granted = Vec::new();
    let mut questions = Vec::new();
    for (i, perm) in request.permissions.iter().enumerate() {
        let mut purposes: Vec<String> = perm
            .constraints
            .iter()
            .filter(|k| {
                k.left_operand.as_str().ends_with("#Purpose")
                    || k.left_operand.as_str().ends_with("/purpose")
            })
            .map(|k| k.right_operand.as_iri().unwrap().to_string())
            .collect();
        if purposes.is_empty() {
            purposes.push("https://w3id.org/dpv#Purpose".to_string());
        }
        // (purpose, decision, rule)
        let mut verdicts: Vec<(String, RuleDecision, Option<&PreferenceRule>)> = Vec::new();
        for p in &purposes {
            if !c.contains(p) {
                verdicts.push((p.clone(), unknown.unwrap_or(profile.default_decision), None));
                continue;
            }
            let mut best: Option<(usize, u8, usize)> = None; // (distance, severity, rule index)
            for (k, r) in profile.rules.iter().enumerate() {
                if let Some(d) = c.dist(p, r.purpose.as_str()) {
                    let cand = (d, severity(r.decision), k);
                    let better = match best {
                        None => true,
                        Some((bd, bs, bk)) => {
                            d < bd || (d == bd && (cand.1 > bs || (cand.1 == bs && k < bk)))
                        }
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
            match best {
                Some((_, _, k)) => verdicts.push((
                    p.clone(),
                    profile.rules[k].decision,
                    Some(&profile.rules[k]),
                )),
                None => verdicts.push((p.clone(), profile.default_decision, None)),
            }
        }
        if verdicts.iter().any(|v| v.1 == RuleDecision::Deny) {
            continue;
        }
        if verdicts.iter().any(|v| v.1 == RuleDecision::Ask) {
            for v in verdicts.iter().filter(|v| v.1 == RuleDecision::Ask) {
                questions.push((i, v.0.clone()));
            }
            continue;
        }
        let mut actions: BTreeSet<String> = perm.actions.iter().map(|a| a.to_string()).collect();
        let mut cap = oracle_bound(perm);
        for (_, _, rule) in &verdicts {
            if let Some(r) = rule {
                if let ActionSet::Only(allowed) = &r.actions {
                    let allowed: BTreeSet<String> =
                        allowed.iter().map(|a| oracle_action(a.as_str())).collect();
                    actions.retain(|a| allowed.contains(&oracle_action(a)));
                }
                if let Some(m) = r.max_retention {
                    cap = Some(cap.map_or(m, |x| x.min(m)));
                }
            }
        }
        if !actions.is_empty() {
            granted.push((i, actions, cap));
        }
    }
    let outcome = if !questions.is_empty() {
        "pending"
    } else if granted.is_empty() {
        "denied"
    } else if granted.len() == request.permissions.len()
        && granted.iter().all(|(i, a, cap)| {
            let asked: BTreeSet<String> = request.permissions[*i]
                .actions
                .iter()
                .map(|x| x.to_string())
                .collect();
            *a == asked && *cap == oracle_bound(&request.permissions[*i])
        })
    {
        "granted"
    } else {
        "partial"
    };
    OracleDecision {
        outcome,
        granted,
        questions,
    }
}

/// The engine's decision in the oracle's shape.
pub fn as_oracle(d: &dp_core::Decision) -> OracleDecision {
    OracleDecision {
        outcome: d.outcome.as_str(),
        granted: d
            .granted_permissions
            .iter()
            .map(|g| {
                (
                    g.index,
                    g.permission.actions.iter().map(|a| a.to_string()).collect(),
                    g.permission.retention_bound().unwrap(),
                )
            })
            .collect(),
        questions: d
            .pending_questions
            .iter()
            .map(|q| (q.permission, q.purpose.to_string()))
            .collect(),
    }
}

pub const ACTION_POOL: &[&str] = &[
    "https://w3id.org/oac#Download",
    "https://w3id.org/oac#Store",
    "https://w3id.org/oac#Profiling",
    "https://w3id.org/dpv#Collect",
    "https://w3id.org/oac#Use",
];

/// The same action in the other namespace, half the time.
fn respell(rng: &mut StdRng, a: &str) -> Iri {
    let flipped = if rng.gen_bool(0.5) {
        a.replace("https://w3id.org/oac#", "https://w3id.org/dpv#")
    } else {
        a.to_string()
    };
    Iri::new_unchecked(flipped)
}

const RETENTION_DAYS: &[u64] = &[1, 7, 30, 180, 364, 365, 366, 729, 730, 731, 1825, 4000];

fn random_days(rng: &mut StdRng) -> u64 {
    if rng.gen_bool(0.8) {
        *RETENTION_DAYS.choose(rng).unwrap()
    } else {
        rng.gen_range(0..3000)
    }
}

fn random_decision(rng: &mut StdRng) -> RuleDecision {
    *[RuleDecision::Allow, RuleDecision::Ask, RuleDecision::Deny]
        .choose(rng)
        .unwrap()
}

/// Up to `max_rules` rules over `purposes`; duplicates are dropped.
pub fn random_profile(
    rng: &mut StdRng,
    purposes: &[Iri],
    max_rules: usize,
    tax: &PurposeTaxonomy,
) -> PreferenceProfile {
    loop {
        let n = rng.gen_range(0..=max_rules);
        let mut rules = Vec::new();
        for _ in 0..n {
            let actions = if rng.gen_bool(0.4) {
                ActionSet::Any
            } else {
                let k = rng.gen_range(1..=3);
                let picked: Vec<&&str> = ACTION_POOL.choose_multiple(rng, k).collect();
                ActionSet::Only(picked.into_iter().map(|a| respell(rng, a)).collect())
            };
            let max_retention = if rng.gen_bool(0.4) {
                None
            } else {
                Some(random_days(rng) * 86_400)
            };
            rules.push(PreferenceRule {
                purpose: purposes.choose(rng).unwrap().clone(),
                actions,
                max_retention,
                decision: random_decision(rng),
            });
        }
        if let Ok(p) = PreferenceProfile::new(owner(), random_decision(rng), rules, tax) {
            return p;
        }
    }
}

/// 1..=3 permissions, 1..=3 actions each, 0..=2 purposes (possibly unknown).
pub fn random_request(rng: &mut StdRng, purposes: &[Iri]) -> OdrlRequest {
    let unknown = Iri::new_unchecked("http://example.org/purposes#Unlisted");
    let n = rng.gen_range(1..=3);
    let permissions = (0..n)
        .map(|i| {
            let k = rng.gen_range(1..=3);
            let actions: BTreeSet<Iri> = ACTION_POOL
                .choose_multiple(rng, k)
                .map(|a| Iri::new_unchecked(*a))
                .collect();
            let mut constraints = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                let p = if rng.gen_bool(0.1) {
                    unknown.clone()
                } else {
                    purposes.choose(rng).unwrap().clone()
                };
                constraints.push(Constraint::purpose(p));
            }
            match rng.gen_range(0..6) {
                0 => {}
                1 => constraints.push(Constraint::retention(
                    vocab::ODRL_LTEQ,
                    format!("P{}D", random_days(rng)),
                )),
                2 => constraints.push(Constraint::retention(
                    vocab::ODRL_LT,
                    format!("P{}D", random_days(rng)),
                )),
                3 => constraints.push(Constraint::retention(
                    vocab::ODRL_GT,
                    format!("P{}D", random_days(rng)),
                )),
                4 => constraints.push(Constraint::retention(
                    vocab::ODRL_EQ,
                    format!("P{}Y", rng.gen_range(1..6)),
                )),
                _ => constraints.push(Constraint::retention(
                    vocab::ODRL_EQ,
                    format!("P{}D", random_days(rng)),
                )),
            }
            Permission {
                assignee: Some(Party::bare(Iri::new_unchecked("https://tracker.example/"))),
                actions,
                target: Iri::new_unchecked(format!("https://site.example/data/{i}")),
                constraints,
            }
        })
        .collect();
    OdrlRequest {
        node: Iri::new_unchecked("https://site.example/policy"),
        uid: "random".into(),
        description: None,
        creator: None,
        issued: None,
        profile: None,
        permissions,
    }
}
