//! User preference profiles in the `dpp:` vocabulary.
//!
//! ```turtle
//! @prefix dpp: <https://example.org/dpp#> .
//! @prefix dpv: <https://w3id.org/dpv#> .
//! @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
//!
//! <urn:user:me#prefs> a dpp:Profile ;
//!     dpp:owner <urn:user:me> ;
//!     dpp:default "ask" ;
//!     dpp:rule [ dpp:purpose dpv:Marketing ;
//!                dpp:action dpp:ANY ;
//!                dpp:maxRetention "P1Y"^^xsd:duration ;
//!                dpp:decision "allow" ] .
//! ```
//!
//! A rule with no `dpp:action` applies to any action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::actions::{normalize_actions, to_dpv_action};
use super::duration::{duration_to_seconds, seconds_to_duration};
use super::taxonomy::PurposeTaxonomy;
use super::{child_iri, find_typed_node, invalid, opt_iri, ordered_objects, PolicyError};
use crate::rdf::vocab::*;
use crate::rdf::{graph_digest, is_absolute_iri, write_turtle, Graph, Iri, Literal, Term};

/// Ordered by severity: `Allow < Ask < Deny`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleDecision {
    Allow,
    Ask,
    Deny,
}

impl RuleDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleDecision::Allow => "allow",
            RuleDecision::Ask => "ask",
            RuleDecision::Deny => "deny",
        }
    }
}

impl fmt::Display for RuleDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleDecision {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, PolicyError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "allow" => Ok(RuleDecision::Allow),
            "ask" => Ok(RuleDecision::Ask),
            "deny" => Ok(RuleDecision::Deny),
            _ => Err(PolicyError::UnknownDecision(s.to_string())),
        }
    }
}

/// Actions a rule covers. Serialized as `"ANY"` or an array of IRIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionSet {
    Any,
    Only(BTreeSet<Iri>),
}

impl ActionSet {
    pub fn permits(&self, action: &Iri) -> bool {
        match self {
            ActionSet::Any => true,
            ActionSet::Only(s) => {
                let a = to_dpv_action(action);
                s.iter().any(|x| to_dpv_action(x) == a)
            }
        }
    }

    /// The requested actions this set permits, in their requested spelling.
    pub fn intersect(&self, requested: &BTreeSet<Iri>) -> BTreeSet<Iri> {
        requested
            .iter()
            .filter(|a| self.permits(a))
            .cloned()
            .collect()
    }

    fn key(&self) -> (u8, BTreeSet<Iri>) {
        match self {
            ActionSet::Any => (0, BTreeSet::new()),
            ActionSet::Only(s) => (1, normalize_actions(s)),
        }
    }
}

impl Serialize for ActionSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ActionSet::Any => s.serialize_str("ANY"),
            ActionSet::Only(set) => set.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ActionSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(BTreeSet<Iri>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "ANY" => Ok(ActionSet::Any),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"ANY\" or an array of IRIs, got {w:?}"
            ))),
            Raw::List(l) => Ok(ActionSet::Only(l)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreferenceRule {
    pub purpose: Iri,
    pub actions: ActionSet,
    /// Seconds; `None` means no retention limit. JSON input may also give an
    /// `xsd:duration` string.
    #[serde(default, deserialize_with = "retention_from_json")]
    pub max_retention: Option<u64>,
    pub decision: RuleDecision,
}

pub(crate) fn retention_from_json<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Secs(u64),
        Lexical(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Secs(s)) => Ok(Some(s)),
        Some(Raw::Lexical(l)) => duration_to_seconds(&l)
            .map(Some)
            .map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub owner: Iri,
    #[serde(rename = "default")]
    pub default_decision: RuleDecision,
    pub rules: Vec<PreferenceRule>,
}

/// The outcome of rule selection for one purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Governing<'a> {
    pub decision: RuleDecision,
    /// Index into the profile's rules; `None` when a default applied.
    pub rule: Option<(usize, &'a PreferenceRule)>,
}

impl Governing<'_> {
    pub fn actions(&self) -> &ActionSet {
        static ANY: ActionSet = ActionSet::Any;
        self.rule.map_or(&ANY, |(_, r)| &r.actions)
    }

    pub fn max_retention(&self) -> Option<u64> {
        self.rule.and_then(|(_, r)| r.max_retention)
    }
}

impl PreferenceProfile {
    /// Validates against `taxonomy` and puts the rules in canonical order.
    pub fn new(
        owner: Iri,
        default_decision: RuleDecision,
        rules: Vec<PreferenceRule>,
        taxonomy: &PurposeTaxonomy,
    ) -> Result<Self, PolicyError> {
        let mut p = PreferenceProfile {
            owner,
            default_decision,
            rules,
        };
        p.validate(taxonomy)?;
        p.canonicalize();
        Ok(p)
    }

    pub fn validate(&self, taxonomy: &PurposeTaxonomy) -> Result<(), PolicyError> {
        if !is_absolute_iri(self.owner.as_str()) {
            return Err(invalid(
                "owner",
                format!("{:?} is not an absolute IRI", self.owner.as_str()),
            ));
        }
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            if !taxonomy.contains(&r.purpose) {
                return Err(PolicyError::UnknownPurpose(r.purpose.clone()));
            }
            if let ActionSet::Only(s) = &r.actions {
                if s.is_empty() {
                    return Err(invalid(
                        format!("rule for <{}>", r.purpose),
                        "empty action list; use \"ANY\"",
                    ));
                }
                if let Some(bad) = s.iter().find(|a| !is_absolute_iri(a.as_str())) {
                    return Err(invalid(
                        format!("rule for <{}>", r.purpose),
                        format!("{:?} is not an absolute IRI", bad.as_str()),
                    ));
                }
            }
            if !seen.insert((r.purpose.clone(), r.actions.key())) {
                return Err(PolicyError::DuplicateRule(r.purpose.clone()));
            }
        }
        Ok(())
    }

    /// Sorts rules by purpose, then `ANY` before explicit action lists.
    pub fn canonicalize(&mut self) {
        self.rules
            .sort_by(|a, b| (&a.purpose, a.actions.key()).cmp(&(&b.purpose, b.actions.key())));
    }

    /// Picks the rule governing `purpose`: among rules whose purpose is a
    /// superclass-or-equal, the nearest ones win; ties go to the most severe
    /// decision, then to the earlier rule. Purposes outside the taxonomy use
    /// `unknown_default` if given; otherwise (and when no rule applies) the
    /// profile default governs.
    pub fn governing(
        &self,
        purpose: &Iri,
        taxonomy: &PurposeTaxonomy,
        unknown_default: Option<RuleDecision>,
    ) -> Governing<'_> {
        if !taxonomy.contains(purpose) {
            return Governing {
                decision: unknown_default.unwrap_or(self.default_decision),
                rule: None,
            };
        }
        let mut by_purpose: BTreeMap<&Iri, Vec<usize>> = BTreeMap::new();
        for (k, r) in self.rules.iter().enumerate() {
            by_purpose.entry(&r.purpose).or_default().push(k);
        }
        let supers = taxonomy.superclasses(purpose);
        let mut i = 0;
        while i < supers.len() {
            let d = supers[i].1;
            let mut candidates: Vec<usize> = Vec::new();
            while i < supers.len() && supers[i].1 == d {
                if let Some(ks) = by_purpose.get(supers[i].0) {
                    candidates.extend(ks);
                }
                i += 1;
            }
            if let Some(&k) = candidates
                .iter()
                .min_by_key(|&&k| (std::cmp::Reverse(self.rules[k].decision), k))
            {
                return Governing {
                    decision: self.rules[k].decision,
                    rule: Some((k, &self.rules[k])),
                };
            }
        }
        Governing {
            decision: self.default_decision,
            rule: None,
        }
    }

    pub fn node(&self) -> Iri {
        child_iri(&self.owner, "preferences")
    }

    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        let s = Term::Iri(self.node());
        g.add(s.clone(), RDF_TYPE, Term::iri(DPP_PROFILE_CLASS));
        g.add(s.clone(), DPP_OWNER, self.owner.clone());
        g.add(
            s.clone(),
            DPP_DEFAULT,
            Literal::plain(self.default_decision.as_str()),
        );
        for (i, r) in self.rules.iter().enumerate() {
            let rn = Term::blank(format!("rule{i}"));
            g.add(s.clone(), DPP_RULE, rn.clone());
            g.add(rn.clone(), DPP_PURPOSE, r.purpose.clone());
            match &r.actions {
                ActionSet::Any => {
                    g.add(rn.clone(), DPP_ACTION, Term::iri(DPP_ANY));
                }
                ActionSet::Only(set) => {
                    for a in set {
                        g.add(rn.clone(), DPP_ACTION, a.clone());
                    }
                }
            }
            if let Some(m) = r.max_retention {
                g.add(
                    rn.clone(),
                    DPP_MAX_RETENTION,
                    Literal::typed(seconds_to_duration(m), Iri::new_unchecked(XSD_DURATION)),
                );
            }
            g.add(rn, DPP_DECISION, Literal::plain(r.decision.as_str()));
        }
        for (p, ns) in [("dpp", DPP), ("dpv", DPV), ("oac", OAC), ("xsd", XSD)] {
            g.set_prefix(p, ns);
        }
        g
    }

    pub fn to_turtle(&self) -> String {
        write_turtle(&self.to_graph())
    }

    /// Digest of the profile graph; changes whenever any rule changes.
    pub fn version(&self) -> String {
        graph_digest(&self.to_graph())
    }
}

fn decision_of(t: &Term) -> Result<RuleDecision, PolicyError> {
    match t {
        Term::Literal(l) => l.value().parse(),
        Term::Iri(i) => match i.as_str().strip_prefix(DPP) {
            Some(local) => local
                .parse()
                .map_err(|_| PolicyError::UnknownDecision(i.to_string())),
            None => Err(PolicyError::UnknownDecision(i.to_string())),
        },
        Term::Blank(b) => Err(PolicyError::UnknownDecision(format!("_:{b}"))),
    }
}

/// Reads and validates the `dpp:Profile` in `g`.
pub fn parse_preferences(
    g: &Graph,
    taxonomy: &PurposeTaxonomy,
) -> Result<PreferenceProfile, PolicyError> {
    let (node, _) = find_typed_node(g, DPP_PROFILE_CLASS, "dpp:Profile", None)?;
    let owner = opt_iri(g, &node, DPP_OWNER, "owner")?.ok_or(PolicyError::MissingOwner)?;
    let default_decision = match g.object(&node, DPP_DEFAULT)? {
        Some(t) => decision_of(t)?,
        None => RuleDecision::Ask,
    };
    let mut rules = Vec::new();
    for (k, r) in ordered_objects(g, &node, DPP_RULE).iter().enumerate() {
        let what = format!("rule {k}");
        let purpose = opt_iri(g, r, DPP_PURPOSE, &what)?
            .ok_or_else(|| invalid(&what, "missing dpp:purpose"))?;
        let mut listed = BTreeSet::new();
        let mut any = false;
        for a in g.objects(r, DPP_ACTION) {
            match a {
                Term::Iri(i) if i.as_str() == DPP_ANY => any = true,
                Term::Iri(i) => {
                    listed.insert(i.clone());
                }
                Term::Literal(l) if l.value() == "ANY" => any = true,
                other => return Err(invalid(&what, format!("action {other} is not an IRI"))),
            }
        }
        let actions = if any || listed.is_empty() {
            ActionSet::Any
        } else {
            ActionSet::Only(listed)
        };
        let max_retention = match g.object(r, DPP_MAX_RETENTION)? {
            Some(Term::Literal(l)) => Some(duration_to_seconds(l.value())?),
            Some(other) => {
                return Err(invalid(
                    &what,
                    format!("maxRetention {other} is not a duration"),
                ))
            }
            None => None,
        };
        let decision = decision_of(
            g.object(r, DPP_DECISION)?
                .ok_or_else(|| invalid(&what, "missing dpp:decision"))?,
        )?;
        rules.push(PreferenceRule {
            purpose,
            actions,
            max_retention,
            decision,
        });
    }
    PreferenceProfile::new(owner, default_decision, rules, taxonomy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;

    const HEAD: &str = "@prefix dpp: <https://example.org/dpp#> . @prefix dpv: <https://w3id.org/dpv#> .\n\
                        @prefix xsd: <http://www.w3.org/2001/XMLSchema#> . @prefix oac: <https://w3id.org/oac#> .\n";

    fn parse(body: &str) -> Result<PreferenceProfile, PolicyError> {
        parse_preferences(
            &parse_turtle(&format!("{HEAD}{body}"), None).unwrap(),
            PurposeTaxonomy::dpv_subset(),
        )
    }

    fn dpv(l: &str) -> Iri {
        Iri::new_unchecked(format!("{DPV}{l}"))
    }

    #[test]
    fn one_rule() {
        let p = parse(
            "<urn:u#p> a dpp:Profile ; dpp:owner <urn:u> ; dpp:default \"ask\" ;\n\
             dpp:rule [ dpp:purpose dpv:Marketing ; dpp:action dpp:ANY ; dpp:maxRetention \"P1Y\"^^xsd:duration ; dpp:decision \"allow\" ] .",
        )
        .unwrap();
        assert_eq!(p.default_decision, RuleDecision::Ask);
        assert_eq!(
            p.rules,
            vec![PreferenceRule {
                purpose: dpv("Marketing"),
                actions: ActionSet::Any,
                max_retention: Some(31_536_000),
                decision: RuleDecision::Allow
            }]
        );
        let again = parse_preferences(&p.to_graph(), PurposeTaxonomy::dpv_subset()).unwrap();
        assert_eq!(again, p);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<PreferenceProfile>(&json).unwrap(), p);
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse("<urn:u#p> a dpp:Profile ; dpp:owner <urn:u> ; dpp:rule [ dpp:purpose dpv:Marketing ; dpp:decision \"maybe\" ] ."),
            Err(PolicyError::UnknownDecision("maybe".into()))
        );
        assert_eq!(
            parse("<urn:u#p> a dpp:Profile ; dpp:owner <urn:u> ; dpp:rule [ dpp:purpose <http://e/Nope> ; dpp:decision \"allow\" ] ."),
            Err(PolicyError::UnknownPurpose(Iri::new_unchecked("http://e/Nope")))
        );
        assert_eq!(
            parse(
                "<urn:u#p> a dpp:Profile ; dpp:owner <urn:u> ;\n\
                 dpp:rule [ dpp:purpose dpv:Marketing ; dpp:action oac:Store ; dpp:decision \"allow\" ] ,\n\
                          [ dpp:purpose dpv:Marketing ; dpp:action dpv:Store ; dpp:decision \"deny\" ] ."
            ),
            Err(PolicyError::DuplicateRule(dpv("Marketing")))
        );
    }

    #[test]
    fn json_accepts_lexical_retention() {
        let p: PreferenceProfile = serde_json::from_str(
            r#"{"owner":"urn:u","default":"deny","rules":[{"purpose":"https://w3id.org/dpv#Marketing","actions":["https://w3id.org/oac#Store"],"maxRetention":"P30D","decision":"allow"}]}"#,
        )
        .unwrap();
        assert_eq!(p.rules[0].max_retention, Some(2_592_000));
        assert!(p.rules[0].actions.permits(&dpv("Store")));
    }

    #[test]
    fn specificity() {
        let t = PurposeTaxonomy::dpv_subset();
        let rule = |p: &str, d| PreferenceRule {
            purpose: dpv(p),
            actions: ActionSet::Any,
            max_retention: None,
            decision: d,
        };
        let p = PreferenceProfile::new(
            Iri::new_unchecked("urn:u"),
            RuleDecision::Deny,
            vec![
                rule("Purpose", RuleDecision::Ask),
                rule("Marketing", RuleDecision::Allow),
            ],
            t,
        )
        .unwrap();
        assert_eq!(
            p.governing(&dpv("Advertising"), t, None).decision,
            RuleDecision::Allow
        );
        assert_eq!(
            p.governing(&dpv("Analytics"), t, None).decision,
            RuleDecision::Ask
        );
        let unknown = Iri::new_unchecked("http://e/x");
        assert_eq!(p.governing(&unknown, t, None).decision, RuleDecision::Deny);
        assert_eq!(
            p.governing(&unknown, t, Some(RuleDecision::Ask)).decision,
            RuleDecision::Ask
        );
        // PersonalisedAdvertising sits under both Advertising and Personalisation
        let q = PreferenceProfile::new(
            Iri::new_unchecked("urn:u"),
            RuleDecision::Allow,
            vec![
                rule("Advertising", RuleDecision::Allow),
                rule("Personalisation", RuleDecision::Deny),
            ],
            t,
        )
        .unwrap();
        assert_eq!(
            q.governing(&dpv("PersonalisedAdvertising"), t, None)
                .decision,
            RuleDecision::Deny
        );
    }
}
