//! ODRL requests and agreements.

use std::collections::BTreeSet;

use serde::Serialize;

use super::duration::duration_to_seconds;
use super::{
    check_date_time, child_iri, find_typed_node, invalid, opt_iri, opt_text, ordered_objects,
    PolicyError,
};
use crate::rdf::vocab::*;
use crate::rdf::{Graph, Iri, Literal, Term};

/// An agent named by a request: its IRI plus whatever the graph says about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Party {
    pub iri: Iri,
    pub name: Option<String>,
    pub page: Option<Iri>,
    pub role_class: Option<Iri>,
}

impl Party {
    pub fn bare(iri: Iri) -> Self {
        Party {
            iri,
            name: None,
            page: None,
            role_class: None,
        }
    }

    fn parse(g: &Graph, iri: Iri) -> Result<Self, PolicyError> {
        let s = Term::Iri(iri.clone());
        let name = opt_text(g, &s, DPV_HAS_NAME, "party name")?;
        let page = opt_iri(g, &s, FOAF_PAGE, "party page")?;
        let role_class = g
            .objects(&s, RDF_TYPE)
            .filter_map(Term::as_iri)
            .min()
            .cloned();
        Ok(Party {
            iri,
            name,
            page,
            role_class,
        })
    }

    fn write(&self, g: &mut Graph) {
        let s = Term::Iri(self.iri.clone());
        if let Some(r) = &self.role_class {
            g.add(s.clone(), RDF_TYPE, r.clone());
        }
        if let Some(n) = &self.name {
            g.add(s.clone(), DPV_HAS_NAME, Literal::plain(n.clone()));
        }
        if let Some(p) = &self.page {
            g.add(s, FOAF_PAGE, p.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Constraint {
    pub left_operand: Iri,
    pub operator: Iri,
    pub right_operand: Term,
    pub title: Option<String>,
}

const EVALUABLE: &[&str] = &[ODRL_IS_A, ODRL_EQ, ODRL_LT, ODRL_LTEQ, ODRL_GT, ODRL_GTEQ];

impl Constraint {
    pub fn purpose(purpose: Iri) -> Self {
        Constraint {
            left_operand: Iri::new_unchecked(OAC_PURPOSE),
            operator: Iri::new_unchecked(ODRL_IS_A),
            right_operand: Term::Iri(purpose),
            title: None,
        }
    }

    pub fn retention(operator: &str, lexical: impl Into<String>) -> Self {
        Constraint {
            left_operand: Iri::new_unchecked(ODRL_ELAPSED_TIME),
            operator: Iri::new_unchecked(operator),
            right_operand: Term::Literal(Literal::typed(lexical, Iri::new_unchecked(XSD_DURATION))),
            title: None,
        }
    }

    /// Operator is one of isA, eq, lt, lteq, gt, gteq.
    pub fn is_evaluable(&self) -> bool {
        EVALUABLE.contains(&self.operator.as_str())
    }

    pub fn is_purpose(&self) -> bool {
        matches!(self.left_operand.as_str(), OAC_PURPOSE | ODRL_PURPOSE)
    }

    pub fn is_retention(&self) -> bool {
        self.left_operand.as_str() == ODRL_ELAPSED_TIME
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Permission {
    pub assignee: Option<Party>,
    pub actions: BTreeSet<Iri>,
    pub target: Iri,
    pub constraints: Vec<Constraint>,
}

impl Permission {
    pub fn purpose_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| c.is_purpose())
    }

    pub fn retention_constraint(&self) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.is_retention())
    }

    /// Purposes named by `isA` purpose constraints. Errors on any other
    /// operator in the purpose dimension.
    pub fn purposes(&self, index: usize) -> Result<Vec<Iri>, PolicyError> {
        self.purpose_constraints()
            .map(|c| match (&c.operator, &c.right_operand) {
                (op, Term::Iri(p)) if op.as_str() == ODRL_IS_A => Ok(p.clone()),
                (op, Term::Iri(_)) => Err(PolicyError::UnevaluableOperator {
                    permission: index,
                    dimension: "purpose",
                    operator: op.clone(),
                }),
                (_, other) => Err(invalid(
                    format!("permission {index}"),
                    format!("purpose operand {other} is not an IRI"),
                )),
            })
            .collect()
    }

    /// Upper bound on retention in seconds, `None` when unbounded. `eq` and
    /// `lteq` bound at the value, `lt` just below it; lower-bound operators
    /// leave retention unbounded.
    pub fn retention_bound(&self) -> Result<Option<u64>, PolicyError> {
        let Some(c) = self.retention_constraint() else {
            return Ok(None);
        };
        let lexical = match &c.right_operand {
            Term::Literal(l) => l.value(),
            other => {
                return Err(invalid(
                    "retention",
                    format!("operand {other} is not a duration literal"),
                ))
            }
        };
        let v = duration_to_seconds(lexical)?;
        Ok(match c.operator.as_str() {
            ODRL_EQ | ODRL_LTEQ => Some(v),
            ODRL_LT => Some(v.saturating_sub(1)),
            _ => None,
        })
    }

    fn parse(g: &Graph, node: &Term, index: usize) -> Result<Self, PolicyError> {
        let assignee = match opt_iri(g, node, ODRL_ASSIGNEE, "assignee")? {
            Some(i) => Some(Party::parse(g, i)?),
            None => None,
        };
        let mut actions = BTreeSet::new();
        for a in g.objects(node, ODRL_ACTION) {
            match a {
                Term::Iri(i) => actions.insert(i.clone()),
                other => {
                    return Err(invalid(
                        format!("permission {index}"),
                        format!("action {other} is not an IRI"),
                    ))
                }
            };
        }
        if actions.is_empty() {
            return Err(PolicyError::EmptyActions(index));
        }
        let target =
            opt_iri(g, node, ODRL_TARGET, "target")?.ok_or(PolicyError::MissingTarget(index))?;
        let mut constraints = Vec::new();
        for c in ordered_objects(g, node, ODRL_CONSTRAINT) {
            let what = format!("permission {index} constraint");
            let left_operand = opt_iri(g, &c, ODRL_LEFT_OPERAND, &what)?
                .ok_or_else(|| invalid(&what, "missing leftOperand"))?;
            let operator = opt_iri(g, &c, ODRL_OPERATOR, &what)?
                .ok_or_else(|| invalid(&what, "missing operator"))?;
            let right_operand = g
                .object(&c, ODRL_RIGHT_OPERAND)?
                .cloned()
                .ok_or_else(|| invalid(&what, "missing rightOperand"))?;
            let title = opt_text(g, &c, DCTERMS_TITLE, &what)?;
            constraints.push(Constraint {
                left_operand,
                operator,
                right_operand,
                title,
            });
        }
        if constraints.iter().filter(|c| c.is_retention()).count() > 1 {
            return Err(PolicyError::DuplicateRetention(index));
        }
        Ok(Permission {
            assignee,
            actions,
            target,
            constraints,
        })
    }

    /// Writes the permission under `node`. Constraint nodes are
    /// `make_node(j)`.
    fn write(&self, g: &mut Graph, node: &Term, make_node: impl Fn(usize) -> Term) {
        if let Some(a) = &self.assignee {
            g.add(node.clone(), ODRL_ASSIGNEE, a.iri.clone());
            a.write(g);
        }
        for a in &self.actions {
            g.add(node.clone(), ODRL_ACTION, a.clone());
        }
        g.add(node.clone(), ODRL_TARGET, self.target.clone());
        for (j, c) in self.constraints.iter().enumerate() {
            let cn = make_node(j);
            g.add(node.clone(), ODRL_CONSTRAINT, cn.clone());
            if let Some(t) = &c.title {
                g.add(cn.clone(), DCTERMS_TITLE, Literal::plain(t.clone()));
            }
            g.add(cn.clone(), ODRL_LEFT_OPERAND, c.left_operand.clone());
            g.add(cn.clone(), ODRL_OPERATOR, c.operator.clone());
            g.add(cn, ODRL_RIGHT_OPERAND, c.right_operand.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OdrlRequest {
    /// The request node, or its skolem IRI when it was a blank node.
    pub node: Iri,
    pub uid: String,
    pub description: Option<String>,
    pub creator: Option<Party>,
    /// `xsd:dateTime` lexical form.
    pub issued: Option<String>,
    pub profile: Option<Iri>,
    pub permissions: Vec<Permission>,
}

/// Reads the `odrl:Request` in `g` (or the one at `node`).
pub fn parse_odrl_request(g: &Graph, node: Option<&Iri>) -> Result<OdrlRequest, PolicyError> {
    let (term, iri) = find_typed_node(g, ODRL_REQUEST_CLASS, "odrl:Request", node)?;
    let uid = match g.object(&term, ODRL_UID)? {
        Some(Term::Literal(l)) => l.value().to_string(),
        Some(Term::Iri(i)) => i.to_string(),
        _ => String::new(),
    };
    if uid.is_empty() {
        return Err(PolicyError::MissingUid);
    }
    let description = opt_text(g, &term, DCTERMS_DESCRIPTION, "description")?;
    let creator = match opt_iri(g, &term, DCTERMS_CREATOR, "creator")? {
        Some(i) => Some(Party::parse(g, i)?),
        None => None,
    };
    let issued = opt_text(g, &term, DCTERMS_ISSUED, "issued")?;
    if let Some(i) = &issued {
        check_date_time(i)?;
    }
    let profile = opt_iri(g, &term, ODRL_PROFILE, "profile")?;
    let permissions = ordered_objects(g, &term, ODRL_PERMISSION)
        .iter()
        .enumerate()
        .map(|(k, p)| Permission::parse(g, p, k))
        .collect::<Result<Vec<_>, _>>()?;
    if permissions.is_empty() {
        return Err(PolicyError::NoPermissions);
    }
    Ok(OdrlRequest {
        node: iri,
        uid,
        description,
        creator,
        issued,
        profile,
        permissions,
    })
}

impl OdrlRequest {
    /// Graph form; permissions and constraints are blank nodes.
    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        let s = Term::Iri(self.node.clone());
        g.add(s.clone(), RDF_TYPE, Term::iri(ODRL_REQUEST_CLASS));
        g.add(s.clone(), ODRL_UID, Literal::plain(self.uid.clone()));
        if let Some(d) = &self.description {
            g.add(s.clone(), DCTERMS_DESCRIPTION, Literal::plain(d.clone()));
        }
        if let Some(c) = &self.creator {
            g.add(s.clone(), DCTERMS_CREATOR, c.iri.clone());
            c.write(&mut g);
        }
        if let Some(i) = &self.issued {
            g.add(
                s.clone(),
                DCTERMS_ISSUED,
                Literal::typed(i.clone(), Iri::new_unchecked(XSD_DATE_TIME)),
            );
        }
        if let Some(p) = &self.profile {
            g.add(s.clone(), ODRL_PROFILE, p.clone());
        }
        for (i, p) in self.permissions.iter().enumerate() {
            let pn = Term::blank(format!("perm{i}"));
            g.add(s.clone(), ODRL_PERMISSION, pn.clone());
            p.write(&mut g, &pn, |j| Term::blank(format!("perm{i}c{j}")));
        }
        set_prefixes(&mut g);
        g
    }
}

fn set_prefixes(g: &mut Graph) {
    for (p, ns) in [
        ("odrl", ODRL),
        ("dcterms", DCTERMS),
        ("dpv", DPV),
        ("oac", OAC),
        ("xsd", XSD),
    ] {
        g.set_prefix(p, ns);
    }
}

/// A narrowed grant. Its graph uses IRIs only: permission `i` of the
/// request becomes `<node>#perm-i` and its constraints `<node>#perm-i-cj`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OdrlAgreement {
    pub node: Iri,
    pub uid: String,
    /// `xsd:dateTime` lexical form.
    pub issued: String,
    pub assigner: Iri,
    pub request_digest: String,
    /// (request permission index, narrowed permission)
    pub permissions: Vec<(usize, Permission)>,
}

pub const AGREEMENT_PREFIX: &str = "urn:app:agreement:";

impl OdrlAgreement {
    pub fn node_for(uid: &str) -> Iri {
        Iri::new_unchecked(format!("{AGREEMENT_PREFIX}{uid}"))
    }

    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        let s = Term::Iri(self.node.clone());
        g.add(s.clone(), RDF_TYPE, Term::iri(ODRL_AGREEMENT_CLASS));
        g.add(s.clone(), ODRL_UID, Literal::plain(self.uid.clone()));
        g.add(
            s.clone(),
            DCTERMS_ISSUED,
            Literal::typed(self.issued.clone(), Iri::new_unchecked(XSD_DATE_TIME)),
        );
        g.add(s.clone(), ODRL_ASSIGNER, self.assigner.clone());
        g.add(
            s.clone(),
            DPP_REQUEST_DIGEST,
            Literal::plain(self.request_digest.clone()),
        );
        for (i, p) in &self.permissions {
            let pn = Term::Iri(child_iri(&self.node, &format!("perm-{i}")));
            g.add(s.clone(), ODRL_PERMISSION, pn.clone());
            let base = child_iri(&self.node, &format!("perm-{i}"));
            p.write(&mut g, &pn, |j| {
                Term::Iri(Iri::new_unchecked(format!("{base}-c{j}")))
            });
        }
        set_prefixes(&mut g);
        g.set_prefix("dpp", DPP);
        g
    }
}

/// Reads the `odrl:Agreement` in `g` (or the one at `node`). Permission
/// indices come from the `#perm-i` node names when present, otherwise from
/// document order.
pub fn parse_odrl_agreement(g: &Graph, node: Option<&Iri>) -> Result<OdrlAgreement, PolicyError> {
    let (term, iri) = find_typed_node(g, ODRL_AGREEMENT_CLASS, "odrl:Agreement", node)?;
    let uid = opt_text(g, &term, ODRL_UID, "uid")?
        .filter(|u| !u.is_empty())
        .ok_or(PolicyError::MissingUid)?;
    let issued = opt_text(g, &term, DCTERMS_ISSUED, "issued")?
        .ok_or_else(|| invalid("issued", "missing"))?;
    check_date_time(&issued)?;
    let assigner = opt_iri(g, &term, ODRL_ASSIGNER, "assigner")?
        .ok_or_else(|| invalid("assigner", "missing"))?;
    let request_digest =
        opt_text(g, &term, DPP_REQUEST_DIGEST, "requestDigest")?.unwrap_or_default();
    let mut permissions = Vec::new();
    for (k, p) in ordered_objects(g, &term, ODRL_PERMISSION)
        .iter()
        .enumerate()
    {
        let index = match p {
            Term::Iri(pi) => pi
                .as_str()
                .rsplit("perm-")
                .next()
                .and_then(|n| n.parse().ok())
                .unwrap_or(k),
            _ => k,
        };
        permissions.push((index, Permission::parse(g, p, k)?));
    }
    Ok(OdrlAgreement {
        node: iri,
        uid,
        issued,
        assigner,
        request_digest,
        permissions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;

    const TWO: &str = r#"
@prefix odrl: <http://www.w3.org/ns/odrl/2/> .
@prefix oac: <https://w3id.org/oac#> .
@prefix dpv: <https://w3id.org/dpv#> .
<http://e/r1> a odrl:Request ; odrl:uid "r1" ;
  odrl:permission [ odrl:action oac:Store ; odrl:target <http://e/d> ] .
<http://e/r2> a odrl:Request ; odrl:uid "r2" ;
  odrl:permission [ odrl:action oac:Store, oac:Use ; odrl:target <http://e/d2> ] .
"#;

    #[test]
    fn picks_identified_request() {
        let g = parse_turtle(TWO, None).unwrap();
        assert!(matches!(
            parse_odrl_request(&g, None),
            Err(PolicyError::MultipleNodes { .. })
        ));
        let r = parse_odrl_request(&g, Some(&Iri::new_unchecked("http://e/r2"))).unwrap();
        assert_eq!(r.uid, "r2");
        assert_eq!(r.permissions[0].actions.len(), 2);
        assert!(matches!(
            parse_odrl_request(&g, Some(&Iri::new_unchecked("http://e/nope"))),
            Err(PolicyError::NotTyped { .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let parse = |body: &str| {
            let src = format!(
                "@prefix odrl: <http://www.w3.org/ns/odrl/2/> . @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n{body}"
            );
            parse_odrl_request(&parse_turtle(&src, None).unwrap(), None)
        };
        assert_eq!(
            parse("<http://e/r> a odrl:Request ; odrl:uid \"x\" ."),
            Err(PolicyError::NoPermissions)
        );
        assert_eq!(
            parse("<http://e/r> a odrl:Request ; odrl:permission [ odrl:action odrl:use ; odrl:target <http://e/t> ] ."),
            Err(PolicyError::MissingUid)
        );
        assert_eq!(
            parse("<http://e/r> a odrl:Request ; odrl:uid \"x\" ; odrl:permission [ odrl:target <http://e/t> ] ."),
            Err(PolicyError::EmptyActions(0))
        );
        assert_eq!(
            parse(
                "<http://e/r> a odrl:Request ; odrl:uid \"x\" ; odrl:permission [ odrl:action odrl:use ; \
                 odrl:target <http://e/t> ; \
                 odrl:constraint [ odrl:leftOperand odrl:elapsedTime ; odrl:operator odrl:eq ; odrl:rightOperand \"P1D\"^^xsd:duration ] , \
                 [ odrl:leftOperand odrl:elapsedTime ; odrl:operator odrl:lt ; odrl:rightOperand \"P2D\"^^xsd:duration ] ] ."
            ),
            Err(PolicyError::DuplicateRetention(0))
        );
        assert_eq!(
            parse("<http://e/x> a odrl:Offer ."),
            Err(PolicyError::NoNode("odrl:Request"))
        );
    }

    #[test]
    fn blank_request_node_gets_skolem_iri() {
        let src = "@prefix odrl: <http://www.w3.org/ns/odrl/2/> .\n\
                   [] a odrl:Request ; odrl:uid \"x\" ; odrl:permission [ odrl:action odrl:use ; odrl:target <http://e/t> ] .";
        let r = parse_odrl_request(&parse_turtle(src, None).unwrap(), None).unwrap();
        assert!(r.node.as_str().starts_with(crate::rdf::SKOLEM_PREFIX));
    }

    #[test]
    fn unevaluable_operator_kept() {
        let c = Constraint {
            left_operand: Iri::new_unchecked(ODRL_PURPOSE),
            operator: Iri::new_unchecked("http://www.w3.org/ns/odrl/2/isAnyOf"),
            right_operand: Term::iri("https://w3id.org/dpv#Marketing"),
            title: None,
        };
        assert!(!c.is_evaluable());
        let p = Permission {
            assignee: None,
            actions: BTreeSet::from([Iri::new_unchecked(ODRL_UID)]),
            target: Iri::new_unchecked("http://e/t"),
            constraints: vec![c],
        };
        assert!(matches!(
            p.purposes(3),
            Err(PolicyError::UnevaluableOperator { permission: 3, .. })
        ));
    }
}
