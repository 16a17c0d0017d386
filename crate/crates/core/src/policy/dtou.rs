//! DToU app policies.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{child_iri, find_typed_node, invalid, opt_iri, opt_text, ordered_objects, PolicyError};
use crate::rdf::vocab::*;
use crate::rdf::{Graph, Iri, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Downstream {
    pub app_name: Iri,
    pub purpose: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InputSpec {
    pub data: Iri,
    pub port_name: Option<String>,
    pub purposes: BTreeSet<Iri>,
    pub expects: BTreeSet<Iri>,
    /// Duration tag.
    pub provide: Option<Iri>,
    pub downstream: Vec<Downstream>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DtouAppPolicy {
    /// The policy node, or its skolem IRI when it was a blank node.
    pub node: Iri,
    pub name: Iri,
    pub input_specs: Vec<InputSpec>,
}

/// The descriptor of a `[ dtou:descriptor X ]` node, or the node itself
/// when it is written as a bare IRI.
fn descriptor(g: &Graph, n: &Term, what: &str) -> Result<Iri, PolicyError> {
    if let Some(d) = opt_iri(g, n, DTOU_DESCRIPTOR, what)? {
        return Ok(d);
    }
    match n {
        Term::Iri(i) => Ok(i.clone()),
        other => Err(invalid(what, format!("{other} has no dtou:descriptor"))),
    }
}

/// Reads the `dtou:AppPolicy` in `g` (or the one at `node`).
pub fn parse_dtou_app_policy(g: &Graph, node: Option<&Iri>) -> Result<DtouAppPolicy, PolicyError> {
    let (term, iri) = find_typed_node(g, DTOU_APP_POLICY_CLASS, "dtou:AppPolicy", node)?;
    let name = opt_iri(g, &term, DTOU_NAME, "app policy name")?
        .ok_or_else(|| invalid("app policy", "missing dtou:name"))?;
    let mut input_specs = Vec::new();
    for (k, s) in ordered_objects(g, &term, DTOU_INPUT_SPEC)
        .iter()
        .enumerate()
    {
        let what = format!("input spec {k}");
        let data =
            opt_iri(g, s, DTOU_DATA, &what)?.ok_or_else(|| invalid(&what, "missing dtou:data"))?;
        let port_name = match g.object(s, DTOU_PORT)? {
            Some(p) => opt_text(g, p, DTOU_NAME, &what)?,
            None => None,
        };
        let purposes = g
            .objects(s, DTOU_PURPOSE)
            .map(|p| descriptor(g, p, &what))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if purposes.is_empty() {
            return Err(PolicyError::PurposeRequired(k));
        }
        let expects = g
            .objects(s, DTOU_EXPECT)
            .map(|p| descriptor(g, p, &what))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let provide = match g.object(s, DTOU_PROVIDE)? {
            Some(p) => Some(descriptor(g, p, &what)?),
            None => None,
        };
        let mut downstream = Vec::new();
        for d in ordered_objects(g, s, DTOU_DOWNSTREAM) {
            let app_name = opt_iri(g, &d, DTOU_APP_NAME, &what)?
                .ok_or_else(|| invalid(&what, "downstream without dtou:app_name"))?;
            let purpose = match g.object(&d, DTOU_PURPOSE)? {
                Some(p) => descriptor(g, p, &what)?,
                None => return Err(invalid(&what, "downstream without dtou:purpose")),
            };
            downstream.push(Downstream { app_name, purpose });
        }
        input_specs.push(InputSpec {
            data,
            port_name,
            purposes,
            expects,
            provide,
            downstream,
        });
    }
    if input_specs.is_empty() {
        return Err(PolicyError::NoInputSpecs);
    }
    Ok(DtouAppPolicy {
        node: iri,
        name,
        input_specs,
    })
}

impl DtouAppPolicy {
    /// Graph in the shape of a hand-written app policy: input specs are
    /// `<node>#input-i`, descriptors are blank nodes.
    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        let s = Term::Iri(self.node.clone());
        g.add(s.clone(), RDF_TYPE, Term::iri(DTOU_APP_POLICY_CLASS));
        g.add(s.clone(), DTOU_NAME, self.name.clone());
        for (i, spec) in self.input_specs.iter().enumerate() {
            let sn = Term::Iri(child_iri(&self.node, &format!("input-{i}")));
            let blank = |kind: &str, j: usize| Term::blank(format!("in{i}{kind}{j}"));
            g.add(s.clone(), DTOU_INPUT_SPEC, sn.clone());
            g.add(sn.clone(), RDF_TYPE, Term::iri(DTOU_INPUT_SPEC_CLASS));
            g.add(sn.clone(), DTOU_DATA, spec.data.clone());
            if let Some(p) = &spec.port_name {
                let pn = blank("port", 0);
                g.add(sn.clone(), DTOU_PORT, pn.clone());
                g.add(pn, DTOU_NAME, Literal::plain(p.clone()));
            }
            for (j, p) in spec.purposes.iter().enumerate() {
                let d = blank("purpose", j);
                g.add(sn.clone(), DTOU_PURPOSE, d.clone());
                g.add(d, DTOU_DESCRIPTOR, p.clone());
            }
            for (j, e) in spec.expects.iter().enumerate() {
                let d = blank("expect", j);
                g.add(sn.clone(), DTOU_EXPECT, d.clone());
                g.add(d, DTOU_DESCRIPTOR, e.clone());
            }
            if let Some(t) = &spec.provide {
                let d = blank("provide", 0);
                g.add(sn.clone(), DTOU_PROVIDE, d.clone());
                g.add(d, DTOU_DESCRIPTOR, t.clone());
            }
            for (j, ds) in spec.downstream.iter().enumerate() {
                let d = blank("downstream", j);
                g.add(sn.clone(), DTOU_DOWNSTREAM, d.clone());
                g.add(d.clone(), DTOU_APP_NAME, ds.app_name.clone());
                g.add(d, DTOU_PURPOSE, ds.purpose.clone());
            }
        }
        for (p, ns) in [("dtou", DTOU), ("dpv", DPV), ("dur", DUR)] {
            g.set_prefix(p, ns);
        }
        g
    }
}
