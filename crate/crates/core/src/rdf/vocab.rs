//! Namespace and term constants.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
pub const DCTERMS: &str = "http://purl.org/dc/terms/";
pub const FOAF: &str = "http://xmlns.com/foaf/0.1/";
pub const ODRL: &str = "http://www.w3.org/ns/odrl/2/";
pub const DPV: &str = "https://w3id.org/dpv#";
pub const OAC: &str = "https://w3id.org/oac#";
pub const DTOU: &str = "urn:dtou:core#";
pub const DUR: &str = "http://example.com/duration#";
pub const DPP: &str = "https://example.org/dpp#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const SKOS_BROADER: &str = "http://www.w3.org/2004/02/skos/core#broader";
pub const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
pub const SKOS_DEFINITION: &str = "http://www.w3.org/2004/02/skos/core#definition";
pub const SKOS_SCOPE_NOTE: &str = "http://www.w3.org/2004/02/skos/core#scopeNote";
pub const SKOS_EXACT_MATCH: &str = "http://www.w3.org/2004/02/skos/core#exactMatch";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_DURATION: &str = "http://www.w3.org/2001/XMLSchema#duration";
pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

/// Prefixes resolved when a document uses them without declaring them.
/// Published examples routinely omit these.
// ODRL, OAC, DCTERMS, DPV, FOAF, DToU and preference-vocabulary terms
pub const ODRL_REQUEST_CLASS: &str = "http://www.w3.org/ns/odrl/2/Request";
pub const ODRL_AGREEMENT_CLASS: &str = "http://www.w3.org/ns/odrl/2/Agreement";
pub const ODRL_UID: &str = "http://www.w3.org/ns/odrl/2/uid";
pub const ODRL_PROFILE: &str = "http://www.w3.org/ns/odrl/2/profile";
pub const ODRL_PERMISSION: &str = "http://www.w3.org/ns/odrl/2/permission";
pub const ODRL_ASSIGNEE: &str = "http://www.w3.org/ns/odrl/2/assignee";
pub const ODRL_ASSIGNER: &str = "http://www.w3.org/ns/odrl/2/assigner";
pub const ODRL_ACTION: &str = "http://www.w3.org/ns/odrl/2/action";
pub const ODRL_TARGET: &str = "http://www.w3.org/ns/odrl/2/target";
pub const ODRL_CONSTRAINT: &str = "http://www.w3.org/ns/odrl/2/constraint";
pub const ODRL_LEFT_OPERAND: &str = "http://www.w3.org/ns/odrl/2/leftOperand";
pub const ODRL_OPERATOR: &str = "http://www.w3.org/ns/odrl/2/operator";
pub const ODRL_RIGHT_OPERAND: &str = "http://www.w3.org/ns/odrl/2/rightOperand";
pub const ODRL_ELAPSED_TIME: &str = "http://www.w3.org/ns/odrl/2/elapsedTime";
pub const ODRL_PURPOSE: &str = "http://www.w3.org/ns/odrl/2/purpose";
pub const ODRL_IS_A: &str = "http://www.w3.org/ns/odrl/2/isA";
pub const ODRL_EQ: &str = "http://www.w3.org/ns/odrl/2/eq";
pub const ODRL_LT: &str = "http://www.w3.org/ns/odrl/2/lt";
pub const ODRL_LTEQ: &str = "http://www.w3.org/ns/odrl/2/lteq";
pub const ODRL_GT: &str = "http://www.w3.org/ns/odrl/2/gt";
pub const ODRL_GTEQ: &str = "http://www.w3.org/ns/odrl/2/gteq";
pub const OAC_PURPOSE: &str = "https://w3id.org/oac#Purpose";
pub const DCTERMS_DESCRIPTION: &str = "http://purl.org/dc/terms/description";
pub const DCTERMS_CREATOR: &str = "http://purl.org/dc/terms/creator";
pub const DCTERMS_ISSUED: &str = "http://purl.org/dc/terms/issued";
pub const DCTERMS_TITLE: &str = "http://purl.org/dc/terms/title";
pub const DPV_HAS_NAME: &str = "https://w3id.org/dpv#hasName";
pub const DPV_PURPOSE: &str = "https://w3id.org/dpv#Purpose";
pub const FOAF_PAGE: &str = "http://xmlns.com/foaf/0.1/page";
pub const DTOU_APP_POLICY_CLASS: &str = "urn:dtou:core#AppPolicy";
pub const DTOU_INPUT_SPEC_CLASS: &str = "urn:dtou:core#InputSpec";
pub const DTOU_NAME: &str = "urn:dtou:core#name";
pub const DTOU_INPUT_SPEC: &str = "urn:dtou:core#input_spec";
pub const DTOU_DATA: &str = "urn:dtou:core#data";
pub const DTOU_PORT: &str = "urn:dtou:core#port";
pub const DTOU_PURPOSE: &str = "urn:dtou:core#purpose";
pub const DTOU_EXPECT: &str = "urn:dtou:core#expect";
pub const DTOU_PROVIDE: &str = "urn:dtou:core#provide";
pub const DTOU_DOWNSTREAM: &str = "urn:dtou:core#downstream";
pub const DTOU_DESCRIPTOR: &str = "urn:dtou:core#descriptor";
pub const DTOU_APP_NAME: &str = "urn:dtou:core#app_name";
pub const DPP_PROFILE_CLASS: &str = "https://example.org/dpp#Profile";
pub const DPP_OWNER: &str = "https://example.org/dpp#owner";
pub const DPP_RULE: &str = "https://example.org/dpp#rule";
pub const DPP_PURPOSE: &str = "https://example.org/dpp#purpose";
pub const DPP_ACTION: &str = "https://example.org/dpp#action";
pub const DPP_MAX_RETENTION: &str = "https://example.org/dpp#maxRetention";
pub const DPP_DECISION: &str = "https://example.org/dpp#decision";
pub const DPP_DEFAULT: &str = "https://example.org/dpp#default";
pub const DPP_ANY: &str = "https://example.org/dpp#ANY";
pub const DPP_REQUEST_DIGEST: &str = "https://example.org/dpp#requestDigest";

pub const WELL_KNOWN_PREFIXES: &[(&str, &str)] = &[
    ("rdf", RDF),
    ("rdfs", RDFS),
    ("xsd", XSD),
    ("owl", OWL),
    ("foaf", FOAF),
];

/// Builds `ns` + `local`.
pub fn term(ns: &str, local: &str) -> String {
    format!("{ns}{local}")
}
