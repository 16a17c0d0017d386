//! `Data-Policy-Request` and `Data-Policy` header values.
//!
//! ```text
//! Data-Policy-Request: inline; policy=:<base64url(turtle)>:[; cookie="<name>"]
//! Data-Policy-Request: link; href="<IRI>"[; cookie="<name>"]
//! Data-Policy-Request: negotiate; href="<IRI>"[; cookie="<name>"]
//! Data-Policy: agreement=:<base64url(n-triples)>:; sha-256=<hex>
//! ```
//!
//! base64url is unpadded. Request headers are decoded leniently (any
//! whitespace around separators, unknown parameters skipped, unknown
//! dispositions reported rather than rejected). Agreement headers are
//! decoded strictly, so any altered byte is rejected.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::rdf::{is_absolute_iri, serialize_canonical, sha256_hex, Graph, Iri};

pub const DATA_POLICY_REQUEST: &str = "Data-Policy-Request";
pub const DATA_POLICY: &str = "Data-Policy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Inline,
    Link,
    Negotiate,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Inline => "inline",
            Disposition::Link => "link",
            Disposition::Negotiate => "negotiate",
        }
    }
}

/// Where a site's policy comes from, optionally bound to one cookie.
/// Without a binding the policy covers every cookie of the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicySource {
    pub disposition: Disposition,
    /// Turtle text, inline only.
    pub policy: Option<String>,
    /// Link and negotiate only.
    pub href: Option<Iri>,
    pub cookie_name: Option<String>,
}

impl PolicySource {
    pub fn inline(policy: impl Into<String>, cookie: Option<&str>) -> Self {
        PolicySource {
            disposition: Disposition::Inline,
            policy: Some(policy.into()),
            href: None,
            cookie_name: cookie.map(str::to_string),
        }
    }

    pub fn link(href: Iri, cookie: Option<&str>) -> Self {
        PolicySource {
            disposition: Disposition::Link,
            policy: None,
            href: Some(href),
            cookie_name: cookie.map(str::to_string),
        }
    }

    pub fn negotiate(href: Iri, cookie: Option<&str>) -> Self {
        PolicySource {
            disposition: Disposition::Negotiate,
            policy: None,
            href: Some(href),
            cookie_name: cookie.map(str::to_string),
        }
    }

    pub fn validate(&self) -> Result<(), HeaderError> {
        match self.disposition {
            Disposition::Inline => {
                if self.policy.is_none() || self.href.is_some() {
                    return Err(HeaderError::Invalid(
                        "inline needs a policy and no href".into(),
                    ));
                }
            }
            Disposition::Link | Disposition::Negotiate => {
                let Some(h) = &self.href else {
                    return Err(HeaderError::Invalid(format!(
                        "{} needs an href",
                        self.disposition.as_str()
                    )));
                };
                if self.policy.is_some() {
                    return Err(HeaderError::Invalid(format!(
                        "{} takes no inline policy",
                        self.disposition.as_str()
                    )));
                }
                if !is_absolute_iri(h.as_str()) || !quotable(h.as_str()) {
                    return Err(HeaderError::Invalid(format!(
                        "href {:?} cannot be carried in a header",
                        h.as_str()
                    )));
                }
            }
        }
        if let Some(c) = &self.cookie_name {
            if c.is_empty() || !c.bytes().all(is_tchar) {
                return Err(HeaderError::Invalid(format!(
                    "cookie name {c:?} is not a token"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeaderError {
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("malformed header: {0}")]
    Malformed(String),
    #[error("malformed base64 in {0}")]
    Base64(&'static str),
    #[error("{0} parameter is required")]
    MissingParameter(&'static str),
    #[error("inline policy is not UTF-8")]
    NotUtf8,
    #[error("sha-256 does not match the agreement bytes")]
    DigestMismatch,
}

/// Decoded `Data-Policy-Request` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestHeader {
    Source(PolicySource),
    /// A disposition this implementation does not know; safe to ignore.
    Unrecognized {
        disposition: String,
    },
}

/// RFC 7230 token characters.
fn is_tchar(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b"!#$%&'*+-.^_`|~".contains(&b)
}

/// Visible ASCII without `"` and `\`, so it can sit in a quoted string as is.
fn quotable(s: &str) -> bool {
    s.bytes()
        .all(|b| (0x21..=0x7e).contains(&b) && b != b'"' && b != b'\\')
}

pub fn encode_request_header(s: &PolicySource) -> Result<String, HeaderError> {
    s.validate()?;
    let mut out = format!("{}; ", s.disposition.as_str());
    match s.disposition {
        Disposition::Inline => {
            out.push_str("policy=:");
            out.push_str(&URL_SAFE_NO_PAD.encode(s.policy.as_deref().unwrap_or_default()));
            out.push(':');
        }
        Disposition::Link | Disposition::Negotiate => {
            out.push_str(&format!("href=\"{}\"", s.href.as_ref().unwrap()));
        }
    }
    if let Some(c) = &s.cookie_name {
        out.push_str(&format!("; cookie=\"{c}\""));
    }
    Ok(out)
}

enum ParamValue<'a> {
    Bytes(&'a str),
    Quoted(&'a str),
    Token(&'a str),
}

type Params<'a> = Vec<(String, ParamValue<'a>)>;

/// Splits `disposition *( ";" name "=" value )`, honoring `:..:` and `".."`.
fn tokenize(v: &str) -> Result<(&str, Params<'_>), HeaderError> {
    let malformed = |m: &str| HeaderError::Malformed(m.to_string());
    let v = v.trim_matches([' ', '\t']);
    let disp_end = v.find(';').unwrap_or(v.len());
    let disposition = v[..disp_end].trim_matches([' ', '\t']);
    if disposition.is_empty() || !disposition.bytes().all(is_tchar) {
        return Err(malformed("bad disposition"));
    }
    let mut params = Vec::new();
    let mut rest = &v[disp_end..];
    while !rest.is_empty() {
        rest = rest
            .strip_prefix(';')
            .ok_or_else(|| malformed("expected ';'"))?
            .trim_start_matches([' ', '\t']);
        if rest.is_empty() {
            break;
        }
        let eq = rest
            .find('=')
            .ok_or_else(|| malformed("parameter without '='"))?;
        let name = rest[..eq].trim_end_matches([' ', '\t']);
        if name.is_empty() || !name.bytes().all(is_tchar) {
            return Err(malformed("bad parameter name"));
        }
        let after = rest[eq + 1..].trim_start_matches([' ', '\t']);
        let (value, tail) = if let Some(body) = after.strip_prefix(':') {
            let end = body
                .find(':')
                .ok_or_else(|| malformed("unterminated :...:"))?;
            (ParamValue::Bytes(&body[..end]), &body[end + 1..])
        } else if let Some(body) = after.strip_prefix('"') {
            let end = body
                .find('"')
                .ok_or_else(|| malformed("unterminated quoted string"))?;
            (ParamValue::Quoted(&body[..end]), &body[end + 1..])
        } else {
            let end = after.find([';', ' ', '\t']).unwrap_or(after.len());
            (ParamValue::Token(&after[..end]), &after[end..])
        };
        params.push((name.to_ascii_lowercase(), value));
        rest = tail.trim_start_matches([' ', '\t']);
    }
    Ok((disposition, params))
}

pub fn decode_request_header(v: &str) -> Result<RequestHeader, HeaderError> {
    let (disposition, params) = tokenize(v)?;
    let disposition = match disposition.to_ascii_lowercase().as_str() {
        "inline" => Disposition::Inline,
        "link" => Disposition::Link,
        "negotiate" => Disposition::Negotiate,
        other => {
            return Ok(RequestHeader::Unrecognized {
                disposition: other.to_string(),
            })
        }
    };
    let param = |n: &str| params.iter().find(|(k, _)| k == n).map(|(_, v)| v);
    let text = |p: &ParamValue<'_>| match p {
        ParamValue::Quoted(s) | ParamValue::Token(s) => Some(s.to_string()),
        ParamValue::Bytes(_) => None,
    };
    let cookie_name = match param("cookie") {
        Some(p) => {
            Some(text(p).ok_or_else(|| HeaderError::Malformed("cookie must be a string".into()))?)
        }
        None => None,
    };
    let source = match disposition {
        Disposition::Inline => {
            let Some(ParamValue::Bytes(b64)) = param("policy") else {
                return Err(HeaderError::MissingParameter("policy"));
            };
            let bytes = URL_SAFE_NO_PAD
                .decode(b64)
                .map_err(|_| HeaderError::Base64("policy"))?;
            let policy = String::from_utf8(bytes).map_err(|_| HeaderError::NotUtf8)?;
            PolicySource {
                disposition,
                policy: Some(policy),
                href: None,
                cookie_name,
            }
        }
        Disposition::Link | Disposition::Negotiate => {
            let href = param("href")
                .and_then(text)
                .ok_or(HeaderError::MissingParameter("href"))?;
            let href = Iri::new(href).map_err(|e| HeaderError::Invalid(e.to_string()))?;
            PolicySource {
                disposition,
                policy: None,
                href: Some(href),
                cookie_name,
            }
        }
    };
    source.validate()?;
    Ok(RequestHeader::Source(source))
}

/// Canonical agreement bytes plus their digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementEnvelope {
    pub bytes: Vec<u8>,
    /// Lowercase hex SHA-256 of `bytes`.
    pub digest: String,
}

impl AgreementEnvelope {
    pub fn new(bytes: Vec<u8>) -> Self {
        let digest = sha256_hex(&bytes);
        AgreementEnvelope { bytes, digest }
    }

    pub fn from_graph(g: &Graph) -> Self {
        Self::new(serialize_canonical(g).into_bytes())
    }

    pub fn verify(&self) -> Result<(), HeaderError> {
        if sha256_hex(&self.bytes) == self.digest {
            Ok(())
        } else {
            Err(HeaderError::DigestMismatch)
        }
    }
}

pub fn encode_agreement_header(e: &AgreementEnvelope) -> Result<String, HeaderError> {
    e.verify()?;
    Ok(format!(
        "agreement=:{}:; sha-256={}",
        URL_SAFE_NO_PAD.encode(&e.bytes),
        e.digest
    ))
}

pub fn decode_agreement_header(v: &str) -> Result<AgreementEnvelope, HeaderError> {
    let malformed = |m: &str| HeaderError::Malformed(m.to_string());
    let body = v
        .strip_prefix("agreement=:")
        .ok_or_else(|| malformed("expected agreement=:"))?;
    let (b64, rest) = body
        .split_once(':')
        .ok_or_else(|| malformed("unterminated :...:"))?;
    let digest = rest
        .strip_prefix("; sha-256=")
        .ok_or_else(|| malformed("expected ; sha-256="))?;
    if digest.len() != 64
        || !digest
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    {
        return Err(malformed("sha-256 must be 64 lowercase hex digits"));
    }
    let bytes = URL_SAFE_NO_PAD
        .decode(b64)
        .map_err(|_| HeaderError::Base64("agreement"))?;
    let e = AgreementEnvelope {
        bytes,
        digest: digest.to_string(),
    };
    e.verify()?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_request_headers() {
        assert_eq!(
            encode_request_header(&PolicySource::inline("x", None)).unwrap(),
            "inline; policy=:eA:"
        );
        assert_eq!(
            encode_request_header(&PolicySource::link(
                Iri::new_unchecked("https://e/p"),
                Some("NID")
            ))
            .unwrap(),
            r#"link; href="https://e/p"; cookie="NID""#
        );
        assert_eq!(
            encode_request_header(&PolicySource::negotiate(
                Iri::new_unchecked("https://e/n"),
                None
            ))
            .unwrap(),
            r#"negotiate; href="https://e/n""#
        );
    }

    #[test]
    fn lenient_request_decoding() {
        let d = decode_request_header("  LINK;href=\"https://e/p;x=1\" ;\tfoo=bar;cookie=NID ")
            .unwrap();
        assert_eq!(
            d,
            RequestHeader::Source(PolicySource::link(
                Iri::new_unchecked("https://e/p;x=1"),
                Some("NID")
            ))
        );
        assert_eq!(
            decode_request_header("futuredisposition; x=1").unwrap(),
            RequestHeader::Unrecognized {
                disposition: "futuredisposition".into()
            }
        );
        assert_eq!(
            decode_request_header("inline; policy=:???:"),
            Err(HeaderError::Base64("policy"))
        );
        assert_eq!(
            decode_request_header("inline; cookie=\"a\""),
            Err(HeaderError::MissingParameter("policy"))
        );
        assert_eq!(
            decode_request_header("link"),
            Err(HeaderError::MissingParameter("href"))
        );
    }

    #[test]
    fn invalid_sources() {
        assert!(encode_request_header(&PolicySource::inline("x", Some("a b"))).is_err());
        assert!(encode_request_header(&PolicySource::link(
            Iri::new_unchecked("https://e/\u{e9}"),
            None
        ))
        .is_err());
        let mut s = PolicySource::inline("x", None);
        s.href = Some(Iri::new_unchecked("https://e/"));
        assert!(encode_request_header(&s).is_err());
    }

    #[test]
    fn golden_agreement_header() {
        let e = AgreementEnvelope::new(Vec::new());
        let h = encode_agreement_header(&e).unwrap();
        assert_eq!(h, "agreement=::; sha-256=e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(decode_agreement_header(&h).unwrap(), e);
        let tampered = h.replace("b855", "b856");
        assert_eq!(
            decode_agreement_header(&tampered),
            Err(HeaderError::DigestMismatch)
        );
        let bad = AgreementEnvelope {
            bytes: b"x".to_vec(),
            digest: e.digest,
        };
        assert_eq!(
            encode_agreement_header(&bad),
            Err(HeaderError::DigestMismatch)
        );
    }
}
